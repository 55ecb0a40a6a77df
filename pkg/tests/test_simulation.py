import json
from fractions import Fraction

import numpy as np
import pytest

from graphrank import simulation as sim
from graphrank.errors import ConfigError
from graphrank.estimator import row_sum_estimate
from graphrank.graph import from_arrays, laplacian
from graphrank.spectral import solve_laplacian


def test_tournament_bracket():
    top = sim.generate_topology(sim.TopologySpec("tournament", 8))
    edges = {(int(a) + 1, int(b) + 1) for a, b in zip(top.ei, top.ej)}
    assert edges == {(1, 2), (3, 4), (5, 6), (7, 8), (1, 3), (5, 7), (1, 5)}


@pytest.mark.parametrize("kind,count", [("complete", 28), ("cycle", 8), ("path", 7), ("star", 7),
                                        ("wheel", 14), ("tournament", 7)])
def test_edge_counts_and_scaling(kind, count):
    top = sim.generate_topology(sim.TopologySpec(kind, 8, scale_to_complete=True))
    assert top.n_edges == count
    assert top.total_weight() == Fraction(28)
    assert np.trace(top.laplacian()) / 2 == pytest.approx(28)
    assert len({(int(a), int(b)) for a, b in zip(top.ei, top.ej)}) == count


def test_scaled_path_weights():
    top = sim.generate_topology(sim.TopologySpec("path", 8, scale_to_complete=True))
    assert np.all(top.weight == 4.0)


def test_scaling_is_exact_for_awkward_counts():
    for K in (5, 7, 9, 12):
        for kind in ("path", "star", "wheel", "cycle"):
            top = sim.generate_topology(sim.TopologySpec(kind, K, multiplicity=3, scale_to_complete=True))
            assert top.total_weight() == Fraction(K * (K - 1), 2)


def test_erdos_renyi_extremes():
    rng = np.random.default_rng(0)
    top = sim.generate_topology(sim.TopologySpec("erdos_renyi", 9, p=1.0), rng)
    assert top.n_edges == 36
    with pytest.raises(ConfigError, match="p"):
        sim.TopologySpec("erdos_renyi", 9, p=0.0)
    with pytest.raises(ConfigError, match="p"):
        sim.TopologySpec("erdos_renyi", 9, p=1.5)


def test_topology_errors_name_the_field():
    with pytest.raises(ConfigError, match="^K:"):
        sim.TopologySpec("tournament", 6)
    with pytest.raises(ConfigError, match="^kind:"):
        sim.TopologySpec("hypercube", 8)


def test_precision_orderings():
    rep = sim.precision_profile(["path", "cycle", "complete", "star", "tournament", "wheel"], [8, 32])
    for K_index in range(2):
        t = {k: rep.series(f"trace_pinv@kind={k}")[1][K_index]
             for k in ("path", "cycle", "complete")}
        assert t["path"] > t["cycle"] > t["complete"]
    unscaled = sim.precision_profile(["complete"], [4, 8, 16], scale=False)
    for K, v in zip(*unscaled.series("trace_pinv@kind=complete")):
        assert v == pytest.approx((K - 1) / K)
    for K, v in zip(*unscaled.series("max_eig_pinv@kind=complete")):
        assert v == pytest.approx(1 / K)


def test_doubling_weights_halves_trace():
    one = sim.precision_profile(["wheel"], [10], scale=False).series("trace_pinv@kind=wheel")[1][0]
    top = sim.generate_topology(sim.TopologySpec("wheel", 10, multiplicity=2))
    from graphrank.spectral import spectral_summary
    assert spectral_summary(top.laplacian()).pinv_trace == pytest.approx(one / 2)


def test_error_laws():
    rng = np.random.default_rng(1)
    x = sim.ErrorLaw("t3_scaled").draw(rng, 400_000)
    assert np.var(x) == pytest.approx(1.0, abs=0.1)
    assert sim.ErrorLaw("normal", 2.0).draw(rng, 200_000).std() == pytest.approx(2.0, rel=0.02)
    with pytest.raises(ConfigError, match="error"):
        sim.ErrorLaw("cauchy")
    counts = np.array([1, 3, 0, 2])
    s = sim.ErrorLaw("t2").edge_sums(np.random.default_rng(3), counts)
    assert s.shape == (4,) and s[2] == 0.0


def test_edge_probability_rules():
    assert sim.edge_probability(0.5, 100) == 0.5
    assert sim.edge_probability("log3", 1000) == pytest.approx(np.log(1000) ** 3 / 1000)
    assert sim.edge_probability("sqrt_log3", 400) == pytest.approx(np.sqrt(np.log(400) ** 3 / 400))
    assert sim.edge_probability("threshold:1", 500) == pytest.approx(2 * np.log(500) / 500)
    assert sim.edge_probability("log3", 50) == 1.0
    with pytest.raises(ConfigError, match="p_rules"):
        sim.edge_probability(-0.1, 10)
    with pytest.raises(ConfigError, match="p_rules"):
        sim.edge_probability("bogus", 10)


def test_connectivity_above_threshold():
    assert sim.connectivity_rate(500, 2 * np.log(500) / 500, draws=100, seed=2) >= 0.95


def test_row_sum_tracks_lse_on_dense_graphs():
    rng = np.random.default_rng(5)
    K = 500
    a, b = np.triu_indices(K, 1)
    mu = np.zeros(K)
    for p in (0.5, 1.0):
        keep = rng.random(a.size) < p
        ei, ej = a[keep], b[keep]
        g = from_arrays(ei, ej, rng.standard_normal(ei.size), K)
        lse = solve_laplacian(laplacian(g), g.score())
        rs = row_sum_estimate(g)
        assert np.abs(lse - rs).max() <= 0.1 * np.abs(lse - mu).max()


def consistency_config(**kw):
    cfg = {"campaign": "consistency", "K": 8, "gammas": [0], "m_grid": [10, 50, 200, 1000],
           "errors": ["normal", "t3_scaled"], "replicates": 1000, "seed": 99}
    cfg.update(kw)
    return cfg


@pytest.fixture(scope="module")
def consistency_report():
    return sim.run_campaign(consistency_config(), workers=2)


def test_mse_decreases_in_m(consistency_report):
    for law in ("normal", "t3_scaled"):
        _, mse = consistency_report.series(f"mse@error={law},gamma=0")
        assert all(a > b for a, b in zip(mse, mse[1:]))


def test_correct_ranking_at_large_m(consistency_report):
    m, pc = consistency_report.series("p_correct@error=normal,gamma=0")
    assert m[-1] == 1000 and pc[-1] >= 0.99


def test_msq_matches_trace_identity(consistency_report):
    for m, v in zip(*consistency_report.series("msq@error=normal,gamma=0")):
        assert v == pytest.approx(7 / (8 * m) * 1.0 * 1, rel=0.1)


def test_normal_mse_below_t3(consistency_report):
    _, normal = consistency_report.series("mse@error=normal,gamma=0")
    _, t3 = consistency_report.series("mse@error=t3_scaled,gamma=0")
    assert all(a <= b for a, b in zip(normal, t3))


def test_t2_reports_median():
    rep = sim.run_campaign(consistency_config(errors=["t2"], m_grid=[10], replicates=50))
    assert "median_norm@error=t2,gamma=0" in rep.metrics()


def test_campaigns_are_deterministic_across_workers():
    cfg = consistency_config(m_grid=[10, 20], gammas=[0, 1], replicates=30)
    a = sim.run_campaign(cfg, workers=1)
    b = sim.run_campaign(cfg, workers=3)
    assert a.to_csv() == b.to_csv() and a.config_json() == b.config_json()
    sp = {"campaign": "sparse", "K": [60, 80], "p_rules": [0.5, "sqrt_log3"], "replicates": 4, "seed": 1}
    assert sim.run_campaign(sp, 1).to_csv() == sim.run_campaign(sp, 4).to_csv()
    cfg2 = dict(cfg, seed=100)
    assert sim.run_campaign(cfg2).to_csv() != a.to_csv()


def test_report_csv_shape():
    rep = sim.precision_profile(["path"], [4, 8])
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "x,metric,estimate,replicates"
    assert len(lines) == 1 + 4
    assert json.loads(rep.config_json())["campaign"] == "precision"


@pytest.mark.parametrize("patch,field", [
    ({"replicates": "ten"}, "replicates"),
    ({"m_grid": [0, 10]}, "m_grid"),
    ({"mu": [1, 2]}, "mu"),
    ({"errors": ["cauchy"]}, "error"),
    ({"topology": "tournament", "K": 6, "mu": [0] * 6}, "K"),
    ({"seed": None}, "seed"),
])
def test_consistency_config_errors_name_the_field(patch, field):
    cfg = consistency_config(**patch)
    if cfg.get("seed") is None:
        del cfg["seed"]
    with pytest.raises(ConfigError, match=field):
        sim.run_campaign(cfg)


@pytest.mark.parametrize("cfg,field", [
    ({"campaign": "sparse", "K": [50], "p_rules": [0], "replicates": 2, "seed": 0}, "p_rules"),
    ({"campaign": "sparse", "K": [50], "p_rules": [0.5], "mu": "odd", "replicates": 2, "seed": 0}, "mu"),
    ({"campaign": "sparse", "K": [50], "replicates": 2, "seed": 0}, "p_rules"),
    ({"campaign": "precision", "kinds": ["tournament"], "K": [6]}, "K"),
    ({"campaign": "precision", "kinds": ["erdos_renyi"], "K": [6]}, "kinds"),
    ({"campaign": "other"}, "campaign"),
])
def test_other_config_errors_name_the_field(cfg, field):
    with pytest.raises(ConfigError, match=field):
        sim.run_campaign(cfg)


def test_shipped_configs_validate():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.json")):
        cfg = sim.load_config(path)
        {"consistency": sim.validate_consistency, "sparse": sim.validate_sparse,
         "precision": sim.validate_precision}[cfg["campaign"]](cfg)


@pytest.mark.slow
def test_sparse_error_trends():
    cfg = {"campaign": "sparse", "K": [100, 400], "p_rules": [1, 0.5, "sqrt_log3"],
           "replicates": 30, "seed": 4}
    rep = sim.run_campaign(cfg)
    for rule in (1, 0.5, "sqrt_log3"):
        _, err = rep.series(f"lse_max_error@p={rule}")
        assert err[0] > err[1]
    at = {rule: rep.series(f"lse_max_error@p={rule}")[1] for rule in (1, 0.5, "sqrt_log3")}
    for k, K in enumerate((100, 400)):
        for lo in at:
            for hi in at:
                # rules closer than 0.05 in p sit inside the replicate noise
                if sim.edge_probability(hi, K) - sim.edge_probability(lo, K) >= 0.05:
                    assert at[lo][k] > at[hi][k]
    # complete graph rate sqrt(log K / K), ratio within 25%
    ratio = at[1][0] / at[1][1]
    target = np.sqrt((np.log(100) / 100) / (np.log(400) / 400))
    assert abs(ratio / target - 1) <= 0.25
