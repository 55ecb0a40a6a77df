"""Topology generators, precision profiles and seeded Monte-Carlo campaigns.

Every stochastic quantity is drawn from a stream keyed by
``SeedSequence(seed, spawn_key=(campaign, *cell, replicate))`` so results do
not depend on how work is scheduled across threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import ConfigError
from .estimator import ranks
from .graph import laplacian as graph_laplacian, from_arrays
from .spectral import pinv_laplacian, solve_laplacian, spectral_summary

KINDS = ("complete", "cycle", "path", "star", "wheel", "tournament", "erdos_renyi")
_TAGS = {"consistency": 1, "sparse": 3, "connectivity": 4}


@dataclass(frozen=True)
class TopologySpec:
    kind: str
    K: int
    multiplicity: int = 1
    p: float | None = None
    scale_to_complete: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: unknown topology {self.kind!r}; expected one of {KINDS}")
        if self.K < 2:
            raise ConfigError(f"K: need at least two items, got {self.K}")
        if self.kind == "tournament" and self.K & (self.K - 1):
            raise ConfigError(f"K: tournament needs a power of two, got {self.K}")
        if self.kind in ("wheel",) and self.K < 4:
            raise ConfigError("K: wheel needs at least four items")
        if self.kind == "erdos_renyi" and not (self.p is not None and 0 < self.p <= 1):
            raise ConfigError(f"p: edge probability must lie in (0, 1], got {self.p}")
        if self.multiplicity < 1:
            raise ConfigError("multiplicity: must be a positive integer")


@dataclass(frozen=True, eq=False)
class Topology:
    kind: str
    K: int
    ei: np.ndarray
    ej: np.ndarray
    weight: np.ndarray
    scale: Fraction = Fraction(1)

    @property
    def n_edges(self) -> int:
        return int(self.ei.size)

    def laplacian(self) -> np.ndarray:
        return _kernels.laplacian(self.K, self.ei, self.ej, self.weight)

    def total_weight(self) -> Fraction:
        """trace(N)/2 in exact arithmetic (weights are multiplicity * scale)."""
        base = sum(Fraction(int(round(w / float(self.scale)))) for w in self.weight)
        return base * self.scale


def _edges(kind: str, K: int, rng) -> list[tuple[int, int]]:
    if kind == "complete":
        return [(a, b) for a in range(K) for b in range(a + 1, K)]
    if kind == "path":
        return [(a, a + 1) for a in range(K - 1)]
    if kind == "cycle":
        return [(a, a + 1) for a in range(K - 1)] + ([(0, K - 1)] if K > 2 else [])
    if kind == "star":
        return [(0, b) for b in range(1, K)]
    if kind == "wheel":
        rim = [(a, a + 1) for a in range(1, K - 1)] + [(1, K - 1)]
        return [(0, b) for b in range(1, K)] + rim
    if kind == "tournament":
        alive, out = list(range(K)), []
        while len(alive) > 1:
            out += [(alive[r], alive[r + 1]) for r in range(0, len(alive), 2)]
            alive = alive[::2]  # smaller index advances
        return out
    raise AssertionError(kind)


def generate_topology(spec: TopologySpec, rng: np.random.Generator | None = None) -> Topology:
    """Edge set and weights for a topology. Scaling matches the complete graph's
    comparison count: weights times (K(K-1)/2) / (edge count)."""
    K = spec.K
    if spec.kind == "erdos_renyi":
        if rng is None:
            raise ConfigError("rng: an Erdos-Renyi draw needs a random generator")
        a, b = np.triu_indices(K, 1)
        keep = rng.random(a.size) < spec.p
        ei, ej = a[keep], b[keep]
    else:
        e = _edges(spec.kind, K, rng)
        ei = np.array([x for x, _ in e], dtype=np.int64)
        ej = np.array([y for _, y in e], dtype=np.int64)
        order = np.lexsort((ej, ei))
        ei, ej = ei[order], ej[order]
    scale = Fraction(1)
    if spec.scale_to_complete and ei.size:
        scale = Fraction(K * (K - 1) // 2, int(ei.size) * spec.multiplicity)
    w = np.full(ei.size, spec.multiplicity * float(scale))
    return Topology(spec.kind, K, ei.astype(np.int64), ej.astype(np.int64), w, scale)


@dataclass(frozen=True)
class ErrorLaw:
    kind: str = "normal"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("normal", "t2", "t3_scaled"):
            raise ConfigError(f"error: unknown law {self.kind!r}")
        if not self.sigma > 0:
            raise ConfigError("error.sigma: must be positive")

    @property
    def label(self) -> str:
        return self.kind

    def draw(self, rng, size) -> np.ndarray:
        if self.kind == "normal":
            return self.sigma * rng.standard_normal(size)
        if self.kind == "t2":
            return rng.standard_t(2, size)
        return rng.standard_t(3, size) / math.sqrt(3.0)

    def edge_sums(self, rng, counts: np.ndarray) -> np.ndarray:
        """Sum of counts[e] independent errors for each edge e."""
        if self.kind == "normal":
            return self.sigma * np.sqrt(counts) * rng.standard_normal(counts.size)
        draws = self.draw(rng, int(counts.sum()))
        out = np.zeros(counts.size)
        nz = counts > 0
        if draws.size:
            # reduceat misreads empty segments, so only nonempty edges are summed
            starts = np.cumsum(counts) - counts
            out[nz] = np.add.reduceat(draws, starts[nz])
        return out


@dataclass
class SimulationReport:
    campaign: str
    config: dict
    seed: int | None
    rows: list = field(default_factory=list)

    def add(self, x, metric: str, estimate: float, replicates: int):
        self.rows.append((x, metric, float(estimate), int(replicates)))

    def series(self, metric: str) -> tuple[list, list]:
        pts = [(x, v) for x, m, v, _ in self.rows if m == metric]
        return [p[0] for p in pts], [p[1] for p in pts]

    def metrics(self) -> list[str]:
        return list(dict.fromkeys(m for _, m, _, _ in self.rows))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "metric", "estimate", "replicates"])
        for x, m, v, r in self.rows:
            w.writerow([x, m, repr(v), r])
        return buf.getvalue()

    def config_json(self) -> str:
        return json.dumps({"campaign": self.campaign, "seed": self.seed, "config": self.config},
                          indent=2, sort_keys=True) + "\n"


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def precision_profile(kinds: Sequence[str], K_values: Sequence[int], scale: bool = True) -> SimulationReport:
    """trace(N+) and the largest eigenvalue of N+ for each deterministic topology."""
    rep = SimulationReport("precision", {"kinds": list(kinds), "K": list(K_values), "scale": scale}, None)
    for kind in kinds:
        if kind == "erdos_renyi":
            raise ConfigError("kinds: precision profiles need deterministic topologies")
        for K in K_values:
            top = generate_topology(TopologySpec(kind, int(K), scale_to_complete=scale))
            s = spectral_summary(top.laplacian())
            rep.add(int(K), f"trace_pinv@kind={kind}", s.pinv_trace, 1)
            rep.add(int(K), f"max_eig_pinv@kind={kind}", s.pinv_max_eigenvalue, 1)
    return rep


MU0 = (-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0)


def run_consistency_campaign(config: dict, workers: int = 1) -> SimulationReport:
    """Fixed topology with n_ij = m on each edge; merits mu * 10^-gamma.

    Per (error law, gamma, m): mean of ||mu_hat - mu||_2 ("mse", the averaged
    norm), mean of the squared norm ("msq"), the probability that the estimated
    ranking is exactly right ("p_correct") and, for t2 errors, the median norm.
    """
    cfg = validate_consistency(config)
    K, seed, R = cfg["K"], cfg["seed"], cfg["replicates"]
    mu0 = np.asarray(cfg["mu"], dtype=np.float64)
    base = generate_topology(TopologySpec(cfg["topology"], K))
    laws = [ErrorLaw(**e) for e in cfg["errors"]]
    cells = [(e, g, k) for e in range(len(laws)) for g in range(len(cfg["gammas"]))
             for k in range(len(cfg["m_grid"]))]

    def run_cell(cell):
        e, g, k = cell
        m = cfg["m_grid"][k]
        mu = mu0 * 10.0 ** (-cfg["gammas"][g])
        counts = np.full(base.n_edges, m, dtype=np.int64)
        N = _kernels.laplacian(K, base.ei, base.ej, counts.astype(np.float64))
        P = pinv_laplacian(N)
        true_rank = ranks(mu)
        diff = mu[base.ei] - mu[base.ej]
        norms = np.empty(R)
        correct = 0
        for r in range(R):
            rng = _stream(seed, _TAGS["consistency"], e, g, k, r)
            s = counts * diff + laws[e].edge_sums(rng, counts)
            S = np.zeros(K)
            np.add.at(S, base.ei, s)
            np.add.at(S, base.ej, -s)
            est = P @ S
            est -= est.mean()
            norms[r] = np.linalg.norm(est - mu)
            correct += bool(np.array_equal(ranks(est), true_rank))
        return norms, correct

    results = _pmap(run_cell, cells, workers)
    rep = SimulationReport("consistency", cfg, seed)
    for (e, g, k), (norms, correct) in zip(cells, results):
        tag = f"error={laws[e].label},gamma={cfg['gammas'][g]}"
        m = cfg["m_grid"][k]
        rep.add(m, f"mse@{tag}", norms.mean(), R)
        rep.add(m, f"msq@{tag}", np.mean(norms ** 2), R)
        rep.add(m, f"p_correct@{tag}", correct / R, R)
        if laws[e].kind == "t2":
            rep.add(m, f"median_norm@{tag}", np.median(norms), R)
    return rep


def edge_probability(rule, K: int) -> float:
    """Evaluate a p rule: a number, "log3" = (log K)^3 / K, "sqrt_log3" = its
    square root, or "threshold:c" = (1 + c) log K / K. Values above 1 are capped."""
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        p = float(rule)
    elif isinstance(rule, str):
        lk = math.log(K)
        if rule == "log3":
            p = lk ** 3 / K
        elif rule == "sqrt_log3":
            p = math.sqrt(lk ** 3 / K)
        elif rule.startswith("threshold:"):
            p = (1.0 + float(rule.split(":", 1)[1])) * lk / K
        else:
            try:
                p = float(rule)
            except ValueError:
                raise ConfigError(f"p_rules: unknown rule {rule!r}") from None
    else:
        raise ConfigError(f"p_rules: unknown rule {rule!r}")
    if not p > 0:
        raise ConfigError(f"p_rules: rule {rule!r} gives p={p} at K={K}")
    return min(p, 1.0)


def sparse_merits(rule, K: int) -> np.ndarray:
    if rule == "linear":
        return 2.0 * np.arange(K) - (K - 1)
    if rule == "zero":
        return np.zeros(K)
    mu = np.asarray(rule, dtype=np.float64)
    if mu.shape != (K,):
        raise ConfigError(f"mu: expected {K} values")
    return mu


def _is_connected(K, ei, ej) -> bool:
    return int(_kernels.component_labels(K, ei, ej).max()) == 0


def run_sparse_campaign(config: dict, workers: int = 1) -> SimulationReport:
    """Erdos-Renyi graphs with one comparison per present edge.

    For each (K, p rule) reports the mean over replicates of max_i |mu_hat_i - mu_i|
    for the least-squares and row-sum estimators. Within a replicate all p rules
    share one uniform matrix and one noise matrix, so graphs are nested in p.
    Disconnected draws are redrawn from the same stream and counted.
    """
    cfg = validate_sparse(config)
    seed, R, sigma = cfg["seed"], cfg["replicates"], cfg["sigma"]
    cells = [(k, r) for k in range(len(cfg["K"])) for r in range(R)]
    rules = cfg["p_rules"]

    def run_rep(cell):
        k, r = cell
        K = cfg["K"][k]
        mu = sparse_merits(cfg["mu"], K)
        a, b = np.triu_indices(K, 1)
        rng = _stream(seed, _TAGS["sparse"], k, r)
        u = rng.random(a.size)
        z = sigma * rng.standard_normal(a.size)
        out = []
        for rule in rules:
            p = edge_probability(rule, K)
            keep, redraws = u < p, 0
            while not _is_connected(K, a[keep], b[keep]):
                redraws += 1
                if redraws > 1000:
                    raise ConfigError(f"p_rules: rule {rule!r} almost never connects K={K}")
                keep = rng.random(a.size) < p
            ei, ej = a[keep], b[keep]
            y = mu[ei] - mu[ej] + z[keep]
            g = from_arrays(ei, ej, y, K)
            S = g.score()
            est = solve_laplacian(graph_laplacian(g), S)
            est += mu.mean() - est.mean()
            rowsum = S / g.degrees()
            out.append((np.max(np.abs(est - mu)), np.max(np.abs(rowsum - mu)), redraws))
        return out

    results = _pmap(run_rep, cells, workers)
    rep = SimulationReport("sparse", cfg, seed)
    for k, K in enumerate(cfg["K"]):
        block = np.array([results[k * R + r] for r in range(R)])  # R x rules x 3
        for q, rule in enumerate(rules):
            rep.add(K, f"lse_max_error@p={rule}", block[:, q, 0].mean(), R)
            rep.add(K, f"rowsum_max_error@p={rule}", block[:, q, 1].mean(), R)
            rep.add(K, f"redraws@p={rule}", block[:, q, 2].sum(), R)
    return rep


def connectivity_rate(K: int, p: float, draws: int, seed: int) -> float:
    """Fraction of raw Erdos-Renyi draws (no redraw) that are connected."""
    a, b = np.triu_indices(K, 1)
    hits = 0
    for r in range(draws):
        keep = _stream(seed, _TAGS["connectivity"], r).random(a.size) < p
        hits += _is_connected(K, a[keep], b[keep])
    return hits / draws


# configuration ------------------------------------------------------------


def _require(cfg, key, kind, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"{key}: missing required field")
        return default
    val = cfg[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ConfigError(f"{key}: expected an integer, got {val!r}")
    if kind is list and not isinstance(val, list):
        raise ConfigError(f"{key}: expected a list, got {val!r}")
    return val


def _grid(cfg, key):
    val = cfg.get(key)
    if isinstance(val, dict):
        try:
            return list(range(int(val["start"]), int(val["stop"]) + 1, int(val["step"])))
        except (KeyError, ValueError, TypeError):
            raise ConfigError(f"{key}: range needs integer start, stop and step") from None
    grid = _require(cfg, key, list)
    if not grid or any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in grid):
        raise ConfigError(f"{key}: expected positive integers")
    return grid


def _errors(cfg):
    raw = cfg.get("errors", ["normal"])
    if not isinstance(raw, list) or not raw:
        raise ConfigError("errors: expected a non-empty list")
    out = []
    for e in raw:
        spec = {"kind": e} if isinstance(e, str) else dict(e)
        ErrorLaw(**spec)
        out.append(spec)
    return out


def validate_consistency(config: dict) -> dict:
    cfg = dict(config)
    K = _require(cfg, "K", int, 8)
    mu = cfg.get("mu", list(MU0) if K == 8 else None)
    if mu is None or len(mu) != K:
        raise ConfigError(f"mu: expected {K} merits")
    if abs(sum(mu)) > 1e-9 * max(1.0, sum(abs(v) for v in mu)):
        raise ConfigError("mu: merits must sum to zero")
    topology = cfg.get("topology", "complete")
    TopologySpec(topology, K)
    if topology == "erdos_renyi":
        raise ConfigError("topology: use the sparse campaign for random graphs")
    gammas = cfg.get("gammas", [0])
    if not isinstance(gammas, list) or not gammas:
        raise ConfigError("gammas: expected a non-empty list")
    R = _require(cfg, "replicates", int)
    if R < 1:
        raise ConfigError("replicates: must be positive")
    return {"campaign": "consistency", "topology": topology, "K": K, "mu": [float(v) for v in mu],
            "gammas": gammas, "m_grid": _grid(cfg, "m_grid"), "errors": _errors(cfg),
            "replicates": R, "seed": _require(cfg, "seed", int)}


def validate_sparse(config: dict) -> dict:
    cfg = dict(config)
    Ks = _grid(cfg, "K")
    rules = _require(cfg, "p_rules", list)
    for K in Ks:
        if K < 2:
            raise ConfigError("K: need at least two items")
        for rule in rules:
            edge_probability(rule, K)
    mu = cfg.get("mu", "linear")
    if isinstance(mu, str) and mu not in ("linear", "zero"):
        raise ConfigError(f"mu: unknown rule {mu!r}")
    for K in Ks:
        sparse_merits(mu, K)
    R = _require(cfg, "replicates", int)
    if R < 1:
        raise ConfigError("replicates: must be positive")
    sigma = float(cfg.get("sigma", 1.0))
    if not sigma > 0:
        raise ConfigError("sigma: must be positive")
    return {"campaign": "sparse", "K": Ks, "p_rules": rules, "mu": mu, "replicates": R,
            "sigma": sigma, "seed": _require(cfg, "seed", int)}


def validate_precision(config: dict) -> dict:
    kinds = _require(config, "kinds", list)
    for kind in kinds:
        if kind not in KINDS or kind == "erdos_renyi":
            raise ConfigError(f"kinds: unsupported topology {kind!r}")
    Ks = _grid(config, "K")
    for kind in kinds:
        for K in Ks:
            TopologySpec(kind, K)
    return {"campaign": "precision", "kinds": kinds, "K": Ks, "scale": bool(config.get("scale", True))}


def run_campaign(config: dict, workers: int = 1) -> SimulationReport:
    if not isinstance(config, dict):
        raise ConfigError("config: expected a JSON object")
    kind = config.get("campaign")
    if kind == "consistency":
        return run_consistency_campaign(config, workers)
    if kind == "sparse":
        return run_sparse_campaign(config, workers)
    if kind == "precision":
        cfg = validate_precision(config)
        return precision_profile(cfg["kinds"], cfg["K"], cfg["scale"])
    raise ConfigError(f"campaign: expected consistency, precision or sparse, got {kind!r}")


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
