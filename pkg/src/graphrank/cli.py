"""``graph-rank`` command line: fit, test, bootstrap and simulate.

Input CSV: a header row, then ``item_i,item_j,outcome[,covariate...]``. The
outcome is oriented as item_i minus item_j.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .covariates import (build_design, combine, fit_with_covariates,
                         hajek_sidak_ratio, misspecification_bias)
from .errors import ConfigError, DataError, GraphRankError, IdentifiabilityError
from .estimator import Constraint, fit
from .graph import ComparisonRecord, EdgeWeights, bottleneck_m, build_graph
from .inference import (bootstrap_ranks, test_all_distinct, test_all_equal, test_contrasts,
                        test_item_not_worst)
from .simulation import load_config, run_campaign
from .spectral import algebraic_connectivity

SCHEMA = "graph-rank/1"


@dataclass
class GameTable:
    labels: list[str]
    records: list[ComparisonRecord]
    covariate_names: list[str]

    @property
    def K(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"unknown item label {label!r}") from None


def _covariate_plan(header: list[str], spec: str | None, psi: str):
    """Resolve --covariates into (name, column, partner-column) triples."""
    extra = header[3:]
    if spec is None:
        return [(name, 3 + k, None) for k, name in enumerate(extra)]
    plan = []
    for token in (t.strip() for t in spec.split(",") if t.strip()):
        if ":" in token:
            a, b = token.split(":", 1)
            cols = [header.index(c) if c in header[3:] else None for c in (a, b)]
            if None in cols:
                raise DataError(f"covariate pair {token!r} names unknown columns")
            plan.append((f"{psi}({a},{b})", cols[0], cols[1]))
        elif token in extra:
            plan.append((token, header.index(token), None))
        else:
            raise DataError(f"unknown covariate column {token!r}")
    return plan


def read_table(path, covariates: str | None = None, use_covariates: bool = True,
               psi: str = "diff") -> GameTable:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file (a header row is required)")
    header = [h.strip() for h in rows[0]]
    if len(header) < 3:
        raise DataError(f"{path}: header needs item_i, item_j and outcome columns")
    plan = _covariate_plan(header, covariates, psi) if use_covariates else []
    labels: dict[str, int] = {}
    records = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}, line {line}: expected {len(header)} fields, got {len(row)}")
        a, b = row[0].strip(), row[1].strip()
        if not a or not b:
            raise DataError(f"{path}, line {line}: empty item label")
        if a == b:
            raise DataError(f"{path}, line {line}: item {a!r} compared with itself")
        try:
            y = float(row[2])
            x = None
            if plan:
                vals = []
                for _, col, partner in plan:
                    if partner is None:
                        vals.append(float(row[col]))
                    else:
                        vals.extend(combine(float(row[col]), float(row[partner]), psi))
                x = tuple(vals)
        except ValueError:
            raise DataError(f"{path}, line {line}: non-numeric outcome or covariate") from None
        if not np.isfinite(y) or (x is not None and not np.all(np.isfinite(x))):
            raise DataError(f"{path}, line {line}: non-finite value")
        for lab in (a, b):
            labels.setdefault(lab, len(labels))
        records.append(ComparisonRecord(labels[a], labels[b], y, x))
    if not records:
        raise DataError(f"{path}: no data rows")
    if len(labels) < 2:
        raise DataError(f"{path}: need at least two distinct items")
    return GameTable(list(labels), records, [name for name, _, _ in plan])


def parse_constraint(text: str, table: GameTable) -> Constraint:
    if text in ("sum", "sum-zero"):
        return Constraint.sum_zero()
    if text.startswith("anchor="):
        return Constraint.anchor(table.index(text[len("anchor="):]))
    if text.startswith("file="):
        path = text[len("file="):]
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"constraint: cannot load {path}: {exc}") from None
        if isinstance(raw, dict):
            v = np.zeros(table.K)
            for lab, val in raw.items():
                v[table.index(lab)] = float(val)
        else:
            v = np.asarray(raw, dtype=np.float64)
            if v.shape != (table.K,):
                raise ConfigError(f"constraint: expected {table.K} values in {path}")
        return Constraint.custom(v)
    raise ConfigError(f"constraint: expected sum, anchor=<label> or file=<json>, got {text!r}")


def read_weights(path, table: GameTable) -> EdgeWeights:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    out = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            out[(table.index(row[0].strip()), table.index(row[1].strip()))] = float(row[2])
        except (ValueError, IndexError):
            raise DataError(f"{path}, line {line}: expected item_i,item_j,weight") from None
    return EdgeWeights(out)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("GRAPH_RANK_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"GRAPH_RANK_SEED: expected an integer, got {env!r}") from None
    return 0


def _by_label(labels, values):
    return {lab: (v.item() if hasattr(v, "item") else v) for lab, v in zip(labels, values)}


def _fit_table(table: GameTable, args):
    constraint = parse_constraint(args.constraint, table)
    g = build_graph(table.records, table.K, labels=table.labels)
    use_cov = bool(table.covariate_names)
    if use_cov:
        if args.weights:
            raise ConfigError("weights: not supported together with covariates")
        d = build_design(table.records, table.K, psi=args.psi, center=args.center_covariates)
        try:
            f = fit_with_covariates(d, constraint, sigma_divisor=args.sigma_divisor)
        except IdentifiabilityError as exc:
            if exc.components:
                exc.components = [[table.labels[v] for v in c] for c in exc.components]
            raise
        return f, g, d
    weights = read_weights(args.weights, table) if args.weights else None
    return fit(g, constraint, weights, sigma_divisor=args.sigma_divisor), g, None


def _fit_report(table, f, g, d) -> dict:
    labels = table.labels
    K = table.K
    V = f.cov[:K, :K]
    diag = np.diag(V)
    se = np.sqrt(np.clip(diag[:, None] + diag[None, :] - 2 * V, 0.0, None))
    m, tree = bottleneck_m(g)
    N = f.laplacian if d is None else d.laplacian()
    out = {
        "schema": SCHEMA,
        "command": "fit",
        "items": labels,
        "n": f.n,
        "constraint": {"kind": f.constraint.kind,
                       "item": None if f.constraint.item is None else labels[f.constraint.item],
                       "v": None if f.constraint.v is None else list(f.constraint.v)},
        "merits": _by_label(labels, f.mu_hat),
        "ranks": _by_label(labels, f.ranks),
        "sigma2": f.sigma2_hat,
        "pairwise_se": {"items": labels, "matrix": se.tolist()},
        "diagnostics": {
            "connected": True,
            "lambda2": algebraic_connectivity(N),
            "bottleneck_m": m,
            "bottleneck_tree": [[labels[a], labels[b]] for a, b in tree],
        },
    }
    if d is not None:
        rep = f.diagnostics
        out["covariates"] = {
            "names": table.covariate_names,
            "beta": dict(zip(table.covariate_names, f.beta_hat.tolist())),
            "identifiable": rep.identifiable,
            "rank_M": rep.rank_M,
            "rank_residual_X": rep.rank_residual_X,
            "angle_phi": rep.angle_phi,
            "misspecification_bias": _by_label(labels, misspecification_bias(d, f.beta_hat)),
            "hajek_sidak_ratio": hajek_sidak_ratio(d),
        }
        out["perfect_fit"] = f.perfect_fit
    return out


def _emit(obj, out_path=None):
    text = json.dumps(obj, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_fit(args) -> int:
    table = read_table(args.csv, args.covariates, not args.no_covariates, args.psi)
    f, g, d = _fit_table(table, args)
    _emit(_fit_report(table, f, g, d), args.out)
    return 0


def cmd_test(args) -> int:
    table = read_table(args.csv, args.covariates, not args.no_covariates, args.psi)
    f, _, _ = _fit_table(table, args)
    seed = _seed(args)
    subset = [table.index(s.strip()) for s in args.subset.split(",")] if args.subset else None
    if args.test == "all_equal":
        res = test_all_equal(f, subset, args.alpha)
    elif args.test == "contrasts":
        if subset is None:
            subset = list(range(table.K))
        res = test_contrasts(f, subset, args.alpha)
    elif args.test == "all_distinct":
        res = test_all_distinct(f, args.alpha, args.mc_b, seed, args.workers)
    else:
        if args.item is None:
            raise ConfigError("item: item_not_worst needs --item <label>")
        res = test_item_not_worst(f, table.index(args.item), args.alpha, args.mc_b, seed,
                                  args.workers)
    out = {"schema": SCHEMA, "command": "test", **res.as_dict()}
    if subset is not None:
        out["subset"] = [table.labels[s] for s in subset]
    if args.test == "item_not_worst":
        out["item"] = args.item
    _emit(out, args.out)
    return 0


def cmd_bootstrap(args) -> int:
    table = read_table(args.csv, args.covariates, not args.no_covariates, args.psi)
    f, _, _ = _fit_table(table, args)
    seed = _seed(args)
    rep = bootstrap_ranks(table.records, table.K, B=args.B, seed=seed,
                          covariates=bool(table.covariate_names),
                          constraint=parse_constraint(args.constraint, table),
                          psi=args.psi, workers=args.workers)
    labels = table.labels
    quart = {lab: {"q1": q[0], "median": q[1], "q3": q[2]}
             for lab, q in zip(labels, rep.quartiles.tolist())}
    out = {"schema": SCHEMA, "command": "bootstrap", "items": labels, "B": rep.B,
           "successes": rep.successes, "skipped": rep.skipped, "seed": seed,
           "point_ranks": _by_label(labels, f.ranks), "quartiles": quart}
    if args.out_dir:
        od = Path(args.out_dir)
        od.mkdir(parents=True, exist_ok=True)
        with open(od / "rank_quartiles.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["item", "point_rank", "q1", "median", "q3"])
            for lab, r, q in zip(labels, f.ranks.tolist(), rep.quartiles.tolist()):
                w.writerow([lab, r, repr(q[0]), repr(q[1]), repr(q[2])])
        _emit(out, od / "bootstrap.json")
    else:
        _emit(out, args.out)
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if isinstance(config, dict) and args.seed is not None:
        config = {**config, "seed": args.seed}
    elif isinstance(config, dict) and "seed" not in config and os.environ.get("GRAPH_RANK_SEED"):
        config = {**config, "seed": _seed(args)}
    rep = run_campaign(config, workers=args.workers)
    od = Path(args.out_dir)
    od.mkdir(parents=True, exist_ok=True)
    (od / "series.csv").write_text(rep.to_csv(), encoding="utf-8")
    (od / "config.json").write_text(rep.config_json(), encoding="utf-8")
    _emit({"schema": SCHEMA, "command": "simulate", "campaign": rep.campaign, "seed": rep.seed,
           "rows": len(rep.rows), "series": str(od / "series.csv")})
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def _data_flags(p):
    p.add_argument("csv", help="comparison table (header required)")
    p.add_argument("--constraint", default="sum", help="sum | anchor=<label> | file=<json>")
    p.add_argument("--covariates", help="comma-separated columns; a:b pairs are combined by --psi")
    p.add_argument("--psi", default="diff", help="covariate combination rule (default diff)")
    p.add_argument("--weights", help="CSV of item_i,item_j,weight")
    p.add_argument("--center-covariates", action="store_true", help="subtract covariate means")
    p.add_argument("--no-covariates", action="store_true", help="ignore covariate columns")
    p.add_argument("--sigma-divisor", choices=("n", "dof"), default="n")
    p.add_argument("--out", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graph-rank", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="estimate merits and ranks")
    _data_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("test", help="hypothesis tests on merits")
    _data_flags(p)
    p.add_argument("test", choices=("all_equal", "contrasts", "all_distinct", "item_not_worst"))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--subset", help="comma-separated labels")
    p.add_argument("--item", help="label for item_not_worst")
    p.add_argument("--mc-b", type=int, default=10000, help="Monte-Carlo null size")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("bootstrap", help="bootstrap rank quartiles")
    _data_flags(p)
    p.add_argument("--B", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", help="write bootstrap.json and rank_quartiles.csv here")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("simulate", help="run a simulation campaign from a JSON config")
    p.add_argument("config")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GraphRankError as exc:
        print(f"graph-rank: error: {exc}", file=sys.stderr)
        if isinstance(exc, IdentifiabilityError):
            if exc.components:
                for c in exc.components:
                    print(f"  component: {', '.join(map(str, c))}", file=sys.stderr)
            if exc.directions is not None and np.size(exc.directions):
                for col in np.atleast_2d(exc.directions).T:
                    print(f"  confounded covariate direction: {np.round(col, 6).tolist()}",
                          file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
