"""Command-line front end: ``seedtrace {grow,stat,verify,distinguish,table}``.

Every flag can also come from a JSON ``--config`` file whose keys are the
flag names (``seed-b`` or ``seed_b`` both work); flags given on the command
line win. Exit codes: 0 success, 1 verification failure, 2 usage or parse
error, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

from seedtrace import balance_stats, verify
from seedtrace.decorated import f_tau, read_decorated
from seedtrace.distinguish import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    classification_accuracy,
    classify,
    make_statistic,
    separation_search,
    tv_lower_bound,
)
from seedtrace.martingale import build_table, l2_diagnostic, martingale_samples
from seedtrace.tree_model import (
    RngStream,
    TreeFormatError,
    canonical_form,
    diameter,
    format_tree,
    grow,
    read_tree,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
COMMANDS = ("grow", "stat", "verify", "distinguish", "table")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    seed: str | None = None
    seed_b: str | None = None
    tau: str | None = None
    n: int | None = None
    n0: int | None = None
    samples: int | None = None
    rng: int = 0
    workers: int = 1
    out: str | None = None
    format: str = "json"
    suite: str | None = None
    statistic: str = "G"
    label_cap: int | None = None
    n_grid: list[int] | None = None
    calibration: int = 10_000
    budget: int = DEFAULT_BUDGET
    separate: bool = False
    accuracy: bool = False
    sample_tree: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for name in ("n", "n0", "samples", "workers", "calibration", "budget", "label_cap"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.rng < 0:
            raise UsageError("--rng must be nonnegative")
        if self.format not in ("json", "csv"):
            raise UsageError("--format must be json or csv")
        if self.statistic not in ("G", "M"):
            raise UsageError("--statistic must be G or M")
        if self.n_grid is not None and any(g < 1 for g in self.n_grid):
            raise UsageError("--n-grid entries must be positive")

    def to_json(self) -> str:
        return json.dumps({k.replace("_", "-"): v for k, v in asdict(self).items()},
                          sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        kw = {}
        for k, v in doc.items():
            key = k.replace("-", "_")
            if key not in names:
                raise UsageError(f"unknown config key {k!r}")
            kw[key] = v
        if "command" not in kw:
            raise UsageError("config lacks a command")
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        return cls.from_dict(doc)


def _grid(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so that only explicitly given flags override the config file
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--seed", help="tree file (seed, or the tree to measure for `stat`)")
    common.add_argument("--seed-b", dest="seed_b", help="second seed tree file")
    common.add_argument("--tau", help="decorated tree file")
    common.add_argument("--n", type=int, help="tree size")
    common.add_argument("--n0", type=int, help="first size covered by a martingale table")
    common.add_argument("--samples", type=int, help="Monte Carlo samples per seed")
    common.add_argument("--rng", type=int, help="master seed (default 0)")
    common.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--suite", choices=verify.SUITES)
    common.add_argument("--statistic", choices=("G", "M"), help="G, or M for the martingale of --tau")
    common.add_argument("--label-cap", dest="label_cap", type=int)
    common.add_argument("--n-grid", dest="n_grid", type=_grid, help="e.g. 50,500,5000")
    common.add_argument("--calibration", type=int, help="reference samples per candidate seed")
    common.add_argument("--budget", type=int, help="growth-path budget for exact enumeration")
    common.add_argument("--separate", action="store_const", const=True,
                        help="also search for a separating decorated tree")
    common.add_argument("--accuracy", action="store_const", const=True,
                        help="also estimate classification accuracy")
    common.add_argument("--sample-tree", dest="sample_tree", help="tree file to classify")

    p = argparse.ArgumentParser(prog="seedtrace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("grow", parents=[common], help="grow one tree from a seed")
    sub.add_parser("stat", parents=[common], help="G and F_tau of a stored tree")
    sub.add_parser("verify", parents=[common], help="run a verification suite")
    sub.add_parser("distinguish", parents=[common], help="TV bound / classification for two seeds")
    sub.add_parser("table", parents=[common], help="build a martingale coefficient table")
    return p


def config_from_args(argv: list[str] | None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    base = {"command": ns.command}
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_cfg = RunConfig.from_json(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        base = {k: v for k, v in asdict(file_cfg).items()}
        base["command"] = ns.command
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        v = getattr(ns, f.name, None)
        if v is not None:
            base[f.name] = v
    cfg = RunConfig(**base)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------------
# output


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        return x.item()
    return x


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_record(cfg: RunConfig, record: dict) -> None:
    record = _jsonable(record)
    if cfg.format == "json":
        _emit(cfg, json.dumps(record, sort_keys=True, indent=2) + "\n")
        return
    flat = {}
    for k, v in record.items():
        flat[k] = json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=sorted(flat), lineterminator="\n")
    w.writeheader()
    w.writerow(flat)
    _emit(cfg, buf.getvalue())


def _emit_columns(cfg: RunConfig, header: list[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in r])
    _emit(cfg, buf.getvalue())


def _warn(msg: str) -> None:
    print(f"seedtrace: warning: {msg}", file=sys.stderr)


def _need(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for `{cfg.command}`")


# ------------------------------------------------------------------------
# commands


def cmd_grow(cfg: RunConfig) -> int:
    _need(cfg, "seed")
    seed = read_tree(cfg.seed)
    n = seed.n if cfg.n is None else cfg.n
    if n < seed.n:
        raise UsageError("--n is below the seed size")
    t = grow(seed, n, RngStream(cfg.rng, 0))
    _emit(cfg, format_tree(t))
    print(f"n={t.n} diameter={diameter(t)} G={balance_stats.g_total_float(t)!r}", file=sys.stderr)
    return EXIT_OK


def cmd_stat(cfg: RunConfig) -> int:
    _need(cfg, "seed")
    t = read_tree(cfg.seed)
    g = balance_stats.g_total(t)
    rec = {"n": t.n, "class": canonical_form(t), "G": g, "G_float": float(g),
           "diameter": diameter(t)}
    if cfg.tau is not None:
        tau = read_decorated(cfg.tau)
        rec["tau"] = tau.canonical_id
        rec["F"] = f_tau(tau, t)
    _emit_record(cfg, rec)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    _need(cfg, "suite")
    rep = verify.run_suite(cfg.suite, n=cfg.n, samples=cfg.samples, master_seed=cfg.rng,
                           workers=cfg.workers)
    _emit_record(cfg, rep.to_dict())
    print(rep.summary(), file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _statistic_arg(cfg: RunConfig):
    if cfg.statistic == "G":
        return "G"
    _need(cfg, "tau")
    return read_decorated(cfg.tau)


def cmd_distinguish(cfg: RunConfig) -> int:
    _need(cfg, "seed", "seed_b")
    s, t = read_tree(cfg.seed), read_tree(cfg.seed_b)
    same = canonical_form(s) == canonical_form(t)
    if same:
        _warn("the two seeds are isomorphic; any bound reflects sampling noise only")
    n = max(s.n, t.n) if cfg.n is None else cfg.n
    samples = 10_000 if cfg.samples is None else cfg.samples
    stat = make_statistic(_statistic_arg(cfg), [s, t], n)
    if cfg.format == "csv":
        # raw sample dump for external plotting
        xs = stat.sample(s, n, samples, cfg.rng, 0, cfg.workers)
        xt = stat.sample(t, n, samples, cfg.rng, 1, cfg.workers)
        rows = [("s", i, float(v)) for i, v in enumerate(xs)]
        rows += [("t", i, float(v)) for i, v in enumerate(xt)]
        _emit_columns(cfg, ["seed", "index", stat.ident], rows)
        return EXIT_OK
    rec = {"tv": tv_lower_bound(s, t, stat, n, samples, cfg.rng, cfg.workers).to_dict()}
    if cfg.separate:
        if same:
            raise UsageError("cannot separate isomorphic seeds")
        rec["separation"] = separation_search(s, t, cfg.label_cap, cfg.budget).to_dict()
    if cfg.accuracy:
        rec["accuracy"] = [
            classification_accuracy(x, s, t, n, samples, cfg.calibration, cfg.rng, stat,
                                    cfg.workers).to_dict()
            for x in ((s,) if same else (s, t))
        ]
    if cfg.sample_tree is not None:
        tree = read_tree(cfg.sample_tree)
        rec["classify"] = classify(tree, s, t, make_statistic(_statistic_arg(cfg), [s, t], tree.n),
                                   cfg.calibration, cfg.rng, cfg.workers).to_dict()
    _emit_record(cfg, rec)
    return EXIT_OK


def cmd_table(cfg: RunConfig) -> int:
    _need(cfg, "tau")
    tau = read_decorated(cfg.tau)
    seed = read_tree(cfg.seed) if cfg.seed else None
    n0 = cfg.n0 if cfg.n0 is not None else (seed.n if seed else 2)
    grid = sorted(cfg.n_grid) if cfg.n_grid else None
    n_max = cfg.n if cfg.n is not None else (grid[-1] if grid else n0 + 10)
    if grid and grid[-1] > n_max:
        raise UsageError("--n-grid exceeds --n")
    if seed is None or not cfg.samples:
        exact = n_max <= 200
        _emit(cfg, build_table(tau, n0, n_max, exact=exact).to_json() + "\n")
        return EXIT_OK
    table = build_table(tau, n0, n_max, exact=False)
    grid = grid or [n_max]
    if cfg.format == "csv":
        vals = martingale_samples(table, seed, grid, cfg.samples, cfg.rng, workers=cfg.workers)
        _emit_columns(cfg, ["sample"] + [f"n={g}" for g in grid],
                      ([i] + [float(v) for v in row] for i, row in enumerate(vals)))
        return EXIT_OK
    rep = l2_diagnostic(table, seed, grid, cfg.samples, cfg.rng, cfg.workers)
    _emit_record(cfg, {"tau": tau.canonical_id, "n0": n0, "n_max": n_max, "l2": rep.to_dict()})
    return EXIT_OK


_DISPATCH = {
    "grow": cmd_grow,
    "stat": cmd_stat,
    "verify": cmd_verify,
    "distinguish": cmd_distinguish,
    "table": cmd_table,
}


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"seedtrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _DISPATCH[cfg.command](cfg)
    except BudgetExceededError as exc:
        print(f"seedtrace: error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except TreeFormatError as exc:
        print(f"seedtrace: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError, OSError) as exc:
        print(f"seedtrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
