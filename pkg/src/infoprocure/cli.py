"""Configuration-driven experiment runner.

Each experiment kind reads a declarative TOML config (shipped presets
live in ``infoprocure.presets``), runs its sweep with seeded,
path-derived random streams, and writes a CSV results table together
with a JSON run manifest.  Tables are byte-identical across reruns and
thread counts: every work unit owns an RNG substream addressed by its
position in the sweep, and rows are assembled in sweep order no matter
which thread finished first.  Floats are serialized with 17 significant
digits so determinism is checkable byte-wise.

Usage:
    infoprocure <kind> (--config FILE | --preset NAME)
                [--out DIR] [--plot] [--threads N] [--overwrite]
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .core import (
    AgentType,
    Bounds,
    MechanismParams,
    Prior,
    RngStream,
    n_lower_bound,
    sample_types,
    score,
)
from .kernels import BACKEND
from .simulate import (
    best_response_curve,
    empirical_failure_prob,
    kappa_curve,
    participation_map,
    run_with_verification,
)
from .verification import (
    LCB,
    ExactOracle,
    GaussianTailEnvelope,
    SampleVariance,
    slack_lower,
    slack_upper,
)

KINDS = (
    "auction",
    "best-response",
    "participation-map",
    "kappa-curve",
    "failure-prob",
    "slack-bounds",
)

OUT_DIR_ENV = "INFOPROCURE_OUT"
DEFAULT_OUT = "results"


class ConfigError(Exception):
    """Invalid experiment configuration; carries the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key
        self.message = message


def _fmt(value: Any) -> str:
    """Serialize one CSV cell; floats get 17 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def _line_of(text: str, key: str) -> int | None:
    """Best-effort line number of a config key (last path component)."""
    leaf = key.split(".")[-1]
    for i, line in enumerate(text.splitlines(), start=1):
        if re.match(rf"^\s*{re.escape(leaf)}\s*=", line):
            return i
    return None


class _Config:
    """Typed accessors over the parsed TOML with precise error keys."""

    def __init__(self, data: dict, path: str):
        self.data = data
        self.path = path

    def _walk(self, key: str, default=..., expect=None):
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is ...:
                    raise ConfigError(key, "required key is missing")
                return default
            node = node[part]
        if expect is not None and not isinstance(node, expect):
            raise ConfigError(key, f"expected {expect[0].__name__}, got {type(node).__name__}")
        return node

    def number(self, key: str, default=...) -> float:
        val = self._walk(key, default, expect=(int, float))
        if isinstance(val, bool):
            raise ConfigError(key, "expected a number, got a boolean")
        return float(val)

    def integer(self, key: str, default=...) -> int:
        val = self._walk(key, default, expect=(int,))
        if isinstance(val, bool):
            raise ConfigError(key, "expected an integer, got a boolean")
        return int(val)

    def string(self, key: str, default=...) -> str:
        return self._walk(key, default, expect=(str,))

    def numbers(self, key: str, default=...) -> list[float]:
        val = self._walk(key, default, expect=(list,))
        if val is default and default is not ...:
            return val
        if not val or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val):
            raise ConfigError(key, "expected a nonempty list of numbers")
        return [float(x) for x in val]

    def strings(self, key: str, default=...) -> list[str]:
        val = self._walk(key, default, expect=(list,))
        if val is default and default is not ...:
            return val
        if not val or not all(isinstance(x, str) for x in val):
            raise ConfigError(key, "expected a nonempty list of strings")
        return list(val)

    def interval(self, key: str) -> tuple[float, float]:
        vals = self.numbers(key)
        if len(vals) != 2 or not (vals[0] <= vals[1]):
            raise ConfigError(key, "expected [lo, hi] with lo <= hi")
        return (vals[0], vals[1])


def _prior(cfg: _Config) -> Prior:
    try:
        return Prior(cost=cfg.interval("prior.cost"), inv_fisher=cfg.interval("prior.inv_fisher"))
    except ValueError as exc:
        raise ConfigError("prior", str(exc)) from exc


def _bounds(cfg: _Config) -> Bounds:
    prior = _prior(cfg)
    try:
        return prior.bounds()
    except ValueError as exc:
        raise ConfigError("prior", str(exc)) from exc


def _rule(token: str, alpha: float, key: str):
    if token == "sample-variance":
        return SampleVariance()
    if token == "lcb":
        return LCB(alpha)
    if token == "exact-oracle":
        return ExactOracle()
    raise ConfigError(key, f"unknown rule {token!r} (use sample-variance, lcb or exact-oracle)")


def _grid(lo: float, hi: float, step: float, key: str) -> list[float]:
    if step <= 0.0 or hi < lo:
        raise ConfigError(key, "grid needs lo <= hi and a positive step")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + step * i for i in range(count)]


def _params(beta: float, bounds: Bounds, rho: float, key: str) -> MechanismParams:
    try:
        return MechanismParams.from_bounds(beta, bounds, rho=rho)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from exc


def _parallel_map(fn: Callable, units: Sequence, threads: int) -> list:
    """Apply fn to units, preserving unit order regardless of scheduling."""
    if threads <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, units))


# --- experiment kinds --------------------------------------------------------


def _run_auction(cfg: _Config, rng: RngStream, threads: int):
    prior = _prior(cfg)
    bounds = _bounds(cfg)
    m = cfg.integer("auction.m")
    if m < 1:
        raise ConfigError("auction.m", "population must have at least one seller")
    beta = cfg.number("auction.beta")
    rho = cfg.number("auction.rho", 1.0)
    alpha = cfg.number("auction.alpha", 0.05)
    rule = _rule(cfg.string("auction.rule"), alpha, "auction.rule")
    params = _params(beta, bounds, rho, "auction.beta")

    types = sample_types(prior, m, rng.child("types"))
    actions = [t.truthful_report() for t in types]
    outcome, utilities = run_with_verification(actions, types, params, rule, rng.child("verify"))

    header = [
        "agent", "cost", "inv_fisher", "price", "reported_inv_fisher", "score",
        "is_winner", "unit_payment", "quantity", "voided", "utility",
    ]
    rows = []
    for i, (t, a) in enumerate(zip(types, actions)):
        is_winner = outcome.winner == i
        rows.append([
            i, t.cost, t.inv_fisher, a.price, a.reported_inv_fisher, score(a),
            is_winner,
            outcome.unit_payment if is_winner else None,
            outcome.quantity if is_winner else None,
            outcome.voided if is_winner else None,
            float(utilities[i]),
        ])
    return header, rows


def _run_best_response(cfg: _Config, rng: RngStream, threads: int):
    prior = _prior(cfg)
    bounds = _bounds(cfg)
    m = cfg.integer("population.m")
    reps = cfg.integer("monte_carlo.reps")
    focal_cost = cfg.number("best_response.focal_cost")
    truths = cfg.numbers("best_response.true_inv_fisher")
    betas = cfg.numbers("best_response.betas")
    rule_tokens = cfg.strings("best_response.rules")
    alpha = cfg.number("best_response.alpha", 0.05)
    rho = cfg.number("best_response.rho", 1.0)
    grid = _grid(
        cfg.number("best_response.report_min"),
        cfg.number("best_response.report_max"),
        cfg.number("best_response.report_step"),
        "best_response.report_step",
    )
    rules = [(tok, _rule(tok, alpha, "best_response.rules")) for tok in rule_tokens]

    units = [(tok, rule, beta, v) for tok, rule in rules for beta in betas for v in truths]

    def run_unit(unit):
        tok, rule, beta, v = unit
        params = _params(beta, bounds, rho, "best_response.betas")
        curve = best_response_curve(
            AgentType(focal_cost, v), grid, prior, m, params, rule, reps,
            rng.child("best-response", tok, beta, v),
        )
        return [
            [tok, beta, v, g, u.mean, u.std_error]
            for g, u in zip(curve.report_grid, curve.utilities)
        ]

    header = ["rule", "beta", "true_variance", "reported_variance", "utility_mean", "utility_se"]
    chunks = _parallel_map(run_unit, units, threads)
    return header, [row for chunk in chunks for row in chunk]


def _run_participation_map(cfg: _Config, rng: RngStream, threads: int):
    prior = _prior(cfg)
    bounds = _bounds(cfg)
    m = cfg.integer("population.m")
    reps = cfg.integer("monte_carlo.reps")
    beta = cfg.number("participation_map.beta")
    rho = cfg.number("participation_map.rho", 1.0)
    alpha = cfg.number("participation_map.alpha", 0.05)
    rule_tokens = cfg.strings("participation_map.rules")
    report_step = cfg.number("participation_map.report_step", 0.25)
    costs = _grid(
        cfg.number("participation_map.cost_min"),
        cfg.number("participation_map.cost_max"),
        cfg.number("participation_map.cost_step"),
        "participation_map.cost_step",
    )
    variances = _grid(
        cfg.number("participation_map.inv_fisher_min"),
        cfg.number("participation_map.inv_fisher_max"),
        cfg.number("participation_map.inv_fisher_step"),
        "participation_map.inv_fisher_step",
    )
    rules = [(tok, _rule(tok, alpha, "participation_map.rules")) for tok in rule_tokens]
    params = _params(beta, bounds, rho, "participation_map.beta")
    cells = [AgentType(c, v) for c in costs for v in variances]

    units = [(tok, rule, i, t) for tok, rule in rules for i, t in enumerate(cells)]

    def run_unit(unit):
        tok, rule, i, t = unit
        cell = participation_map(
            [t], prior, m, params, rule, reps, rng.child("map", tok, i),
            report_step=report_step,
        )[0]
        return [[
            tok, beta, t.cost, t.inv_fisher, cell.argmax_report,
            cell.optimal_report_utility.mean, cell.optimal_report_utility.std_error,
            cell.participates,
        ]]

    header = [
        "rule", "beta", "cost", "true_variance", "best_report",
        "utility_mean", "utility_se", "participates",
    ]
    chunks = _parallel_map(run_unit, units, threads)
    return header, [row for chunk in chunks for row in chunk]


def _run_kappa_curve(cfg: _Config, rng: RngStream, threads: int):
    support = cfg.interval("kappa_curve.score_support")
    m_values = [int(x) for x in cfg.numbers("kappa_curve.m")]
    reps = cfg.integer("kappa_curve.reps")
    s_values = _grid(
        cfg.number("kappa_curve.s_min"),
        cfg.number("kappa_curve.s_max"),
        cfg.number("kappa_curve.s_step"),
        "kappa_curve.s_step",
    )
    for m in m_values:
        if m < 2:
            raise ConfigError("kappa_curve.m", "population sizes must be at least 2")
    if s_values[-1] >= support[1]:
        raise ConfigError("kappa_curve.s_max", "scores must stay below the support's upper end")

    units = [(m, i, s) for m in m_values for i, s in enumerate(s_values)]

    def run_unit(unit):
        m, i, s = unit
        est = kappa_curve([s], support, m, reps, rng.child("kappa", m, "s", i))[0]
        return [[m, s, est.value, est.std_error]]

    header = ["m", "s", "kappa_hat", "se"]
    chunks = _parallel_map(run_unit, units, threads)
    return header, [row for chunk in chunks for row in chunk]


def _run_failure_prob(cfg: _Config, rng: RngStream, threads: int):
    true_v = cfg.number("failure_prob.true_inv_fisher")
    reported = cfg.number("failure_prob.reported_inv_fisher", true_v)
    alpha = cfg.number("failure_prob.alpha", 0.05)
    reps = cfg.integer("failure_prob.reps")
    n_values = [int(x) for x in cfg.numbers("failure_prob.n")]
    rule_tokens = cfg.strings("failure_prob.rules")
    rules = [(tok, _rule(tok, alpha, "failure_prob.rules")) for tok in rule_tokens]
    for n in n_values:
        if n < 2:
            raise ConfigError("failure_prob.n", "sample sizes must be at least 2")

    units = [(tok, rule, n) for tok, rule in rules for n in n_values]

    def run_unit(unit):
        tok, rule, n = unit
        p = empirical_failure_prob(true_v, reported, n, rule, reps, rng.child("fail", tok, n))
        return [[tok, true_v, reported, n, reps, p]]

    header = ["rule", "true_variance", "reported_variance", "n", "reps", "failure_prob"]
    chunks = _parallel_map(run_unit, units, threads)
    return header, [row for chunk in chunks for row in chunk]


def _run_slack_bounds(cfg: _Config, rng: RngStream, threads: int):
    bounds = _bounds(cfg)
    betas = cfg.numbers("slack_bounds.betas")
    env = GaussianTailEnvelope(
        v_hi=bounds.v_hi,
        c1=cfg.number("envelope.c1", 1.0),
        c2=cfg.number("envelope.c2", 1.0),
        c3=cfg.number("envelope.c3", 1.0),
        c4=cfg.number("envelope.c4", 1.0),
    )
    header = ["beta", "N", "slack_lower", "slack_upper"]
    rows = []
    for beta in betas:
        if beta <= 0.0:
            raise ConfigError("slack_bounds.betas", "betas must be positive")
        n_k = n_lower_bound(beta, bounds)
        if n_k < 1.0:
            raise ConfigError("slack_bounds.betas", f"beta={beta} gives N below 1")
        rows.append([beta, n_k, slack_lower(n_k, bounds, env), slack_upper(n_k, bounds, env)])
    return header, rows


_RUNNERS = {
    "auction": _run_auction,
    "best-response": _run_best_response,
    "participation-map": _run_participation_map,
    "kappa-curve": _run_kappa_curve,
    "failure-prob": _run_failure_prob,
    "slack-bounds": _run_slack_bounds,
}


# --- I/O ---------------------------------------------------------------------


@dataclass
class RunPaths:
    table: Path
    manifest: Path
    plot: Path


def _paths(kind: str, out_dir: Path) -> RunPaths:
    stem = kind.replace("-", "_")
    return RunPaths(
        table=out_dir / f"{stem}.csv",
        manifest=out_dir / f"{stem}_manifest.json",
        plot=out_dir / f"{stem}.svg",
    )


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(path: Path, kind: str, cfg: _Config, seed: int, threads: int,
                    wall: float, outputs: list[str]) -> None:
    manifest = {
        "kind": kind,
        "seed": seed,
        "threads": threads,
        "backend": BACKEND,
        "version": __version__,
        "wall_time_seconds": wall,
        "config": cfg.data,
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def preset_path(name: str):
    """Filesystem path of a shipped preset config."""
    candidate = resources.files("infoprocure.presets") / f"{name.replace('-', '_')}.toml"
    if not candidate.is_file():
        available = sorted(
            p.name[:-5].replace("_", "-")
            for p in resources.files("infoprocure.presets").iterdir()
            if p.name.endswith(".toml")
        )
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(available)}")
    return candidate


def load_config(path) -> tuple[_Config, str]:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<syntax>", f"TOML parse error: {exc}") from exc
    return _Config(data, str(path)), text


def run_experiment(kind: str, cfg: _Config, out_dir: Path, *, threads: int = 1,
                   plot: bool = False, overwrite: bool = False) -> RunPaths:
    """Validate, run and persist one experiment; returns the output paths."""
    declared = cfg.string("kind")
    if declared != kind:
        raise ConfigError("kind", f"config declares kind {declared!r}, command asked for {kind!r}")
    seed = cfg.integer("seed")
    if threads < 1:
        raise ConfigError("threads", "thread count must be at least 1")

    out_dir.mkdir(parents=True, exist_ok=True)
    paths = _paths(kind, out_dir)
    if paths.table.exists() and not overwrite:
        raise ConfigError(
            "output", f"refusing to overwrite {paths.table} (pass --overwrite to allow)"
        )

    start = time.perf_counter()
    header, rows = _RUNNERS[kind](cfg, RngStream(seed), threads)
    wall = time.perf_counter() - start

    _write_table(paths.table, header, rows)
    outputs = [paths.table.name]
    if plot:
        from . import _plots

        _plots.render(kind, header, rows, paths.plot)
        outputs.append(paths.plot.name)
    _write_manifest(paths.manifest, kind, cfg, seed, threads, wall, outputs)
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="infoprocure",
        description="Data-procurement auction experiments with quality verification.",
    )
    parser.add_argument("kind", choices=KINDS, help="experiment kind to run")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="path to a TOML experiment config")
    source.add_argument("--preset", help="name of a shipped preset config")
    parser.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: ${OUT_DIR_ENV} or ./{DEFAULT_OUT})")
    parser.add_argument("--plot", action="store_true", help="also render a static SVG plot")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    parser.add_argument("--overwrite", action="store_true",
                        help="replace an existing results table")
    args = parser.parse_args(argv)

    out_dir = args.out or Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT))
    text = ""
    try:
        config_file = args.config if args.config is not None else preset_path(args.preset)
        cfg, text = load_config(config_file)
        paths = run_experiment(
            args.kind, cfg, out_dir,
            threads=args.threads, plot=args.plot, overwrite=args.overwrite,
        )
    except ConfigError as exc:
        location = str(args.config if args.config is not None else args.preset)
        line = None
        if text and exc.key not in ("<syntax>", "output", "preset"):
            line = _line_of(text, exc.key)
        at = f"{location}:{line}" if line else location
        print(f"error: {at}: {exc.key}: {exc.message}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    print(f"wrote {paths.table}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
