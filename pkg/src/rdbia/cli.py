"""Command-line experiment driver.

Every command reads one JSON config (see ``configs/demo.json``) and accepts
a few flag overrides. Outputs are CSV with 12 significant digits, written to
``--out`` or stdout. The exit status is nonzero when an asserted property fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .blocks import DEFAULT_BUDGET, block_distribution, projected_distribution
from .bounds import SOLVER_TOL, RateCache, SweepCase, convergence_experiment, run_case, summarize
from .chain import MarkovChain, chain_from_json, delta_tau, primitivity_exponent, stationary
from .codetransform import identity_codebook, random_codebook, transformed_code_distortion
from .distortion import DistortionSpec, distortion_from_json
from .errors import ConfigError, RDBIAError
from .rdsolver import DEFAULT_TOL, AdditiveSource, brute_force_rd, rd_at_distortion, rd_curve

log = logging.getLogger("rdbia")

DIGITS = 12


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    return str(x)


@dataclass(frozen=True)
class ChainCase:
    label: str
    chain: MarkovChain
    spec: DistortionSpec
    spec_label: str


@dataclass(frozen=True)
class ExperimentConfig:
    cases: tuple
    T: tuple = (1, 2, 3, 4)
    tau: tuple = (0,)
    D: tuple = (0.05, 0.1, 0.3)
    initials: dict = field(default_factory=dict)
    tau_max: int = 10
    tol: float = DEFAULT_TOL
    bound_tol: float = SOLVER_TOL
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    draws: int = 1000
    grid_step: float = 0.01

    @property
    def primary(self) -> ChainCase:
        return self.cases[0]


def _field(doc: dict, name: str, kind, default=None, required=False):
    if name not in doc:
        if required:
            raise ConfigError(f"field '{name}': missing")
        return default
    value = doc[name]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{name}': {exc}") from None


def _number_list(kind):
    def conv(value):
        if isinstance(value, (int, float)):
            value = [value]
        if not isinstance(value, list) or not value:
            raise ValueError("expected a non-empty number or list of numbers")
        return tuple(kind(v) for v in value)

    return conv


def _parse_case(doc, where: str, default_label: str) -> ChainCase:
    if not isinstance(doc, dict):
        raise ConfigError(f"field '{where}': expected an object")
    if "chain" not in doc:
        raise ConfigError(f"field '{where}.chain': missing")
    try:
        chain = chain_from_json(doc["chain"])
    except RDBIAError as exc:
        raise ConfigError(f"field '{where}.chain': {type(exc).__name__}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{where}.chain': {exc}") from None
    dist = doc.get("distortion", "hamming")
    try:
        spec = distortion_from_json(dist, chain.m)
    except RDBIAError as exc:
        raise ConfigError(f"field '{where}.distortion': {type(exc).__name__}: {exc}") from None
    spec_label = dist if isinstance(dist, str) else "matrix"
    return ChainCase(str(doc.get("label", default_label)), chain, spec, spec_label)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON config; any problem raises ConfigError naming the line or field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("line 1: top level must be an object")
    if "cases" in doc:
        if not isinstance(doc["cases"], list) or not doc["cases"]:
            raise ConfigError("field 'cases': expected a non-empty list")
        cases = tuple(_parse_case(c, f"cases[{i}]", f"case{i}") for i, c in enumerate(doc["cases"]))
    else:
        cases = (_parse_case(doc, "<root>", "chain"),)

    initials = doc.get("initials", {})
    if not isinstance(initials, dict):
        raise ConfigError("field 'initials': expected an object mapping labels to distributions")
    m = cases[0].chain.m
    parsed = {}
    for label, law in initials.items():
        try:
            parsed[str(label)] = tuple(float(v) for v in law)
            cases[0].chain.with_initial(parsed[str(label)])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'initials.{label}': {exc}") from None
        if len(parsed[str(label)]) != m:
            raise ConfigError(f"field 'initials.{label}': expected {m} entries")

    cfg = ExperimentConfig(
        cases=cases,
        T=_field(doc, "T", _number_list(int), ExperimentConfig.T),
        tau=_field(doc, "tau", _number_list(int), ExperimentConfig.tau),
        D=_field(doc, "D", _number_list(float), ExperimentConfig.D),
        initials=parsed,
        tau_max=_field(doc, "tau_max", int, ExperimentConfig.tau_max),
        tol=_field(doc, "tol", float, ExperimentConfig.tol),
        bound_tol=_field(doc, "bound_tol", float, ExperimentConfig.bound_tol),
        seed=_field(doc, "seed", int, ExperimentConfig.seed),
        budget=_field(doc, "budget", int, ExperimentConfig.budget),
        draws=_field(doc, "draws", int, ExperimentConfig.draws),
        grid_step=_field(doc, "grid_step", float, ExperimentConfig.grid_step),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    if any(t < 1 for t in cfg.T):
        raise ConfigError("field 'T': block lengths must be >= 1")
    if any(t < 0 for t in cfg.tau):
        raise ConfigError("field 'tau': shifts must be >= 0")
    if any(not d > 0 for d in cfg.D):
        raise ConfigError("field 'D': distortion levels must be > 0")
    for name in ("tol", "bound_tol", "grid_step"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"field '{name}': must be > 0")
    for name in ("tau_max", "budget", "draws"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"field '{name}': must be >= 0")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def write_csv(rows, header, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])


# -- commands ---------------------------------------------------------------


def cmd_chain_info(cfg: ExperimentConfig, out) -> int:
    case = cfg.primary
    chain = case.chain
    pi = stationary(chain)
    exponent = primitivity_exponent(chain.P)
    print(f"m {chain.m}", file=out)
    print("pi " + " ".join(fmt(x) for x in pi), file=out)
    print(f"primitivity_exponent {exponent}", file=out)
    print(f"d_max {fmt(case.spec.d_max)} d_min {fmt(case.spec.d_min)}", file=out)
    laws = {"pi0": chain.pi0, **{k: np.asarray(v) for k, v in cfg.initials.items()}}
    labels = sorted(laws)
    write_csv(
        ([tau] + [delta_tau(chain.with_initial(laws[k]), tau) for k in labels] for tau in range(cfg.tau_max + 1)),
        ["tau"] + [f"delta_{k}" for k in labels],
        out,
    )
    return 0


def cmd_rd_curve(cfg: ExperimentConfig, out) -> int:
    case = cfg.primary
    T, tau = cfg.T[0], cfg.tau[0]
    source = projected_distribution(case.chain, T, tau, case.spec, cfg.budget)
    curve = rd_curve(source, sorted(cfg.D), tol=cfg.tol)
    L = T - tau
    rows = [(p.D, p.R, p.R / L, p.slope, p.iters, p.gap) for p in curve.points]
    write_csv(rows, ["D", "R_bits", "R_per_letter_bits", "slope", "iters", "gap"], out)
    return 0


def _initial_laws(cfg: ExperimentConfig, chain: MarkovChain) -> dict:
    laws = {k: np.asarray(v, float) for k, v in cfg.initials.items()}
    laws.setdefault("pi", stationary(chain))
    if not cfg.initials:
        laws["pi0"] = np.asarray(chain.pi0)
    return laws


def _run_sweep_case(args):
    case, laws, T_max, D_list, budget, tol = args
    sweep = SweepCase(case.label, case.chain, case.spec, case.spec_label)
    return run_case(sweep, laws, T_max, D_list, budget, tol)


BOUND_HEADER = ["chain", "distortion", "name", "T", "tau", "D", "pi_label", "lhs", "rhs", "margin", "preconds", "pass", "reason"]


def _bound_row(r) -> list:
    c = r.context
    return [
        c.get("chain", ""), c.get("distortion", ""), r.name,
        c.get("T", c.get("L", "")), c.get("tau", ""), c.get("D", c.get("a", "")),
        c.get("pi_label", ""), r.lhs, r.rhs, r.margin, r.preconditions_met, r.passed, r.reason,
    ]


def cmd_bounds(cfg: ExperimentConfig, out, jobs: int = 1, summary_out=None) -> int:
    """Full bound sweep over every case, T <= max(T), tau < T and each D."""
    T_max = max(cfg.T)
    tasks = [
        (case, _initial_laws(cfg, case.chain), T_max, cfg.D, cfg.budget, cfg.bound_tol)
        for case in cfg.cases
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_sweep_case, tasks))
    else:
        results = [_run_sweep_case(t) for t in tasks]
    reports = [r for batch in results for r in batch]
    rows = sorted((_bound_row(r) for r in reports), key=lambda row: [fmt(x) for x in row[:7]])
    write_csv(rows, BOUND_HEADER, out)
    summary = summarize(reports)
    by_name = {}
    for r in reports:
        s = by_name.setdefault(r.name, {"total": 0, "passed": 0, "gated": 0})
        s["total"] += 1
        s["passed"] += r.passed
        s["gated"] += not r.preconditions_met
    summary["by_bound"] = dict(sorted(by_name.items()))
    text = json.dumps(summary, indent=2, sort_keys=True)
    if summary_out is not None:
        summary_out.write(text + "\n")
    log.info("bounds summary: %s", json.dumps({k: summary[k] for k in ("total", "passed", "gated")}))
    failed = summary["total"] - summary["passed"] - summary["gated"]
    return 1 if failed else 0


def cmd_converge(cfg: ExperimentConfig, out) -> int:
    case = cfg.primary
    laws = {k: np.asarray(v, float) for k, v in cfg.initials.items()}
    if not laws:
        laws = {"pi0": np.asarray(case.chain.pi0)}
    table = convergence_experiment(case.chain, case.spec, laws, cfg.D[0], cfg.T, RateCache(cfg.tol), cfg.budget)
    write_csv(((r.T, r.pi_label, r.F, r.gap) for r in table.rows), ["T", "pi_label", "F_bits", "gap_bits"], out)
    return 0


def cmd_oracle_compare(cfg: ExperimentConfig, out) -> int:
    """Solver against the grid-search oracle on the T = 1 source of every case and initial law."""
    rows, worst = [], 0.0
    for case in cfg.cases:
        laws = {"pi0": case.chain.pi0, **{k: np.asarray(v) for k, v in cfg.initials.items()}}
        for label in sorted(laws):
            src = block_distribution(case.chain.with_initial(laws[label]), 1, case.spec, cfg.budget)
            for D in sorted(cfg.D):
                solved = rd_at_distortion(src, D, cfg.tol).R
                oracle = brute_force_rd(src, D, cfg.grid_step)
                worst = max(worst, abs(solved - oracle))
                rows.append((case.label, label, D, solved, oracle, solved - oracle))
    write_csv(rows, ["chain", "pi_label", "D", "R_solver", "R_oracle", "diff"], out)
    log.info("largest |solver - oracle| = %.3g bits", worst)
    return 0 if worst <= 0.02 else 1


def cmd_code_demo(cfg: ExperimentConfig, out) -> int:
    """Check full <= projected + tau d_max for extended codes, exhaustively and on random draws."""
    case = cfg.primary
    m, spec = case.chain.m, case.spec
    rng = np.random.default_rng(cfg.seed)
    rows = []
    violations = 0
    for T in sorted(cfg.T):
        for tau in range(T):
            L = T - tau
            codes = {"identity": identity_codebook(m, L)}
            for k in range(2):
                codes[f"random{k}"] = random_codebook(m, L, max(1.0, L / 2), rng, spec)
            for name, code in codes.items():
                worst = -math.inf
                for s in np.ndindex(*(m,) * T):
                    full, proj = transformed_code_distortion(spec, code, s, tau)
                    worst = max(worst, full - proj - tau * spec.d_max)
                violations += worst > 1e-12
                rows.append((T, tau, name, worst, worst <= 1e-12))
    T = max(cfg.T) + 1
    worst = -math.inf
    for _ in range(cfg.draws):
        tau = int(rng.integers(0, T))
        code = random_codebook(m, T - tau, float(rng.integers(1, T - tau + 1)), rng, spec)
        s = rng.integers(0, m, size=T)
        full, proj = transformed_code_distortion(spec, code, s, tau, fill=int(rng.integers(0, m)))
        worst = max(worst, full - proj - tau * spec.d_max)
    violations += worst > 1e-12
    rows.append((T, "random", f"draws={cfg.draws}", worst, worst <= 1e-12))
    write_csv(rows, ["T", "tau", "code", "max_excess", "pass"], out)
    return 1 if violations else 0


COMMANDS = {
    "chain-info": cmd_chain_info,
    "rd-curve": cmd_rd_curve,
    "bounds": cmd_bounds,
    "converge": cmd_converge,
    "oracle-compare": cmd_oracle_compare,
    "code-demo": cmd_code_demo,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdbia", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--summary", help="bounds: JSON summary path (default: stderr)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--D", type=float, nargs="+")
    p.add_argument("--T", type=int, nargs="*")
    p.add_argument("--tau", type=int, nargs="+")
    return p


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.T is not None:
        if not args.T:
            raise ConfigError("--T: empty list of block lengths")
        changes["T"] = tuple(args.T)
    for name in ("D", "tau"):
        if getattr(args, name) is not None:
            changes[name] = tuple(getattr(args, name))
    for name in ("seed", "budget"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    cfg = replace(cfg, **changes)
    validate_config(cfg)
    return cfg


def main(argv=None) -> int:
    level = os.environ.get("RDBIA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        parser.error(str(exc))
    buf = io.StringIO()
    summary = io.StringIO()
    try:
        if args.command == "bounds":
            code = cmd_bounds(cfg, buf, jobs=args.jobs, summary_out=summary)
        else:
            code = COMMANDS[args.command](cfg, buf)
    except RDBIAError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.command == "bounds":
        if args.summary:
            with open(args.summary, "w", encoding="utf-8") as fh:
                fh.write(summary.getvalue())
        else:
            sys.stderr.write(summary.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
