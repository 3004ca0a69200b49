"""Full bound sweep: every case in the config, T <= max(T), tau < T, each D.

    python3 scripts/run_bounds_sweep.py [--config configs/sweep.json] [--outdir results]

Writes bounds.csv (one row per inequality instance) and summary.json, and
prints the per-bound tallies. Exit status 1 if any non-gated check fails.
"""

import argparse
import json
import pathlib
import sys
import time

from rdbia.cli import cmd_bounds, load_config

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "sweep.json"))
    ap.add_argument("--outdir", default=str(ROOT / "results"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    cfg = load_config(args.config)
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with open(outdir / "bounds.csv", "w", newline="") as fh, open(outdir / "summary.json", "w") as sfh:
        code = cmd_bounds(cfg, fh, jobs=args.jobs, summary_out=sfh)
    summary = json.loads((outdir / "summary.json").read_text())
    print(f"{summary['total']} checks, {summary['passed']} passed, {summary['gated']} gated "
          f"({time.perf_counter() - t0:.0f} s)")
    for name, s in summary["by_bound"].items():
        failed = s["total"] - s["passed"] - s["gated"]
        print(f"  {name:16s} total {s['total']:5d}  passed {s['passed']:5d}  gated {s['gated']:5d}  failed {failed}")
    return code


if __name__ == "__main__":
    sys.exit(main())
