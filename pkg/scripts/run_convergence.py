"""Per-letter rate of the block-independent approximation for several initial laws.

    python3 scripts/run_convergence.py [--config configs/demo.json] [--out results/convergence.csv]

Writes F(T, pi') and its distance to the stationary-start value for every T
in the config, then prints the table.
"""

import argparse
import pathlib
import sys

from rdbia.cli import cmd_converge, load_config

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "demo.json"))
    ap.add_argument("--out", default=str(ROOT / "results" / "convergence.csv"))
    args = ap.parse_args()
    cfg = load_config(args.config)
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        code = cmd_converge(cfg, fh)
    sys.stdout.write(out.read_text())
    return code


if __name__ == "__main__":
    sys.exit(main())
