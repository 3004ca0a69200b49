"""Solver against closed forms and the grid-search oracle on small sources.

    python3 scripts/oracle_check.py
"""

import numpy as np

from rdbia.rdsolver import AdditiveSource, binary_entropy, brute_force_rd, d_zero, rd_at_distortion

HAM = 1.0 - np.eye(2)


def main():
    print("uniform bit, Hamming: R(D) vs 1 - h2(D)")
    src = AdditiveSource(np.array([0.5, 0.5]), [HAM])
    for D in np.arange(0.05, 0.46, 0.05):
        R = rd_at_distortion(src, D).R
        print(f"  D={D:.2f}  R={R:.10f}  closed={1 - binary_entropy(D):.10f}")
    print("random binary sources: solver vs grid oracle (step 0.01)")
    rng = np.random.default_rng(0)
    for _ in range(5):
        p = rng.dirichlet([1, 1])
        d = rng.uniform(0.2, 2.0, size=(2, 2))
        np.fill_diagonal(d, 0)
        s = AdditiveSource(p, [d])
        for frac in (0.25, 0.5, 0.75):
            D = frac * d_zero(s)
            print(f"  p={p[0]:.3f} D={D:.4f}  solver={rd_at_distortion(s, D).R:.6f}  oracle={brute_force_rd(s, D):.6f}")


if __name__ == "__main__":
    main()
