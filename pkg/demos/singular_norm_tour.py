"""Singular Sobolev norms of a wavetrain field as epsilon shrinks.

The singular derivative along ``beta`` carries a factor ``1/epsilon``, so for
a fixed field the order-one norm grows like ``1/epsilon`` once that term
dominates. The two columns compute the norm from the spectral weight and
from the sum of derivative norms; they agree to round-off.

Run with ``python demos/singular_norm_tour.py``.
"""

import numpy as np

from singularpdo.sobolev import NormParams, singular_norm, singular_norm_via_derivatives
from singularpdo.spectral_core import GridSpec, l2_norm, random_field


def main():
    grid = GridSpec("wavetrain", d=1, Nx=32, Kmax=4)
    u = random_field(grid, np.random.default_rng(3))
    print(f"L2 norm: {l2_norm(u):.6f}")
    print(f"{'eps':>10} {'gamma':>6} {'|u|_1 spectral':>16} {'|u|_1 derivatives':>18}")
    for eps in (1.0, 0.25, 2.0**-4):
        for gamma in (1.0, 8.0):
            p = NormParams(s=1.0, gamma=gamma, epsilon=eps, beta=(1.0,))
            print(f"{eps:>10.4g} {gamma:>6.3g} {singular_norm(u, p):>16.6f} "
                  f"{singular_norm_via_derivatives(u, 1, p):>18.6f}")


if __name__ == "__main__":
    main()
