"""Regenerate the N=1024 skew-table fixture.

A seeded Gaussian draw is standardized to population mean 0 and sigma 1, and
one sample is moved so that the lower median lands on a chosen standardized
value. The fixture is the affine image mean + sigma * unit of that series.

    python3 tests/fixtures/make_skew_fixture.py
"""

import math
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
COUNT = 1000
MEDIAN, MEAN, SIGMA = 1.3085, 1.3604, 0.32816
WINDOW = 1024
SPACING_PS = 10**10


def unit_series(target_median: float, seed: int = 20240601) -> np.ndarray:
    x = np.sort(np.random.default_rng(seed).normal(size=COUNT))
    # lower median of an even-length series is element COUNT//2 - 1 when sorted
    for _ in range(50):
        x = (x - x.mean()) / x.std()
        x.sort()
        lo = COUNT // 2 - 1
        shift = target_median - x[lo]
        if abs(shift) < 1e-15:
            break
        # move the middle block rigidly so order is kept, then renormalize
        x[lo - 5: lo + 6] += shift
    x = (x - x.mean()) / x.std()
    return x


def main():
    z = (MEDIAN - MEAN) / SIGMA
    unit = unit_series(z)
    (HERE / "unit_series.txt").write_text("".join(f"{v:.17g}\n" for v in unit))
    values = MEAN + SIGMA * unit
    (HERE / "skew_n1024.csv").write_text(
        "skew_ppm\n" + "".join(f"{v:.15g}\n" for v in values))
    theta = [0] * WINDOW
    for j, v in enumerate(values):
        theta.append(theta[j] + round(v * WINDOW * SPACING_PS / 1e6))
    (HERE / "skew_n1024_tuples.csv").write_text(
        "t_master_ps,t_slave_ps\n"
        + "".join(f"{k * SPACING_PS},{k * SPACING_PS + th}\n" for k, th in enumerate(theta)))
    print(f"mean={values.mean():.6f} sigma={values.std():.6f} "
          f"lower_median={np.sort(values)[COUNT // 2 - 1]:.6f} ok={math.isfinite(values.sum())}")


if __name__ == "__main__":
    main()
