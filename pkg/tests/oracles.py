"""Independent brute-force reference computations used by the tests."""

import math
from fractions import Fraction


def offsets(tuples):
    return [s - m for m, s in tuples]


def skew_samples(tuples):
    th = offsets(tuples)
    return [
        float(Fraction((th[k] - th[k - 1]) * 10**6, tuples[k][0] - tuples[k - 1][0]))
        for k in range(1, len(tuples))
    ]


def filtered_skew(tuples, n):
    """Window mean after the last tuple, recomputed from scratch."""
    window = skew_samples(tuples)[-n:]
    return math.fsum(window) / len(window) if window else 0.0


def filtered_skew_series(tuples, n):
    """Window mean after every tuple, each recomputed from the raw samples."""
    samples = skew_samples(tuples)
    out = [0.0]
    for k in range(1, len(tuples)):
        window = samples[max(0, k - n):k]
        out.append(math.fsum(window) / len(window))
    return out


def telescoped_skew(theta_k, theta_k_minus_n, n, delta):
    return float(Fraction((theta_k - theta_k_minus_n) * 10**6, n * delta))


def composed_affine(x, stages):
    """Apply slave->...->grandmaster maps given as (offset_ps, skew_ppm) local = t + o + s*t."""
    t = Fraction(x)
    for offset, skew in stages:
        t = (t - offset) / (1 + Fraction(skew) / 10**6)
    return t


def double_rounding_bound(samples, result):
    """Worst-case error of a mean of individually rounded doubles.

    Each sample carries half an ulp of its own magnitude, so the bound scales
    with the mean absolute sample, plus one final rounding of the result.
    """
    n = len(samples)
    return (math.fsum(abs(x) for x in samples) / n + abs(result)) * 2.0**-52
