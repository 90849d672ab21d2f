"""Shared test utilities: brute-force oracles and distribution bands."""

import numpy as np


def dkw_band_95(n):
    # 95% two-sided Dvoretzky-Kiefer-Wolfowitz band for n samples
    return 1.36 / np.sqrt(n)


def dkw_sup_uniform(values):
    """Exact sup |F_hat - F| against the U(0, 1) CDF.

    The supremum of the deviation of a right-continuous step function
    from the identity is attained at a jump, approached from either
    side, so scanning both one-sided gaps at the sorted sample is exact.
    """
    xs = np.sort(np.asarray(values, dtype=np.float64))
    n = xs.size
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(np.max(np.maximum(np.abs(hi - xs), np.abs(xs - lo))))


def ecdf_counting_oracle(samples, points):
    """O(n * m) empirical CDF by direct counting."""
    samples = np.asarray(samples, dtype=np.float64)
    return np.array([np.sum(samples <= t) / samples.size for t in np.atleast_1d(points)])


def intact_fraction_oracle(origin, orig_flags, m):
    """Fraction of positions t >= m that still verify as watermarked.

    A position counts when its whole (m+1)-token window survives from the
    original stream with consecutive original indices and the original
    token now at position t was watermark-decoded.  origin[t] >= 0 marks a
    surviving original, negative values mark inserted or substituted
    material.  Plain Python loops on purpose.
    """
    origin = list(origin)
    total = 0
    hits = 0
    for t in range(m, len(origin)):
        total += 1
        window = origin[t - m:t + 1]
        if any(o < 0 for o in window):
            continue
        if any(b != a + 1 for a, b in zip(window, window[1:])):
            continue
        if orig_flags[window[-1]]:
            hits += 1
    if total == 0:
        return 0.0
    return hits / total
