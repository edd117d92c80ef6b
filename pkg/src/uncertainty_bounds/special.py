"""Lambert W (principal branch) and a small counting formula."""

from __future__ import annotations

import math

_BRANCH_POINT = -1.0 / math.e


def lambert_w(s: float, tol: float = 1e-14, max_iter: int = 50) -> float:
    """Principal branch W0 of ``W exp(W) = s`` for ``s >= -1/e``, by Halley iteration."""
    s = float(s)
    if not math.isfinite(s) or s < _BRANCH_POINT:
        raise ValueError(f"lambert_w is real only for s >= -1/e, got {s!r}")
    if s == 0.0:
        return 0.0
    if s == _BRANCH_POINT:
        return -1.0
    if s < -0.25:
        # expansion about the branch point in p = sqrt(2 (e s + 1))
        p = math.sqrt(max(0.0, 2.0 * (math.e * s + 1.0)))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    else:
        w = math.log1p(s)
        if s > 3:
            w -= math.log(w)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - s
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            break
    return w


def lambert_residual(s: float, w: float | None = None) -> float:
    if w is None:
        w = lambert_w(s)
    return abs(w * math.exp(w) - s)


def kappa(n: int) -> int:
    """Number of partitions of ``n`` into at most three parts.

    Equal to the number of independent coefficients of degree ``n`` in a
    polynomial symmetric under all permutations of three variables.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"degree must be a positive integer, got {n!r}")
    return ((n + 3) ** 2 + 6) // 12
