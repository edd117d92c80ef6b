"""Moment triples, the (u, v, w) coordinates and the hyperboloid sheets."""

from __future__ import annotations

import math
from dataclasses import dataclass

# Variances below this multiple of hbar are treated as non-physical.
MIN_VARIANCE = 1e-12


@dataclass(frozen=True)
class Moments3:
    """Second moments (x, y, w) = (var p, var q, cov pq), in units of hbar."""

    x: float
    y: float
    w: float

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise ValueError(f"non-physical moments: variances must be positive, got {self}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w)):
            raise ValueError(f"non-finite moments {self}")

    def __iter__(self):
        return iter((self.x, self.y, self.w))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.w)


@dataclass(frozen=True)
class MomentPoint:
    u: float
    v: float
    w: float

    def __iter__(self):
        return iter((self.u, self.v, self.w))


def sheet_energy(n: int, hbar: float = 1.0) -> float:
    """Oscillator level e_n = (n + 1/2) hbar labelling sheet n."""
    if n < 0 or int(n) != n:
        raise ValueError(f"sheet index must be a non-negative integer, got {n!r}")
    return (n + 0.5) * hbar


def is_valid(m, hbar: float = 1.0) -> bool:
    x, y, w = m
    return x > MIN_VARIANCE * hbar and y > MIN_VARIANCE * hbar and math.isfinite(w)


def to_uvw(m) -> MomentPoint:
    x, y, w = m
    return MomentPoint((x + y) / 2, (x - y) / 2, w)


def from_uvw(p) -> Moments3:
    u, v, w = p
    if not u > abs(v):
        raise ValueError(f"non-physical point: need u > |v|, got u={u!r}, v={v!r}")
    return Moments3(u + v, u - v, w)


def rs_value(m) -> float:
    """Robertson-Schroedinger combination x*y - w**2."""
    x, y, w = m
    return x * y - w * w


def hyperboloid_residual(p, n: int, hbar: float = 1.0) -> float:
    u, v, w = p
    e = sheet_energy(n, hbar)
    return u * u - v * v - w * w - e * e


def in_uncertainty_region(m, hbar: float = 1.0) -> bool:
    return rs_value(m) >= hbar * hbar / 4
