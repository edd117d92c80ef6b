"""F-matrix, Williamson parameters, squeezed-state moments and the BCH map.

Conventions: the quadratic operator is ``(p, q) F (p, q)^T`` with
``F = [[f_x, f_w/2], [f_w/2, f_y]]``.  The shear ``G_b = [[1, 0], [b, 1]]``
and scaling ``S_g = diag(exp(-g), exp(g))`` act on the column ``(p, q)``.
For positive definite ``F`` the matrix ``Sigma = (S_g G_b)^-1`` brings ``F``
to ``sqrt(det F) * I`` by congruence.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .moments import Moments3, sheet_energy


class Definiteness(enum.Enum):
    POS_DEF = "POS_DEF"
    NEG_DEF = "NEG_DEF"
    INDEFINITE = "INDEFINITE"
    SINGULAR = "SINGULAR"


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True)
class FMatrix:
    fx: float
    fy: float
    fw: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, self.fw / 2], [self.fw / 2, self.fy]])

    @property
    def det(self) -> float:
        return self.fx * self.fy - self.fw * self.fw / 4

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


class SqueezeParams(NamedTuple):
    b: float
    gamma: float


class ComplexSqueeze(NamedTuple):
    r: float
    theta: float
    chi: float


def f_matrix(g) -> FMatrix:
    fx, fy, fw = g
    return FMatrix(float(fx), float(fy), float(fw))


def default_tolerance(F: FMatrix) -> float:
    return 1e-10 * (1.0 + F.norm())


def classify_definiteness(F: FMatrix, tol: float | None = None) -> Definiteness:
    if tol is None:
        tol = default_tolerance(F)
    det = F.det
    if abs(det) <= tol:
        return Definiteness.SINGULAR
    if det > tol and F.fx > tol:
        return Definiteness.POS_DEF
    if det > tol and F.fx < -tol:
        return Definiteness.NEG_DEF
    return Definiteness.INDEFINITE


def gauge_matrix(b: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [b, 1.0]])


def squeeze_matrix(gamma: float) -> np.ndarray:
    return np.array([[math.exp(-gamma), 0.0], [0.0, math.exp(gamma)]])


def williamson_params(F: FMatrix) -> tuple[SqueezeParams, float]:
    """Return ``((b, gamma), c)`` with ``Sigma^T F Sigma = c I``."""
    if classify_definiteness(F) is not Definiteness.POS_DEF:
        raise NotPositiveDefiniteError(f"F-matrix is not positive definite: {F}")
    assert F.fy > 0
    c = math.sqrt(F.det)
    b = F.fw / (2 * F.fy)
    gamma = 0.5 * math.log(F.fy / c)
    return SqueezeParams(b, gamma), c


def sigma_matrix(s: SqueezeParams) -> np.ndarray:
    return np.linalg.inv(squeeze_matrix(s.gamma) @ gauge_matrix(s.b))


def squeezed_moments(n: int, s: SqueezeParams, hbar: float = 1.0) -> Moments3:
    """Second moments of the squeezed number state built on level ``n``."""
    e = sheet_energy(n, hbar)
    b, gamma = s
    e2g = math.exp(2 * gamma)
    x = e * e2g
    return Moments3(x, e * (b * b * e2g + 1.0 / e2g), -b * x)


def consistency_matrix(F: FMatrix, m) -> np.ndarray:
    """``F C / sqrt(det F)``; equals ``e_n I`` at an extremum on sheet n."""
    x, y, w = m
    C = np.array([[x, w], [w, y]])
    return F.matrix @ C / math.sqrt(F.det)


def bogoliubov_lhs(s: SqueezeParams) -> tuple[complex, complex]:
    """Coefficients of ``a`` and ``a^dagger`` in ``G_b S_g a S_g^+ G_b^+``."""
    b, gamma = s
    k = 0.5 * b * math.exp(gamma)
    return complex(math.cosh(gamma), -k), complex(math.sinh(gamma), k)


def bogoliubov_rhs(cs: ComplexSqueeze) -> tuple[complex, complex]:
    """Coefficients of ``a`` and ``a^dagger`` after a rotation then a squeeze."""
    r, theta, chi = cs
    return cmath.exp(-1j * chi) * math.cosh(r), -cmath.exp(1j * (theta - chi)) * math.sinh(r)


def _wrap(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.remainder(theta, 2 * math.pi)
    return math.pi if t == -math.pi else t


def bch_convert(s: SqueezeParams) -> ComplexSqueeze:
    """Rewrite ``G_b S_g`` as a squeeze ``S(r e^{i theta})`` after a rotation ``R(chi)``.

    The arctangent expressions fix ``theta`` only modulo pi; of the two
    candidates the one reproducing the Bogoliubov coefficients is kept.
    ``r`` is computed as ``asinh|c2|``, equal to
    ``arcosh(sqrt(cosh(g)^2 + b^2 e^{2g} / 4))`` but accurate near ``r = 0``.
    """
    b, gamma = s
    chi = math.atan(b / (1 + math.exp(-2 * gamma)))
    if gamma == 0:
        theta0 = math.pi / 2 + math.atan(b / 2)
    else:
        # atan2 keeps the arctangent finite when 1 - exp(-2 gamma) underflows;
        # it differs from atan(b / d) by pi at most, which the loop below absorbs
        theta0 = math.atan2(b, -math.expm1(-2 * gamma)) + chi
    c2 = bogoliubov_lhs(s)[1]
    r = math.asinh(abs(c2))
    best = None
    for cand in (_wrap(theta0), _wrap(theta0 + math.pi)):
        cs = ComplexSqueeze(r, cand, chi)
        res = abs(bogoliubov_rhs(cs)[1] - c2)
        if best is None or res < best[0]:
            best = (res, cs)
    return best[1]


def bogoliubov_residual(s: SqueezeParams, cs: ComplexSqueeze | None = None) -> float:
    if cs is None:
        cs = bch_convert(s)
    l1, l2 = bogoliubov_lhs(s)
    r1, r2 = bogoliubov_rhs(cs)
    return max(abs(l1 - r1), abs(l2 - r2))
