"""Extremal moment triples of a functional on each hyperboloid sheet.

At an extremum on sheet ``n`` the three residuals

    r1 = x f_x - y f_y
    r2 = x f_w + 2 w f_y
    r3 = x y - w^2 - e_n^2

vanish.  They are solved by damped Gauss-Newton from a lattice of seeds
lying on the sheet; the rank of the residual Jacobian at each root tells
whether the root is isolated or part of a curve or surface of extrema, and
curves and surfaces are sampled by predictor-corrector continuation.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .functional import Functional, FunctionalError
from .moments import Moments3, sheet_energy
from .symplectic import (
    Definiteness,
    SqueezeParams,
    classify_definiteness,
    f_matrix,
    squeezed_moments,
)

log = logging.getLogger(__name__)


class Dimension(enum.Enum):
    EMPTY = "EMPTY"
    DIM0 = "DIM0"
    DIM1 = "DIM1"
    DIM2 = "DIM2"


_RANK_TO_DIM = {3: Dimension.DIM0, 2: Dimension.DIM1, 1: Dimension.DIM2, 0: Dimension.DIM2}
_DIM_ORDER = [Dimension.EMPTY, Dimension.DIM0, Dimension.DIM1, Dimension.DIM2]


@dataclass
class SolverConfig:
    nmax: int = 5
    seed_shape: tuple[int, int] = (7, 7)
    b_max: float = 2.0
    gamma_max: float = 1.5
    max_iter: int = 100
    max_halvings: int = 30
    residual_tol: float = 1e-10
    dedup_tol: float = 1e-7
    rank_tol: float = 1e-8
    continuation_step: float = 0.05
    continuation_samples: int = 200
    surface_rays: int = 8
    hbar: float = 1.0


class ResidualVector(NamedTuple):
    r1: float
    r2: float
    r3: float


@dataclass
class ExtremalSet:
    sheet: int
    dimension: Dimension
    points: list[Moments3] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    samples: list[Moments3] = field(default_factory=list)
    sample_values: list[float] = field(default_factory=list)
    ranks: list[int] = field(default_factory=list)
    branch: int | None = None
    seeds_tried: int = 0
    seeds_converged: int = 0
    discarded: list[tuple[Moments3, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def all_points(self) -> list[tuple[Moments3, float]]:
        return list(zip(self.points, self.values)) + list(zip(self.samples, self.sample_values))


def residuals(f: Functional, m, n: int, hbar: float = 1.0) -> ResidualVector:
    x, y, w = m
    fx, fy, fw = f.gradient((x, y, w))
    e = sheet_energy(n, hbar)
    return ResidualVector(x * fx - y * fy, x * fw + 2 * w * fy, x * y - w * w - e * e)


def seed_grid(n: int, cfg: SolverConfig | None = None) -> list[Moments3]:
    """Squeezed-state moments over a (b, gamma) lattice; all lie on sheet ``n``."""
    cfg = cfg or SolverConfig()
    nb, ng = cfg.seed_shape
    bs = np.linspace(-cfg.b_max, cfg.b_max, nb) if nb > 1 else np.zeros(1)
    gs = np.linspace(-cfg.gamma_max, cfg.gamma_max, ng) if ng > 1 else np.zeros(1)
    return [squeezed_moments(n, SqueezeParams(float(b), float(g)), cfg.hbar) for b in bs for g in gs]


class _System:
    """Residual evaluation for one functional on one sheet."""

    def __init__(self, f: Functional, n: int, cfg: SolverConfig):
        self.f = f
        self.e = sheet_energy(n, cfg.hbar)
        self.cfg = cfg
        self.branch = f.abs_branch

    def in_domain(self, p) -> bool:
        x, y, w = p
        if not (x > 1e-12 * self.cfg.hbar and y > 1e-12 * self.cfg.hbar):
            return False
        return math.isfinite(w)

    def evaluate(self, p):
        """Return ``(f, raw, scaled)`` or ``None`` outside the domain."""
        if not self.in_domain(p):
            return None
        x, y, w = (float(v) for v in p)
        try:
            val, (fx, fy, fw) = self.f.value_and_gradient((x, y, w))
        except FunctionalError:
            return None
        t1, t2, t3, t4 = x * fx, y * fy, x * fw, 2 * w * fy
        e2 = self.e * self.e
        raw = np.array([t1 - t2, t3 + t4, x * y - w * w - e2])
        s = abs(t1) + abs(t2) + abs(t3) + abs(t4)
        if not s > 0 or not math.isfinite(s):
            s = 1.0
        scaled = np.array([raw[0] / s, raw[1] / s, raw[2] / e2])
        if not np.all(np.isfinite(scaled)):
            return None
        return val, raw, scaled

    def converged(self, ev) -> bool:
        val, raw, _ = ev
        return float(np.max(np.abs(raw))) < self.cfg.residual_tol * (1 + abs(val))

    def jacobian(self, p):
        p = np.asarray(p, dtype=float)
        h = 1e-6 * max(float(np.max(np.abs(p))), self.e)
        J = np.empty((3, 3))
        for i in range(3):
            dp = np.zeros(3)
            dp[i] = h
            a = self.evaluate(p + dp)
            b = self.evaluate(p - dp)
            if a is None or b is None:
                c = self.evaluate(p)
                if c is None:
                    return None
                if a is not None:
                    J[:, i] = (a[2] - c[2]) / h
                elif b is not None:
                    J[:, i] = (c[2] - b[2]) / h
                else:
                    return None
            else:
                J[:, i] = (a[2] - b[2]) / (2 * h)
        return J

    def newton(self, p0):
        """Damped Gauss-Newton from ``p0``; returns ``(point, ev)`` or ``None``."""
        p = np.asarray(p0, dtype=float)
        ev = self.evaluate(p)
        if ev is None:
            return None
        history = [float(np.linalg.norm(ev[2]))]
        for _ in range(self.cfg.max_iter):
            if self.converged(ev):
                return self.polish(p, ev)
            J = self.jacobian(p)
            if J is None:
                return None
            step = np.linalg.lstsq(J, -ev[2], rcond=1e-13)[0]
            norm0 = history[-1]
            t = 1.0
            for _ in range(self.cfg.max_halvings):
                q = p + t * step
                evq = self.evaluate(q)
                if evq is not None and float(np.linalg.norm(evq[2])) < norm0:
                    p, ev = q, evq
                    break
                t *= 0.5
            else:
                return self.polish(p, ev) if self.converged(ev) else None
            history.append(float(np.linalg.norm(ev[2])))
            # stagnation: less than a halving of the residual over 15 iterations
            if len(history) > 15 and history[-1] > 0.5 * history[-16]:
                break
        return self.polish(p, ev) if self.converged(ev) else None

    def polish(self, p, ev, extra: int = 3):
        """A few full Newton steps past tolerance, kept while they help."""
        for _ in range(extra):
            J = self.jacobian(p)
            if J is None:
                break
            q = p + np.linalg.lstsq(J, -ev[2], rcond=1e-13)[0]
            evq = self.evaluate(q)
            if evq is None or not np.linalg.norm(evq[2]) < 0.5 * np.linalg.norm(ev[2]):
                break
            p, ev = q, evq
        return p, ev

    def correct(self, p, max_iter: int = 25):
        """Pull a nearby point back onto the solution set (minimum-norm steps)."""
        p = np.asarray(p, dtype=float)
        ev = self.evaluate(p)
        if ev is None:
            return None
        for _ in range(max_iter):
            if self.converged(ev):
                return self.polish(p, ev)
            J = self.jacobian(p)
            if J is None:
                return None
            q = p + np.linalg.lstsq(J, -ev[2], rcond=1e-13)[0]
            evq = self.evaluate(q)
            if evq is None or np.linalg.norm(evq[2]) >= np.linalg.norm(ev[2]):
                return self.polish(p, ev) if self.converged(ev) else None
            p, ev = q, evq
        return self.polish(p, ev) if self.converged(ev) else None

    def rank_and_null(self, p):
        J = self.jacobian(p)
        if J is None:
            return None, None
        _, s, vt = np.linalg.svd(J)
        if s[0] == 0:
            return 0, vt
        rank = int(np.sum(s > self.cfg.rank_tol * s[0]))
        return rank, vt[rank:]

    def admissible(self, p, grad=None) -> str | None:
        """Reason for rejecting a converged root, or ``None`` if it is kept."""
        x, y, w = p
        if self.branch is not None and self.branch * w < -1e-12 * max(1.0, abs(x), abs(y)):
            return f"violates abs(w) branch {self.branch:+d}"
        if grad is None:
            grad = self.f.gradient((x, y, w))
        cls = classify_definiteness(f_matrix(grad))
        if cls is not Definiteness.POS_DEF:
            return f"F-matrix {cls.value}"
        return None


def _is_duplicate(p, points, tol) -> bool:
    for q in points:
        scale = max(np.linalg.norm(p), np.linalg.norm(q), 1e-300)
        if np.linalg.norm(p - q) / scale < tol:
            return True
    return False


def _march(system: _System, start, direction, ds, steps, project=None):
    """Predictor-corrector walk from ``start``; yields corrected points."""
    p = np.asarray(start, dtype=float)
    t_prev = np.asarray(direction, dtype=float)
    t_prev /= np.linalg.norm(t_prev)
    for _ in range(steps):
        rank, null = system.rank_and_null(p)
        if null is None or len(null) == 0:
            return
        # project the previous heading onto the current tangent space
        t = null.T @ (null @ t_prev)
        nt = np.linalg.norm(t)
        if nt < 1e-12:
            return
        t /= nt
        out = system.correct(p + ds * t)
        if out is None:
            return
        q, ev = out
        if np.linalg.norm(q - p) < 0.1 * ds:
            return
        t_prev = (q - p) / np.linalg.norm(q - p)
        p = q
        yield q, ev


def _orientation_key(p, e):
    x, y, w = p
    return abs(x - e) + abs(y - e) + abs(w)


def solve_sheet(f: Functional, n: int, cfg: SolverConfig | None = None) -> ExtremalSet:
    """Find the extremal set of ``f`` on sheet ``n``."""
    cfg = cfg or SolverConfig()
    system = _System(f, n, cfg)
    seeds = seed_grid(n, cfg)
    result = ExtremalSet(sheet=n, dimension=Dimension.EMPTY, branch=f.abs_branch)
    result.seeds_tried = len(seeds)
    kept: list[np.ndarray] = []
    ranks: list[int] = []
    rejected: list[np.ndarray] = []
    for seed in seeds:
        out = system.newton(seed.as_tuple())
        if out is None:
            continue
        result.seeds_converged += 1
        p, ev = out
        if _is_duplicate(p, kept, cfg.dedup_tol) or _is_duplicate(p, rejected, cfg.dedup_tol):
            continue
        reason = system.admissible(p)
        if reason is not None:
            rejected.append(p)
            result.discarded.append((Moments3(*p), reason))
            continue
        rank, _ = system.rank_and_null(p)
        kept.append(p)
        ranks.append(rank if rank is not None else 3)
    if result.seeds_converged == 0:
        result.notes.append(f"no convergence from {len(seeds)} seeds")
    if not kept:
        return result

    result.points = [Moments3(*p) for p in kept]
    result.values = [f.evaluate(p) for p in kept]
    result.ranks = ranks
    dims = [_RANK_TO_DIM[r] for r in ranks]
    result.dimension = max(dims, key=_DIM_ORDER.index)
    if result.dimension in (Dimension.DIM1, Dimension.DIM2):
        _sample_manifold(system, result, kept, dims, cfg)
    return result


def _sample_manifold(system: _System, result: ExtremalSet, kept, dims, cfg: SolverConfig):
    e = system.e
    candidates = [(v, _orientation_key(p, e), i) for i, (p, v) in enumerate(zip(kept, result.values)) if dims[i] is result.dimension]
    start = kept[min(candidates)[2]]
    ds = cfg.continuation_step * e
    _, null = system.rank_and_null(start)
    if null is None or len(null) == 0:
        return
    headings = []
    if result.dimension is Dimension.DIM1:
        headings = [null[0], -null[0]]
        steps = cfg.continuation_samples
    else:
        k = cfg.surface_rays
        for j in range(k):
            phi = 2 * math.pi * j / k
            headings.append(math.cos(phi) * null[0] + math.sin(phi) * null[1])
        steps = max(1, cfg.continuation_samples // k)
    for heading in headings:
        for q, ev in _march(system, start, heading, ds, steps):
            if system.admissible(q) is None:
                result.samples.append(Moments3(*q))
                result.sample_values.append(float(ev[0]))


def descend_on_manifold(f: Functional, n: int, start, objective, cfg: SolverConfig | None = None, max_iter: int = 200):
    """Minimise ``objective(p) -> (value, grad)`` along the solution set through ``start``.

    Steps follow the objective gradient projected on the null space of the
    residual Jacobian and are pulled back onto the set after every step.
    """
    cfg = cfg or SolverConfig()
    system = _System(f, n, cfg)
    out = system.correct(start)
    if out is None:
        return None
    p, _ = out
    val, g = objective(p)
    alpha = 0.1 * system.e
    for _ in range(max_iter):
        _, null = system.rank_and_null(p)
        if null is None or len(null) == 0:
            break
        gt = null.T @ (null @ np.asarray(g, dtype=float))
        ng = np.linalg.norm(gt)
        if ng < 1e-13 * (1 + abs(val)):
            break
        moved = False
        while alpha > 1e-14 * system.e:
            trial = system.correct(p - alpha * gt / ng)
            if trial is not None and system.admissible(trial[0]) is None:
                tv, tg = objective(trial[0])
                if tv < val:
                    p, val, g = trial[0], tv, tg
                    alpha *= 2
                    moved = True
                    break
            alpha *= 0.5
        if not moved:
            break
    return p, val
