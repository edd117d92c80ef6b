"""Turn per-sheet extremal sets into a verdict on the lower bound of a functional."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .extremal import Dimension, ExtremalSet, SolverConfig, descend_on_manifold, solve_sheet
from .functional import Functional, FunctionalError
from .moments import Moments3, sheet_energy
from .symplectic import (
    ComplexSqueeze,
    Definiteness,
    SqueezeParams,
    bch_convert,
    classify_definiteness,
    f_matrix,
    squeezed_moments,
    williamson_params,
)

log = logging.getLogger(__name__)


class Verdict(enum.Enum):
    BOUNDED = "BOUNDED"
    UNBOUNDED = "UNBOUNDED"
    INFIMUM_NOT_ATTAINED = "INFIMUM_NOT_ATTAINED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class ProbeRay:
    name: str
    points: list[Moments3]
    values: list[float]
    noise: list[float]


@dataclass
class Witness:
    ray: str
    points: list[Moments3]
    values: list[float]
    converging: bool
    limit_estimate: float


@dataclass
class SheetSummary:
    sheet: int
    dimension: Dimension
    n_points: int
    n_samples: int
    minimum: float | None
    argmin: Moments3 | None
    constant_on_set: bool | None
    discarded: int
    notes: list[str]


@dataclass
class BoundReport:
    verdict: Verdict
    bound: float | None = None
    sheet: int | None = None
    minimizer: Moments3 | None = None
    squeeze: SqueezeParams | None = None
    complex_squeeze: ComplexSqueeze | None = None
    extremal_minimum: float | None = None
    sheets: list[SheetSummary] = field(default_factory=list)
    witness: Witness | None = None
    sheet_minima_monotone: bool | None = None
    fixed_point_error: float | None = None
    notes: list[str] = field(default_factory=list)
    oracle: dict = field(default_factory=dict)
    extremal_sets: list[ExtremalSet] = field(default_factory=list, repr=False)


# Probe layout: every ray has PROBE_POINTS points, the last PROBE_TAIL are tested.
PROBE_POINTS = 80
PROBE_TAIL = 50
EPS = float(np.finfo(float).eps)


def _safe_eval(f: Functional, m) -> float:
    try:
        return f.evaluate(m)
    except FunctionalError:
        return math.nan


def probe_rays(f: Functional, hbar: float = 1.0, n_angles: int = 16) -> list[ProbeRay]:
    """Moment sequences running off to infinity inside the uncertainty region.

    Rays on sheet 0: gamma -> +-inf at b = 0, b -> +-inf at gamma = 0, and
    straight rays in the (v, w) plane at ``n_angles`` angles; plus the
    interior ray along the u axis.
    """
    e = sheet_energy(0, hbar)
    rays = []
    ks = np.arange(1, PROBE_POINTS + 1)
    for sign in (1, -1):
        pts = [squeezed_moments(0, SqueezeParams(0.0, sign * 0.25 * k), hbar) for k in ks]
        rays.append((f"gamma{'+' if sign > 0 else '-'}", pts))
    for sign in (1, -1):
        pts = [squeezed_moments(0, SqueezeParams(sign * 0.5 * k, 0.0), hbar) for k in ks]
        rays.append((f"b{'+' if sign > 0 else '-'}", pts))
    for j in range(n_angles):
        phi = 2 * math.pi * j / n_angles
        pts = []
        for k in ks:
            rho = 0.05 * e * 1.25 ** k
            v, w = rho * math.cos(phi), rho * math.sin(phi)
            u = math.sqrt(e * e + v * v + w * w)
            # x*y = e^2 + w^2 exactly; take the small variance from the product
            # rather than from the cancelling difference u - |v|
            big = u + abs(v)
            small = (e * e + w * w) / big
            pts.append(Moments3(big, small, w) if v >= 0 else Moments3(small, big, w))
        rays.append((f"vw{j * 360 // n_angles}deg", pts))
    rays.append(("u-axis", [Moments3(e * 1.25 ** k, e * 1.25 ** k, 0.0) for k in ks]))
    return [ProbeRay(name, pts, [_safe_eval(f, p) for p in pts], [rounding_scale(f, p) for p in pts]) for name, pts in rays]


def rounding_scale(f: Functional, m) -> float:
    """First-order size of the rounding error in ``f(m)``.

    Moments carry relative rounding ``eps``, so ``f`` is only known to about
    ``eps * (|x f_x| + |y f_y| + |w f_w| + |f|)``.  Far out on a sheet this
    is much larger than ``eps * |f|`` whenever ``f`` cancels large terms.
    """
    x, y, w = m
    try:
        g = (f.with_branch(1 if w >= 0 else -1) if f.uses_abs_w else f).value_and_gradient(m)
    except FunctionalError:
        return math.inf
    val, (fx, fy, fw) = g
    terms = (float(x) * fx, float(y) * fy, float(w) * fw, val)
    return 16 * EPS * math.fsum(abs(t) for t in terms)


def _decreasing_tail(values: list[float], noise: list[float]) -> bool:
    tail = values[-PROBE_TAIL:]
    tnoise = noise[-PROBE_TAIL:]
    if len(tail) < PROBE_TAIL or not all(math.isfinite(v) for v in tail):
        return False
    for a, b, na, nb in zip(tail, tail[1:], tnoise, tnoise[1:]):
        if b < a:
            continue
        # rises within the rounding level count as flat
        if b - a > na + nb:
            return False
    return tail[0] - tail[-1] > tnoise[0] + tnoise[-1]


def _classify_tail(values: list[float], noise: list[float]) -> tuple[bool, float]:
    """Return ``(converging, limit_estimate)`` for a decreasing tail."""
    tail = np.asarray(values[-PROBE_TAIL:])
    tnoise = np.asarray(noise[-PROBE_TAIL:])
    d = tail[:-1] - tail[1:]
    last = d[-10:]
    flat = last <= tnoise[-10:] + tnoise[-11:-1]
    if np.all(flat):
        return True, float(tail[-1])
    live = last[~flat]
    ratios = live[1:] / live[:-1] if live.size > 1 else np.array([1.0])
    if np.all(ratios <= 0.95):
        q = float(np.exp(np.mean(np.log(ratios))))
        return True, float(tail[-1] - d[-1] * q / (1 - q))
    return False, -math.inf


def _admissible_values(f: Functional, sets: list[ExtremalSet]):
    out = []
    for s in sets:
        for p, _ in s.all_points():
            out.append((_safe_eval(f, p), s.sheet, p))
    return [t for t in out if math.isfinite(t[0])]


def _u_objective(p):
    return 0.5 * (p[0] + p[1]), np.array([0.5, 0.5, 0.0])


def _f_objective(f: Functional):
    def obj(p):
        val, g = f.value_and_gradient(p)
        return val, np.asarray(g)

    return obj


def _refine_sets(f: Functional, sets: list[ExtremalSet], cfg: SolverConfig, notes: list[str]):
    """Minimise f along curves and surfaces on which it is not constant."""
    for s in sets:
        if s.dimension not in (Dimension.DIM1, Dimension.DIM2):
            continue
        pts = s.all_points()
        vals = np.array([v for _, v in pts])
        spread = float(vals.max() - vals.min())
        if spread <= 1e-8 * (1 + abs(float(vals.min()))):
            continue
        branch_f = f if s.branch is None else f.with_branch(s.branch)
        start = pts[int(np.argmin(vals))][0]
        out = descend_on_manifold(branch_f, s.sheet, start.as_tuple(), _f_objective(branch_f), cfg)
        if out is not None:
            p, _ = out
            s.points.append(Moments3(*p))
            s.values.append(f.evaluate(p))
            notes.append(f"sheet {s.sheet}: f varies along the {s.dimension.value} set; minimum refined")


def solve_all_sheets(f: Functional, cfg: SolverConfig) -> list[ExtremalSet]:
    branches = [1, -1] if f.uses_abs_w else [None]
    sets = []
    for n in range(cfg.nmax + 1):
        for br in branches:
            sets.append(solve_sheet(f.with_branch(br) if br is not None else f, n, cfg))
    return sets


def _summaries(f: Functional, sets: list[ExtremalSet]) -> list[SheetSummary]:
    out = []
    for s in sets:
        pts = [(p, _safe_eval(f, p)) for p, _ in s.all_points()]
        pts = [t for t in pts if math.isfinite(t[1])]
        if pts:
            p, v = min(pts, key=lambda t: t[1])
            vals = [t[1] for t in pts]
            const = (max(vals) - min(vals)) <= 1e-8 * (1 + abs(min(vals)))
        else:
            p, v, const = None, None, None
        notes = list(s.notes)
        if s.branch is not None:
            notes.append(f"abs(w) pinned to {'+' if s.branch > 0 else '-'}w")
        out.append(SheetSummary(s.sheet, s.dimension, len(s.points), len(s.samples), v, p, const, len(s.discarded), notes))
    return out


def _canonical_minimizer(f: Functional, sets, best_val, cfg: SolverConfig):
    """Among stored minimisers pick the least squeezed one.

    On curves and surfaces of constant f the representative is moved to the
    point of smallest u on the set.
    """
    tol = 1e-9 * (1 + abs(best_val))
    cands = []
    for s in sets:
        for p, _ in s.all_points():
            v = _safe_eval(f, p)
            if math.isfinite(v) and v <= best_val + tol:
                cands.append((0.5 * (p.x + p.y), s, p))
    if not cands:
        return None
    _, s, p = min(cands, key=lambda t: t[0])
    if s.dimension in (Dimension.DIM1, Dimension.DIM2):
        branch_f = f if s.branch is None else f.with_branch(s.branch)
        out = descend_on_manifold(branch_f, s.sheet, p.as_tuple(), _u_objective, cfg)
        if out is not None:
            q = Moments3(*out[0])
            if _safe_eval(f, q) <= best_val + tol:
                return s, q
    return s, p


def minimize_over_extrema(f: Functional, sets: list[ExtremalSet]) -> tuple[float, int, Moments3]:
    """Smallest value of f over all stored extremal points and manifold samples."""
    vals = _admissible_values(f, sets)
    if not vals:
        raise ValueError("no admissible extremal points")
    v, n, p = min(vals, key=lambda t: (t[0], t[1]))
    return v, n, p


def attach_minimizer_params(f: Functional, report: BoundReport, hbar: float = 1.0) -> BoundReport:
    """Fill in (b, gamma) and (r, theta, chi) for a BOUNDED report and check the fixed point."""
    if report.verdict is not Verdict.BOUNDED or report.minimizer is None:
        return report
    m = report.minimizer
    g = (f.with_branch(1 if m.w >= 0 else -1) if f.uses_abs_w else f).gradient(m)
    F = f_matrix(g)
    if classify_definiteness(F) is not Definiteness.POS_DEF:
        report.verdict = Verdict.INCONCLUSIVE
        report.notes.append("F-matrix at the minimiser is not positive definite")
        return report
    s, _ = williamson_params(F)
    report.squeeze = s
    report.complex_squeeze = bch_convert(s)
    back = squeezed_moments(report.sheet, s, hbar)
    err = max(abs(a - b) for a, b in zip(back, m)) / max(1.0, max(abs(c) for c in m))
    report.fixed_point_error = err
    report.notes.append(f"gamma = 0.5*ln(x/e_n) = {s.gamma:.12g}, from x = e_n*exp(2*gamma) at the minimiser")
    if err > 1e-8:
        report.verdict = Verdict.INCONCLUSIVE
        report.notes.append(f"squeezed state from (b, gamma) misses the minimiser by {err:.3e}")
    return report


def certify(f: Functional, cfg: SolverConfig | None = None) -> BoundReport:
    """Decide whether ``f`` is bounded below on the uncertainty region."""
    cfg = cfg or SolverConfig(hbar=f.hbar)
    hbar = cfg.hbar
    sets = solve_all_sheets(f, cfg)
    notes: list[str] = []
    _refine_sets(f, sets, cfg, notes)
    summaries = _summaries(f, sets)
    report = BoundReport(verdict=Verdict.INCONCLUSIVE, sheets=summaries, notes=notes, extremal_sets=sets)

    mins = {}
    for sm in summaries:
        if sm.minimum is not None:
            mins[sm.sheet] = min(sm.minimum, mins.get(sm.sheet, math.inf))
    if mins:
        ordered = [mins[k] for k in sorted(mins)]
        report.sheet_minima_monotone = all(b >= a - 1e-10 * (1 + abs(a)) for a, b in zip(ordered, ordered[1:]))

    rays = probe_rays(f, hbar)
    best_ray = None
    for ray in rays:
        if _decreasing_tail(ray.values, ray.noise):
            if best_ray is None or ray.values[-1] < best_ray.values[-1]:
                best_ray = ray
    # a probe counts only by what it beats beyond its own rounding error
    probe_min = min((v + nz for r in rays for v, nz in zip(r.values, r.noise) if math.isfinite(v + nz)), default=math.inf)

    has_admissible = bool(mins)
    if has_admissible:
        best_val, best_sheet, _ = minimize_over_extrema(f, sets)
        report.extremal_minimum = best_val
        beaten = probe_min < best_val - 1e-9 * (1 + abs(best_val))
        if not beaten:
            picked = _canonical_minimizer(f, sets, best_val, cfg)
            report.verdict = Verdict.BOUNDED
            report.sheet = picked[0].sheet if picked else best_sheet
            report.minimizer = picked[1] if picked else None
            report.bound = f.evaluate(report.minimizer) if picked else best_val
            return attach_minimizer_params(f, report, hbar)
        notes.append(f"probe value {probe_min:.12g} lies below every extremal value (min {best_val:.12g})")
    else:
        discarded = sum(sm.discarded for sm in summaries)
        if discarded:
            notes.append(f"{discarded} extremal point(s) found, none with positive definite F-matrix")
        else:
            notes.append("consistency conditions have no solution on the swept sheets")

    if best_ray is not None and (not has_admissible or best_ray.values[-1] < report.extremal_minimum):
        converging, limit = _classify_tail(best_ray.values, best_ray.noise)
        tail = slice(-PROBE_TAIL, None)
        report.witness = Witness(best_ray.name, best_ray.points[tail], best_ray.values[tail], converging, limit)
        report.verdict = Verdict.INFIMUM_NOT_ATTAINED if converging else Verdict.UNBOUNDED
        report.bound = limit if converging else None
        return report

    if not has_admissible and any(sm.discarded for sm in summaries):
        notes.append("no positive definite extremum and no descending probe")
    report.verdict = Verdict.INCONCLUSIVE
    return report
