"""Brute-force checks of a bound: search over squeezed number states and over
truncated Fock-space state vectors.

Neither search uses the consistency conditions, so agreement with the
certifier is an independent confirmation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .functional import Functional, FunctionalError
from .moments import Moments3, sheet_energy
from .symplectic import SqueezeParams, squeezed_moments


@dataclass(frozen=True)
class FockState:
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size < 2:
            raise ValueError("a Fock state needs at least two coefficients")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise ValueError(f"state is not normalised: norm {np.linalg.norm(c)!r}")
        object.__setattr__(self, "coefficients", c)

    @property
    def dim(self) -> int:
        return self.coefficients.size

    @classmethod
    def normalised(cls, c) -> "FockState":
        c = np.asarray(c, dtype=complex)
        return cls(c / np.linalg.norm(c))

    @classmethod
    def number(cls, n: int, dim: int) -> "FockState":
        c = np.zeros(dim, dtype=complex)
        c[n] = 1.0
        return cls(c)


@dataclass
class OracleResult:
    value: float
    moments: Moments3
    argmin: dict
    restarts: int
    converged: bool
    history: list[float] = field(default_factory=list)


@lru_cache(maxsize=32)
def _operators(dim: int, hbar: float):
    """Hermitian D x D matrices whose expectation values give the moments.

    Position and momentum map span{|0>..|D-1>} into span{|0>..|D>}, so the
    padded (D+1) x D matrices give exact second moments of the truncated
    vector; no spurious top-level term appears.
    """
    k = np.arange(1, dim + 1)
    a_dag = np.zeros((dim + 1, dim))
    a_dag[k, k - 1] = np.sqrt(k)
    a = np.zeros((dim + 1, dim))
    a[k[:-1] - 1, k[:-1]] = np.sqrt(k[:-1])
    s = math.sqrt(hbar / 2)
    q = s * (a + a_dag)
    p = 1j * s * (a_dag - a)
    q1 = q[:dim]
    p1 = p[:dim]
    q2 = q.T @ q
    p2 = p.conj().T @ p
    pq = p.conj().T @ q
    sym = 0.5 * (pq + pq.conj().T)
    return q1, p1, q2, p2, sym


def _expectations(c: np.ndarray, hbar: float):
    ops = _operators(c.size, hbar)
    norm2 = float(np.vdot(c, c).real)
    hc = [op @ c for op in ops]
    vals = [float(np.vdot(c, h).real) / norm2 for h in hc]
    return vals, hc, norm2


def fock_moments(state: FockState | np.ndarray, hbar: float = 1.0) -> Moments3:
    """Exact second moments (var p, var q, symmetrised covariance) of a truncated vector."""
    c = state.coefficients if isinstance(state, FockState) else np.asarray(state, dtype=complex)
    (mq, mp, q2, p2, s), _, _ = _expectations(c, hbar)
    return Moments3(p2 - mp * mp, q2 - mq * mq, s - mp * mq)


def _objective(f: Functional, hbar: float, dim: int):
    def fun(v):
        c = v[:dim] + 1j * v[dim:]
        (mq, mp, q2, p2, s), hc, norm2 = _expectations(c, hbar)
        x, y, w = p2 - mp * mp, q2 - mq * mq, s - mp * mq
        g = f.with_branch(1 if w >= 0 else -1) if f.uses_abs_w else f
        try:
            val, (fx, fy, fw) = g.value_and_gradient((x, y, w))
        except FunctionalError:
            return math.inf, np.zeros_like(v)
        # d<O>/dc for <O> = c^H O c / c^H c, as a complex vector (d/dRe + i d/dIm)
        d = [2 * (h - e * c) / norm2 for h, e in zip(hc, (mq, mp, q2, p2, s))]
        dq, dp, dq2, dp2, ds = d
        grad = fx * (dp2 - 2 * mp * dp) + fy * (dq2 - 2 * mq * dq) + fw * (ds - mp * dq - mq * dp)
        return val, np.concatenate([grad.real, grad.imag])

    return fun


def _fix_phase(c: np.ndarray) -> np.ndarray:
    c = c / np.linalg.norm(c)
    k = int(np.argmax(np.abs(c)))
    out = c * (abs(c[k]) / c[k])
    out[k] = abs(c[k])
    return out


def fock_minimize(f: Functional, dim: int = 30, restarts: int = 20, seed: int = 42, hbar: float | None = None) -> OracleResult:
    """Minimise ``f`` over normalised vectors in the first ``dim`` number states.

    Starts: the ground state, ``|1>`` and random complex Gaussian vectors with
    a decaying envelope; each is refined by BFGS with the analytic gradient.
    The norm is divided out inside the objective, so every iterate stands for
    the normalised state on the unit sphere.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    hbar = f.hbar if hbar is None else hbar
    rng = np.random.default_rng(seed)
    fun = _objective(f, hbar, dim)
    envelope = np.exp(-np.arange(dim) / 4.0)
    starts = []
    for i in range(restarts):
        if i < 2:
            c = np.zeros(dim, dtype=complex)
            c[i] = 1.0
            # tiny deterministic nudge so symmetric stationary points are left
            c += 1e-3 * envelope * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
        else:
            c = envelope * (rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
        starts.append(c / np.linalg.norm(c))
    best = None
    history = []
    converged_any = False
    for c0 in starts:
        v0 = np.concatenate([c0.real, c0.imag])
        res = optimize.minimize(fun, v0, jac=True, method="BFGS", options={"gtol": 1e-10, "maxiter": 5000})
        val = float(res.fun)
        history.append(val)
        if not math.isfinite(val):
            continue
        converged_any |= bool(res.success)
        if best is None or val < best[0]:
            best = (val, res.x, bool(res.success))
    if best is None:
        raise RuntimeError("every Fock restart failed to evaluate the functional")
    val, v, ok = best
    c = _fix_phase(v[:dim] + 1j * v[dim:])
    m = fock_moments(FockState(c), hbar)
    return OracleResult(f.evaluate(m), m, {"coefficients": c, "dim": dim}, restarts, ok or converged_any, history)


def parametric_search(f: Functional, n: int = 0, hbar: float | None = None, b_range=(-4.0, 4.0), gamma_range=(-3.0, 3.0), shape=(81, 61), refine: int = 4) -> OracleResult:
    """Minimum of ``f`` over the squeezed number states on sheet ``n``.

    Coarse grid in (b, gamma), then Nelder-Mead from the best grid points.
    """
    hbar = f.hbar if hbar is None else hbar

    def value(bg):
        try:
            v = f.evaluate(squeezed_moments(n, SqueezeParams(float(bg[0]), float(bg[1])), hbar))
        except (FunctionalError, ValueError, OverflowError):
            return math.inf
        return v if math.isfinite(v) else math.inf

    bs = np.linspace(*b_range, shape[0])
    gs = np.linspace(*gamma_range, shape[1])
    grid = [(value((b, g)), b, g) for b in bs for g in gs]
    grid.sort(key=lambda t: t[0])
    best = None
    for v0, b0, g0 in grid[:refine]:
        res = optimize.minimize(value, [b0, g0], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000, "maxfev": 40000})
        if best is None or res.fun < best[0]:
            best = (float(res.fun), float(res.x[0]), float(res.x[1]), bool(res.success))
    val, b, g, ok = best
    m = squeezed_moments(n, SqueezeParams(b, g), hbar)
    return OracleResult(val, m, {"sheet": n, "b": b, "gamma": g, "energy": sheet_energy(n, hbar)}, refine, ok, [t[0] for t in grid[:refine]])
