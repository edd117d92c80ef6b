"""Built-in functionals with their closed-form lower bounds."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping

from .certify import Verdict
from .functional import Functional, parse
from .special import lambert_w

TAU = math.sqrt(4.0 / 3.0)

_S3_KEY = re.compile(r"^a(\d)(\d)(\d)$")
_S2_KEY = re.compile(r"^a(\d)(\d)$")


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Expectation:
    """Expected outcome: a verdict, and for BOUNDED entries the bound and (b, gamma)."""

    verdict: Verdict
    bound: float | None = None
    b: float | None = None
    gamma: float | None = None
    reason: str = ""


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    defaults: Mapping[str, float]
    build: Callable[[dict], str]
    expect: Callable[[dict, float], Expectation]
    free_keys: bool = False
    key_pattern: re.Pattern | None = None

    def params(self, overrides: Mapping[str, float] | None = None) -> dict:
        out = dict(self.defaults)
        for k, v in (overrides or {}).items():
            if k not in self.defaults and not (self.free_keys and self.key_pattern.match(k)):
                raise CatalogError(f"{self.name}: unknown parameter {k!r}")
            out[k] = float(v)
        if self.free_keys and overrides:
            # an explicit coefficient map replaces the default polynomial
            out = {k: float(v) for k, v in overrides.items()}
        return out

    def functional(self, overrides=None, hbar: float = 1.0) -> Functional:
        p = self.params(overrides)
        return parse(self.build(p), p, hbar=hbar)

    def expectation(self, overrides=None, hbar: float = 1.0) -> Expectation:
        return self.expect(self.params(overrides), hbar)


def _e0(hbar):
    return hbar / 2


def _gamma_from_x(x: float, hbar: float) -> float:
    # sheet-0 squeezed states have x = e0 * exp(2 gamma)
    return 0.5 * math.log(x / _e0(hbar))


def _linear(p, hbar):
    mu, nu, lam = p["mu"], p["nu"], p["lambda"]
    det = mu * nu - lam * lam
    if det < 0 or (det > 0 and mu < 0):
        return Expectation(Verdict.UNBOUNDED, reason="mu*nu < lambda^2 or negative definite")
    if det == 0:
        if mu + nu > 0:
            # a variance of a combination of p and q: positive, infimum 0
            return Expectation(Verdict.INFIMUM_NOT_ATTAINED, 0.0, reason="mu*nu = lambda^2")
        if mu + nu < 0:
            return Expectation(Verdict.UNBOUNDED, reason="minus a variance")
        return Expectation(Verdict.INCONCLUSIVE, reason="identically zero")
    return Expectation(Verdict.BOUNDED, hbar * math.sqrt(det), lam / nu, 0.5 * math.log(nu / math.sqrt(det)))


def _power_sum(p, hbar):
    mu, nu, m, mp = p["mu"], p["nu"], p["m"], p["mp"]
    if not (mu > 0 and nu > 0 and m > 0 and mp > 0):
        return Expectation(Verdict.INCONCLUSIVE, reason="needs mu, nu, m, mp > 0")
    s = m + mp
    bound = (hbar / 2) ** (2 * m * mp / s) * (mu * (nu * mp / (mu * m)) ** (m / s) + nu * (mu * m / (nu * mp)) ** (mp / s))
    # stationarity on x*y = e0^2 gives m mu x^m = mp nu y^mp
    e2 = _e0(hbar) ** 2
    x = (mp * nu / (m * mu) * e2 ** mp) ** (1 / s)
    return Expectation(Verdict.BOUNDED, bound, 0.0, _gamma_from_x(x, hbar))


def _gen_rs(p, hbar):
    mu, m = p["mu"], p["m"]
    if not (mu > 1 and m > 1):
        return Expectation(Verdict.INCONCLUSIVE, reason="closed form only for mu > 1, m > 1")
    return Expectation(Verdict.BOUNDED, (hbar / 2) ** (2 * m) * mu / (mu ** (1 / (m - 1)) - 1) ** m)


def _mod_rs(p, hbar):
    mu = p["mu"]
    if not 0 < mu < 1:
        return Expectation(Verdict.INCONCLUSIVE, reason="needs 0 < mu < 1")
    return Expectation(Verdict.BOUNDED, hbar / 2 * math.sqrt(1 - mu * mu))


def exponential_bound(mu: float, nu: float, hbar: float = 1.0) -> tuple[float, float]:
    """Return ``(bound, W)`` for ``x + mu exp(y / nu)``."""
    w = lambert_w(hbar / (4 * math.sqrt(mu * nu)))
    return mu * (1 + 2 * w) * math.exp(2 * w), w


def _exponential(p, hbar):
    mu, nu = p["mu"], p["nu"]
    if not (mu > 0 and nu > 0):
        return Expectation(Verdict.INCONCLUSIVE, reason="needs mu, nu > 0")
    bound, w = exponential_bound(mu, nu, hbar)
    y = 2 * nu * w
    return Expectation(Verdict.BOUNDED, bound, 0.0, _gamma_from_x(_e0(hbar) ** 2 / y, hbar))


def _rational(p, hbar):
    if not (p["mu"] > 0 and p["nu"] > 0):
        return Expectation(Verdict.INCONCLUSIVE, reason="needs mu, nu > 0")
    return Expectation(Verdict.INFIMUM_NOT_ATTAINED, 0.0)


def s3_monomial(j: int, k: int, l: int) -> str:
    """Sum of the distinct permutations of x^j y^k z^l."""
    terms = sorted(set(itertools.permutations((j, k, l))), reverse=True)
    parts = []
    for a, b, c in terms:
        factors = [f"{v}^{e}" if e > 1 else v for v, e in zip("xyz", (a, b, c)) if e > 0]
        parts.append("*".join(factors) or "1")
    return " + ".join(parts)


def _s3_build(p):
    parts = []
    for key in sorted(p):
        j, k, l = (int(c) for c in _S3_KEY.match(key).groups())
        parts.append(f"{key}*({s3_monomial(j, k, l)})")
    return " + ".join(parts)


def _s3_check(p):
    for key, v in p.items():
        m = _S3_KEY.match(key)
        if m is None:
            raise CatalogError(f"s3_poly: bad coefficient key {key!r}")
        j, k, l = (int(c) for c in m.groups())
        if not j >= k >= l or j + k + l == 0:
            raise CatalogError(f"s3_poly: exponents in {key!r} must be sorted j >= k >= l with j + k + l >= 1")


def _s3_poly(p, hbar):
    _s3_check(p)
    if any(v < 0 for v in p.values()):
        return Expectation(Verdict.INCONCLUSIVE, reason="closed form needs non-negative coefficients")
    t = hbar / math.sqrt(3)
    f = parse(_s3_build(p), p, hbar=hbar)
    # x = y = z = t means w = -t/2
    return Expectation(Verdict.BOUNDED, f.evaluate((t, t, -t / 2)), 0.5, 0.5 * math.log(TAU))


def s2_monomial(j: int, k: int) -> str:
    def mono(a, b):
        factors = [f"{v}^{e}" if e > 1 else v for v, e in zip("xy", (a, b)) if e > 0]
        return "*".join(factors)

    return mono(j, k) if j == k else f"{mono(j, k)} + {mono(k, j)}"


def _s2_build(p):
    parts = []
    for key in sorted(p):
        j, k = (int(c) for c in _S2_KEY.match(key).groups())
        parts.append(f"{key}*({s2_monomial(j, k)})")
    return " + ".join(parts)


def _s2_check(p):
    for key in p:
        m = _S2_KEY.match(key)
        if m is None:
            raise CatalogError(f"s2_func: bad coefficient key {key!r}")
        j, k = (int(c) for c in m.groups())
        if not j >= k or j + k == 0:
            raise CatalogError(f"s2_func: exponents in {key!r} must be sorted j >= k with j + k >= 1")


def _s2_func(p, hbar):
    _s2_check(p)
    if any(v < 0 for v in p.values()):
        return Expectation(Verdict.INCONCLUSIVE, reason="closed form needs non-negative coefficients")
    h = hbar / 2
    return Expectation(Verdict.BOUNDED, parse(_s2_build(p), p, hbar=hbar).evaluate((h, h, 0.0)), 0.0, 0.0)


def _const(verdict, bound_fn, b=None, gamma=None):
    def expect(p, hbar):
        return Expectation(verdict, bound_fn(hbar), b, gamma)

    return expect


ENTRIES: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("heisenberg", "dp*dq", {}, lambda p: "sqrt(x*y)", _const(Verdict.BOUNDED, lambda h: h / 2, 0.0, 0.0)),
        CatalogEntry("pair_sum", "var p + var q", {}, lambda p: "x + y", _const(Verdict.BOUNDED, lambda h: h, 0.0, 0.0)),
        CatalogEntry("rs", "var p var q - cov^2", {}, lambda p: "x*y - w^2", _const(Verdict.BOUNDED, lambda h: h * h / 4, 0.0, 0.0)),
        CatalogEntry(
            "triple_product",
            "product of the variances of p, q and p + q",
            {},
            lambda p: "x*y*z",
            _const(Verdict.BOUNDED, lambda h: (TAU * h / 2) ** 3, 0.5, 0.5 * math.log(TAU)),
        ),
        CatalogEntry(
            "triple_sum", "sum of the variances of p, q and p + q", {}, lambda p: "x + y + z",
            _const(Verdict.BOUNDED, lambda h: math.sqrt(3) * h, 0.5, 0.5 * math.log(TAU)),
        ),
        CatalogEntry("linear", "mu x + nu y + 2 lambda w", {"mu": 1.0, "nu": 1.0, "lambda": 0.5}, lambda p: "mu*x + nu*y + 2*lambda*w", _linear),
        CatalogEntry("power_sum", "mu x^m + nu y^mp", {"mu": 2.0, "nu": 1.0, "m": 2.0, "mp": 1.0}, lambda p: "mu*x^m + nu*y^mp", _power_sum),
        CatalogEntry("gen_rs", "(x y)^m - mu w^(2m)", {"mu": 2.0, "m": 2.0}, lambda p: "(x*y)^m - mu*w^(2*m)", _gen_rs),
        CatalogEntry("mod_rs", "dp dq - mu |cov|", {"mu": 0.5}, lambda p: "sqrt(x*y) - mu*abs(w)", _mod_rs),
        CatalogEntry("exponential", "x + mu exp(y / nu)", {"mu": 1.0, "nu": 1.0}, lambda p: "x + mu*exp(y/nu)", _exponential),
        CatalogEntry(
            "rational", "dp dq / (mu dp + nu dq)", {"mu": 1.0, "nu": 1.0},
            lambda p: "sqrt(x)*sqrt(y)/(mu*sqrt(x) + nu*sqrt(y))", _rational,
        ),
        CatalogEntry(
            "s3_poly", "polynomial in x, y, z symmetric under all permutations; keys ajkl with j >= k >= l",
            {"a100": 1.0, "a111": 1.0}, _s3_build, _s3_poly, free_keys=True, key_pattern=_S3_KEY,
        ),
        CatalogEntry(
            "s2_func", "polynomial in x, y symmetric under exchange; keys ajk with j >= k",
            {"a10": 1.0, "a11": 1.0}, _s2_build, _s2_func, free_keys=True, key_pattern=_S2_KEY,
        ),
    ]
}


def get(name: str) -> CatalogEntry:
    try:
        return ENTRIES[name]
    except KeyError:
        raise CatalogError(f"unknown catalog entry {name!r}; choose from {sorted(ENTRIES)}") from None


def catalog_bound(name: str, params: Mapping[str, float] | None = None, hbar: float = 1.0) -> Expectation:
    return get(name).expectation(params, hbar)
