import math

import pytest
from scipy import optimize

from uncertainty_bounds import catalog
from uncertainty_bounds.catalog import CatalogError, catalog_bound, exponential_bound
from uncertainty_bounds.certify import Verdict
from uncertainty_bounds.special import kappa


def sheet0_minimum(g, lo, hi):
    """Minimise a one-variable restriction to sheet 0 by bounded scalar search."""
    res = optimize.minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return res.fun


def test_closed_forms():
    assert catalog_bound("heisenberg").bound == 0.5
    assert catalog_bound("pair_sum", hbar=2).bound == 2
    assert catalog_bound("rs").bound == 0.25
    assert catalog_bound("triple_product").bound == pytest.approx(3 ** -1.5, rel=1e-15)
    assert catalog_bound("triple_sum").bound == pytest.approx(math.sqrt(3), rel=1e-15)
    assert catalog_bound("linear").bound == pytest.approx(math.sqrt(0.75), rel=1e-15)
    assert catalog_bound("gen_rs").bound == 0.125
    assert catalog_bound("mod_rs").bound == pytest.approx(0.4330127018922193, rel=1e-15)
    assert catalog_bound("rational").verdict is Verdict.INFIMUM_NOT_ATTAINED


def test_power_sum_reduces_to_pair_sum():
    ex = catalog_bound("power_sum", {"mu": 1, "nu": 1, "m": 1, "mp": 1}, hbar=1.7)
    assert ex.bound == 1.7


@pytest.mark.parametrize("mu,nu,m,mp", [(1, 1, 1, 1), (2, 1, 2, 1), (1, 3, 2, 2), (0.5, 2, 3, 1)])
def test_power_sum_against_sheet_search(mu, nu, m, mp):
    # w = 0 and x y = 1/4 on sheet 0
    ref = sheet0_minimum(lambda x: mu * x**m + nu * (0.25 / x) ** mp, 1e-3, 10)
    assert catalog_bound("power_sum", {"mu": mu, "nu": nu, "m": m, "mp": mp}).bound == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("mu,nu", [(1, 1), (2, 1), (0.5, 3)])
def test_exponential_against_sheet_search(mu, nu):
    ref = sheet0_minimum(lambda y: 0.25 / y + mu * math.exp(y / nu), 1e-3, 10)
    assert exponential_bound(mu, nu)[0] == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("mu", [1e2, 1e4])
def test_exponential_asymptotics(mu):
    bound = catalog_bound("exponential", {"mu": mu, "nu": mu}).bound
    assert abs(bound - (mu + 1)) <= 10 / mu


@pytest.mark.parametrize("mu", [0.1, 0.5, 0.9])
def test_mod_rs_against_sheet_search(mu):
    ref = sheet0_minimum(lambda w: math.sqrt(0.25 + w * w) - mu * abs(w), -5, 5)
    assert catalog_bound("mod_rs", {"mu": mu}).bound == pytest.approx(ref, rel=1e-9)


def test_gen_rs_closed_form_is_a_stationary_value_not_a_minimum():
    # on sheet 0, (xy)^2 - 2 w^4 = (1/4 + t)^2 - 2 t^2 with t = w^2
    g = lambda t: (0.25 + t) ** 2 - 2 * t * t
    assert g(0.25) == catalog_bound("gen_rs").bound
    assert g(0.0) == 0.0625
    assert g(10.0) < 0


def test_s3_reductions():
    t = catalog.get("s3_poly")
    assert t.functional({"a100": 1}).evaluate((0.3, 0.7, 0.1)) == pytest.approx(0.3 + 0.7 + 1.2)
    assert catalog_bound("s3_poly", {"a100": 1}).bound == pytest.approx(catalog_bound("triple_sum").bound, rel=1e-15)
    assert catalog_bound("s3_poly", {"a111": 1}).bound == pytest.approx(catalog_bound("triple_product").bound, rel=1e-15)
    assert catalog_bound("s3_poly").bound == pytest.approx(math.sqrt(3) + 3 ** -1.5, rel=1e-15)


def test_s3_monomials_count():
    for n in range(1, 7):
        keys = [(j, k, n - j - k) for j in range(n + 1) for k in range(n + 1) if j >= k >= n - j - k >= 0]
        assert len(keys) == kappa(n)
    assert catalog.s3_monomial(2, 1, 0).count("+") == 5
    assert catalog.s3_monomial(1, 1, 1) == "x*y*z"


def test_s2_default():
    assert catalog_bound("s2_func").bound == 1.25
    assert catalog_bound("s2_func", {"a20": 1}).bound == 0.5


def test_invalid_parameters_give_verdict_markers():
    assert catalog_bound("linear", {"lambda": 2}).verdict is Verdict.UNBOUNDED
    assert catalog_bound("linear", {"lambda": 2}).bound is None
    assert catalog_bound("linear", {"lambda": 1}).verdict is Verdict.INFIMUM_NOT_ATTAINED
    assert catalog_bound("mod_rs", {"mu": 1.5}).verdict is Verdict.INCONCLUSIVE
    assert catalog_bound("gen_rs", {"mu": 0.5}).verdict is Verdict.INCONCLUSIVE
    assert catalog_bound("s3_poly", {"a100": -1}).verdict is Verdict.INCONCLUSIVE


def test_errors():
    with pytest.raises(CatalogError):
        catalog.get("nope")
    with pytest.raises(CatalogError):
        catalog_bound("linear", {"kappa": 1})
    with pytest.raises(CatalogError):
        catalog_bound("s3_poly", {"a012": 1})
    with pytest.raises(CatalogError):
        catalog_bound("s2_func", {"a00": 1})
