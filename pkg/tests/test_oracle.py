import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncertainty_bounds.functional import parse
from uncertainty_bounds.moments import rs_value
from uncertainty_bounds.oracle import FockState, fock_minimize, fock_moments, parametric_search
from uncertainty_bounds.symplectic import SqueezeParams, squeezed_moments


def hermite_functions(nmax, q):
    """Oscillator eigenfunctions phi_0..phi_nmax on the grid q (hbar = m = omega = 1)."""
    phi = np.zeros((nmax + 2, q.size))
    phi[0] = math.pi ** -0.25 * np.exp(-q * q / 2)
    phi[1] = math.sqrt(2) * q * phi[0]
    for n in range(1, nmax + 1):
        phi[n + 1] = math.sqrt(2 / (n + 1)) * q * phi[n] - math.sqrt(n / (n + 1)) * phi[n - 1]
    return phi


def quadrature_moments(c):
    """Moments from the position-space wave function, an oracle independent of ladder matrices."""
    q = np.linspace(-14, 14, 8001)
    dq = q[1] - q[0]
    phi = hermite_functions(len(c), q)
    n = np.arange(len(c))
    psi = c @ phi[: len(c)]
    # phi_n' = sqrt(n/2) phi_{n-1} - sqrt((n+1)/2) phi_{n+1}
    dphi = np.array([(math.sqrt(k / 2) * phi[k - 1] if k else 0) - math.sqrt((k + 1) / 2) * phi[k + 1] for k in n])
    dpsi = c @ dphi
    integ = lambda g: float(np.real(np.sum(g)) * dq)
    mq = integ(np.conj(psi) * q * psi)
    q2 = integ(np.conj(psi) * q * q * psi)
    mp = integ(np.conj(psi) * (-1j) * dpsi)
    p2 = integ(np.conj(dpsi) * dpsi)
    sym = integ(q * np.conj(psi) * (-1j) * dpsi)
    return p2 - mp * mp, q2 - mq * mq, sym - mp * mq


def test_number_states():
    assert tuple(fock_moments(FockState.number(0, 2))) == pytest.approx((0.5, 0.5, 0), abs=1e-15)
    assert tuple(fock_moments(FockState.number(1, 3))) == pytest.approx((1.5, 1.5, 0), abs=1e-15)
    assert tuple(fock_moments(FockState.number(1, 3), hbar=2.0)) == pytest.approx((3.0, 3.0, 0), abs=1e-15)


def test_equal_superposition():
    # <q> = 1/sqrt 2, <q^2> = 1, <p> = 0, <p^2> = 1 for (|0> + |1>)/sqrt 2
    m = fock_moments(FockState.normalised([1, 1]))
    assert tuple(m) == pytest.approx((1.0, 0.5, 0.0), abs=1e-15)
    assert tuple(m) == pytest.approx(quadrature_moments(np.array([1, 1]) / math.sqrt(2)), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_moments_match_quadrature(dim, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    c /= np.linalg.norm(c)
    assert tuple(fock_moments(FockState(c))) == pytest.approx(quadrature_moments(c), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_fock_states_obey_rs(dim, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    assert rs_value(fock_moments(FockState.normalised(c))) >= 0.25 - 1e-10


def test_fock_state_validation():
    with pytest.raises(ValueError):
        FockState(np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        FockState(np.array([1.0]))


def squeezed_vacuum(r, dim):
    c = np.zeros(dim, dtype=complex)
    for k in range((dim + 1) // 2):
        c[2 * k] = (-math.tanh(r)) ** k * math.sqrt(math.factorial(2 * k)) / (2**k * math.factorial(k))
    return c / np.linalg.norm(c)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5])
def test_truncated_squeezed_vacuum(r):
    m = fock_moments(FockState(squeezed_vacuum(r, 30)))
    assert tuple(m) == pytest.approx(tuple(squeezed_moments(0, SqueezeParams(0, r))), abs=1e-8)


def test_fock_minimize_examples():
    r = fock_minimize(parse("x*y - w^2"))
    assert 0.25 - 1e-8 <= r.value <= 0.25 + 1e-5
    r = fock_minimize(parse("x + y"), dim=10)
    assert r.value == pytest.approx(1.0, abs=1e-8)
    # variances ignore displacements, so any coherent state c_n ~ alpha^n / sqrt(n!) minimises
    c = r.argmin["coefficients"]
    assert tuple(r.moments) == pytest.approx((0.5, 0.5, 0), abs=1e-8)
    alpha = c[1] / c[0]
    coherent = np.array([alpha**n / math.sqrt(math.factorial(n)) for n in range(10)])
    assert np.allclose(c, c[0] * coherent, atol=1e-6)
    k = int(np.argmax(np.abs(c)))
    assert c[k].imag == 0 and c[k].real > 0
    r = fock_minimize(parse("x*y*z"))
    assert r.value == pytest.approx(3 ** -1.5, abs=1e-5)


def test_fock_minimize_monotone_in_dim():
    f = parse("x*y*z")
    vals = [fock_minimize(f, dim=d, restarts=6).value for d in (10, 20, 30)]
    assert vals[1] <= vals[0] + 1e-9 and vals[2] <= vals[1] + 1e-9


def test_fock_minimize_is_deterministic():
    f = parse("x + 2*y + w")
    assert fock_minimize(f, dim=12, restarts=4, seed=3).value == fock_minimize(f, dim=12, restarts=4, seed=3).value


def test_parametric_search_examples():
    r = parametric_search(parse("x*y - w^2"), 0)
    assert r.value == pytest.approx(0.25, abs=1e-8)
    r = parametric_search(parse("x*y*z"), 0)
    assert r.value == pytest.approx(3 ** -1.5, abs=1e-12)
    assert (r.argmin["b"], r.argmin["gamma"]) == pytest.approx((0.5, 0.25 * math.log(4 / 3)), abs=1e-6)
    r = parametric_search(parse("sqrt(x*y)"), 0)
    assert r.value == pytest.approx(0.5, abs=1e-12)
    assert r.argmin["b"] == pytest.approx(0, abs=1e-6)
    r = parametric_search(parse("x + y"), 2)
    assert r.value == pytest.approx(5.0, abs=1e-10)
