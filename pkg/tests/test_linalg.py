import numpy as np
import pytest
import scipy.linalg as sla
from scipy.optimize import minimize
from hypothesis import given, strategies as st

from aftrack.errors import NotPositiveDefiniteError, ValidationError
from aftrack.linalg import cholesky, fix_phase, herm_eig, hermitian, rayleigh_max, solve_hpd


def rand_herm(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.conj().T


def rand_hpd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n * np.eye(n)


def test_hermitian_validation():
    with pytest.raises(ValidationError, match="Hermitian"):
        hermitian([[1, 1], [0, 1]])
    with pytest.raises(ValidationError, match="square"):
        hermitian(np.ones((2, 3)))
    a = hermitian([[1, 1 + 1e-14], [1, 2]])
    assert np.array_equal(a, a.conj().T)
    assert hermitian(3.0).shape == (1, 1)


def test_herm_eig_examples():
    e = herm_eig(np.eye(3))
    np.testing.assert_array_equal(e.values, [1, 1, 1])
    e = herm_eig(np.diag([-2.0, 5.0]))
    np.testing.assert_array_equal(e.values, [5, -2])
    np.testing.assert_allclose(np.abs(e.vectors), [[0, 1], [1, 0]])


def test_herm_eig_reconstruction(rng):
    a = rand_herm(rng, 6)
    e = herm_eig(a)
    v, lam = e.vectors, e.values
    assert np.all(np.diff(lam) <= 0)
    np.testing.assert_allclose(v @ np.diag(lam) @ v.conj().T, a, atol=1e-10 * np.linalg.norm(a))
    np.testing.assert_allclose(v.conj().T @ v, np.eye(6), atol=1e-10)
    for k in range(6):
        assert np.linalg.norm(a @ v[:, k] - lam[k] * v[:, k]) <= 1e-10 * np.linalg.norm(a)
    # phase convention: largest-magnitude entry real positive
    piv = v[np.argmax(np.abs(v), axis=0), np.arange(6)]
    np.testing.assert_allclose(piv.imag, 0, atol=1e-15)
    assert np.all(piv.real > 0)


def test_fix_phase_vector():
    v = fix_phase(np.array([1j, 0.5]))
    np.testing.assert_allclose(v, [1, -0.5j])


@given(st.integers(0, 2 ** 32 - 1))
def test_eigenvalues_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    a = rand_herm(rng, 5)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)))
    np.testing.assert_allclose(herm_eig(q @ a @ q.conj().T).values, herm_eig(a).values,
                               atol=1e-9 * np.linalg.norm(a))


def test_solve_hpd_examples(rng):
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    np.testing.assert_allclose(solve_hpd(np.eye(4), b), b)
    np.testing.assert_allclose(solve_hpd(np.diag([2.0, 4.0]), [2.0, 8.0]), [1, 2])
    a = rand_hpd(rng, 8)
    b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    x = solve_hpd(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b) * np.linalg.cond(a)


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        solve_hpd(np.zeros((2, 2)), [1.0, 1.0])


def test_rayleigh_examples(rng):
    d = rand_hpd(rng, 4)
    val, _ = rayleigh_max(d, d)
    assert val == pytest.approx(1.0, rel=1e-12)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    val, x = rayleigh_max(np.outer(h, h.conj()), np.eye(4))
    assert val == pytest.approx(np.vdot(h, h).real, rel=1e-12)
    assert abs(abs(np.vdot(x, h)) - np.linalg.norm(h)) <= 1e-12 * np.linalg.norm(h)
    assert np.linalg.norm(x) == pytest.approx(1.0)


def test_rayleigh_matches_generalized_eig_and_random_directions(rng):
    n = rand_herm(rng, 5)
    d = rand_hpd(rng, 5)
    val, x = rayleigh_max(n, d)
    np.testing.assert_allclose(val, sla.eigh(n, d, eigvals_only=True)[-1], rtol=1e-12)
    q = np.real(np.vdot(x, n @ x) / np.vdot(x, d @ x))
    assert q == pytest.approx(val, rel=1e-12)
    # random-direction lower bound
    z = rng.standard_normal((10 ** 6, 5)) + 1j * rng.standard_normal((10 ** 6, 5))
    num = np.einsum("ki,ij,kj->k", z.conj(), n, z).real
    den = np.einsum("ki,ij,kj->k", z.conj(), d, z).real
    ratio = num / den
    assert ratio.max() <= val * (1 + 1e-12)

    # refine the best sampled direction by local search
    def neg(p):
        v = p[:5] + 1j * p[5:]
        return -np.real(np.vdot(v, n @ v)) / np.real(np.vdot(v, d @ v))

    z0 = z[np.argmax(ratio)]
    res = minimize(neg, np.concatenate([z0.real, z0.imag]), method="BFGS", options={"gtol": 1e-12})
    assert -res.fun <= val * (1 + 1e-12)
    assert -res.fun >= val - 1e-3 * abs(val)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0), st.floats(0.01, 100.0))
def test_rayleigh_scaling(seed, s, t):
    rng = np.random.default_rng(seed)
    n, d = rand_herm(rng, 4), rand_hpd(rng, 4)
    v = rayleigh_max(n, d)[0]
    assert rayleigh_max(s * n, s * d)[0] == pytest.approx(v, rel=1e-9, abs=1e-9)
    assert rayleigh_max(t * n, d)[0] == pytest.approx(t * v, rel=1e-9, abs=1e-9)


def test_rayleigh_dimension_mismatch():
    with pytest.raises(ValidationError):
        rayleigh_max(np.eye(2), np.eye(3))
