"""Dense Hermitian linear algebra.

Thin contracts over LAPACK (via numpy/scipy): validated Hermitian input,
descending eigenpairs with a fixed phase convention, Cholesky solves, and
generalized Rayleigh-quotient maximization.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, NotPositiveDefiniteError, ValidationError

SYMMETRY_TOL = 1e-12


def hermitian(a, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return ``a`` as a symmetrized complex Hermitian matrix.

    Raises ValidationError if ``a`` is not square or departs from its own
    conjugate transpose by more than ``tol`` in relative Frobenius norm.
    """
    a = np.asarray(a)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"expected a nonempty square matrix, got shape {a.shape}")
    a = a.astype(complex)
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    ah = a.conj().T
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - ah) > tol * max(scale, np.finfo(float).tiny):
        raise ValidationError("matrix is not Hermitian")
    return 0.5 * (a + ah)


class EigenDecomposition(NamedTuple):
    values: np.ndarray   # descending
    vectors: np.ndarray  # columns


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    v = np.array(v, dtype=complex)
    if v.ndim == 1:
        return fix_phase(v[:, None])[:, 0]
    idx = np.argmax(np.abs(v), axis=0)
    piv = v[idx, np.arange(v.shape[1])]
    mag = np.abs(piv)
    ph = np.where(mag > 0, piv / np.where(mag > 0, mag, 1.0), 1.0)
    return v / ph


def herm_eig(a) -> EigenDecomposition:
    """Full eigendecomposition with eigenvalues in descending order."""
    a = hermitian(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        fro = np.linalg.norm(a)
        raise ConvergenceError(f"eigensolver did not converge (dim={a.shape[0]}, ||A||_F={fro:.3e}): {exc}") from exc
    order = np.argsort(w)[::-1]
    return EigenDecomposition(w[order], fix_phase(v[:, order]))


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor; NotPositiveDefiniteError on a nonpositive pivot."""
    a = hermitian(a)
    try:
        return sla.cholesky(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc


def solve_hpd(a, b) -> np.ndarray:
    """Solve ``A x = b`` for Hermitian positive definite ``A``."""
    lo = cholesky(a)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != lo.shape[0]:
        raise ValidationError(f"right-hand side has length {b.shape[0]}, expected {lo.shape[0]}")
    return sla.cho_solve((lo, True), b, check_finite=False)


def rayleigh_max(numerator, denominator):
    """Maximize ``x^H N x / x^H D x`` over nonzero x.

    Returns ``(value, x)`` with x unit-norm (phase-fixed).  The value is the
    largest eigenvalue of ``L^{-1} N L^{-H}`` where ``D = L L^H``.
    """
    num = hermitian(numerator)
    lo = cholesky(denominator)
    if num.shape != lo.shape:
        raise ValidationError(f"dimension mismatch: {num.shape} vs {lo.shape}")
    t = sla.solve_triangular(lo, num, lower=True, check_finite=False)
    t = sla.solve_triangular(lo, t.conj().T, lower=True, check_finite=False).conj().T
    eig = herm_eig(0.5 * (t + t.conj().T))
    y = eig.vectors[:, 0]
    x = sla.solve_triangular(lo.conj().T, y, lower=False, check_finite=False)
    x = fix_phase(x / np.linalg.norm(x))
    return float(eig.values[0]), x
