"""Dense symmetric/SPD matrix foundations.

Conventions used throughout the package:

* matrices are plain ``numpy`` arrays of ``float64``;
* the Cholesky factor is lower-triangular ``L`` with ``A = L @ L.T``;
* positive definiteness is judged against a scale-aware pivot floor
  ``pd_tolerance(a) = 1e-10 * dim * max|a|``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateDiagonalError,
    EigenConvergenceError,
    NotPositiveDefiniteError,
    ValidationError,
)

SYMMETRY_RTOL = 1e-8


def pd_tolerance(a: np.ndarray) -> float:
    """Scale-aware floor below which a Cholesky pivot counts as zero."""
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    return 1e-10 * a.shape[0] * max(scale, np.finfo(float).tiny)


def symmetrize(a, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Return the symmetric part of ``a``, rejecting genuinely asymmetric input.

    Sub-ulp asymmetry from file round trips is averaged away; relative
    asymmetry above ``rtol`` is treated as a structural error rather than
    noise.

    Raises
    ------
    ValidationError
        If ``a`` is not square or its asymmetry exceeds ``rtol`` relative
        to its largest entry.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0, 1e-300)
    gap = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if gap > rtol * scale:
        raise ValidationError(
            f"matrix is not symmetric: max|a - a.T| = {gap:.3e} "
            f"exceeds {rtol:.1e} relative to max|a| = {scale:.3e}"
        )
    return 0.5 * (a + a.T)


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefiniteError
        If factorization fails or any pivot falls at or below
        ``pd_tolerance(a)``.
    """
    a = np.asarray(a, dtype=float)
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"Cholesky factorization failed: {exc}") from exc
    # factorization succeeded, so the matrix is numerically PD and its
    # largest-magnitude entry sits on the diagonal
    floor = 1e-10 * a.shape[0] * max(float(a.diagonal().max()),
                                     np.finfo(float).tiny)
    smallest = float((L.diagonal() ** 2).min())
    if smallest <= floor:
        raise NotPositiveDefiniteError(
            f"smallest Cholesky pivot {smallest:.3e} at or below "
            f"tolerance {floor:.3e}")
    return L


def is_spd(a: np.ndarray, tol: float | None = None) -> bool:
    """True iff Cholesky succeeds on ``a`` with every pivot above ``tol``."""
    a = np.asarray(a, dtype=float)
    if tol is None:
        tol = pd_tolerance(a)
    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return bool(np.min(np.diag(L) ** 2) > tol)


def sym_eigen(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    (eigenvalues, eigenvectors)
        Eigenvalues ascending; eigenvectors as orthonormal columns, so
        ``Q @ diag(w) @ Q.T`` reconstructs ``a``.
    """
    a = np.asarray(a, dtype=float)
    try:
        w, q = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigh failed to converge: {exc}") from exc
    return w, q


def whiten(b1: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """Congruence of ``b2`` by the inverse Cholesky factor of ``b1``.

    Returns the symmetric matrix ``M = L^-1 @ b2 @ L^-T`` with
    ``L = cholesky(b1)``. ``M`` is similar to ``b1^-1 @ b2``, so its
    eigenvalues are the relative eigenvalues of the pair without forming
    any matrix square root.
    """
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if b1.shape != b2.shape:
        raise ValidationError(
            f"dimension mismatch: {b1.shape} vs {b2.shape}")
    L = cholesky(b1)
    m = scipy.linalg.solve_triangular(L, b2, lower=True, check_finite=False)
    m = scipy.linalg.solve_triangular(L, m.T, lower=True, check_finite=False).T
    return 0.5 * (m + m.T)


def normalize_to_correlation(w: np.ndarray) -> np.ndarray:
    """Rescale an SPD matrix to unit diagonal: ``D^-1/2 @ w @ D^-1/2``.

    The result has an exactly-unit diagonal and off-diagonal entries
    clipped into [-1, 1] (the congruence keeps it SPD; clipping only
    removes roundoff spill).

    Raises
    ------
    DegenerateDiagonalError
        If any diagonal entry is at or below ``pd_tolerance(w)``.
    """
    w = np.asarray(w, dtype=float)
    d = w.diagonal()
    dmin = float(d.min())
    # SPD input: the diagonal carries the matrix scale
    if dmin <= 1e-10 * w.shape[0] * max(float(d.max()), np.finfo(float).tiny):
        raise DegenerateDiagonalError(
            f"diagonal entry {dmin:.3e} too small to normalize")
    s = 1.0 / np.sqrt(d)
    out = w * np.outer(s, s)
    np.clip(out, -1.0, 1.0, out=out)
    np.fill_diagonal(out, 1.0)
    return out


def as_spd(a, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Symmetrize and validate positive definiteness; returns the cleaned array."""
    sym = symmetrize(a, rtol=rtol)
    if not is_spd(sym):
        raise ValidationError("matrix is not positive definite")
    return sym


def as_correlation(a, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate a correlation matrix: SPD, unit diagonal, entries in [-1, 1].

    Diagonal entries must equal 1 within 1e-12; off-diagonal magnitudes may
    exceed 1 by at most 1e-12 (file round-trip noise) and are clipped.
    """
    spd = as_spd(a, rtol=rtol)
    diag_gap = float(np.max(np.abs(np.diag(spd) - 1.0)))
    if diag_gap > 1e-12:
        raise ValidationError(
            f"diagonal deviates from 1 by {diag_gap:.3e} (limit 1e-12)")
    overshoot = float(np.max(np.abs(spd))) - 1.0
    if overshoot > 1e-12:
        raise ValidationError(
            f"off-diagonal magnitude exceeds 1 by {overshoot:.3e}")
    out = np.clip(spd, -1.0, 1.0)
    np.fill_diagonal(out, 1.0)
    return out
