"""Dissimilarity measures and pairwise dissimilarity matrices.

Four measures are supported:

* ``geodesic``    - affine-invariant geodesic distance between SPD matrices;
* ``euclidean``   - Euclidean distance between vectors;
* ``correlation`` - Pearson-based distance between vectors;
* ``sphere``      - great-circle distance between unit vectors in R^3.

For connectivity-matrix responses the ``euclidean`` and ``correlation``
measures operate on upper-triangle vectorizations (see
:func:`vectorize_upper`); callers vectorize before building the matrix.

Every pairwise function returns exactly 0.0 for bit-identical inputs, so
the identity axiom holds without roundoff slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import linalg
from .exceptions import (
    LengthMismatchError,
    NonFiniteResultError,
    NotUnitVectorError,
    ValidationError,
    ZeroVarianceError,
)

MEASURE_KINDS = ("geodesic", "euclidean", "correlation", "sphere")
CORRELATION_FORMULAS = ("sqrt_two_minus_two_r", "one_minus_r")


@dataclass(frozen=True)
class DistanceMeasure:
    """A dissimilarity measure selection.

    ``kind`` fixes the admissible response type: SPD matrices for
    ``geodesic``, vectors for the rest. ``correlation_formula`` selects
    how a Pearson correlation r maps to a distance: ``sqrt_two_minus_two_r``
    gives sqrt(2 - 2r) (a metric on standardized vectors, the default) and
    ``one_minus_r`` gives 1 - r.
    """

    kind: str
    correlation_formula: str = "sqrt_two_minus_two_r"

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ValidationError(
                f"unknown measure {self.kind!r}; valid: {', '.join(MEASURE_KINDS)}")
        if self.correlation_formula not in CORRELATION_FORMULAS:
            raise ValidationError(
                f"unknown correlation formula {self.correlation_formula!r}; "
                f"valid: {', '.join(CORRELATION_FORMULAS)}")


def dist_affine_invariant(b1: np.ndarray, b2: np.ndarray) -> float:
    """Affine-invariant geodesic distance between SPD matrices.

    Computed as sqrt(sum_i log(sigma_i)^2) where sigma_i are the
    eigenvalues of ``linalg.whiten(b1, b2)``; congruence by any invertible
    matrix leaves the value unchanged.

    Raises
    ------
    NotPositiveDefiniteError
        If either argument fails the Cholesky gate.
    NonFiniteResultError
        If severe ill-conditioning drives a relative eigenvalue to zero
        or below.
    """
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if b1 is b2 or np.array_equal(b1, b2):
        linalg.cholesky(b1)
        return 0.0
    sigma = np.linalg.eigvalsh(linalg.whiten(b1, b2))
    if sigma[0] <= 0.0:
        raise NonFiniteResultError(
            f"relative eigenvalue {sigma[0]:.3e} <= 0; inputs too "
            "ill-conditioned for a finite geodesic distance")
    return float(np.sqrt(np.sum(np.log(sigma) ** 2)))


@lru_cache(maxsize=128)
def _strict_upper_indices(n: int):
    return np.triu_indices(n, k=1)


def vectorize_upper(c: np.ndarray) -> np.ndarray:
    """Strict upper triangle of a square matrix, row-major order.

    For an R x R matrix the result has length R(R-1)/2 and lists entries
    (0,1), (0,2), ..., (0,R-1), (1,2), ... This fixed order makes file
    output reproducible.
    """
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
        raise ValidationError(f"expected a square matrix with dim >= 2, got {c.shape}")
    return c[_strict_upper_indices(c.shape[0])]


def dist_euclidean(u: np.ndarray, v: np.ndarray) -> float:
    """Euclidean distance ||u - v||_2."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise LengthMismatchError(f"length mismatch: {u.size} vs {v.size}")
    return float(np.sqrt(np.sum((u - v) ** 2)))


def _center_and_norm(u: np.ndarray) -> tuple[np.ndarray, float]:
    uc = u - u.mean()
    return uc, float(np.sqrt(np.dot(uc, uc)))


def _correlation_to_distance(r: float, formula: str) -> float:
    r = min(1.0, max(-1.0, r))
    if formula == "one_minus_r":
        return 1.0 - r
    return float(np.sqrt(2.0 * (1.0 - r)))


def dist_correlation(u, v, formula: str = "sqrt_two_minus_two_r") -> float:
    """Pearson-based distance between two vectors.

    Default formula sqrt(2(1 - r)) equals the Euclidean distance between
    the standardized vectors, hence satisfies the triangle inequality;
    ``one_minus_r`` is provided as a conventional alternative.

    Raises
    ------
    ZeroVarianceError
        If either vector is constant (Pearson undefined).
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise LengthMismatchError(f"length mismatch: {u.size} vs {v.size}")
    if u.size < 2:
        raise ValidationError("correlation distance needs vectors of length >= 2")
    uc, su = _center_and_norm(u)
    vc, sv = _center_and_norm(v)
    if su == 0.0 or sv == 0.0:
        raise ZeroVarianceError("constant vector: Pearson correlation undefined")
    if np.array_equal(u, v):
        return 0.0
    r = float(np.dot(uc, vc) / (su * sv))
    return _correlation_to_distance(r, formula)


def dist_sphere(u, v) -> float:
    """Great-circle distance between unit vectors in R^3, in [0, pi]."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.size != 3 or v.size != 3:
        raise ValidationError("sphere distance expects vectors in R^3")
    for name, w in (("u", u), ("v", v)):
        n = float(np.linalg.norm(w))
        if abs(n - 1.0) > 1e-8:
            raise NotUnitVectorError(f"{name} has norm {n!r}, not 1 within 1e-8")
    if np.array_equal(u, v):
        return 0.0
    return float(np.arccos(min(1.0, max(-1.0, float(np.dot(u, v))))))


def _geodesic_matrix(stack: np.ndarray) -> np.ndarray:
    """All pairwise geodesic distances over a stack of SPD matrices.

    Row-batched form of :func:`dist_affine_invariant`: for each i the
    triangular solves against all later responses share one LAPACK call,
    which is several times faster than per-pair calls at cohort sizes.
    """
    n, R = stack.shape[0], stack.shape[1]
    factors = []
    for i in range(n):
        try:
            factors.append(linalg.cholesky(stack[i]))
        except Exception as exc:
            raise type(exc)(f"response {i}: {exc}") from exc
    out = np.zeros((n, n))
    for i in range(n - 1):
        rest = stack[i + 1:]
        k = rest.shape[0]
        flat = rest.transpose(1, 0, 2).reshape(R, k * R)
        s = scipy.linalg.solve_triangular(factors[i], flat, lower=True,
                                          check_finite=False)
        flat2 = s.reshape(R, k, R).transpose(2, 1, 0).reshape(R, k * R)
        x = scipy.linalg.solve_triangular(factors[i], flat2, lower=True,
                                          check_finite=False)
        m = x.reshape(R, k, R).transpose(1, 2, 0)
        m = 0.5 * (m + m.transpose(0, 2, 1))
        sigma = np.linalg.eigvalsh(m)
        bad = np.nonzero(sigma[:, 0] <= 0.0)[0]
        if bad.size:
            j = i + 1 + int(bad[0])
            raise NonFiniteResultError(
                f"pair ({i}, {j}): relative eigenvalue <= 0")
        row = np.sqrt(np.sum(np.log(sigma) ** 2, axis=1))
        out[i, i + 1:] = row
        out[i + 1:, i] = row
    return out


def _zero_duplicate_pairs(out: np.ndarray, arrays) -> None:
    """Force exactly-zero entries for bit-identical responses, the identity
    axiom the scalar functions guarantee via their shortcut."""
    groups: dict[bytes, list[int]] = {}
    for idx, a in enumerate(arrays):
        groups.setdefault(a.tobytes(), []).append(idx)
    for members in groups.values():
        if len(members) > 1:
            ix = np.ix_(members, members)
            out[ix] = 0.0


def dissimilarity_matrix(responses, measure: DistanceMeasure) -> np.ndarray:
    """n x n matrix of pairwise dissimilarities.

    Entries are computed over the strict upper triangle and mirrored; the
    diagonal is identically zero. Per-pair values are pure functions of the
    two responses, so the result does not depend on evaluation order. The
    vector measures run as batched array operations; these agree with the
    scalar functions to machine precision, and bit-identical responses are
    pinned to exactly zero either way.

    Raises
    ------
    ValidationError
        On fewer than two responses or inhomogeneous shapes.
    Per-pair errors are re-raised with the offending pair index attached.
    """
    arrays = [np.asarray(r, dtype=float) for r in responses]
    if len(arrays) < 2:
        raise ValidationError("need at least two responses")
    shape0 = arrays[0].shape
    for i, a in enumerate(arrays):
        if a.shape != shape0:
            raise ValidationError(
                f"response 0 has shape {shape0} but response {i} has shape {a.shape}")

    n = len(arrays)
    if measure.kind == "geodesic":
        if len(shape0) != 2 or shape0[0] != shape0[1]:
            raise ValidationError(
                f"geodesic measure needs square matrices, got shape {shape0}")
        out = _geodesic_matrix(np.array(arrays))
        _zero_duplicate_pairs(out, arrays)
        return out

    out = np.zeros((n, n))
    if measure.kind == "euclidean":
        stack = np.array([a.ravel() for a in arrays])
        for i in range(n - 1):
            diffs = stack[i + 1:] - stack[i]
            row = np.sqrt(np.einsum("kq,kq->k", diffs, diffs))
            out[i, i + 1:] = row
            out[i + 1:, i] = row
        return out

    if measure.kind == "correlation":
        centered = np.empty((n, arrays[0].size))
        norms = np.empty(n)
        for i, a in enumerate(arrays):
            centered[i], norms[i] = _center_and_norm(a.ravel())
            if norms[i] == 0.0:
                raise ZeroVarianceError(f"response {i} is constant")
        r = centered @ centered.T
        r = 0.5 * (r + r.T)
        r /= np.outer(norms, norms)
        np.clip(r, -1.0, 1.0, out=r)
        if measure.correlation_formula == "one_minus_r":
            out = 1.0 - r
        else:
            out = np.sqrt(2.0 * (1.0 - r))
        np.fill_diagonal(out, 0.0)
        _zero_duplicate_pairs(out, arrays)
        return out

    for i in range(n - 1):
        for j in range(i + 1, n):
            try:
                d = dist_sphere(arrays[i], arrays[j])
            except Exception as exc:
                raise type(exc)(f"pair ({i}, {j}): {exc}") from exc
            out[i, j] = out[j, i] = d
    return out
