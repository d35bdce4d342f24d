"""Distance-based multivariate regression: Gower centering, pseudo-F, and
the permutation test.

The test statistic is a ratio of traces of the double-centered squared
dissimilarity matrix projected onto and off the design's column space. Two
degrees-of-freedom placements are supported (see ``PSEUDO_F_VARIANTS``);
the choice rescales the statistic by a constant, so permutation p-values
are identical under either.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DegenerateResidualError,
    RankDeficientDesignError,
    ValidationError,
)
from .rng import PermutationStream

# "residual_total": explained trace / (N - p - 1) over residual trace / (N - 1).
# "predictor_residual": explained trace / p over residual trace / (N - p - 1),
# the PERMANOVA convention. Constant multiples of each other for fixed (N, p).
PSEUDO_F_VARIANTS = ("residual_total", "predictor_residual")
DEFAULT_N_PERMUTATIONS = 999

MAX_DESIGN_CONDITION = 1e12


@dataclass(frozen=True)
class MDMRResult:
    pseudo_f: float
    p_value: float
    n_permutations: int
    seed: int
    permutation_f_values: np.ndarray | None = None


def validate_design(x: np.ndarray) -> np.ndarray:
    """Check an N x (p+1) design matrix whose first column is the intercept."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValidationError(f"design must be a 2-D N x (p+1) array, got {x.shape}")
    if not np.all(x[:, 0] == 1.0):
        raise ValidationError(
            "design matrix lacks an intercept: first column must be all ones "
            "(prepend a column of 1s)")
    if not np.all(np.isfinite(x)):
        raise ValidationError("design matrix contains non-finite entries")
    return x


def group_design(n_first: int, n_second: int) -> np.ndarray:
    """Intercept plus indicator design for a two-group comparison.

    The indicator is 1 for the first ``n_first`` rows and 0 after.
    """
    n = n_first + n_second
    x = np.ones((n, 2))
    x[n_first:, 1] = 0.0
    return x


def gower_center(d: np.ndarray) -> np.ndarray:
    """Double-centered Gower matrix of a dissimilarity matrix.

    Computes G = C A C with A = -0.5 * d**2 and C the centering projector
    I - 11'/n. Rows and columns of the result sum to zero.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"dissimilarity matrix must be square, got {d.shape}")
    a = -0.5 * d * d
    row = a.mean(axis=1)
    grand = row.mean()
    g = a - row[:, None] - row[None, :] + grand
    return 0.5 * (g + g.T)


def _check_design_condition(x: np.ndarray) -> np.ndarray:
    xtx = x.T @ x
    cond = np.linalg.cond(xtx)
    if not np.isfinite(cond) or cond > MAX_DESIGN_CONDITION:
        raise RankDeficientDesignError(
            f"X'X condition number {cond:.3e} exceeds {MAX_DESIGN_CONDITION:.0e}")
    return xtx


def hat_matrix(x: np.ndarray) -> np.ndarray:
    """Projection matrix onto the column space of the design.

    Raises
    ------
    RankDeficientDesignError
        If cond(X'X) exceeds 1e12.
    """
    x = validate_design(x)
    xtx = _check_design_condition(x)
    h = x @ np.linalg.solve(xtx, x.T)
    return 0.5 * (h + h.T)


def _trace_ratio(explained: float, residual: float, n: int, p: int,
                 variant: str, scale: float) -> float:
    if n - p - 1 < 1:
        raise ValidationError(
            f"no residual degrees of freedom: N={n} subjects for p={p} predictors")
    if p < 1 and variant == "predictor_residual":
        raise ValidationError(
            "the predictor_residual variant needs at least one predictor")
    if residual <= 1e-12 * max(1.0, abs(scale)):
        raise DegenerateResidualError(
            f"residual trace {residual:.3e} is zero or negative; "
            "no unexplained variation to test against")
    if variant == "predictor_residual":
        return (explained / p) / (residual / (n - p - 1))
    return (explained / (n - p - 1)) / (residual / (n - 1))


def pseudo_f(g: np.ndarray, h: np.ndarray, n_subjects: int, n_predictors: int,
             variant: str = "residual_total") -> float:
    """Pseudo-F statistic from a Gower matrix and a hat matrix.

    Uses tr(HGH) = tr(HG) and tr((I-H)G(I-H)) = tr(G) - tr(HG), valid for
    symmetric idempotent H, so each evaluation is one elementwise
    multiply-accumulate.

    Raises
    ------
    DegenerateResidualError
        If the residual trace is zero or negative within tolerance.
    """
    if variant not in PSEUDO_F_VARIANTS:
        raise ValidationError(
            f"unknown pseudo-F variant {variant!r}; valid: {', '.join(PSEUDO_F_VARIANTS)}")
    tr_g = float(np.trace(g))
    explained = float(np.sum(h * g))
    return _trace_ratio(explained, tr_g - explained, n_subjects, n_predictors,
                        variant, tr_g)


def permutation_test(g: np.ndarray, x: np.ndarray, n_perms: int = DEFAULT_N_PERMUTATIONS,
                     seed: int = 0, variant: str = "residual_total",
                     keep_permutation_stats: bool = True) -> MDMRResult:
    """Permutation test of association between the design and the responses.

    Subject identities are permuted on the response side: each permutation
    is applied simultaneously to rows and columns of ``g`` while the design
    stays fixed. Permutation ``i`` comes from counter-based substream
    ``(seed, i)``, so the p-value is reproducible regardless of evaluation
    order or worker count.

    The explained trace is evaluated as tr(Q' G_perm Q) over an orthonormal
    basis Q of the design's column space (H = Q Q'), which lets all
    permutations share two batched matrix products instead of materializing
    any permuted matrix.

    The p-value uses the add-one convention (1 + #{F* >= F}) / (1 + B). A
    permutation with a degenerate residual scores F* = +inf, which can only
    make the test more conservative.
    """
    if n_perms < 1:
        raise ValidationError(f"n_perms must be >= 1, got {n_perms}")
    if variant not in PSEUDO_F_VARIANTS:
        raise ValidationError(
            f"unknown pseudo-F variant {variant!r}; valid: {', '.join(PSEUDO_F_VARIANTS)}")
    x = validate_design(x)
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if x.shape[0] != n:
        raise ValidationError(
            f"design has {x.shape[0]} rows but Gower matrix is {n} x {n}")
    p = x.shape[1] - 1
    if p < 1:
        raise ValidationError(
            "permutation test needs at least one predictor besides the intercept")
    _check_design_condition(x)
    q, _ = np.linalg.qr(x)

    tr_g = float(np.trace(g))
    explained = float(np.einsum("ik,ik->", q, g @ q))
    f_obs = _trace_ratio(explained, tr_g - explained, n, p, variant, tr_g)

    stream = PermutationStream(seed)
    k = q.shape[1]
    perms = np.empty((n_perms, n), dtype=np.intp)
    for i in range(n_perms):
        perms[i] = stream.permutation(i, n)
    # tr(Q' G_perm Q) = tr(V' G V) with V the rows of Q scattered by the
    # permutation: V[perm[i], :] = Q[i, :]
    v = np.empty((n_perms, n, k))
    np.put_along_axis(v, np.broadcast_to(perms[:, :, None], v.shape),
                      np.broadcast_to(q[None, :, :], v.shape), axis=1)
    expl = np.einsum("bik,bik->b", v, g @ v, optimize=True)
    resid = tr_g - expl

    degenerate = resid <= 1e-12 * max(1.0, abs(tr_g))
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant == "predictor_residual":
            f_perm = (expl / p) / (resid / (n - p - 1))
        else:
            f_perm = (expl / (n - p - 1)) / (resid / (n - 1))
    f_perm[degenerate] = np.inf

    exceed = int(np.count_nonzero(f_perm >= f_obs))
    p_value = (1.0 + exceed) / (1.0 + n_perms)
    return MDMRResult(
        pseudo_f=f_obs,
        p_value=p_value,
        n_permutations=n_perms,
        seed=int(seed),
        permutation_f_values=f_perm if keep_permutation_stats else None,
    )
