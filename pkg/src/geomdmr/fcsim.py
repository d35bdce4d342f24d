"""Simulation of functional-connectivity correlation matrices.

A simulated subject starts from a base correlation matrix (drawn from a
synthetic cohort or a user-supplied one), optionally has an AR(1)-style
signal block blended into a target set of ROIs through an SPD-preserving
congruence, and is then pushed through Wishart sampling noise and
renormalized to a correlation matrix.

The blend is controlled by a fraction r in [0, 1]: at r = 0 the base
matrix is returned unchanged, at r = 1 the target block equals the signal
exactly, and the output stays positive definite for every r in between.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import matrix_io
from .exceptions import (
    DegreesOfFreedomError,
    InvalidRhoError,
    ValidationError,
)
from .linalg import as_correlation, cholesky, is_spd, normalize_to_correlation

GROUPS = ("patient", "control")


@dataclass(frozen=True)
class SignalParams:
    """Signal shape: block size and the normal law for the atanh-scale level."""

    b: int
    m: float
    s: float

    def __post_init__(self):
        if self.b < 2:
            raise ValidationError(f"signal block size must be >= 2, got {self.b}")
        if self.s <= 0:
            raise ValidationError(f"signal sd must be > 0, got {self.s}")


@dataclass(frozen=True)
class ImplantPlan:
    """Where the signal goes (ROI indices) and how strongly it is blended."""

    target_indices: tuple[int, ...]
    r: float

    def __post_init__(self):
        idx = tuple(int(i) for i in self.target_indices)
        object.__setattr__(self, "target_indices", idx)
        if len(set(idx)) != len(idx):
            raise ValidationError(f"target indices must be distinct, got {idx}")
        if not 0.0 <= self.r <= 1.0:
            raise ValidationError(f"blend fraction must lie in [0, 1], got {self.r}")


@dataclass(frozen=True)
class CohortConfig:
    """Base-cohort source and Wishart noise range.

    ``df_min`` defaults to max(dimension, 39) and ``df_max`` to 150; the
    subject noise level is drawn uniformly from that integer range. The
    synthetic template is block structured: ``n_blocks`` contiguous groups
    of ROIs with ``within_block_correlation`` inside each block.
    """

    dimension: int = 10
    n_base: int = 40
    df_min: int | None = None
    df_max: int = 150
    source: str = "synthetic"
    path: str | None = None
    n_blocks: int = 4
    within_block_correlation: float = 0.3
    template_df: int = 100

    def __post_init__(self):
        if self.source not in ("synthetic", "file"):
            raise ValidationError(
                f"cohort source must be 'synthetic' or 'file', got {self.source!r}")
        if self.source == "file" and not self.path:
            raise ValidationError("cohort source 'file' requires a path")
        if self.dimension < 2:
            raise ValidationError(f"dimension must be >= 2, got {self.dimension}")
        if self.n_base < 1:
            raise ValidationError(f"n_base must be >= 1, got {self.n_base}")
        if self.df_min is None:
            object.__setattr__(self, "df_min", max(self.dimension, 39))
        if self.df_min < self.dimension:
            raise ValidationError(
                f"df_min {self.df_min} below matrix dimension {self.dimension}")
        if self.df_max < self.df_min:
            raise ValidationError(
                f"df_max {self.df_max} below df_min {self.df_min}")


@dataclass(frozen=True)
class SimulatedSubject:
    matrix: np.ndarray
    group: str
    rho: float | None
    df: int


def signal_matrix(b: int, rho: float) -> np.ndarray:
    """AR(1)-structured correlation block: entry (i, j) = rho**|i - j|.

    Positive definite for every |rho| < 1.
    """
    if b < 2:
        raise ValidationError(f"signal block size must be >= 2, got {b}")
    if not abs(rho) < 1.0:
        raise InvalidRhoError(f"signal correlation must satisfy |rho| < 1, got {rho}")
    lags = np.abs(np.subtract.outer(np.arange(b), np.arange(b)))
    return np.power(float(rho), lags)


def sample_rho(m: float, s: float, rng: np.random.Generator) -> float:
    """Draw the signal correlation as tanh of a normal(m, s^2) variate."""
    if s <= 0:
        raise ValidationError(f"sd must be > 0, got {s}")
    return float(np.tanh(rng.normal(m, s)))


def implant(a: np.ndarray, b_signal: np.ndarray, target_indices, r: float,
            renormalize: bool = True) -> np.ndarray:
    """Blend a signal block into a correlation matrix, staying SPD.

    The target rows/columns are moved to the leading block, the blend
    B(r) = (1-r) * A11 + r * B is formed, and the whole matrix is
    transformed by the block congruence C = blockdiag(L_B(r) @ L_A11^-1, I)
    so the leading block becomes exactly B(r) while positive definiteness
    is preserved (C is invertible). The original ordering is then restored
    and, when ``renormalize`` is set, the result is passed through
    correlation normalization to absorb roundoff on the diagonal.

    r = 0 returns the input bit-for-bit: the zero-blend output is the
    input by construction, and patient-at-zero and control pipelines must
    coincide exactly.
    """
    a = np.asarray(a, dtype=float)
    b_signal = np.asarray(b_signal, dtype=float)
    n = a.shape[0]
    b = b_signal.shape[0]
    target = tuple(int(i) for i in target_indices)
    if len(set(target)) != len(target):
        raise ValidationError(f"target indices must be distinct, got {target}")
    if len(target) != b:
        raise ValidationError(
            f"signal block is {b} x {b} but {len(target)} target indices given")
    if any(i < 0 or i >= n for i in target):
        raise ValidationError(f"target indices {target} out of range for dim {n}")
    if not 0.0 <= r <= 1.0:
        raise ValidationError(f"blend fraction must lie in [0, 1], got {r}")
    if r == 0.0:
        return a.copy()

    leading = target == tuple(range(b))
    if leading:
        ap = a
    else:
        perm = list(target) + [i for i in range(n) if i not in set(target)]
        ap = a[np.ix_(perm, perm)]
    a11 = ap[:b, :b]
    blend = (1.0 - r) * a11 + r * b_signal
    l_a = cholesky(a11)
    l_b = cholesky(blend)
    # M = L_blend @ L_a11^-1, so M @ A11 @ M' equals the blend exactly
    m = scipy.linalg.solve_triangular(l_a, l_b.T, trans="T", lower=True,
                                      check_finite=False).T

    out = np.empty_like(ap)
    out[:b, :b] = 0.5 * (blend + blend.T)
    coupling = m @ ap[:b, b:]
    out[:b, b:] = coupling
    out[b:, :b] = coupling.T
    out[b:, b:] = ap[b:, b:]

    if not leading:
        inv = np.empty(n, dtype=int)
        inv[perm] = np.arange(n)
        out = out[np.ix_(inv, inv)]
    return normalize_to_correlation(out) if renormalize else out


def wishart_sample(scale: np.ndarray, df: int, rng: np.random.Generator) -> np.ndarray:
    """One Wishart(scale, df) draw via the Bartlett construction.

    W = (L T)(L T)' with L the Cholesky factor of the scale matrix and T
    lower triangular with chi distributed diagonal (T_ii^2 chi-square with
    df - i degrees of freedom, zero-based i) and standard normal strictly
    lower entries. Almost surely SPD for df >= dimension.
    """
    scale = np.asarray(scale, dtype=float)
    n = scale.shape[0]
    df = int(df)
    if df < n:
        raise DegreesOfFreedomError(
            f"Wishart needs df >= dimension, got df={df} for dim {n}")
    l = cholesky(scale)
    diag_idx, lower_idx, lags = _bartlett_indices(n)
    t = np.zeros((n, n))
    t[diag_idx] = np.sqrt(rng.chisquare(df - lags))
    if n > 1:
        t[lower_idx] = rng.standard_normal(n * (n - 1) // 2)
    lt = l @ t
    w = lt @ lt.T
    return 0.5 * (w + w.T)


@lru_cache(maxsize=128)
def _bartlett_indices(n: int):
    return np.diag_indices(n), np.tril_indices(n, -1), np.arange(n)


def simulate_subject(base: np.ndarray, group: str, params: SignalParams,
                     plan: ImplantPlan, cfg: CohortConfig,
                     rng: np.random.Generator, rho: float | None = None,
                     renormalize: bool = True) -> SimulatedSubject:
    """Simulate one subject's connectivity matrix.

    Patients get the signal blended in at the plan's strength before the
    Wishart step; controls use the base matrix unchanged. Signal and noise
    randomness come from separate child streams, so a control subject and
    a patient at zero blend produce bit-identical output for the same
    input stream.

    ``rho`` overrides the per-subject draw when the caller fixes the
    signal level for a whole replicate.
    """
    if group not in GROUPS:
        raise ValidationError(f"group must be one of {GROUPS}, got {group!r}")
    signal_rng, noise_rng = rng.spawn(2)
    rho_used: float | None = None
    if group == "patient":
        rho_used = float(rho) if rho is not None else sample_rho(params.m, params.s, signal_rng)
        block = signal_matrix(params.b, rho_used)
        scale = implant(base, block, plan.target_indices, plan.r,
                        renormalize=renormalize)
    else:
        scale = base
    df = int(noise_rng.integers(cfg.df_min, cfg.df_max + 1))
    w = wishart_sample(scale, df, noise_rng)
    return SimulatedSubject(matrix=normalize_to_correlation(w), group=group,
                            rho=rho_used, df=df)


def block_template(dimension: int, n_blocks: int, within_block_correlation: float) -> np.ndarray:
    """Block-structured correlation template mimicking functional networks.

    ROIs are split into ``n_blocks`` contiguous, near-equal groups; entries
    inside a group equal ``within_block_correlation``, entries across
    groups are zero.
    """
    if not 1 <= n_blocks <= dimension:
        raise ValidationError(
            f"n_blocks must lie in [1, {dimension}], got {n_blocks}")
    sizes = [dimension // n_blocks + (1 if i < dimension % n_blocks else 0)
             for i in range(n_blocks)]
    out = np.zeros((dimension, dimension))
    start = 0
    for size in sizes:
        out[start:start + size, start:start + size] = within_block_correlation
        start += size
    np.fill_diagonal(out, 1.0)
    if not is_spd(out):
        raise ValidationError(
            f"within-block correlation {within_block_correlation} makes the "
            "template indefinite")
    return out


def generate_base_cohort(cfg: CohortConfig, rng: np.random.Generator) -> list[np.ndarray]:
    """Synthetic stand-in for a real cohort of correlation matrices.

    Each matrix is a normalized Wishart draw around the block template, so
    the cohort shares a network structure but varies subject to subject.
    Draws are sequential from ``rng``; a fixed stream reproduces the
    cohort exactly.
    """
    template = block_template(cfg.dimension, cfg.n_blocks,
                              cfg.within_block_correlation)
    cohort = []
    for _ in range(cfg.n_base):
        w = wishart_sample(template, cfg.template_df, rng)
        cohort.append(normalize_to_correlation(w))
    return cohort


def load_cohort(path) -> list[np.ndarray]:
    """Load a cohort of correlation matrices from CSV files.

    ``path`` may be a single CSV or a directory, in which case every
    ``*.csv`` inside is read in lexicographic filename order. Files that
    fail correlation validation are rejected with the filename in the
    error.
    """
    if os.path.isdir(path):
        names = sorted(f for f in os.listdir(path) if f.endswith(".csv"))
        files = [os.path.join(path, f) for f in names]
        if not files:
            raise ValidationError(f"{path}: no .csv files found")
    else:
        files = [path]
    cohort = []
    dim = None
    for f in files:
        a = matrix_io.read_square_matrix(f)
        try:
            c = as_correlation(a)
        except ValidationError as exc:
            raise ValidationError(f"{f}: {exc}") from exc
        if dim is None:
            dim = c.shape[0]
        elif c.shape[0] != dim:
            raise ValidationError(
                f"{f}: dimension {c.shape[0]} differs from earlier files ({dim})")
        cohort.append(c)
    return cohort
