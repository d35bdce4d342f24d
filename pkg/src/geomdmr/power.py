"""Power-study orchestration.

Sweeps a grid of signal configurations (block size, signal level, blend
fraction), simulates patient/control cohorts for each cell, runs the
permutation test once per dissimilarity method, and estimates power as the
proportion of replicate p-values below the significance level.

Randomness layout: every draw comes from a counter-based substream keyed
by (seed, stream tag, cell indices, replicate, subject). Within a
replicate all methods see the identical simulated cohort, and permutation
seeds are keyed per method, so method comparisons are paired and the
whole table is a pure function of the grid and its seed, at any worker
count.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass

import numpy as np

from .distances import (
    CORRELATION_FORMULAS,
    DistanceMeasure,
    dissimilarity_matrix,
    vectorize_upper,
)
from .exceptions import EmptyInputError, GeomdmrError, ValidationError
from .fcsim import (
    CohortConfig,
    ImplantPlan,
    SignalParams,
    SimulatedSubject,
    generate_base_cohort,
    load_cohort,
    sample_rho,
    simulate_subject,
)
from .matrix_io import fmt_float
from .mdmr import PSEUDO_F_VARIANTS, gower_center, group_design, permutation_test
from .rng import derive_seed, substream

METHODS = ("geodesic", "euclidean", "correlation")
_METHOD_IDS = {name: i for i, name in enumerate(METHODS)}

# leading substream tags; distinct tags keep stream families disjoint
_COHORT_STREAM = 0
_SIM_STREAM = 1
_PERM_STREAM = 2
_RHO_STREAM = 3

RHO_MODES = ("subject", "replicate")


@dataclass(frozen=True)
class ExperimentGrid:
    """The full sweep: signal parameters, cohort sizes, and test settings."""

    b_values: tuple[int, ...] = (2, 3, 4)
    m_values: tuple[float, ...] = (-1.83, -0.55, 0.0, 0.55, 1.83)
    r_values: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    s: float = 0.267
    n_patients: int = 20
    n_controls: int = 20
    n_replications: int = 200
    n_permutations: int = 199
    alpha: float = 0.05
    methods: tuple[str, ...] = METHODS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "b_values", tuple(int(b) for b in self.b_values))
        object.__setattr__(self, "m_values", tuple(float(m) for m in self.m_values))
        object.__setattr__(self, "r_values", tuple(float(r) for r in self.r_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        for name in ("b_values", "m_values", "r_values", "methods"):
            if not getattr(self, name):
                raise ValidationError(f"{name} must be non-empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValidationError(
                f"unknown methods {unknown}; valid methods: {', '.join(METHODS)}")
        if any(b < 2 for b in self.b_values):
            raise ValidationError("signal block sizes must be >= 2")
        if any(not 0.0 <= r <= 1.0 for r in self.r_values):
            raise ValidationError("blend fractions must lie in [0, 1]")
        if self.s <= 0:
            raise ValidationError(f"s must be > 0, got {self.s}")
        if self.n_patients < 1 or self.n_controls < 1:
            raise ValidationError("both group sizes must be >= 1")
        if self.n_patients + self.n_controls < 4:
            raise ValidationError("need at least 4 subjects for the two-group test")
        if self.n_replications < 1:
            raise ValidationError("n_replications must be >= 1")
        if self.n_permutations < 1:
            raise ValidationError("n_permutations must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")


@dataclass(frozen=True)
class StudyOptions:
    """Cross-cutting analysis choices shared by the CLI and the library."""

    correlation_formula: str = "sqrt_two_minus_two_r"
    pseudo_f_variant: str = "residual_total"
    renormalize_after_implant: bool = True
    rho_per: str = "subject"
    target_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.correlation_formula not in CORRELATION_FORMULAS:
            raise ValidationError(
                f"unknown correlation formula {self.correlation_formula!r}; "
                f"valid: {', '.join(CORRELATION_FORMULAS)}")
        if self.pseudo_f_variant not in PSEUDO_F_VARIANTS:
            raise ValidationError(
                f"unknown pseudo-F variant {self.pseudo_f_variant!r}; "
                f"valid: {', '.join(PSEUDO_F_VARIANTS)}")
        if self.rho_per not in RHO_MODES:
            raise ValidationError(
                f"rho_per must be one of {RHO_MODES}, got {self.rho_per!r}")
        if self.target_indices is not None:
            object.__setattr__(self, "target_indices",
                               tuple(int(i) for i in self.target_indices))


@dataclass(frozen=True)
class PowerRow:
    b: int
    m: float
    r: float
    method: str
    power: float
    n_replications: int
    mean_p: float
    seed: int


POWER_TABLE_HEADER = "b,m,r,method,power,n_replications,mean_p,seed"


def resolve_target(options: StudyOptions, b: int, dimension: int) -> tuple[int, ...]:
    """Target ROI indices for a signal of size b: the configured list's
    first b entries, or 0..b-1 by default."""
    if options.target_indices is None:
        target = tuple(range(b))
    else:
        if len(options.target_indices) < b:
            raise ValidationError(
                f"{len(options.target_indices)} target indices configured but "
                f"signal block size {b} requested")
        target = options.target_indices[:b]
    if any(i < 0 or i >= dimension for i in target):
        raise ValidationError(
            f"target indices {target} out of range for dimension {dimension}")
    return target


def simulate_replicate(cohort, n_patients: int, n_controls: int,
                       params: SignalParams, r: float, cfg: CohortConfig,
                       options: StudyOptions, seed: int,
                       cell: tuple[int, int, int] = (0, 0, 0),
                       rep: int = 0) -> list[tuple[SimulatedSubject, int]]:
    """Simulate one replicate cohort: patients first, then controls.

    Returns (subject, base-matrix index) pairs. Subject j draws from
    substream (seed, sim-tag, *cell, rep, j) regardless of how many other
    subjects exist, and the replicate-level signal draw (when rho is fixed
    per replicate) has its own stream.
    """
    dimension = cohort[0].shape[0]
    target = resolve_target(options, params.b, dimension)
    plan = ImplantPlan(target_indices=target, r=r)
    fixed_rho = None
    if options.rho_per == "replicate":
        rho_rng = substream(seed, _RHO_STREAM, *cell, rep)
        fixed_rho = sample_rho(params.m, params.s, rho_rng)
    out = []
    n_total = n_patients + n_controls
    for j in range(n_total):
        subject_rng = substream(seed, _SIM_STREAM, *cell, rep, j)
        selector, sim_rng = subject_rng.spawn(2)
        base_idx = int(selector.integers(len(cohort)))
        group = "patient" if j < n_patients else "control"
        subject = simulate_subject(
            cohort[base_idx], group, params, plan, cfg, sim_rng,
            rho=fixed_rho if group == "patient" else None,
            renormalize=options.renormalize_after_implant)
        out.append((subject, base_idx))
    return out


def run_cell(grid: ExperimentGrid, cohort, cfg: CohortConfig,
             options: StudyOptions, cell: tuple[int, int, int]) -> dict[str, np.ndarray]:
    """All replicate p-values for one (b, m, r) grid cell, per method."""
    b_i, m_i, r_i = cell
    b, m, r = grid.b_values[b_i], grid.m_values[m_i], grid.r_values[r_i]
    params = SignalParams(b=b, m=m, s=grid.s)
    design = group_design(grid.n_patients, grid.n_controls)
    p_values = {method: np.empty(grid.n_replications) for method in grid.methods}
    need_vectors = any(meth != "geodesic" for meth in grid.methods)
    for rep in range(grid.n_replications):
        drawn = simulate_replicate(cohort, grid.n_patients, grid.n_controls,
                                   params, r, cfg, options, grid.seed, cell, rep)
        matrices = [s.matrix for s, _ in drawn]
        vectors = [vectorize_upper(mat) for mat in matrices] if need_vectors else None
        for method in grid.methods:
            responses = matrices if method == "geodesic" else vectors
            measure = DistanceMeasure(kind=method,
                                      correlation_formula=options.correlation_formula)
            d = dissimilarity_matrix(responses, measure)
            g = gower_center(d)
            perm_seed = derive_seed(grid.seed, _PERM_STREAM, *cell, rep,
                                    _METHOD_IDS[method])
            result = permutation_test(g, design, grid.n_permutations, perm_seed,
                                      variant=options.pseudo_f_variant,
                                      keep_permutation_stats=False)
            p_values[method][rep] = result.p_value
    return p_values


def estimate_power(p_values, alpha: float) -> float:
    """Proportion of p-values strictly below alpha."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        raise EmptyInputError("no p-values to estimate power from")
    return float(np.count_nonzero(p < alpha)) / p.size


class GridExecutionError(GeomdmrError):
    """One or more grid cells failed; completed rows are preserved."""

    def __init__(self, failures, rows):
        self.failures = failures
        self.rows = rows
        detail = "; ".join(f"cell b={b} m={m} r={r}: {msg}"
                           for (b, m, r), msg in failures)
        super().__init__(f"{len(failures)} grid cell(s) failed: {detail}")


def build_cohort(cfg: CohortConfig, seed: int) -> list[np.ndarray]:
    """The shared base cohort for a study, from file or synthesis."""
    if cfg.source == "file":
        return load_cohort(cfg.path)
    return generate_base_cohort(cfg, substream(seed, _COHORT_STREAM))


def _cell_task(args):
    grid, cohort, cfg, options, cell = args
    start = time.perf_counter()
    p_values = run_cell(grid, cohort, cfg, options, cell)
    return cell, p_values, time.perf_counter() - start


def run_grid(grid: ExperimentGrid, cfg: CohortConfig | None = None,
             options: StudyOptions | None = None, n_workers: int = 1,
             on_cell_done=None) -> list[PowerRow]:
    """Run every grid cell and assemble the power table.

    Cells execute independently (optionally across worker processes);
    results are keyed by cell index and assembled in grid order, so the
    table is identical at any worker count. If cells fail, the remaining
    cells still run and a :class:`GridExecutionError` carrying the
    completed rows is raised.
    """
    cfg = cfg if cfg is not None else CohortConfig()
    options = options if options is not None else StudyOptions()
    max_b = max(grid.b_values)
    cohort = build_cohort(cfg, grid.seed)
    dimension = cohort[0].shape[0]
    if max_b > dimension:
        raise ValidationError(
            f"largest signal block ({max_b}) exceeds matrix dimension ({dimension})")
    resolve_target(options, max_b, dimension)

    cells = [(b_i, m_i, r_i)
             for b_i in range(len(grid.b_values))
             for m_i in range(len(grid.m_values))
             for r_i in range(len(grid.r_values))]
    results: dict[tuple[int, int, int], dict[str, np.ndarray]] = {}
    errors: dict[tuple[int, int, int], str] = {}

    if n_workers == 1:
        for cell in cells:
            start = time.perf_counter()
            try:
                results[cell] = run_cell(grid, cohort, cfg, options, cell)
            except GeomdmrError as exc:
                errors[cell] = str(exc)
                continue
            if on_cell_done:
                on_cell_done(_cell_values(grid, cell), time.perf_counter() - start)
    else:
        payloads = [(grid, cohort, cfg, options, cell) for cell in cells]
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = {pool.submit(_cell_task, p): p[-1] for p in payloads}
            for fut in concurrent.futures.as_completed(futures):
                cell = futures[fut]
                try:
                    _, p_values, seconds = fut.result()
                    results[cell] = p_values
                except GeomdmrError as exc:
                    errors[cell] = str(exc)
                    continue
                if on_cell_done:
                    on_cell_done(_cell_values(grid, cell), seconds)

    rows = []
    for cell in cells:
        if cell not in results:
            continue
        b, m, r = _cell_values(grid, cell)
        for method in grid.methods:
            ps = results[cell][method]
            rows.append(PowerRow(
                b=b, m=m, r=r, method=method,
                power=estimate_power(ps, grid.alpha),
                n_replications=grid.n_replications,
                mean_p=float(np.mean(ps)),
                seed=grid.seed,
            ))
    if errors:
        failures = [(_cell_values(grid, cell), errors[cell])
                    for cell in cells if cell in errors]
        raise GridExecutionError(failures, rows)
    return rows


def _cell_values(grid: ExperimentGrid, cell) -> tuple[int, float, float]:
    b_i, m_i, r_i = cell
    return grid.b_values[b_i], grid.m_values[m_i], grid.r_values[r_i]


def format_power_table(rows) -> str:
    """Render power rows as the canonical CSV text (header included)."""
    lines = [POWER_TABLE_HEADER]
    for row in rows:
        lines.append(",".join([
            str(row.b),
            fmt_float(row.m),
            fmt_float(row.r),
            row.method,
            fmt_float(row.power),
            str(row.n_replications),
            fmt_float(row.mean_p),
            str(row.seed),
        ]))
    return "\n".join(lines) + "\n"


def write_power_table(rows, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_power_table(rows))
