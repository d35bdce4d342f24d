"""Run configuration for the power study.

A single JSON document drives `geomdmr power`. Missing keys fall back to
the defaults below (each applied default is reported so runs are
auditable); unknown keys are rejected outright.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .exceptions import ParseError, ValidationError
from .fcsim import CohortConfig
from .power import ExperimentGrid, StudyOptions

DEFAULT_CONFIG = {
    "seed": 0,
    "out_dir": "power_output",
    "threads": None,
    "grid": {
        "b_values": [2, 3, 4],
        "m_values": [-1.83, -0.55, 0.0, 0.55, 1.83],
        "r_values": [0.0, 0.25, 0.5, 0.75, 1.0],
        "s": 0.267,
        "n_patients": 20,
        "n_controls": 20,
        "n_replications": 200,
        "n_permutations": 199,
        "alpha": 0.05,
        "methods": ["geodesic", "euclidean", "correlation"],
    },
    "cohort": {
        "dimension": 10,
        "n_base": 40,
        "df_min": None,
        "df_max": 150,
        "source": "synthetic",
        "path": None,
        "n_blocks": 4,
        "within_block_correlation": 0.3,
        "template_df": 100,
    },
    "options": {
        "correlation_distance": "sqrt_two_minus_two_r",
        "pseudo_f_variant": "residual_total",
        "renormalize_after_implant": True,
        "rho_per": "subject",
        "target_indices": None,
    },
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out_dir: str
    threads: int | None
    grid: ExperimentGrid
    cohort: CohortConfig
    options: StudyOptions
    applied_defaults: tuple[str, ...]


def default_config_text() -> str:
    return json.dumps(DEFAULT_CONFIG, indent=2) + "\n"


def _merge_section(name: str, given: dict, defaults: dict, applied: list) -> dict:
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ValidationError(
            f"unknown config key(s) in {name}: {', '.join(unknown)}; "
            f"valid keys: {', '.join(sorted(defaults))}")
    merged = {}
    for key, default in defaults.items():
        if key in given:
            merged[key] = given[key]
        else:
            merged[key] = default
            applied.append(f"{name}.{key}" if name != "top-level" else key)
    return merged


def parse_config(doc: dict) -> RunConfig:
    """Validate a configuration document and build the typed objects."""
    if not isinstance(doc, dict):
        raise ValidationError("config root must be a JSON object")
    applied: list[str] = []
    sections = ("grid", "cohort", "options")
    scalars = {k: v for k, v in doc.items() if k not in sections}
    scalar_defaults = {k: v for k, v in DEFAULT_CONFIG.items() if k not in sections}
    top = _merge_section("top-level", scalars, scalar_defaults, applied)
    section_docs = {}
    for section in sections:
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ValidationError(f"config section {section!r} must be an object")
        section_docs[section] = _merge_section(section, given,
                                               DEFAULT_CONFIG[section], applied)
    grid_doc = section_docs["grid"]
    cohort_doc = section_docs["cohort"]
    options_doc = section_docs["options"]

    seed = top["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    # threads: null means machine parallelism, resolved by the CLI
    threads = top["threads"]
    if threads is not None and (isinstance(threads, bool)
                                or not isinstance(threads, int) or threads < 1):
        raise ValidationError(
            f"threads must be a positive integer or null, got {threads!r}")

    grid = ExperimentGrid(
        b_values=grid_doc["b_values"],
        m_values=grid_doc["m_values"],
        r_values=grid_doc["r_values"],
        s=grid_doc["s"],
        n_patients=grid_doc["n_patients"],
        n_controls=grid_doc["n_controls"],
        n_replications=grid_doc["n_replications"],
        n_permutations=grid_doc["n_permutations"],
        alpha=grid_doc["alpha"],
        methods=grid_doc["methods"],
        seed=seed,
    )
    cohort = CohortConfig(**cohort_doc)
    options = StudyOptions(
        correlation_formula=options_doc["correlation_distance"],
        pseudo_f_variant=options_doc["pseudo_f_variant"],
        renormalize_after_implant=bool(options_doc["renormalize_after_implant"]),
        rho_per=options_doc["rho_per"],
        target_indices=options_doc["target_indices"],
    )
    return RunConfig(seed=seed, out_dir=str(top["out_dir"]), threads=threads,
                     grid=grid, cohort=cohort, options=options,
                     applied_defaults=tuple(applied))


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(doc)
