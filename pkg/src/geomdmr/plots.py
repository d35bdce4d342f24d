"""Power-curve figure rendering.

One panel per (signal size, signal level) pair: estimated power against
the blend fraction, one polyline per method, written as self-contained
SVG next to the delimited table.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .power import METHODS

_STYLE = {
    "geodesic": dict(color="tab:blue", marker="o"),
    "euclidean": dict(color="tab:orange", marker="s"),
    "correlation": dict(color="tab:green", marker="^"),
}


def panel_filename(b, m) -> str:
    return f"power_b{b:g}_m{m:g}.svg"


def render_power_panels(rows, out_dir) -> list[str]:
    """Write one power-vs-blend SVG per (b, m) pair; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    panels: dict[tuple, dict[str, list]] = {}
    for row in rows:
        series = panels.setdefault((row.b, row.m), {})
        series.setdefault(row.method, []).append((row.r, row.power))

    # stable ids inside the SVG; creation date suppressed at savefig time
    plt.rcParams["svg.hashsalt"] = "geomdmr"
    paths = []
    for (b, m) in sorted(panels):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        for method in METHODS:
            if method not in panels[(b, m)]:
                continue
            pts = sorted(panels[(b, m)][method])
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    label=method, **_STYLE[method])
        ax.set_xlabel("signal blend fraction r")
        ax.set_ylabel("estimated power")
        ax.set_ylim(-0.02, 1.02)
        ax.set_title(f"block size b={b}, signal mean m={m:g}")
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, panel_filename(b, m))
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def emit_power_outputs(rows, out_dir) -> tuple[str, list[str]]:
    """Write power_table.csv and the per-panel SVGs; returns the paths."""
    from .exceptions import EmptyInputError
    from .power import write_power_table

    if not rows:
        raise EmptyInputError("empty power table")
    os.makedirs(out_dir, exist_ok=True)
    table_path = os.path.join(out_dir, "power_table.csv")
    write_power_table(rows, table_path)
    return table_path, render_power_panels(rows, out_dir)
