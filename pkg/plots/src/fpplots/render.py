"""Per-state value-trajectory figures from experiment run artifacts.

Consumes only the public output files of the simulation harness: the
per-checkpoint CSV (columns k, s, v1, v2, vbar, ...) and the equilibrium
JSON with per-state values.  Each state gets one panel plotting both
players' value estimates and their sum against the stage counter, with
dotted horizontal lines at plus and minus the state's equilibrium value.

Output bytes are deterministic for identical inputs: fixed figure
geometry and no timestamp metadata in the image payload.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

REQUIRED_COLUMNS = ("k", "s", "v1", "v2", "vbar")

# (column, color, legend label); colors follow the red/blue/green
# convention for player 1, player 2, and the sum.
SERIES = (
    ("v1", "red", "player 1 value estimate"),
    ("v2", "blue", "player 2 value estimate"),
    ("vbar", "green", "summed estimates"),
)

_PANEL_WIDTH = 4.0
_PANEL_HEIGHT = 3.2

# Timestamp-free metadata per image format, so reruns produce identical bytes.
_SAVE_METADATA = {
    ".png": {"Software": None},
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None},
}


class SchemaError(ValueError):
    """An input file does not match the expected run-artifact schema."""


@dataclass(frozen=True)
class PlotSpec:
    """Inputs and layout of one figure.

    csv_paths may be a single path or a sequence; every CSV contributes
    one set of series per panel.  states selects a subset of panels and
    must name states the equilibrium file knows about; None means every
    state appearing in the CSVs.
    """

    csv_paths: object
    equilibrium_path: object
    out_path: object
    states: tuple[int, ...] | None = None
    y_limits: tuple[float, float] | None = None


def _as_paths(value) -> tuple[Path, ...]:
    if isinstance(value, (str, Path)):
        return (Path(value),)
    return tuple(Path(p) for p in value)


def _read_rows(path: Path) -> dict[int, list[tuple[int, float, float, float]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in REQUIRED_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}")
        by_state: dict[int, list] = defaultdict(list)
        for row in reader:
            by_state[int(row["s"])].append(
                (int(row["k"]), float(row["v1"]), float(row["v2"]), float(row["vbar"]))
            )
    for rows in by_state.values():
        rows.sort(key=lambda r: r[0])
    return dict(by_state)


def _read_values(path: Path) -> list[float]:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "values" not in data:
        raise SchemaError(f"{path}: missing field 'values'")
    return [float(v) for v in data["values"][0]]


def build_figure(spec: PlotSpec):
    """Assemble the figure without writing it; render_trajectories saves it."""
    csv_paths = _as_paths(spec.csv_paths)
    values = _read_values(Path(spec.equilibrium_path))
    tables = [_read_rows(p) for p in csv_paths]

    seen = sorted(set().union(*(t.keys() for t in tables))) if tables else []
    if spec.states is None:
        states = seen
    else:
        states = [int(s) for s in spec.states]
        for s in states:
            if not 0 <= s < len(values):
                raise ValueError(f"state {s} not in the game ({len(values)} states)")

    n_panels = max(len(states), 1)
    fig, axes = plt.subplots(
        1,
        n_panels,
        figsize=(_PANEL_WIDTH * n_panels, _PANEL_HEIGHT),
        sharey=True,
        squeeze=False,
    )
    for ax, s in zip(axes[0], states):
        val = values[s]
        for level in (val, -val):
            ax.axhline(level, color="0.4", linestyle=":", linewidth=1.0)
        for table in tables:
            rows = table.get(s, [])
            ks = [r[0] for r in rows]
            for idx, (column, color, label) in enumerate(SERIES, start=1):
                ax.plot(ks, [r[idx] for r in rows], color=color, linewidth=1.0, label=label)
        ax.set_title(f"state {s}")
        ax.set_xlabel("stage")
        if spec.y_limits is not None:
            ax.set_ylim(*spec.y_limits)
    if states:
        axes[0][0].set_ylabel("value")
        handles, labels = axes[0][0].get_legend_handles_labels()
        # one legend entry per series even with several CSVs
        axes[0][0].legend(handles[: len(SERIES)], labels[: len(SERIES)], fontsize=8)
    fig.tight_layout()
    return fig


def render_trajectories(spec: PlotSpec) -> Path:
    """Write the figure described by spec; returns the output path."""
    out = Path(spec.out_path)
    fig = build_figure(spec)
    try:
        metadata = _SAVE_METADATA.get(out.suffix.lower(), {})
        fig.savefig(out, metadata=metadata)
    finally:
        plt.close(fig)
    return out
