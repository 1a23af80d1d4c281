"""Shared plumbing for the figure scripts: summary-CSV access, panel layout,
and the plot-data sidecar.

The scripts consume the experiment harness's summary CSVs purely by path and
column name; values are carried into the sidecar as the exact strings read
from the input, so a sidecar never disagrees with its source data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

PARAMETERS = ("theta", "alpha_re", "alpha_im", "doppler")
PANEL_TITLES = {
    "theta": "angle",
    "alpha_re": "reflection (real)",
    "alpha_im": "reflection (imag)",
    "doppler": "Doppler",
}
FIGURE_IDS = ("fig2", "fig3", "fig4")

PNG_METADATA = {"Software": "figkit"}


class MissingColumnError(KeyError):
    """An expected summary-CSV column is absent."""

    def __init__(self, column: str, path):
        super().__init__(f"{path}: missing required column {column!r}")
        self.column = column


@dataclass
class FigureSpec:
    figure_id: str
    input_path: Path
    output_path: Path

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"figure_id must be one of {FIGURE_IDS}, got {self.figure_id!r}")
        self.input_path = Path(self.input_path)
        self.output_path = Path(self.output_path)

    @property
    def sidecar_path(self) -> Path:
        return self.output_path.with_suffix(self.output_path.suffix + ".data.txt")


def read_summary(path) -> list[dict[str, str]]:
    """Rows of a summary CSV with values kept as raw strings."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        rows = [dict(row) for row in reader]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def require_columns(rows: list[dict[str, str]], columns, path) -> None:
    present = rows[0].keys()
    for column in columns:
        if column not in present:
            raise MissingColumnError(column, path)


def new_panel_grid(title: str):
    fig, axes = plt.subplots(2, 2, figsize=(9, 7), constrained_layout=True)
    fig.suptitle(title)
    return fig, axes.ravel()


def save_figure(fig, spec: FigureSpec) -> None:
    spec.output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output_path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)


def write_sidecar(spec: FigureSpec, lines: list[str]) -> None:
    header = [f"figure {spec.figure_id}", f"source {spec.input_path.name}"]
    spec.sidecar_path.write_text("\n".join(header + lines) + "\n", encoding="utf-8")


def parse_sidecar(path) -> list[dict[str, str]]:
    """Data rows of a sidecar as dicts (panel, curve, and the point fields)."""
    records = []
    state: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key in ("figure", "source", "panel", "curve"):
            state[key] = rest
        elif key == "point":
            record = dict(state)
            for token in rest.split():
                name, _, value = token.partition("=")
                record[name] = value
            records.append(record)
        else:
            raise ValueError(f"{path}: unexpected sidecar line {line!r}")
    return records
