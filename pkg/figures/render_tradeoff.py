"""Render a fairness-rate versus root-CRB trade-off figure (2x2 panels, one
panel per target parameter, one curve per strategy, points ordered by the
trade-off weight) from a harness trade-off summary CSV.

Usage:
    python render_tradeoff.py --figure-id fig2 --input tradeoff_summary.csv \
        --output fig2.png
"""

from __future__ import annotations

import argparse
from pathlib import Path

from figkit_common import (
    PANEL_TITLES,
    PARAMETERS,
    FigureSpec,
    new_panel_grid,
    read_summary,
    require_columns,
    save_figure,
    write_sidecar,
)

STYLE = {"rsma": "o-", "sdma": "s--", "noma": "d:"}


def render_tradeoff(spec: FigureSpec) -> None:
    rows = read_summary(spec.input_path)
    needed = ["strategy", "lam", "mfr_mean"] + [f"rcrb_{p}_mean" for p in PARAMETERS]
    require_columns(rows, needed, spec.input_path)

    strategies = sorted({row["strategy"] for row in rows})
    by_strategy = {
        s: sorted((r for r in rows if r["strategy"] == s), key=lambda r: float(r["lam"]))
        for s in strategies
    }

    fig, axes = new_panel_grid("min fairness rate vs root-CRB")
    sidecar: list[str] = []
    for axis, parameter in zip(axes, PARAMETERS):
        column = f"rcrb_{parameter}_mean"
        sidecar.append(f"panel {parameter}")
        for strategy in strategies:
            ordered = by_strategy[strategy]
            xs = [row[column] for row in ordered]
            ys = [row["mfr_mean"] for row in ordered]
            style = STYLE.get(strategy, "x-")
            axis.plot([float(v) for v in xs], [float(v) for v in ys], style, label=strategy)
            sidecar.append(f"curve {strategy}")
            for row, x, y in zip(ordered, xs, ys):
                sidecar.append(f"point lam={row['lam']} x={x} y={y}")
        axis.set_xlabel(f"root-CRB ({PANEL_TITLES[parameter]})")
        axis.set_ylabel("min fairness rate (bps/Hz)")
        axis.grid(True, alpha=0.3)
        axis.legend()
    save_figure(fig, spec)
    write_sidecar(spec, sidecar)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--figure-id", default="fig2", choices=("fig2", "fig4"))
    parser.add_argument("--input", required=True, type=Path)
    parser.add_argument("--output", required=True, type=Path)
    args = parser.parse_args(argv)
    render_tradeoff(FigureSpec(args.figure_id, args.input, args.output))


if __name__ == "__main__":
    main()
