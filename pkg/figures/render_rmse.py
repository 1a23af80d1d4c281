"""Render estimation RMSE and root-CRB versus radar SNR (2x2 panels, one per
target parameter, log-scale error axis) from a harness estimation summary CSV.

Usage:
    python render_rmse.py --input estimation_summary.csv --output fig3.png
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

COLORS = {"rsma": "tab:blue", "sdma": "tab:orange", "noma": "tab:green"}


def render_rmse(spec: FigureSpec) -> None:
    rows = read_summary(spec.input_path)
    require_columns(
        rows, ["strategy", "snr_db", "parameter", "rmse_mean", "rcrb_mean"], spec.input_path
    )
    strategies = sorted({row["strategy"] for row in rows})

    fig, axes = new_panel_grid("target estimation error vs radar SNR")
    sidecar: list[str] = []
    for axis, parameter in zip(axes, PARAMETERS):
        sidecar.append(f"panel {parameter}")
        for strategy in strategies:
            ordered = sorted(
                (r for r in rows if r["strategy"] == strategy and r["parameter"] == parameter),
                key=lambda r: float(r["snr_db"]),
            )
            if not ordered:
                continue
            snrs = [row["snr_db"] for row in ordered]
            color = COLORS.get(strategy)
            for kind, style in (("rmse", "o-"), ("rcrb", "--")):
                values = [row[f"{kind}_mean"] for row in ordered]
                axis.semilogy(
                    [float(v) for v in snrs],
                    [float(v) for v in values],
                    style,
                    color=color,
                    label=f"{strategy} {kind}",
                )
                sidecar.append(f"curve {strategy}:{kind}")
                for x, y in zip(snrs, values):
                    sidecar.append(f"point x={x} y={y}")
        axis.set_xlabel("radar SNR (dB)")
        axis.set_ylabel(f"{PANEL_TITLES[parameter]} error")
        axis.grid(True, which="both", alpha=0.3)
        axis.legend(fontsize=8)
    save_figure(fig, spec)
    write_sidecar(spec, sidecar)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--figure-id", default="fig3", choices=("fig3",))
    parser.add_argument("--input", required=True, type=Path)
    parser.add_argument("--output", required=True, type=Path)
    args = parser.parse_args(argv)
    render_rmse(FigureSpec(args.figure_id, args.input, args.output))


if __name__ == "__main__":
    main()
