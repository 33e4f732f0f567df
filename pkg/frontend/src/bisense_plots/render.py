"""Render a sweep CSV into a metric-vs-axis line figure."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

# figure kind -> (CSV column, y-axis label, log-y default)
KINDS = {
    "scnr": ("scnr_db", "SCNR [dB]", False),
    "rmse_aoa": ("rmse_aoa_deg", "AoA RMSE [deg]", True),
    "rmse_vel": ("rmse_vel_mps", "velocity RMSE [m/s]", True),
    "rmse_range": ("rmse_range_m", "range RMSE [m]", True),
}

AXIS_LABELS = {
    "P_Tx_dBm": "transmit power [dBm]",
    "M_s": "OFDM symbols per frame",
    "N_cl": "clutter rays",
    "sigma_AS": "angular spread [deg]",
    "alpha_RCS_t": "target RCS [m^2]",
    "delta_theta": "reference AoA offset [deg]",
}


class SchemaError(ValueError):
    """The CSV is missing a column the figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: Path
    kind: str
    group: str
    out_path: Path
    logy: Optional[bool] = None  # None: log for RMSE kinds, linear for SCNR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {sorted(KINDS)}")


def _format_group_value(value) -> str:
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return str(value)


def load_table(spec: FigureSpec) -> pd.DataFrame:
    df = pd.read_csv(spec.csv_path)
    if df.empty:
        raise ValueError(f"{spec.csv_path} holds no data rows")
    y_col = KINDS[spec.kind][0]
    for col in ("axis_name", "axis_value", spec.group, y_col):
        if col not in df.columns:
            raise SchemaError(f"column {col!r} missing from {spec.csv_path}")
    return df


def render(spec: FigureSpec) -> Path:
    """One curve per group value, x = axis_value, y = the kind's metric.

    Output format follows the file extension (.png or .svg). Returns the
    written path.
    """
    df = load_table(spec)
    y_col, y_label, log_default = KINDS[spec.kind]
    logy = log_default if spec.logy is None else spec.logy

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for value, sub in df.groupby(spec.group, sort=True):
        sub = sub.sort_values("axis_value")
        label = value if spec.group == "method" else f"{spec.group}={_format_group_value(value)}"
        ax.plot(sub["axis_value"], sub[y_col], marker="o", label=label)
    axis_name = str(df["axis_name"].iloc[0])
    ax.set_xlabel(AXIS_LABELS.get(axis_name, axis_name))
    ax.set_ylabel(y_label)
    if logy:
        ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return Path(spec.out_path)
