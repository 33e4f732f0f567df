"""Line-figure rendering for bisense sweep CSV tables.

Consumes only the CSV schema written by `bisense sweep` (axis_name,
axis_value, method, scnr_db, rmse_aoa_deg, rmse_vel_mps, rmse_range_m,
detection_rate, trials) and renders one curve per group value.
"""

from bisense_plots.render import FigureSpec, SchemaError, render

__all__ = ["FigureSpec", "SchemaError", "render"]

__version__ = "0.1.0"
