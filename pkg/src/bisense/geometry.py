"""Bistatic triangle geometry.

The transmitter sits at the origin and the receiver on the positive x axis,
so the Tx-Rx baseline is the x axis. All angles are measured from the
baseline toward the target: `theta_t` at the Tx (between the +x direction
and the Tx->target segment) and `theta_r` at the Rx (between the -x
direction and the Rx->target segment). Array broadside is perpendicular to
the baseline, so the steering-vector angle of a direction is
90 deg - (angle from baseline); that conversion lives in the scene module.
"""

import math
from dataclasses import dataclass

import numpy as np

from bisense.errors import DegenerateGeometry, InfeasibleEllipse

SPEED_OF_LIGHT = 299_792_458.0

MIN_SEGMENT_M = 0.1


@dataclass(frozen=True)
class NodeLayout:
    """Tx (origin) and Rx positions in meters."""

    p_rx: tuple[float, float]
    p_tx: tuple[float, float] = (0.0, 0.0)

    @property
    def baseline(self) -> float:
        return math.hypot(self.p_rx[0] - self.p_tx[0], self.p_rx[1] - self.p_tx[1])


@dataclass(frozen=True)
class BistaticSolution:
    """Solved bistatic triangle. Angles in degrees, distances in meters."""

    d_tx: float
    d_rx: float
    d_bis: float
    theta_t: float
    theta_r: float
    beta_t: float
    p_target: tuple[float, float]


def solve_from_position(p_target: tuple[float, float], layout: NodeLayout) -> BistaticSolution:
    """Solve the triangle from a placed target position."""
    tx = np.asarray(layout.p_tx, dtype=float)
    rx = np.asarray(layout.p_rx, dtype=float)
    tgt = np.asarray(p_target, dtype=float)
    to_tgt_from_tx = tgt - tx
    to_tgt_from_rx = tgt - rx
    d_tx = float(np.linalg.norm(to_tgt_from_tx))
    d_rx = float(np.linalg.norm(to_tgt_from_rx))
    if d_tx < MIN_SEGMENT_M or d_rx < MIN_SEGMENT_M:
        raise DegenerateGeometry("target collocated with Tx or Rx")
    baseline_dir = (rx - tx) / layout.baseline
    theta_t = math.degrees(math.acos(np.clip(to_tgt_from_tx @ baseline_dir / d_tx, -1.0, 1.0)))
    theta_r = math.degrees(math.acos(np.clip(to_tgt_from_rx @ -baseline_dir / d_rx, -1.0, 1.0)))
    beta_t = 180.0 - theta_t - theta_r
    if beta_t <= 0.0:
        raise DegenerateGeometry(f"target on the baseline (beta_t = {beta_t:.3g} deg)")
    return BistaticSolution(
        d_tx=d_tx,
        d_rx=d_rx,
        d_bis=d_tx + d_rx,
        theta_t=theta_t,
        theta_r=theta_r,
        beta_t=beta_t,
        p_target=(float(tgt[0]), float(tgt[1])),
    )


def invert_from_estimates(theta_r: float, d_bis: float, layout: NodeLayout) -> BistaticSolution:
    """Recover the triangle from an AoA / bistatic-range pair.

    d_rx follows from the ellipse relation
    d_rx = (d_bis^2 - L^2) / (2 (d_bis - L cos(theta_r))).
    """
    baseline = layout.baseline
    if d_bis <= baseline:
        raise InfeasibleEllipse(f"d_bis = {d_bis} m must exceed the baseline {baseline} m")
    theta = math.radians(theta_r)
    d_rx = (d_bis**2 - baseline**2) / (2.0 * (d_bis - baseline * math.cos(theta)))
    # Target position: from the Rx, the target direction makes theta_r with
    # the baseline direction pointing back at the Tx.
    tx = np.asarray(layout.p_tx, dtype=float)
    rx = np.asarray(layout.p_rx, dtype=float)
    back = (tx - rx) / baseline
    perp = np.array([-back[1], back[0]])
    p_target = rx + d_rx * (math.cos(theta) * back + math.sin(theta) * perp)
    return solve_from_position((float(p_target[0]), float(p_target[1])), layout)


def clutter_path(
    p_target: tuple[float, float],
    p_clutter: tuple[float, float],
    layout: NodeLayout,
) -> tuple[float, float, float, float, float]:
    """Tx -> target -> clutter -> Rx path legs, total delay, and clutter AoA.

    Returns (d_tx, d_tc, d_c_rx, tau_c, theta_c) with theta_c measured at
    the Rx in the same baseline convention as theta_r.
    """
    tx = np.asarray(layout.p_tx, dtype=float)
    rx = np.asarray(layout.p_rx, dtype=float)
    tgt = np.asarray(p_target, dtype=float)
    clu = np.asarray(p_clutter, dtype=float)
    d_tx = float(np.linalg.norm(tgt - tx))
    d_tc = float(np.linalg.norm(clu - tgt))
    d_c_rx = float(np.linalg.norm(clu - rx))
    if min(d_tx, d_tc, d_c_rx) < MIN_SEGMENT_M:
        raise DegenerateGeometry("degenerate Tx/target/clutter/Rx collocation")
    back = (tx - rx) / layout.baseline
    to_clu = (clu - rx) / d_c_rx
    theta_c = math.degrees(math.acos(np.clip(to_clu @ back, -1.0, 1.0)))
    tau_c = (d_tx + d_tc + d_c_rx) / SPEED_OF_LIGHT
    return d_tx, d_tc, d_c_rx, tau_c, theta_c


def place_clutter(theta_c_deg: float, d_c_rx: float, layout: NodeLayout) -> tuple[float, float]:
    """Position of a clutter point seen from the Rx at a baseline-referenced angle."""
    tx = np.asarray(layout.p_tx, dtype=float)
    rx = np.asarray(layout.p_rx, dtype=float)
    back = (tx - rx) / layout.baseline
    perp = np.array([-back[1], back[0]])
    theta = math.radians(theta_c_deg)
    p = rx + d_c_rx * (math.cos(theta) * back + math.sin(theta) * perp)
    return float(p[0]), float(p[1])
