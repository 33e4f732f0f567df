"""Background-subtraction baseline.

Captures a reference frame containing only the static background (plus
fresh receiver noise), optionally polluted by an extra point scatterer
present during acquisition, and subtracts it from the measurement frame
before running the shared estimation pipeline. The clutter reflectivities
are identical between the two frames (static background); only the noise
is redrawn.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from bisense import geometry, scene
from bisense.config import ScenarioConfig
from bisense.errors import ContractViolation
from bisense.geometry import SPEED_OF_LIGHT
from bisense.scene import GroundTruth, PointScatterer, SpaceTimeSnapshotSet

GHOST_SPEED_MPS = 5.0


@dataclass(frozen=True)
class ReferenceCapture:
    mode: str  # "ideal" or "perturbed"
    frame: SpaceTimeSnapshotSet
    ghost: Optional[PointScatterer] = None


def _ghost_scatterer(cfg: ScenarioConfig, truth: GroundTruth, delta_theta_deg: float) -> PointScatterer:
    """Point scatterer offset in AoA from the target, at the target's range."""
    layout = geometry.NodeLayout(p_rx=(cfg.rx_x_m, cfg.rx_y_m))
    tri = geometry.invert_from_estimates(
        truth.theta_r_deg + delta_theta_deg, truth.d_bis_m, layout
    )
    return PointScatterer(
        theta_r_deg=tri.theta_r,
        theta_t_deg=tri.theta_t,
        v_mps=GHOST_SPEED_MPS,
        tau_s=tri.d_bis / SPEED_OF_LIGHT,
        d_tx_m=tri.d_tx,
        d_rx_m=tri.d_rx,
        rcs_m2=cfg.rcs_target_m2,
    )


def capture_reference(
    cfg: ScenarioConfig,
    truth: GroundTruth,
    mode: str,
    rng: np.random.Generator,
    delta_theta_deg: float = 5.0,
    noise_scale: float = 1.0,
) -> ReferenceCapture:
    """Reference frame: clutter plus fresh noise, plus a ghost when perturbed."""
    if mode not in ("ideal", "perturbed"):
        raise ContractViolation(f"unknown reference mode {mode!r}")
    ghost = _ghost_scatterer(cfg, truth, delta_theta_deg) if mode == "perturbed" else None
    frame = scene.synthesize(
        cfg,
        truth,
        rng,
        include_target=False,
        extra_scatterers=(ghost,) if ghost else (),
        noise_scale=noise_scale,
    )
    return ReferenceCapture(mode=mode, frame=frame, ghost=ghost)


def subtract(measurement: SpaceTimeSnapshotSet, ref: ReferenceCapture) -> SpaceTimeSnapshotSet:
    """Measurement minus reference, with components tracked for SCNR.

    The ghost (negated) and any clutter mismatch land in the clutter
    component; the noise component carries both frames' noise.
    """
    if measurement.snapshots.shape != ref.frame.snapshots.shape:
        raise ContractViolation("measurement and reference shapes differ")
    residual = measurement.snapshots - ref.frame.snapshots
    target = clutter = noise = None
    if measurement.target is not None and ref.frame.target is not None:
        target = measurement.target
        clutter = measurement.clutter - ref.frame.clutter - ref.frame.target
        noise = measurement.noise - ref.frame.noise
    return SpaceTimeSnapshotSet(snapshots=residual, target=target, clutter=clutter, noise=noise)
