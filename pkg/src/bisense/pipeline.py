"""Glue from snapshots to a full set of target estimates.

Runs the subspace estimator, rebuilds the target signature from the refined
angle, projects the covariance, applies the MVDR filter, and reads range
off the filtered range profile.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from bisense import estimator, stfilter
from bisense.config import ScenarioConfig
from bisense.scene import SpaceTimeSnapshotSet, space_time_vector, steering_to_baseline


@dataclass
class TrialEstimates:
    """Per-trial outputs of one method. Angles in the baseline convention."""

    detected: bool
    theta_r_deg: Optional[float] = None
    theta_r_initial_deg: Optional[float] = None
    v_mps: Optional[float] = None
    d_bis_m: Optional[float] = None
    scnr_num: Optional[float] = None
    scnr_den: Optional[float] = None
    n_pairs: int = 0


def run_pipeline(
    snapshots: SpaceTimeSnapshotSet,
    cfg: ScenarioConfig,
    order: Optional[int] = None,
    min_order: int = 1,
) -> TrialEstimates:
    """Estimate angle, velocity, and range; report SCNR when components exist."""
    est, decomp = estimator.estimate(snapshots.snapshots, cfg, order=order, min_order=min_order)
    if est.target_index is None:
        return TrialEstimates(detected=False, n_pairs=len(est.pairs))
    theta_initial, v_hat = est.pairs[est.target_index]
    theta_steer = est.theta_refined_deg if est.theta_refined_deg is not None else theta_initial

    psi_t = space_time_vector(v_hat / cfg.wavelength_m, theta_steer, cfg)
    r_tilde = estimator.project_out_target(decomp.r, psi_t)
    filt = stfilter.mvdr_weights(r_tilde, psi_t, stfilter.default_diagonal_load(r_tilde))

    scnr_num = scnr_den = None
    if snapshots.target is not None:
        scnr_num, scnr_den = stfilter.scnr_terms(filt, snapshots)

    profile = stfilter.range_profile(filt, snapshots.snapshots, cfg)
    return TrialEstimates(
        detected=True,
        theta_r_deg=steering_to_baseline(theta_steer),
        theta_r_initial_deg=steering_to_baseline(theta_initial),
        v_mps=v_hat,
        d_bis_m=stfilter.estimate_range(profile),
        scnr_num=scnr_num,
        scnr_den=scnr_den,
        n_pairs=len(est.pairs),
    )
