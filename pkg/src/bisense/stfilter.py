"""MVDR space-time receive filter, SCNR evaluation, and range estimation."""

import math
from dataclasses import dataclass

import numpy as np

from bisense import numerics
from bisense.config import ScenarioConfig
from bisense.errors import ContractViolation
from bisense.geometry import SPEED_OF_LIGHT
from bisense.scene import SpaceTimeSnapshotSet


def default_diagonal_load(r_tilde: np.ndarray) -> float:
    """Scale-invariant load for the rank-deficient projected covariance."""
    return 1e-6 * float(np.trace(r_tilde).real) / r_tilde.shape[0]


@dataclass(frozen=True)
class ReceiveFilter:
    """MVDR weights with unity gain on the target space-time signature."""

    u: np.ndarray
    psi_t: np.ndarray
    load: float


@dataclass(frozen=True)
class RangeProfile:
    """Per-bin power after the range IFFT."""

    p: np.ndarray
    bin_width_m: float

    @property
    def peak_bin(self) -> int:
        return int(np.argmax(self.p))


def mvdr_weights(r_tilde: np.ndarray, psi_t: np.ndarray, load: float) -> ReceiveFilter:
    """u = (R + load I)^{-1} psi / (psi^H (R + load I)^{-1} psi)."""
    psi_t = np.asarray(psi_t, dtype=complex)
    if not np.any(psi_t):
        raise ContractViolation("target signature must be nonzero")
    inv = numerics.regularized_inverse(r_tilde, load)
    num = inv @ psi_t
    u = num / (psi_t.conj() @ num)
    return ReceiveFilter(u=u, psi_t=psi_t, load=load)


def scnr_terms(filt: ReceiveFilter, components: SpaceTimeSnapshotSet) -> tuple[float, float]:
    """Filtered target energy and clutter-plus-noise energy, summed over k."""
    if components.target is None or components.clutter is None or components.noise is None:
        raise ContractViolation("SCNR needs the retained snapshot components")
    u = filt.u
    num = float(np.sum(np.abs(components.target @ u.conj()) ** 2))
    den = float(np.sum(np.abs((components.clutter + components.noise) @ u.conj()) ** 2))
    return num, den


def scnr_db(filt: ReceiveFilter, components: SpaceTimeSnapshotSet) -> float:
    """Single-trial SCNR in dB; +inf sentinel when clutter and noise vanish."""
    num, den = scnr_terms(filt, components)
    if den == 0.0:
        return math.inf
    return 10.0 * math.log10(num / den)


def range_profile(filt: ReceiveFilter, snapshots: np.ndarray, cfg: ScenarioConfig) -> RangeProfile:
    """Zero-padded IFFT of the filtered subcarrier sequence, power per bin."""
    s = snapshots @ filt.u.conj()
    out = numerics.ifft_padded(s, cfg.n_fft)
    bin_width = SPEED_OF_LIGHT / (cfg.delta_f_hz * cfg.n_fft)
    return RangeProfile(p=np.abs(out) ** 2, bin_width_m=bin_width)


def estimate_range(profile: RangeProfile) -> float:
    """Bistatic range of the strongest bin (no interpolation; raw bin center)."""
    return profile.peak_bin * profile.bin_width_m
