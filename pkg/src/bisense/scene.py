"""Ground-truth channel and space-time snapshot synthesis.

The received snapshot for subcarrier k stacks the M_s symbol-time blocks of
the N_R-element array output (symbol index slow, antenna index fast) after
the transmit QAM symbols have been divided out. A moving point target and a
static multi-ray clutter object (illuminated by the target's scattering,
hence sharing the target's AoD) contribute phase ramps across subcarriers
(delay), symbols (Doppler), and antennas (angle), each scaled by the radar
equation.

Angle conventions: geometry angles are measured from the Tx-Rx baseline
(see bisense.geometry); both ULAs are broadside-perpendicular to the
baseline, so steering vectors take 90 deg minus the baseline angle.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from bisense import geometry
from bisense.config import ScenarioConfig
from bisense.errors import ContractViolation
from bisense.geometry import SPEED_OF_LIGHT


def steering_vector(theta_deg: float, n: int) -> np.ndarray:
    """Half-wavelength ULA response, element i = e^{j pi i sin(theta)}."""
    return np.exp(1j * np.pi * np.arange(n) * math.sin(math.radians(theta_deg)))


def doppler_vector(f_d_hz: float, m_symbols: int, t_s: float) -> np.ndarray:
    """Slow-time phase progression across OFDM symbols."""
    return np.exp(1j * 2.0 * np.pi * t_s * np.arange(m_symbols) * f_d_hz)


def space_time_vector(f_d_hz: float, theta_deg: float, cfg: ScenarioConfig) -> np.ndarray:
    """Kronecker product d(f_D) x a_Rx(theta); symbol index slow, antenna fast."""
    if abs(f_d_hz) >= 0.5 / cfg.symbol_duration_s:
        raise ContractViolation(f"Doppler {f_d_hz} Hz aliases at T_s = {cfg.symbol_duration_s}")
    return np.kron(
        doppler_vector(f_d_hz, cfg.m_symbols, cfg.symbol_duration_s),
        steering_vector(theta_deg, cfg.n_rx),
    )


def baseline_to_steering(angle_from_baseline_deg: float) -> float:
    """Broadside-referenced steering angle of a baseline-referenced direction."""
    return 90.0 - angle_from_baseline_deg


def steering_to_baseline(steering_deg: float) -> float:
    return 90.0 - steering_deg


def draw_clutter_rays(cfg: ScenarioConfig, rng: np.random.Generator):
    """Per-ray angle offsets and Swerling-I complex reflectivities.

    Offsets are zero-mean Gaussian with std sigma_AS so ray AoAs center on
    the mean clutter AoA; reflectivities are circular complex Gaussian with
    E|g|^2 = rcs_clutter / n_rays.
    """
    n = cfg.n_clutter_rays
    offsets = rng.normal(0.0, cfg.angular_spread_deg, size=n)
    scale = math.sqrt(cfg.rcs_clutter_m2 / n / 2.0)
    reflectivities = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return offsets, reflectivities


def path_amplitude(
    kind: str,
    legs: Sequence[float],
    cfg: ScenarioConfig,
    ray_rcs_m2: Optional[float] = None,
) -> float:
    """Received field amplitude (sqrt of received power) for one path.

    "target": two legs (d_tx, d_rx), single-scatterer radar equation.
    "clutter_ray": clutter legs; the effective RCS is rcs_target * ray_rcs.
    With the default two-hop model the ray power plugs (d_tx, d_c_rx) into
    the same radar equation; the three-hop model chains an extra spreading
    loss through the target->clutter leg.
    """
    if any(d < geometry.MIN_SEGMENT_M for d in legs):
        raise ContractViolation("path leg below 0.1 m")
    lam = cfg.wavelength_m
    common = cfg.p_tx_watts * cfg.g_tx * cfg.g_rx * lam**2
    if kind == "target":
        d_tx, d_rx = legs
        power = common * cfg.rcs_target_m2 / ((4.0 * np.pi) ** 3 * d_tx**2 * d_rx**2)
    elif kind == "clutter_ray":
        if ray_rcs_m2 is None:
            raise ContractViolation("clutter ray amplitude needs the ray RCS")
        rcs = cfg.rcs_target_m2 * ray_rcs_m2
        d_tx, d_tc, d_c_rx = legs
        if cfg.clutter_path_model == "three_hop":
            power = common * rcs / ((4.0 * np.pi) ** 4 * d_tx**2 * d_tc**2 * d_c_rx**2)
        else:
            power = common * rcs / ((4.0 * np.pi) ** 3 * d_tx**2 * d_c_rx**2)
    else:
        raise ContractViolation(f"unknown path kind {kind!r}")
    return math.sqrt(power)


@dataclass(frozen=True)
class PointScatterer:
    """Extra point scatterer (used for perturbed reference captures)."""

    theta_r_deg: float  # baseline-referenced AoA
    theta_t_deg: float  # baseline-referenced AoD
    v_mps: float
    tau_s: float
    d_tx_m: float
    d_rx_m: float
    rcs_m2: float


@dataclass(frozen=True)
class GroundTruth:
    """Scene labels: target/clutter geometry, kinematics, and clutter draws."""

    theta_t_deg: float
    theta_r_deg: float
    v_t_mps: float
    d_bis_m: float
    d_tx_m: float
    d_rx_m: float
    tau_t_s: float
    tau_c_s: float
    f_dt_hz: float
    theta_c_deg: float
    d_tc_m: float
    d_c_rx_m: float
    clutter_offsets_deg: np.ndarray
    clutter_reflectivities: np.ndarray
    f_dc_hz: float = 0.0


def make_truth(
    cfg: ScenarioConfig,
    theta_r_deg: float,
    v_t_mps: float,
    d_bis_m: float,
    rng: np.random.Generator,
) -> GroundTruth:
    """Solve the scene geometry and draw the clutter realization."""
    layout = geometry.NodeLayout(p_rx=(cfg.rx_x_m, cfg.rx_y_m))
    tri = geometry.invert_from_estimates(theta_r_deg, d_bis_m, layout)
    p_clutter = geometry.place_clutter(cfg.theta_clutter_deg, cfg.d_clutter_rx_m, layout)
    d_tx, d_tc, d_c_rx, tau_c, theta_c = geometry.clutter_path(tri.p_target, p_clutter, layout)
    offsets, reflectivities = draw_clutter_rays(cfg, rng)
    return GroundTruth(
        theta_t_deg=tri.theta_t,
        theta_r_deg=tri.theta_r,
        v_t_mps=v_t_mps,
        d_bis_m=tri.d_bis,
        d_tx_m=tri.d_tx,
        d_rx_m=tri.d_rx,
        tau_t_s=tri.d_bis / SPEED_OF_LIGHT,
        tau_c_s=tau_c,
        f_dt_hz=v_t_mps / cfg.wavelength_m,
        theta_c_deg=theta_c,
        d_tc_m=d_tc,
        d_c_rx_m=d_c_rx,
        clutter_offsets_deg=np.asarray(offsets, dtype=float),
        clutter_reflectivities=np.asarray(reflectivities, dtype=complex),
    )


@dataclass
class SpaceTimeSnapshotSet:
    """K stacked snapshots (shape (K, M_s * N_R)) with optional components."""

    snapshots: np.ndarray
    target: Optional[np.ndarray] = None
    clutter: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None

    @property
    def k_subcarriers(self) -> int:
        return self.snapshots.shape[0]

    @property
    def dim(self) -> int:
        return self.snapshots.shape[1]


def _qam_symbols(order: int, shape, rng: np.random.Generator) -> np.ndarray:
    """Unit-average-energy square-QAM symbols."""
    side = int(round(math.sqrt(order)))
    if side * side != order:
        raise ContractViolation(f"QAM order {order} is not a square constellation")
    levels = 2 * rng.integers(0, side, size=(2,) + tuple(shape)) - (side - 1)
    sym = levels[0] + 1j * levels[1]
    energy = 2.0 * (side**2 - 1) / 3.0
    return sym / math.sqrt(energy)


def _path_block(
    amp: complex,
    tau_s: float,
    f_d_hz: float,
    rx_steer_deg: float,
    aod_steer_deg: float,
    beam_steer_deg: float,
    cfg: ScenarioConfig,
) -> np.ndarray:
    """(K, M_s*N_R) contribution of one propagation path, symbols divided out."""
    k = np.arange(cfg.k_subcarriers)
    delay_ramp = np.exp(-2j * np.pi * k * cfg.delta_f_hz * tau_s)
    psi = space_time_vector(f_d_hz, rx_steer_deg, cfg)
    tx_gain = steering_vector(aod_steer_deg, cfg.n_tx).conj() @ steering_vector(
        beam_steer_deg, cfg.n_tx
    )
    coef = amp * math.sqrt(cfg.p_tx_watts * cfg.g_tx / cfg.n_tx) * tx_gain
    return coef * delay_ramp[:, None] * psi[None, :]


def synthesize(
    cfg: ScenarioConfig,
    truth: GroundTruth,
    rng: np.random.Generator,
    keep_components: bool = True,
    include_target: bool = True,
    include_clutter: bool = True,
    extra_scatterers: Sequence[PointScatterer] = (),
    noise_scale: float = 1.0,
) -> SpaceTimeSnapshotSet:
    """Synthesize the symbol-removed space-time snapshots for one frame.

    The transmit beam is steered at the target AoD. Path amplitudes carry
    the radar equation; the transmit power and gain enter once, through the
    beamformer, so the per-element received power of the target path equals
    the radar equation times the N_T transmit array gain.
    """
    beam_steer = baseline_to_steering(truth.theta_t_deg)
    # path_amplitude includes sqrt(P_Tx G_Tx); the beamformer supplies that
    # factor, so divide it back out of the channel gain.
    tx_norm = math.sqrt(cfg.p_tx_watts * cfg.g_tx)

    target = np.zeros((cfg.k_subcarriers, cfg.space_time_dim), dtype=complex)
    if include_target:
        amp_t = path_amplitude("target", (truth.d_tx_m, truth.d_rx_m), cfg) / tx_norm
        target = _path_block(
            amp_t,
            truth.tau_t_s,
            truth.f_dt_hz,
            baseline_to_steering(truth.theta_r_deg),
            beam_steer,
            beam_steer,
            cfg,
        )

    clutter = np.zeros_like(target)
    if include_clutter:
        legs = (truth.d_tx_m, truth.d_tc_m, truth.d_c_rx_m)
        ray_norm = math.sqrt(1.0 / cfg.n_clutter_rays)
        for offset, g in zip(truth.clutter_offsets_deg, truth.clutter_reflectivities):
            amp = path_amplitude("clutter_ray", legs, cfg, ray_rcs_m2=abs(g) ** 2) / tx_norm
            phase = g / abs(g) if abs(g) > 0 else 1.0
            clutter += _path_block(
                ray_norm * amp * phase,
                truth.tau_c_s,
                truth.f_dc_hz,
                baseline_to_steering(truth.theta_c_deg + offset),
                beam_steer,
                beam_steer,
                cfg,
            )

    for sc in extra_scatterers:
        sc_cfg = cfg.with_(rcs_target_m2=sc.rcs_m2)
        amp = path_amplitude("target", (sc.d_tx_m, sc.d_rx_m), sc_cfg) / tx_norm
        target = target + _path_block(
            amp,
            sc.tau_s,
            sc.v_mps / cfg.wavelength_m,
            baseline_to_steering(sc.theta_r_deg),
            baseline_to_steering(sc.theta_t_deg),
            beam_steer,
            cfg,
        )

    shape = (cfg.k_subcarriers, cfg.m_symbols, cfg.n_rx)
    sigma = math.sqrt(cfg.noise_power_watts / 2.0) * noise_scale
    noise = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    symbols = _qam_symbols(cfg.qam_order, (cfg.k_subcarriers, cfg.m_symbols), rng)
    # Received signal carries the symbols; dividing them out restores the
    # deterministic paths and rescales the noise by 1/x (a pure rotation for
    # the default unit-modulus 4-QAM).
    noise_hat = (noise / symbols[:, :, None]).reshape(cfg.k_subcarriers, -1)

    snapshots = target + clutter + noise_hat
    return SpaceTimeSnapshotSet(
        snapshots=snapshots,
        target=target if keep_components else None,
        clutter=clutter if keep_components else None,
        noise=noise_hat if keep_components else None,
    )
