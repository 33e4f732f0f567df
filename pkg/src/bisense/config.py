"""Scenario parameterization and config-file loading.

Defaults reproduce the evaluation setup: 28 GHz carrier, 120 kHz subcarrier
spacing, 66 PRBs (792 active subcarriers), 1024-point range IFFT, 12 symbols,
12x12 element ULAs, -80 dBm noise power, and a 6-ray clutter object of 2 m^2
aggregate RCS at 10 deg with 3 deg angular spread.
"""

import math
from dataclasses import dataclass, fields, replace

import yaml

from bisense.geometry import SPEED_OF_LIGHT

# 5G NR FR2 120 kHz numerology: 2048-sample symbol plus 144-sample normal CP.
_SYMBOL_SAMPLES = 2048
_CP_SAMPLES = 144


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    f_c_hz: float = 28e9
    delta_f_hz: float = 120e3
    k_subcarriers: int = 792
    n_fft: int = 1024
    m_symbols: int = 12
    n_tx: int = 12
    n_rx: int = 12
    p_tx_dbm: float = 20.0
    g_tx: float = 1.0
    g_rx: float = 1.0
    noise_power_dbm: float = -80.0
    rcs_target_m2: float = 1.0
    rcs_clutter_m2: float = 2.0
    n_clutter_rays: int = 6
    angular_spread_deg: float = 3.0
    theta_clutter_deg: float = 10.0
    v_clutter_mps: float = 0.0
    d_clutter_rx_m: float = 10.0
    symbol_duration_s: float = (_SYMBOL_SAMPLES + _CP_SAMPLES) / (_SYMBOL_SAMPLES * 120e3)
    qam_order: int = 4
    rx_x_m: float = 15.0
    rx_y_m: float = 0.0
    # Estimator knobs.
    aoa_strategy: str = "spatial"  # "spatial" (1D root stage) or "rank_reduction"
    refine_mode: str = "two_step"  # "two_step" or "literal"
    # Half the minimum target speed: discards static-background roots whose
    # Doppler estimate is dragged upward by a nearby unresolved target.
    v_min_mps: float = 5.0
    # Surveillance sector in steering angle; roots outside it (front-back
    # mirrors of strong returns) are never real detections here.
    steering_sector_deg: tuple[float, float] = (0.0, 90.0)
    # Clutter-ray received power: "two_hop" plugs the ray's end legs into the
    # single-scatterer radar equation; "three_hop" chains a third spreading loss
    # through the target->clutter leg.
    clutter_path_model: str = "two_hop"
    # Monte Carlo draw ranges.
    theta_r_range_deg: tuple[float, float] = (20.0, 60.0)
    v_t_range_mps: tuple[float, float] = (10.0, 15.0)
    d_bis_range_m: tuple[float, float] = (20.0, 40.0)
    seed: int = 0

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.f_c_hz

    @property
    def p_tx_watts(self) -> float:
        return dbm_to_watts(self.p_tx_dbm)

    @property
    def noise_power_watts(self) -> float:
        return dbm_to_watts(self.noise_power_dbm)

    @property
    def baseline_m(self) -> float:
        return math.hypot(self.rx_x_m, self.rx_y_m)

    @property
    def space_time_dim(self) -> int:
        return self.m_symbols * self.n_rx

    @property
    def v_alias_mps(self) -> float:
        """Unambiguous bistatic-velocity magnitude, lambda / (2 T_s)."""
        return self.wavelength_m / (2.0 * self.symbol_duration_s)

    def __post_init__(self):
        if self.k_subcarriers > self.n_fft:
            raise ValueError("active subcarriers exceed the FFT size")
        if self.n_clutter_rays < 1:
            raise ValueError("need at least one clutter ray")
        if self.delta_f_hz <= 0:
            raise ValueError("subcarrier spacing must be positive")
        if self.symbol_duration_s < 1.0 / self.delta_f_hz - 1e-12:
            raise ValueError("symbol duration shorter than 1/delta_f")
        if self.aoa_strategy not in ("spatial", "rank_reduction"):
            raise ValueError(f"unknown aoa_strategy {self.aoa_strategy!r}")
        if self.refine_mode not in ("two_step", "literal"):
            raise ValueError(f"unknown refine_mode {self.refine_mode!r}")
        if self.clutter_path_model not in ("two_hop", "three_hop"):
            raise ValueError(f"unknown clutter_path_model {self.clutter_path_model!r}")

    def with_(self, **updates) -> "ScenarioConfig":
        return replace(self, **updates)


_TUPLE_FIELDS = {"theta_r_range_deg", "v_t_range_mps", "d_bis_range_m", "steering_sector_deg"}


def scenario_from_mapping(data: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a flat key-value mapping (SI units, dBm)."""
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    coerced = {k: tuple(v) if k in _TUPLE_FIELDS else v for k, v in data.items()}
    return ScenarioConfig(**coerced)


def load_config_file(path) -> dict:
    """Parse a YAML config file with optional `scenario` and `sweep` sections."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return data
