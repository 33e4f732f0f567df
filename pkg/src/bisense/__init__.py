"""Bistatic OFDM sensing simulator with subspace-based clutter suppression.

Synthesizes space-time snapshots of a moving target in static background
clutter, estimates the target's angle of arrival, bistatic velocity and
bistatic range with a joint angle/Doppler root-MUSIC pipeline followed by
an MVDR space-time filter, and benchmarks against a background-subtraction
baseline through a seeded Monte Carlo harness.
"""

from bisense.config import ScenarioConfig
from bisense.scene import GroundTruth, SpaceTimeSnapshotSet

__all__ = ["ScenarioConfig", "GroundTruth", "SpaceTimeSnapshotSet"]

__version__ = "0.1.0"
