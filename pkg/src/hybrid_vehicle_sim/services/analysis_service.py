"""
Post-processing of trajectory records: steady-state surge speed, pitch
oscillation range and dominant frequency of a trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.fft import rfft, rfftfreq
from scipy.signal import detrend, get_window

from hybrid_vehicle_sim.services.simulation_service import TrajectoryRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralPeak:
    frequency:  float   # Hz
    resolution: float   # bin width, Hz
    magnitude:  float


@dataclass(frozen=True)
class RunSummary:
    mean_surge_speed:   float
    pitch_peak_to_peak: float
    yaw_rate_frequency: float
    roll_mean:          float


def _window_mask(record: TrajectoryRecord, t_start: float | None) -> np.ndarray:
    """Samples at or after t_start (default: second half of the run)."""
    if len(record) == 0:
        raise ValueError("empty trajectory record")
    if t_start is None:
        t_start = 0.5 * (record.t[0] + record.t[-1])
    mask = record.t >= t_start
    if not np.any(mask):
        raise ValueError(f"no samples after t={t_start:g} s (run ends at {record.t[-1]:g} s)")
    return mask


def mean_surge_speed(record: TrajectoryRecord, t_start: float | None = None) -> float:
    return float(np.mean(record.V[_window_mask(record, t_start), 0]))


def pitch_peak_to_peak(record: TrajectoryRecord, t_start: float | None = None) -> float:
    theta = record.Theta[_window_mask(record, t_start), 1]
    return float(np.max(theta) - np.min(theta))


def roll_mean(record: TrajectoryRecord, t_start: float | None = None) -> float:
    return float(np.mean(record.Theta[_window_mask(record, t_start), 0]))


def dominant_frequency(signal, dt: float, min_freq: float = 0.0) -> SpectralPeak:
    """
    Largest bin of the one-sided spectrum of a linearly detrended,
    Hann-windowed signal, ignoring bins below ``min_freq``.
    """
    x = np.asarray(signal, dtype=float)
    if x.size < 4 or dt <= 0:
        raise ValueError(f"need at least 4 samples and dt > 0 (got {x.size}, dt={dt})")
    x = detrend(x, type="linear") * get_window("hann", x.size)
    spectrum = np.abs(rfft(x))
    freqs    = rfftfreq(x.size, dt)
    valid    = freqs >= max(min_freq, freqs[1])
    if not np.any(valid):
        raise ValueError(f"no frequency bins above {min_freq:g} Hz")
    idx = np.flatnonzero(valid)[np.argmax(spectrum[valid])]
    return SpectralPeak(float(freqs[idx]), float(freqs[1]), float(spectrum[idx]))


def summarize(record: TrajectoryRecord, t_start: float | None = None,
              min_freq: float = 1.0) -> RunSummary:
    mask = _window_mask(record, t_start)
    yaw_rate = record.Omega[mask, 2]
    try:
        freq = dominant_frequency(yaw_rate, record.dt, min_freq).frequency
    except ValueError:
        logger.warning("Run '%s' too short for a yaw-rate spectrum.", record.name)
        freq = float("nan")
    return RunSummary(
        mean_surge_speed   = mean_surge_speed(record, t_start),
        pitch_peak_to_peak = pitch_peak_to_peak(record, t_start),
        yaw_rate_frequency = freq,
        roll_mean          = roll_mean(record, t_start),
    )
