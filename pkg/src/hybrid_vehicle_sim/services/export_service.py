"""
CSV output for trajectories, CPG traces and sweep summaries.

Floats are written with 9 significant digits and a plain "\\n" line
terminator so identical runs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from pathlib import Path
from typing import Iterable

import numpy as np

from hybrid_vehicle_sim.services.spatial import wrap_angle
from hybrid_vehicle_sim.services.simulation_service import TrajectoryRecord

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS: tuple[str, ...] = (
    "t", "x", "y", "z", "phi", "theta", "psi",
    "u", "v", "w", "p", "q", "r",
    "mode", "k",
    "omega1", "omega2", "gamma1", "gamma2",
    "theta_w1", "theta_w2", "theta_w3",
    "Fx", "Fy", "Fz", "Mx", "My", "Mz",
)

CPG_TRACE_COLUMNS: tuple[str, ...] = (
    "t",
    "theta1", "theta2", "theta3",
    "r1", "r2", "r3",
    "x1", "x2", "x3",
    "phi1", "phi2", "phi3",
)


def fmt(value: float) -> str:
    return "%.9g" % value


def _write_rows(header: Iterable[str], rows: Iterable[Iterable], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def _to_file(text: str, path: str | Path) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# Trajectory
# ---------------------------------------------------------------------------

def trajectory_rows(record: TrajectoryRecord):
    """One list of formatted cells per sample, in TRAJECTORY_COLUMNS order."""
    for i in range(len(record)):
        att = [wrap_angle(a) for a in record.Theta[i]]
        yield [
            fmt(record.t[i]),
            *(fmt(v) for v in record.P[i]),
            *(fmt(v) for v in att),
            *(fmt(v) for v in record.V[i]),
            *(fmt(v) for v in record.Omega[i]),
            record.mode[i],
            str(int(record.k[i])),
            *(fmt(v) for v in record.rotor[i]),
            *(fmt(v) for v in record.theta_w[i]),
            *(fmt(v) for v in record.wrench[i]),
        ]


def trajectory_csv(record: TrajectoryRecord) -> str:
    buf = io.StringIO()
    _write_rows(TRAJECTORY_COLUMNS, trajectory_rows(record), buf)
    return buf.getvalue()


def record_hash(record: TrajectoryRecord) -> str:
    """SHA-256 of the CSV text; equal hashes mean byte-identical output."""
    return hashlib.sha256(trajectory_csv(record).encode("utf-8")).hexdigest()


def write_trajectory_csv(record: TrajectoryRecord, path: str | Path) -> Path:
    path = _to_file(trajectory_csv(record), path)
    logger.info("Wrote %d samples of '%s' to %s", len(record), record.name, path)
    return path


# ---------------------------------------------------------------------------
# CPG trace
# ---------------------------------------------------------------------------

def export_cpg_trace(t, states, path: str | Path) -> Path:
    """
    ``states`` is (n, 15) in CpgNetworkState vector layout
    (φ, r, ṙ, x, ẋ); the output θ is derived per row.
    """
    t      = np.asarray(t, dtype=float)
    states = np.asarray(states, dtype=float).reshape(t.size, -1)
    phi, r, x = states[:, 0:3], states[:, 3:6], states[:, 9:12]
    theta = x + r * np.cos(phi)
    rows = (
        [fmt(t[i]), *map(fmt, theta[i]), *map(fmt, r[i]), *map(fmt, x[i]), *map(fmt, phi[i])]
        for i in range(t.size)
    )
    buf = io.StringIO()
    _write_rows(CPG_TRACE_COLUMNS, rows, buf)
    path = _to_file(buf.getvalue(), path)
    logger.info("Wrote CPG trace (%d samples) to %s", t.size, path)
    return path


# ---------------------------------------------------------------------------
# Sweep summary
# ---------------------------------------------------------------------------

def write_summary_csv(rows: list[dict], parameter_keys: list[str], path: str | Path) -> Path:
    """
    Rows carry 'point', one entry per parameter key, 'status' and the
    metric fields; missing metrics (failed points) are left empty.
    """
    columns = ["point", *parameter_keys, "status",
               "mean_surge_speed", "pitch_peak_to_peak", "yaw_rate_frequency", "roll_mean", "csv"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({
            key: (fmt(value) if isinstance(value, float) else value)
            for key, value in row.items()
        })
    path = _to_file(buf.getvalue(), path)
    logger.info("Wrote sweep summary (%d points) to %s", len(rows), path)
    return path
