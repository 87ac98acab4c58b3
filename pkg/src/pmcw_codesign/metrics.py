"""
Interference and detection figures of merit.

Detection is a fixed threshold relative to the map peak applied to local
maxima; no CFAR.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .radarsim import RangeDopplerMap
from .waveform import DesignGrid, interference_objective, _entries

NEG_INF_DB = float("-inf")


def interference_power_db(x, y, grid: DesignGrid) -> float:
    """Grid interference per grid point and per chip, in dB.

    Returns ``-inf`` when the objective is exactly zero.
    """
    J = interference_objective(x, y, grid)
    if J == 0.0:
        return NEG_INF_DB
    return 10 * math.log10(J / (grid.n_points * len(_entries(x))))


def peak_sidelobe_db(x) -> float:
    """Worst circular autocorrelation sidelobe relative to the zero-lag peak."""
    z = _entries(x)
    K = z.size
    acf = np.array([np.vdot(z, np.roll(z, -l)) for l in range(1, K)])
    return 20 * math.log10(max(np.max(np.abs(acf)), 1e-300) / K)


@dataclass
class DetectionReport:
    detections: list[tuple[int, int, float]] = field(default_factory=list)
    threshold_dB: float = -20.0
    ground_truth: tuple[int, int] | None = None

    def false_alarms(self) -> list[tuple[int, int, float]]:
        if self.ground_truth is None:
            return list(self.detections)
        return [d for d in self.detections if (d[0], d[1]) != tuple(self.ground_truth)]

    def hits_target(self) -> bool:
        return self.ground_truth is not None and any(
            (d[0], d[1]) == tuple(self.ground_truth) for d in self.detections
        )

    def only_target(self) -> bool:
        return self.hits_target() and not self.false_alarms()

    def to_dict(self) -> dict:
        return {
            "threshold_dB": self.threshold_dB,
            "ground_truth": None if self.ground_truth is None else list(self.ground_truth),
            "detections": [
                {"range_bin": r, "doppler_bin": p, "magnitude_dB": m}
                for r, p, m in self.detections
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def summary(self) -> str:
        line = f"{len(self.detections)} detection(s) above {self.threshold_dB:g} dB"
        if self.ground_truth is not None:
            line += (f"; target {'hit' if self.hits_target() else 'missed'}"
                     f" at {tuple(self.ground_truth)}, {len(self.false_alarms())} false alarm(s)")
        return line


def local_maxima(mag: np.ndarray) -> np.ndarray:
    """Boolean mask of cells >= all 8 neighbours; Doppler (axis 1) wraps,
    range (axis 0) is clamped."""
    padded = np.pad(mag, ((1, 1), (0, 0)), constant_values=-np.inf)
    mask = np.ones(mag.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dp in (-1, 0, 1):
            if dr == 0 and dp == 0:
                continue
            neighbour = np.roll(padded, -dp, axis=1)[1 + dr: 1 + dr + mag.shape[0]]
            mask &= mag >= neighbour
    return mask


def threshold_detect(rd: RangeDopplerMap, threshold_dB: float = -20.0,
                     ground_truth: tuple[int, int] | None = None) -> DetectionReport:
    """Local maxima within ``threshold_dB`` of the global peak.

    Doppler bins are reported as signed indices in ``[-N/2, N/2)``. Sorted by
    magnitude (descending), ties broken by (range_bin, doppler_bin).
    """
    if rd.data.size == 0:
        raise ValueError("empty range-Doppler map")
    if not threshold_dB < 0:
        raise ValueError("threshold_dB must be negative (relative to the peak)")
    report = DetectionReport(threshold_dB=threshold_dB, ground_truth=ground_truth)
    mag = np.abs(rd.centered())
    peak = float(mag.max())
    if peak == 0.0:
        return report
    with np.errstate(divide="ignore"):
        rel_db = 20 * np.log10(mag / peak)
    keep = local_maxima(mag) & (rel_db >= threshold_dB)
    rows, cols = np.nonzero(keep)
    doppler = rd.doppler_bins()
    found = [(int(r), int(doppler[c]), float(rel_db[r, c])) for r, c in zip(rows, cols)]
    found.sort(key=lambda d: (-d[2], d[0], d[1]))
    report.detections = found
    return report


def ridge_peak_db(interference_map: RangeDopplerMap, target_map: RangeDopplerMap) -> float:
    """Strongest interference cell relative to the target peak, in dB."""
    interf = float(np.max(np.abs(interference_map.data)))
    target = float(np.max(np.abs(target_map.data)))
    if interf == 0.0:
        return NEG_INF_DB
    return 20 * math.log10(interf / target)
