"""
Victim-radar receive chain for PMCW: target echo + interferer leakage +
noise, circular correlation against the victim code, and a slow-time DFT.

Fast time holds exactly one code period (``K`` samples) per burst and the
code repeats periodically, so every delay is applied as a circular shift.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .waveform import SPEED_OF_LIGHT, TWO_PI, IncompatibleCodesError, _entries


@dataclass(frozen=True)
class WaveformTiming:
    f_c: float = 79e9
    T_c: float = 6.66e-9
    K: int = 50
    N: int = 140
    T: float | None = None  # burst repetition interval; defaults to K * T_c

    def __post_init__(self):
        if self.T is None:
            object.__setattr__(self, "T", self.K * self.T_c)
        for name in ("f_c", "T_c", "K", "N", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"timing.{name} must be positive")
        if self.T < self.K * self.T_c * (1 - 1e-12):
            raise ValueError("timing.T must be at least K * T_c")

    @property
    def range_bin_size(self) -> float:
        return SPEED_OF_LIGHT * self.T_c / 2

    @property
    def doppler_bin_size(self) -> float:
        return 1.0 / (self.N * self.T)


@dataclass(frozen=True)
class TargetParams:
    """Point target; ``velocity`` is positive toward the radar."""

    range: float
    velocity: float
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.range < 0:
            raise ValueError("target range must be >= 0")
        if abs(self.velocity) >= 1e-3 * SPEED_OF_LIGHT:
            raise ValueError("target velocity must be much smaller than c")

    def delay(self) -> float:
        return 2 * self.range / SPEED_OF_LIGHT

    def doppler(self, timing: WaveformTiming) -> float:
        return 2 * self.velocity / SPEED_OF_LIGHT * timing.f_c


@dataclass(frozen=True)
class InterfererParams:
    """Co-channel radar at ``range`` with relative ``velocity`` (one-way path)."""

    range: float
    velocity: float
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.range < 0:
            raise ValueError("interferer range must be >= 0")

    def delay(self) -> float:
        return self.range / SPEED_OF_LIGHT

    def doppler(self, timing: WaveformTiming) -> float:
        return self.velocity / SPEED_OF_LIGHT * timing.f_c


def delay_bins(delay: float, timing: WaveformTiming) -> int:
    """Code shift ``floor(delay / T_c)`` folded into one code period."""
    # guard against 19.999999 style round-off just below an integer
    shift = int(np.floor(delay / timing.T_c + 1e-9))
    return shift % timing.K


@dataclass(frozen=True)
class Scenario:
    timing: WaveformTiming = field(default_factory=WaveformTiming)
    targets: tuple[TargetParams, ...] = ()
    interferer: InterfererParams | None = None
    noise_variance: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if isinstance(self.targets, TargetParams):
            object.__setattr__(self, "targets", (self.targets,))
        else:
            object.__setattr__(self, "targets", tuple(self.targets))
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")

    def replace(self, **changes) -> "Scenario":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return Scenario(**data)

    def target_bin(self, index: int = 0) -> tuple[int, int]:
        """Expected (range bin, signed Doppler bin) of a target's peak."""
        t, timing = self.targets[index], self.timing
        doppler_bin = int(np.round(t.doppler(timing) * timing.T * timing.N))
        doppler_bin = (doppler_bin + timing.N // 2) % timing.N - timing.N // 2
        return delay_bins(t.delay(), timing), doppler_bin

    # --- config files --------------------------------------------------

    def to_dict(self) -> dict:
        def path(p):
            return {"range": p.range, "velocity": p.velocity,
                    "amplitude": [float(np.real(p.amplitude)), float(np.imag(p.amplitude))]}
        return {
            "timing": asdict(self.timing),
            "targets": [path(t) for t in self.targets],
            "interferer": None if self.interferer is None else path(self.interferer),
            "noise_variance": self.noise_variance,
            "noise_seed": self.noise_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        data = dict(data)
        known = {"timing", "targets", "target", "interferer", "noise_variance", "noise_seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario field(s): {sorted(unknown)}")
        timing = WaveformTiming(**data.get("timing", {}))
        raw_targets = data.get("targets", [])
        if data.get("target") is not None:
            raw_targets = list(raw_targets) + [data["target"]]
        targets = tuple(TargetParams(**_path_kwargs(t, two_way=True)) for t in raw_targets)
        interferer = data.get("interferer")
        if interferer is not None:
            interferer = InterfererParams(**_path_kwargs(interferer, two_way=False))
        return cls(timing=timing, targets=targets, interferer=interferer,
                   noise_variance=float(data.get("noise_variance", 0.0)),
                   noise_seed=int(data.get("noise_seed", 0)))

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _path_kwargs(raw: dict, two_way: bool) -> dict:
    raw = dict(raw)
    rcs = raw.pop("rcs_dbsm", None)
    amplitude = raw.pop("amplitude", None)
    if amplitude is None:
        amplitude = path_amplitude(raw["range"], two_way=two_way,
                                   rcs_dbsm=35.0 if rcs is None else rcs)
    elif isinstance(amplitude, (list, tuple)):
        amplitude = complex(amplitude[0], amplitude[1])
    return {"range": float(raw.pop("range")), "velocity": float(raw.pop("velocity")),
            "amplitude": complex(amplitude), **raw}


# Reference geometry at which both paths have unit amplitude. Absolute link
# budgets are not modeled; only the range/RCS scaling laws are.
REFERENCE_RCS_DBSM = 35.0
TARGET_REFERENCE_RANGE = 20.0
INTERFERER_REFERENCE_RANGE = 200.0


def path_amplitude(range_m: float, two_way: bool, rcs_dbsm: float = REFERENCE_RCS_DBSM) -> float:
    """Amplitude scaled by the radar equation relative to the reference geometry.

    Two-way echoes scale as ``sqrt(rcs) / R^2``; the one-way interference path
    scales as ``1 / R`` and does not depend on RCS.
    """
    if range_m <= 0:
        raise ValueError("range must be positive")
    if two_way:
        rcs_gain = 10 ** ((rcs_dbsm - REFERENCE_RCS_DBSM) / 20)
        return float(rcs_gain * (TARGET_REFERENCE_RANGE / range_m) ** 2)
    return float(INTERFERER_REFERENCE_RANGE / range_m)


def paper_scenario(noise_seed: int = 0, K: int = 50, N: int = 140) -> Scenario:
    """Two-vehicle scene: 79 GHz, target at 20 m / 30 m/s, interferer at
    200 m / -20 m/s, noise variance 1e-2, 6.66 ns chips."""
    timing = WaveformTiming(f_c=79e9, T_c=6.66e-9, K=K, N=N)
    return Scenario(
        timing=timing,
        targets=(TargetParams(20.0, 30.0, path_amplitude(20.0, two_way=True)),),
        interferer=InterfererParams(200.0, -20.0, path_amplitude(200.0, two_way=False)),
        noise_variance=1e-2,
        noise_seed=noise_seed,
    )


@dataclass(frozen=True, eq=False)
class RangeDopplerMap:
    """``data[m, p]`` with ``p`` in natural DFT order ``0..N-1``."""

    data: np.ndarray
    range_bin_size: float = float("nan")
    doppler_bin_size: float = float("nan")
    f_c: float = float("nan")

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def doppler_bins(self) -> np.ndarray:
        """Signed bin indices in ``[-N/2, N/2)``, in display order."""
        N = self.data.shape[1]
        return np.arange(N) - N // 2

    def centered(self) -> np.ndarray:
        return np.fft.fftshift(self.data, axes=1)

    def ranges(self) -> np.ndarray:
        return np.arange(self.data.shape[0]) * self.range_bin_size

    def velocities(self) -> np.ndarray:
        """Two-way (target) radial velocity of each displayed Doppler bin."""
        return self.doppler_bins() * self.doppler_bin_size * SPEED_OF_LIGHT / (2 * self.f_c)

    def magnitude_db(self, floor_db: float = -300.0) -> np.ndarray:
        """``20 log10 |RD|`` in display order, floored to stay finite."""
        mag = np.abs(self.centered())
        with np.errstate(divide="ignore"):
            db = 20 * np.log10(mag)
        return np.maximum(db, floor_db)

    def to_csv(self) -> str:
        db = self.magnitude_db()
        header = "range_m," + ",".join(f"{v:.6g}" for v in self.velocities())
        rows = [header]
        for r, row in zip(self.ranges(), db):
            rows.append(f"{r:.6g}," + ",".join(f"{v:.6f}" for v in row))
        return "\n".join(rows) + "\n"

    def to_pgm(self) -> bytes:
        return heatmap_pgm(self.magnitude_db())


def heatmap_pgm(db: np.ndarray) -> bytes:
    """Binary 8-bit PGM (P5), min/max normalized, row-major."""
    lo, hi = float(np.min(db)), float(np.max(db))
    if hi > lo:
        pixels = np.round((db - lo) / (hi - lo) * 255)
    else:
        pixels = np.zeros_like(db)
    rows, cols = db.shape
    header = f"P5\n# dB range: {lo:.3f} {hi:.3f}\n{cols} {rows}\n255\n".encode()
    return header + pixels.astype(np.uint8).tobytes()


def dirichlet(n: int, x):
    """``sin(n pi x) / (pi x)``, equal to ``n`` at ``x = 0``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    safe = np.where(x == 0, 1.0, x)
    out = np.where(x == 0, float(n), np.sin(n * np.pi * safe) / (np.pi * safe))
    return out.item() if out.ndim == 0 else out


def sample_echo(code, delay_bins: int, doppler_per_chip: float, doppler_per_burst: float,
                amplitude: complex, timing: WaveformTiming) -> np.ndarray:
    """``amplitude * exp(j2pi(f_chip m + f_burst n)) * code[(m - delay) mod K]``."""
    code = _entries(code)
    K, N = timing.K, timing.N
    if code.size != K:
        raise IncompatibleCodesError(f"code has {code.size} chips, timing expects K={K}")
    if not 0 <= delay_bins < K:
        raise ValueError(f"delay_bins must lie in [0, {K}), got {delay_bins}")
    m = np.arange(K)
    n = np.arange(N)
    column = code[(m - delay_bins) % K] * np.exp(1j * TWO_PI * doppler_per_chip * m)
    return amplitude * np.outer(column, np.exp(1j * TWO_PI * doppler_per_burst * n))


def add_noise(samples: np.ndarray, sigma2: float, seed: int) -> np.ndarray:
    """Add circularly symmetric complex Gaussian noise of variance ``sigma2``.

    Uses the counter-based Philox generator so a given seed yields the same
    draw regardless of where it is evaluated.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    samples = np.asarray(samples, dtype=complex)
    if sigma2 == 0:
        return samples.copy()
    rng = np.random.Generator(np.random.Philox(seed))
    scale = np.sqrt(sigma2 / 2)
    noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
    return samples + scale * noise


def correlation_matrix(x) -> np.ndarray:
    """``C[m, i] = conj(x[(i - m) mod K])`` so ``C @ r`` is the circular
    correlation of ``r`` against ``x``."""
    x = _entries(x)
    K = x.size
    idx = (np.arange(K)[None, :] - np.arange(K)[:, None]) % K
    return x.conj()[idx]


def correlate_range(received: np.ndarray, x) -> np.ndarray:
    """``out[m, n] = sum_k conj(x_k) received[(k + m) mod K, n]``."""
    received = np.asarray(received, dtype=complex)
    x = _entries(x)
    if received.ndim != 2 or received.shape[0] != x.size:
        raise IncompatibleCodesError(
            f"received block has {received.shape[0]} fast-time rows, code has {x.size} chips"
        )
    return correlation_matrix(x) @ received


def range_doppler(profiles: np.ndarray, timing: WaveformTiming | None = None) -> RangeDopplerMap:
    """Length-``N`` DFT over slow time, ``sum_n profiles[m, n] exp(-j2pi n p / N)``."""
    profiles = np.asarray(profiles, dtype=complex)
    if profiles.ndim != 2 or profiles.shape[1] < 1:
        raise ValueError("profiles must be a K x N matrix with N >= 1")
    data = np.fft.fft(profiles, axis=1)
    if timing is None:
        return RangeDopplerMap(data)
    return RangeDopplerMap(data, timing.range_bin_size, timing.doppler_bin_size, timing.f_c)


def received_samples(x, y, scenario: Scenario, noise: bool = True) -> np.ndarray:
    """Fast-time x slow-time samples before the correlator."""
    timing = scenario.timing
    x = _entries(x)
    y = _entries(y)
    for name, code in (("x", x), ("y", y)):
        if code.size != timing.K:
            raise IncompatibleCodesError(
                f"code {name} has {code.size} chips but the scenario uses K={timing.K}"
            )
    samples = np.zeros((timing.K, timing.N), dtype=complex)
    for t in scenario.targets:
        f_d = t.doppler(timing)
        samples += sample_echo(x, delay_bins(t.delay(), timing), f_d * timing.T_c,
                               f_d * timing.T, t.amplitude, timing)
    if scenario.interferer is not None:
        i = scenario.interferer
        f_d = i.doppler(timing)
        samples += sample_echo(y, delay_bins(i.delay(), timing), f_d * timing.T_c,
                               f_d * timing.T, i.amplitude, timing)
    if noise:
        samples = add_noise(samples, scenario.noise_variance, scenario.noise_seed)
    return samples


def simulate(x, y, scenario: Scenario) -> RangeDopplerMap:
    """Victim range-Doppler map for victim code ``x`` and interferer code ``y``."""
    samples = received_samples(x, y, scenario)
    return range_doppler(correlate_range(samples, x), scenario.timing)
