"""
Phase codes, suppression grids and the cross-correlation primitives shared
by the code designer and the range-Doppler simulator.

All shifts are circular: lag ``l`` pairs chip ``k`` of the first code with
chip ``(k + l) mod K`` of the second.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi
SPEED_OF_LIGHT = 299_792_458.0


class IncompatibleCodesError(ValueError):
    """Raised when two codes (or a code and a grid/scenario) disagree in length."""


def _wrap_phases(phases: np.ndarray) -> np.ndarray:
    wrapped = np.mod(phases, TWO_PI)
    # np.mod maps tiny negative angles onto exactly 2*pi
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


@dataclass(frozen=True, eq=False)
class PhaseCode:
    """Unimodular code of ``K`` chips stored as phases in ``[0, 2*pi)``."""

    phases: np.ndarray

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        if phases.ndim != 1:
            raise ValueError("phases must be a 1-D vector")
        if phases.size < 2:
            raise ValueError(f"a phase code needs K >= 2 chips, got {phases.size}")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        phases = _wrap_phases(phases.copy())
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @classmethod
    def from_entries(cls, entries) -> "PhaseCode":
        """Build a code from complex chips; only their arguments are kept."""
        return cls(np.angle(np.asarray(entries, dtype=complex)))

    @classmethod
    def random(cls, K: int, rng: np.random.Generator) -> "PhaseCode":
        """I.i.d. uniform phases on ``[0, 2*pi)``."""
        return cls(rng.uniform(0.0, TWO_PI, size=K))

    @property
    def K(self) -> int:
        return self.phases.size

    def __len__(self) -> int:
        return self.K

    def entries(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def rotated(self, phi: float) -> "PhaseCode":
        """Same code multiplied by the global phase ``exp(1j * phi)``."""
        return PhaseCode(self.phases + phi)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhaseCode):
            return NotImplemented
        return np.array_equal(self.phases, other.phases)

    def __hash__(self) -> int:
        return hash(self.phases.tobytes())

    # --- serialization -------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# pmcw-code K={self.K}"]
        lines += [repr(float(p)) for p in self.phases]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PhaseCode":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# pmcw-code"):
            raise ValueError("missing '# pmcw-code K=<K>' header")
        header = lines[0]
        try:
            K = int(header.split("K=")[1].split()[0])
        except (IndexError, ValueError):
            raise ValueError(f"malformed header {header!r}") from None
        phases = [float(ln) for ln in lines[1:] if not ln.startswith("#")]
        if len(phases) != K:
            raise ValueError(f"header says K={K} but {len(phases)} phases follow")
        return cls(np.array(phases))

    def to_json(self) -> str:
        return json.dumps([float(p) for p in self.phases])

    @classmethod
    def from_json(cls, text: str) -> "PhaseCode":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("expected a JSON array of phases")
        return cls(np.array(data, dtype=float))

    def save(self, path) -> None:
        path = Path(path)
        text = self.to_json() if path.suffix == ".json" else self.to_text()
        path.write_text(text)

    @classmethod
    def load(cls, path) -> "PhaseCode":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".json" or text.lstrip().startswith("["):
            return cls.from_json(text)
        return cls.from_text(text)


def _entries(code) -> np.ndarray:
    if isinstance(code, PhaseCode):
        return code.entries()
    return np.asarray(code, dtype=complex)


def _check_same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise IncompatibleCodesError(
            f"codes have incompatible lengths {x.shape[0]} and {y.shape[0]}"
        )


@dataclass(frozen=True)
class DesignGrid:
    """Lags ``l in [-L, L]`` and Doppler points ``f_p = p * doppler_spacing``
    for ``p in [-P, P]`` (cycles per chip)."""

    L: int
    P: int
    doppler_spacing: float = 0.0

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 0:
            raise ValueError(f"L must be a non-negative integer, got {self.L}")
        if int(self.P) != self.P or self.P < 0:
            raise ValueError(f"P must be a non-negative integer, got {self.P}")
        if not np.isfinite(self.doppler_spacing) or self.doppler_spacing < 0:
            raise ValueError("doppler_spacing must be finite and non-negative")
        if self.doppler_spacing * self.P >= 0.5:
            raise ValueError("doppler_spacing * P must stay below 0.5 cycles/chip")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "P", int(self.P))
        object.__setattr__(self, "doppler_spacing", float(self.doppler_spacing))

    @classmethod
    def for_velocity(cls, K: int, P: int = 4, v_max: float = 70.0,
                     f_c: float = 79e9, T_c: float = 6.66e-9,
                     L: int | None = None) -> "DesignGrid":
        """Grid covering one-way Doppler up to ``v_max`` with ``L = K - 1``
        unless given."""
        f_max = v_max / SPEED_OF_LIGHT * f_c * T_c
        spacing = f_max / P if P > 0 else 0.0
        return cls(L=K - 1 if L is None else L, P=P, doppler_spacing=spacing)

    @property
    def n_points(self) -> int:
        return (2 * self.L + 1) * (2 * self.P + 1)

    def shifts(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    def frequencies(self) -> np.ndarray:
        return np.arange(-self.P, self.P + 1) * self.doppler_spacing

    def validate_for(self, K: int) -> None:
        if self.L > K - 1:
            raise ValueError(f"L={self.L} exceeds K-1={K - 1}")


@dataclass(frozen=True, eq=False)
class HermitianForm:
    """Dense ``K x K`` Hermitian matrix."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {data.shape}")
        if not np.allclose(data, data.conj().T, rtol=0.0, atol=1e-10):
            raise ValueError("matrix is not Hermitian")
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def quad(self, z) -> float:
        """``z^H B z`` (real part; the imaginary part is round-off)."""
        z = _entries(z)
        return float(np.real(np.vdot(z, self.data @ z)))

    def __matmul__(self, z):
        return self.data @ z


def steering_vector(f: float, K: int) -> np.ndarray:
    """``[1, e^{j2pi f}, ..., e^{j2pi (K-1) f}]``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return np.exp(1j * TWO_PI * f * np.arange(K))


def circular_shift(y, l: int) -> np.ndarray:
    """Entry ``k`` of the result is ``y[(k + l) mod K]``."""
    y = _entries(y)
    return np.roll(y, -(int(l) % y.size))


def shift_matrix(l: int, K: int) -> np.ndarray:
    """Explicit permutation matrix ``C_l`` with ``C_l @ y == circular_shift(y, l)``.

    Only used for testing the matrix-free path.
    """
    return np.roll(np.eye(K), int(l) % K, axis=1)


def cross_correlation(x, y, l: int, f: float) -> complex:
    """``sum_k conj(x_k) y_{(k+l) mod K} e^{j 2 pi k f}``."""
    x, y = _entries(x), _entries(y)
    _check_same_length(x, y)
    return complex(np.sum(x.conj() * circular_shift(y, l) * steering_vector(f, x.size)))


def correlation_surface(x, y, grid: DesignGrid) -> np.ndarray:
    """All ``r_xy^l(f_p)`` on the grid, shape ``(2L+1, 2P+1)``."""
    x, y = _entries(x), _entries(y)
    _check_same_length(x, y)
    K = x.size
    grid.validate_for(K)
    idx = (np.arange(K)[None, :] + grid.shifts()[:, None]) % K
    shifted = y[idx] * x.conj()[None, :]
    steer = np.exp(1j * TWO_PI * np.outer(grid.frequencies(), np.arange(K)))
    return shifted @ steer.T


def interference_objective(x, y, grid: DesignGrid) -> float:
    """``sum_{l,p} |r_xy^l(f_p)|^2`` over the whole grid."""
    r = correlation_surface(x, y, grid)
    return float(np.sum(r.real**2 + r.imag**2))
