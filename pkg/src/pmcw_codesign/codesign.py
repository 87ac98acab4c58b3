"""
Cyclic co-design of a victim/interferer code pair.

Each half-iteration fixes one code, assembles the Hermitian form whose
quadratic value at the free code equals the interference objective, flips it
into a maximization by diagonal loading, and runs power-method-like
iterations ``z <- exp(j arg(B z))`` until the surrogate stops moving.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .waveform import (
    TWO_PI,
    DesignGrid,
    HermitianForm,
    PhaseCode,
    _check_same_length,
    _entries,
    interference_objective,
)

logger = logging.getLogger(__name__)

ORDERS = ("gauss-seidel", "jacobi")

# J below this fraction of K^2 * (grid points) is round-off of an exact zero
ZERO_OBJECTIVE_RTOL = 1e-24


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-5
    inner_tol: float = 1e-6
    max_outer: int = 200
    max_inner: int = 500
    loading_margin: float = 1e-2
    seed: int = 0
    # "jacobi" updates y against the previous x; only gauss-seidel is monotone
    order: str = "gauss-seidel"
    matrix_free: bool = False

    def __post_init__(self):
        for name in ("epsilon", "inner_tol", "loading_margin"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value}")
        for name in ("max_outer", "max_inner"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")


@dataclass
class DesignTrace:
    objective_per_outer: list[float] = field(default_factory=list)
    inner_iters_x: list[int] = field(default_factory=list)
    inner_iters_y: list[int] = field(default_factory=list)
    converged: bool = False

    @property
    def initial_objective(self) -> float:
        return self.objective_per_outer[0]

    @property
    def final_objective(self) -> float:
        return self.objective_per_outer[-1]

    @property
    def n_outer(self) -> int:
        return len(self.objective_per_outer) - 1

    @property
    def inner_iteration_counts(self) -> list[tuple[int, int]]:
        return list(zip(self.inner_iters_x, self.inner_iters_y))

    def to_csv(self) -> str:
        """Row 0 is the initial point and carries zero inner iterations."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["outer_iter", "J", "inner_iters_x", "inner_iters_y"])
        xs = [0] + self.inner_iters_x
        ys = [0] + self.inner_iters_y
        for s, J in enumerate(self.objective_per_outer):
            writer.writerow([s, repr(float(J)), xs[s], ys[s]])
        return buf.getvalue()


def random_pair(K: int, seed: int) -> tuple[PhaseCode, PhaseCode]:
    """Seeded i.i.d. uniform-phase initial codes."""
    rng = np.random.default_rng(seed)
    return PhaseCode.random(K, rng), PhaseCode.random(K, rng)


# --- quadratic forms ------------------------------------------------------


def _steering_rows(K: int, grid: DesignGrid) -> np.ndarray:
    return np.exp(1j * TWO_PI * np.outer(grid.frequencies(), np.arange(K)))


def _shift_index(K: int, grid: DesignGrid) -> np.ndarray:
    # row l: (k + l) mod K
    return (np.arange(K)[None, :] + grid.shifts()[:, None]) % K


def _check_side(side: str) -> None:
    if side not in ("x", "y"):
        raise ValueError(f"side must be 'x' or 'y', got {side!r}")


def _rank_one_factors(fixed: np.ndarray, grid: DesignGrid, side: str) -> np.ndarray:
    """Columns ``v`` with ``|v^H z|^2`` equal to one grid term of the objective.

    side="x": ``v = Diag(f_p) C_l y`` so ``v^H z = conj(r_zy^l(f_p))``.
    side="y": ``v = C_l^H Diag(f_p)^H x`` so ``v^H z = r_xz^l(f_p)``.
    """
    K = fixed.size
    F = _steering_rows(K, grid)                   # (2P+1, K)
    idx = _shift_index(K, grid)                   # (2L+1, K)
    if side == "x":
        terms = F[None, :, :] * fixed[idx][:, None, :]
    else:
        weighted = fixed[None, :] * F.conj()      # (2P+1, K): x_k e^{-j2pi k f_p}
        back = (np.arange(K)[None, :] - grid.shifts()[:, None]) % K
        terms = weighted[:, back].transpose(1, 0, 2)   # [l, p, i] = weighted[p, (i - l) mod K]
    return terms.reshape(-1, K).T                 # (K, (2L+1)(2P+1))


def build_quadratic_form(fixed, grid: DesignGrid, side: str = "x") -> HermitianForm:
    """Hermitian ``B`` with ``z^H B z`` equal to the grid interference.

    ``side="x"`` gives ``B_y`` (``fixed`` is the interferer code and
    ``z^H B z = J(z, fixed)``); ``side="y"`` gives ``B_x`` with
    ``z^H B z = J(fixed, z)``. Each is a sum of ``(2L+1)(2P+1)`` rank-one
    terms ``v v^H``.
    """
    _check_side(side)
    fixed = _entries(fixed)
    grid.validate_for(fixed.size)
    V = _rank_one_factors(fixed, grid, side)
    B = V @ V.conj().T
    return HermitianForm(0.5 * (B + B.conj().T))


class MatrixFreeForm:
    """Same operator as :func:`build_quadratic_form` (optionally loaded as
    ``lam * I - B``), applied term by term without forming ``B``."""

    def __init__(self, fixed, grid: DesignGrid, side: str = "x", loading: float | None = None):
        _check_side(side)
        fixed = _entries(fixed)
        grid.validate_for(fixed.size)
        self.dim = fixed.size
        self.grid = grid
        self.side = side
        self.loading = loading
        self._fixed = fixed
        self._idx = _shift_index(self.dim, grid)
        self._F = _steering_rows(self.dim, grid)

    def _apply_b(self, z: np.ndarray) -> np.ndarray:
        K, idx, F = self.dim, self._idx, self._F
        if self.side == "x":
            S = self._fixed[idx]                            # S[l, k] = y_{k+l}
            coeff = (S.conj() * z[None, :]) @ F.conj().T    # conj(r_zy^l(f_p))
            return np.sum(S * (coeff @ F), axis=0)
        G = self._fixed.conj()[None, :] * F                 # G[p, k] = x_k^* e^{j2pi k f_p}
        coeff = z[idx] @ G.T                                # r_xz^l(f_p)
        H = coeff @ G.conj()                                # H[l, k]
        out = np.zeros(K, dtype=complex)
        np.add.at(out, idx.ravel(), H.ravel())              # out[(k + l) mod K] += H[l, k]
        return out

    def __matmul__(self, z):
        Bz = self._apply_b(np.asarray(z, dtype=complex))
        if self.loading is None:
            return Bz
        return self.loading * z - Bz

    def quad(self, z) -> float:
        z = _entries(z)
        return float(np.real(np.vdot(z, self @ z)))

    def loaded(self, lam: float) -> "MatrixFreeForm":
        return MatrixFreeForm(self._fixed, self.grid, self.side, float(lam))

    def trace_bound(self) -> float:
        """``trace(B) >= lambda_max(B)`` for the PSD sum of rank-one terms."""
        return float(self.grid.n_points * np.sum(np.abs(self._fixed) ** 2))


def _power_iteration(apply, dim: int, tol: float, max_iter: int, seed: int):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    mu = 0.0
    for _ in range(max_iter):
        w = apply(v)
        mu_new = float(np.real(np.vdot(v, w)))
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, True
        v = w / norm
        if abs(mu_new - mu) <= tol * abs(mu_new):
            return mu_new, True
        mu = mu_new
    return mu, False


def dominant_eigenvalue(B, margin: float = 1e-2, tol: float = 1e-8,
                        max_iter: int = 1000, seed: int = 0) -> float:
    """Upper bound ``lam >= lambda_max(B)``, at most ``(1 + margin)`` above it.

    Power iteration from a seeded start gives the estimate; for dense input
    the bound is confirmed by a Cholesky factorization of ``lam*I - B``.
    Falls back to the max absolute row sum (or the trace, for a matrix-free
    PSD form) when the iteration or the confirmation fails.
    """
    if isinstance(B, MatrixFreeForm):
        mu, ok = _power_iteration(B._apply_b, B.dim, tol, max_iter, seed)
        if ok and mu > 0:
            return (1.0 + margin) * mu
        return B.trace_bound()

    data = B.data if isinstance(B, HermitianForm) else np.asarray(B, dtype=complex)
    dim = data.shape[0]
    row_bound = float(np.max(np.sum(np.abs(data), axis=1)))
    mu, ok = _power_iteration(lambda v: data @ v, dim, tol, max_iter, seed)
    if not ok:
        logger.debug("power iteration hit the cap; using row-sum bound")
        return row_bound
    lam = (1.0 + margin) * mu if mu > 0 else margin * row_bound
    try:
        np.linalg.cholesky(lam * np.eye(dim) - data)
    except np.linalg.LinAlgError:
        return max(row_bound, lam)
    return lam


def diagonal_load(B, lambda_m: float):
    """``lambda_m * I - B``."""
    if isinstance(B, MatrixFreeForm):
        return B.loaded(lambda_m)
    data = B.data if isinstance(B, HermitianForm) else np.asarray(B, dtype=complex)
    return HermitianForm(lambda_m * np.eye(data.shape[0]) - data)


# --- power-method-like iterations -----------------------------------------


def _surrogate(B_tilde, z: np.ndarray) -> float:
    return float(np.real(np.vdot(z, B_tilde @ z)))


def _pmli(B_tilde, z: np.ndarray) -> np.ndarray:
    w = B_tilde @ z
    out = np.exp(1j * np.angle(w))
    zero = w == 0
    if np.any(zero):
        # any phase is optimal for a zero coefficient; keep the old one
        out[zero] = z[zero]
    return out


def pmli_step(B_tilde, z) -> PhaseCode:
    """One ``z <- exp(j arg(B_tilde z))`` update; keeps the old phase where
    ``(B_tilde z)_k == 0``."""
    old = z if isinstance(z, PhaseCode) else PhaseCode.from_entries(z)
    w = B_tilde @ old.entries()
    phases = np.where(w == 0, old.phases, np.angle(w))
    return PhaseCode(phases)


def _solve(B_tilde, z: np.ndarray, inner_tol: float, max_inner: int):
    value = _surrogate(B_tilde, z)
    for t in range(1, max_inner + 1):
        z_new = _pmli(B_tilde, z)
        new_value = _surrogate(B_tilde, z_new)
        change = abs(new_value - value)
        z, value = z_new, new_value
        if change <= inner_tol * abs(value) or value == 0.0:
            break
    return z, t


def solve_subproblem(B_tilde, init, cfg: SolverConfig) -> PhaseCode:
    """Repeat PMLI steps until the relative surrogate change drops below
    ``cfg.inner_tol`` or ``cfg.max_inner`` steps were taken."""
    z, _ = _solve(B_tilde, _entries(init), cfg.inner_tol, cfg.max_inner)
    return PhaseCode.from_entries(z)


# --- outer loop -----------------------------------------------------------


def _loaded_form(fixed: np.ndarray, grid: DesignGrid, cfg: SolverConfig, side: str):
    if cfg.matrix_free:
        B = MatrixFreeForm(fixed, grid, side)
    else:
        B = build_quadratic_form(fixed, grid, side)
    lam = dominant_eigenvalue(B, margin=cfg.loading_margin)
    return diagonal_load(B, lam)


def codesign(x0, y0, grid: DesignGrid, cfg: SolverConfig | None = None):
    """Alternately minimize the grid interference over ``x`` and ``y``.

    Returns ``(x, y, trace)``. The loop stops when the relative change of the
    objective between outer iterations drops below ``cfg.epsilon``, when the
    objective is zero up to round-off (where the relative test is undefined),
    or after ``cfg.max_outer`` iterations.
    """
    cfg = cfg or SolverConfig()
    x, y = _entries(x0), _entries(y0)
    _check_same_length(x, y)
    grid.validate_for(x.size)

    J = interference_objective(x, y, grid)
    trace = DesignTrace(objective_per_outer=[J])
    zero_floor = ZERO_OBJECTIVE_RTOL * x.size**2 * grid.n_points
    if J <= zero_floor:
        trace.converged = True
        return PhaseCode.from_entries(x), PhaseCode.from_entries(y), trace

    for s in range(1, cfg.max_outer + 1):
        x_prev = x
        x, tx = _solve(_loaded_form(y, grid, cfg, "x"), x, cfg.inner_tol, cfg.max_inner)
        partner = x if cfg.order == "gauss-seidel" else x_prev
        y, ty = _solve(_loaded_form(partner, grid, cfg, "y"), y, cfg.inner_tol, cfg.max_inner)

        J_new = interference_objective(x, y, grid)
        trace.objective_per_outer.append(J_new)
        trace.inner_iters_x.append(tx)
        trace.inner_iters_y.append(ty)
        logger.debug("outer %d: J=%.6g (inner %d/%d)", s, J_new, tx, ty)

        if J_new <= zero_floor or abs(J_new - J) < cfg.epsilon * J:
            trace.converged = True
            break
        J = J_new

    return PhaseCode.from_entries(x), PhaseCode.from_entries(y), trace
