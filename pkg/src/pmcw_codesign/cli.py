"""
Command-line front end.

    pmcw-codesign --mode design --config run.json --out results/
    pmcw-codesign --mode reproduce-paper --out fig2/ --seed 3

The config file is JSON; every key is optional and command-line flags win
over the file. See README.md for an annotated example.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .codesign import SolverConfig, codesign, random_pair
from .metrics import (
    interference_power_db,
    peak_sidelobe_db,
    ridge_peak_db,
    threshold_detect,
)
from .radarsim import Scenario, heatmap_pgm, paper_scenario, simulate
from .waveform import DesignGrid, IncompatibleCodesError, PhaseCode, interference_objective

logger = logging.getLogger("pmcw_codesign")

MODES = ("design", "simulate", "evaluate", "reproduce-paper")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


class InvariantError(RuntimeError):
    pass


@dataclass
class RunConfig:
    mode: str = "design"
    out: str | None = None
    seed: int = 0
    noise_seed: int = 0
    threshold_db: float = -20.0
    sweep: int = 1
    # grid; L=None means K-1, doppler_spacing=None means derive from v_max
    K: int | None = None
    L: int | None = None
    P: int = 4
    doppler_spacing: float | None = None
    v_max: float = 70.0
    solver: dict = field(default_factory=dict)
    scenario: dict | None = None  # None: the built-in two-vehicle scene
    scenario_path: str | None = None
    x_path: str | None = None
    y_path: str | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {path} is not valid JSON ({exc})") from None
        return cls.from_dict(raw, base=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base: Path | None = None) -> "RunConfig":
        raw = dict(raw)
        cfg = cls()
        grid = raw.pop("grid", {}) or {}
        for key in ("K", "L", "P", "doppler_spacing", "v_max"):
            if key in grid:
                setattr(cfg, key, grid.pop(key))
        if grid:
            raise ConfigError(f"grid: unknown field(s) {sorted(grid)}")
        codes = raw.pop("codes", {}) or {}
        cfg.x_path = _resolve(codes.pop("x", None), base)
        cfg.y_path = _resolve(codes.pop("y", None), base)
        if codes:
            raise ConfigError(f"codes: unknown field(s) {sorted(codes)}")
        scenario = raw.pop("scenario", None)
        if isinstance(scenario, str):
            cfg.scenario_path = _resolve(scenario, base)
        elif scenario is not None:
            cfg.scenario = scenario
        if "out" in raw:
            cfg.out = _resolve(raw.pop("out"), base)
        for key in ("mode", "seed", "noise_seed", "threshold_db", "sweep", "solver"):
            if key in raw:
                setattr(cfg, key, raw.pop(key))
        if raw:
            raise ConfigError(f"config: unknown field(s) {sorted(raw)}")
        return cfg

    # --- resolution ------------------------------------------------------

    def load_scenario(self) -> Scenario:
        try:
            if self.scenario_path is not None:
                scenario = Scenario.load(self.scenario_path)
            elif self.scenario is not None:
                scenario = Scenario.from_dict(self.scenario)
            else:
                scenario = paper_scenario(K=self.K or 50)
        except FileNotFoundError:
            raise ConfigError(f"scenario: file not found: {self.scenario_path}") from None
        except (ValueError, TypeError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"scenario: {exc}") from None
        return scenario.replace(noise_seed=self.noise_seed)

    def solver_config(self) -> SolverConfig:
        unknown = set(self.solver) - set(SolverConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"solver: unknown field(s) {sorted(unknown)}")
        try:
            return SolverConfig(**{**self.solver, "seed": self.seed})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"solver: {exc}") from None

    def design_grid(self, scenario: Scenario) -> DesignGrid:
        K = scenario.timing.K
        try:
            if self.doppler_spacing is not None:
                grid = DesignGrid(L=K - 1 if self.L is None else self.L, P=self.P,
                                  doppler_spacing=self.doppler_spacing)
            else:
                if not self.v_max >= 0:
                    raise ConfigError(f"v_max must be >= 0, got {self.v_max}")
                grid = DesignGrid.for_velocity(K, P=self.P, v_max=self.v_max,
                                               f_c=scenario.timing.f_c, T_c=scenario.timing.T_c,
                                               L=self.L)
            grid.validate_for(K)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"grid: {exc}") from None
        return grid

    def validate(self) -> tuple[Scenario, DesignGrid, SolverConfig]:
        """Check every field; returns the resolved scenario, grid and solver."""
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.out is None:
            raise ConfigError("out: an output directory is required")
        for name in ("seed", "noise_seed"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 0 <= value < 2**64:
                raise ConfigError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
        if not (isinstance(self.threshold_db, (int, float)) and self.threshold_db < 0):
            raise ConfigError(f"threshold_db must be negative, got {self.threshold_db!r}")
        if not isinstance(self.sweep, int) or self.sweep < 1:
            raise ConfigError(f"sweep must be a positive integer, got {self.sweep!r}")
        if self.K is not None and (not isinstance(self.K, int) or self.K < 2):
            raise ConfigError(f"K must be an integer >= 2, got {self.K!r}")
        if self.mode in ("simulate", "evaluate"):
            for name in ("x_path", "y_path"):
                if getattr(self, name) is None:
                    raise ConfigError(f"codes.{name[0]}: a code file is required for {self.mode}")
        solver = self.solver_config()
        scenario = self.load_scenario()
        if self.K is not None and self.K != scenario.timing.K:
            raise ConfigError(
                f"K: grid K={self.K} does not match scenario timing K={scenario.timing.K}"
            )
        grid = self.design_grid(scenario)
        return scenario, grid, solver

    def manifest(self, scenario: Scenario, grid: DesignGrid, solver: SolverConfig) -> dict:
        return {
            "package_version": __version__,
            "mode": self.mode,
            "seed": self.seed,
            "noise_seed": self.noise_seed,
            "threshold_db": self.threshold_db,
            "grid": {"K": scenario.timing.K, "L": grid.L, "P": grid.P,
                     "doppler_spacing": grid.doppler_spacing,
                     "v_max": None if self.doppler_spacing is not None else self.v_max},
            "solver": asdict(solver),
            "scenario": scenario.to_dict(),
            "codes": {"x": self.x_path, "y": self.y_path},
        }


def _resolve(path, base: Path | None):
    if path is None:
        return None
    path = Path(path)
    if base is not None and not path.is_absolute():
        path = base / path
    return str(path)


def _dumps(data) -> str:
    # -inf is the sentinel for an exactly zero objective; keep JSON strict
    def clean(v):
        if isinstance(v, float) and math.isinf(v):
            return "-inf" if v < 0 else "inf"
        if isinstance(v, dict):
            return {k: clean(u) for k, u in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(u) for u in v]
        return v
    return json.dumps(clean(data), indent=2) + "\n"


def _load_code(path: str, K: int, name: str) -> PhaseCode:
    try:
        code = PhaseCode.load(path)
    except FileNotFoundError:
        raise ConfigError(f"codes.{name}: file not found: {path}") from None
    except (ValueError, json.JSONDecodeError) as exc:
        raise ConfigError(f"codes.{name}: malformed code file {path}: {exc}") from None
    if code.K != K:
        raise IncompatibleCodesError(
            f"dimension mismatch: code {name} ({path}) has K={code.K}, scenario expects K={K}"
        )
    return code


def _check_design(x: PhaseCode, y: PhaseCode, trace, solver: SolverConfig) -> None:
    for name, code in (("x", x), ("y", y)):
        if np.max(np.abs(np.abs(code.entries()) - 1)) >= 1e-12:
            raise InvariantError(f"code {name} lost unit modulus")
    J = np.asarray(trace.objective_per_outer)
    if solver.order == "gauss-seidel" and np.any(np.diff(J) > 1e-9 * J[0]):
        raise InvariantError("objective trace increased between outer iterations")


# --- runs ------------------------------------------------------------------
# Each run returns {filename: text or bytes}; files are written only after
# every computation and check has succeeded.


def run_design(cfg: RunConfig, scenario: Scenario, grid: DesignGrid, solver: SolverConfig) -> dict:
    K = scenario.timing.K
    x0, y0 = random_pair(K, cfg.seed)
    start = time.perf_counter()
    x, y, trace = codesign(x0, y0, grid, solver)
    wall = time.perf_counter() - start
    _check_design(x, y, trace, solver)
    J0, J1 = trace.initial_objective, trace.final_objective
    summary = {
        "initial_objective": J0,
        "final_objective": J1,
        "improvement_db": 10 * math.log10(J0 / J1) if J1 > 0 else float("inf"),
        "initial_interference_power_db": interference_power_db(x0, y0, grid),
        "final_interference_power_db": interference_power_db(x, y, grid),
        "outer_iterations": trace.n_outer,
        "inner_iterations_total": int(sum(trace.inner_iters_x) + sum(trace.inner_iters_y)),
        "converged": trace.converged,
        "wall_time_s": wall,
    }
    print(f"design K={K} L={grid.L} P={grid.P}: J {J0:.4g} -> {J1:.4g} "
          f"({summary['improvement_db']:.2f} dB) in {trace.n_outer} outer iterations")
    return {"x.code": x.to_text(), "y.code": y.to_text(), "trace.csv": trace.to_csv(),
            "summary.json": _dumps(summary)}


def run_simulate(cfg: RunConfig, scenario: Scenario, grid: DesignGrid, solver: SolverConfig) -> dict:
    K = scenario.timing.K
    x = _load_code(cfg.x_path, K, "x")
    y = _load_code(cfg.y_path, K, "y")
    rd = simulate(x, y, scenario)
    truth = scenario.target_bin() if scenario.targets else None
    report = threshold_detect(rd, cfg.threshold_db, truth)
    print(report.summary())
    return {"rd_map.csv": rd.to_csv(), "rd_map.pgm": rd.to_pgm(),
            "detections.json": report.to_json()}


def run_evaluate(cfg: RunConfig, scenario: Scenario, grid: DesignGrid, solver: SolverConfig) -> dict:
    K = scenario.timing.K
    x = _load_code(cfg.x_path, K, "x")
    y = _load_code(cfg.y_path, K, "y")
    result = {
        "objective": interference_objective(x, y, grid),
        "interference_power_db": interference_power_db(x, y, grid),
        "peak_sidelobe_db_x": peak_sidelobe_db(x),
        "peak_sidelobe_db_y": peak_sidelobe_db(y),
    }
    print(f"interference {result['interference_power_db']:.2f} dB per grid point and chip")
    return {"evaluation.json": _dumps(result)}


def _case(x: PhaseCode, y: PhaseCode, scenario: Scenario, grid: DesignGrid, threshold_db: float):
    rd = simulate(x, y, scenario)
    quiet = scenario.replace(noise_variance=0.0)
    target_only = simulate(x, y, quiet.replace(interferer=None))
    interference_only = simulate(x, y, quiet.replace(targets=()))
    report = threshold_detect(rd, threshold_db, scenario.target_bin())
    stats = {
        "objective": interference_objective(x, y, grid),
        "interference_power_db": interference_power_db(x, y, grid),
        "interference_ridge_peak_db": ridge_peak_db(interference_only, target_only),
        "peak_sidelobe_db_x": peak_sidelobe_db(x),
        "detections": len(report.detections),
        "false_alarms": len(report.false_alarms()),
        "target_detected": report.hits_target(),
    }
    return rd, report, stats


def run_reproduce_paper(cfg: RunConfig, scenario: Scenario, grid: DesignGrid, solver: SolverConfig) -> dict:
    if not scenario.targets or scenario.interferer is None:
        raise ConfigError("scenario: reproduce-paper needs a target and an interferer")
    K = scenario.timing.K
    x0, y0 = random_pair(K, cfg.seed)
    x, y, trace = codesign(x0, y0, grid, solver)
    _check_design(x, y, trace, solver)
    rd_random, rep_random, random_stats = _case(x0, y0, scenario, grid, cfg.threshold_db)
    rd_designed, rep_designed, designed_stats = _case(x, y, scenario, grid, cfg.threshold_db)

    comparison = {
        "random": random_stats,
        "designed": designed_stats,
        "objective_improvement_db": 10 * math.log10(random_stats["objective"] / designed_stats["objective"]),
        "ridge_suppression_db": random_stats["interference_ridge_peak_db"]
        - designed_stats["interference_ridge_peak_db"],
        "outer_iterations": trace.n_outer,
    }
    print(f"ridge peak: random {random_stats['interference_ridge_peak_db']:.1f} dB, "
          f"designed {designed_stats['interference_ridge_peak_db']:.1f} dB; "
          f"objective improvement {comparison['objective_improvement_db']:.1f} dB")
    db_random, db_designed = rd_random.magnitude_db(), rd_designed.magnitude_db()
    gap = np.full((db_random.shape[0], 4), min(db_random.min(), db_designed.min()))
    return {
        "x_random.code": x0.to_text(), "y_random.code": y0.to_text(),
        "x.code": x.to_text(), "y.code": y.to_text(), "trace.csv": trace.to_csv(),
        "rd_random.csv": rd_random.to_csv(), "rd_random.pgm": rd_random.to_pgm(),
        "rd_designed.csv": rd_designed.to_csv(), "rd_designed.pgm": rd_designed.to_pgm(),
        "rd_side_by_side.pgm": heatmap_pgm(np.hstack([db_random, gap, db_designed])),
        "detections_random.json": rep_random.to_json(),
        "detections_designed.json": rep_designed.to_json(),
        "comparison.json": _dumps(comparison),
    }


RUNNERS = {"design": run_design, "simulate": run_simulate, "evaluate": run_evaluate,
           "reproduce-paper": run_reproduce_paper}


def execute(cfg: RunConfig) -> Path:
    """Validate, run one pipeline, and write its outputs plus ``manifest.json``."""
    scenario, grid, solver = cfg.validate()
    outputs = RUNNERS[cfg.mode](cfg, scenario, grid, solver)
    outputs["manifest.json"] = _dumps(cfg.manifest(scenario, grid, solver))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in outputs.items():
        target = out / name
        if isinstance(content, bytes):
            target.write_bytes(content)
        else:
            target.write_text(content)
    return out


def _sweep_one(cfg: RunConfig) -> str:
    return str(execute(cfg))


def sweep_configs(cfg: RunConfig) -> list[RunConfig]:
    """One config per sweep member, each writing to its own subdirectory."""
    runs = []
    for i in range(cfg.sweep):
        if cfg.mode == "simulate":
            member = replace(cfg, noise_seed=cfg.noise_seed + i, sweep=1)
        else:
            member = replace(cfg, seed=cfg.seed + i, noise_seed=cfg.noise_seed + i, sweep=1)
        member.out = str(Path(cfg.out) / f"run_{i:03d}")
        runs.append(member)
    return runs


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmcw-codesign", description=__doc__.strip().splitlines()[0])
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="code initialization seed")
    p.add_argument("--noise-seed", type=int, help="receiver noise seed")
    p.add_argument("--threshold-db", type=float, help="detection threshold relative to peak")
    p.add_argument("--sweep", type=int, help="fan out N consecutive seeds to a worker pool")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
        for flag, attr in (("mode", "mode"), ("out", "out"), ("seed", "seed"),
                           ("noise_seed", "noise_seed"), ("threshold_db", "threshold_db"),
                           ("sweep", "sweep")):
            value = getattr(args, flag)
            if value is not None:
                setattr(cfg, attr, value)
        cfg.validate()
        if cfg.sweep > 1:
            if cfg.mode == "evaluate":
                raise ConfigError("sweep: evaluate has no randomness to sweep")
            members = sweep_configs(cfg)
            with ProcessPoolExecutor() as pool:
                for path in pool.map(_sweep_one, members):
                    print(f"wrote {path}")
        else:
            print(f"wrote {execute(cfg)}")
    except ConfigError as exc:
        print(f"pmcw-codesign: error: {exc}", file=sys.stderr)
        return 2
    except (IncompatibleCodesError, InvariantError) as exc:
        print(f"pmcw-codesign: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
