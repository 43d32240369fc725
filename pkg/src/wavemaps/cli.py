"""Batch front door: configuration, seeded experiment execution, and
CSV/JSON emission for every experiment family.

Every run writes one or more CSV artifacts plus a metadata JSON sidecar
containing the full configuration, the RNG contract, and run summaries, so
any artifact can be reproduced bit-for-bit from its sidecar.
"""

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import __version__
from .spectral import Grid1D
from .randomdata import brownian_pipeline, linear_waves
from .enhanced import ds_norm, hhl_scaling_report, window_waves
from .solver import (
    SolverConfig,
    convergence_experiment,
    localized_waves,
    null_to_cartesian,
    solve_picard,
)
from .illposed import divergence_scan

COMMANDS = ("gen-path", "hhl", "solve", "converge", "illposed", "norms")

RNG_CONTRACT = ("numpy Generator(PCG64); independent streams derived via "
                "SeedSequence(seed).spawn: stream 0 -> W, stream 1 -> Wbar")

FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Configuration constraint violation; names the offending field."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    seed: int = 0
    dimension: int = 3
    grid_points: int = 1024
    data_points: int = 8192
    eps: float = 2.0**-4
    eps_list: tuple = ()
    tau: float = 0.1
    x0: float = 0.0
    theta: float = 1.0
    s: float = 0.45
    r: float = 0.74
    delta: float = 0.01
    eta: float = 0.001
    kappa0: int = 4
    kappa_max: int = 9
    b: int = 2
    g: int = 3
    eps_loc: float = 0.01
    out_dir: str = ""


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be a nonnegative integer")
    if cfg.dimension < 2:
        raise ConfigError("dimension", "must be at least 2")
    for name in ("grid_points", "data_points"):
        value = getattr(cfg, name)
        if value < 8 or value % 2:
            raise ConfigError(name, "must be an even integer >= 8")
    if cfg.eps <= 0:
        raise ConfigError("eps", "must be positive")
    for e in cfg.eps_list:
        if e <= 0:
            raise ConfigError("eps_list", "entries must be positive")
    if not 0 < cfg.tau <= 1:
        raise ConfigError("tau", "must satisfy 0 < tau <= 1")
    if not 0 < cfg.s < 0.5:
        raise ConfigError("s", "must be < 1/2 (and positive)")
    if not 0.5 < cfg.r < 0.75:
        raise ConfigError("r", "must satisfy 1/2 < r < 3/4")
    if cfg.delta <= 0:
        raise ConfigError("delta", "must be positive")
    if cfg.eta <= 0:
        raise ConfigError("eta", "must be positive")
    if cfg.kappa0 < 1:
        raise ConfigError("kappa0", "must be at least 1")
    if cfg.kappa_max <= cfg.kappa0:
        raise ConfigError("kappa_max", "must exceed kappa0")
    if cfg.b**cfg.g < 8:
        raise ConfigError("g", "frequency ratio b**g must be at least 8")
    if cfg.eps_loc <= 0:
        raise ConfigError("eps_loc", "must be positive")
    return cfg


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _coerce(name: str, value):
    kind = ExperimentConfig.__dataclass_fields__[name].type
    try:
        if name == "eps_list":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v]
            return tuple(float(v) for v in value)
        if kind in (int, "int"):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            if isinstance(value, str) and not value.lstrip("+-").isdigit():
                raise ValueError
            return int(value)
        if kind in (float, "float"):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot interpret {value!r}") from None


def load_config(path: str | None = None, overrides: dict | None = None
                ) -> ExperimentConfig:
    """Read a flat JSON config (keys mirror the flag names), then apply
    flag overrides on top; validate the result."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config", "file must hold a JSON object")
        for key, value in raw.items():
            name = key.replace("-", "_")
            if name not in _FIELDS:
                raise ConfigError(key, "unknown configuration key")
            values[name] = _coerce(name, value)
    for key, value in (overrides or {}).items():
        name = key.replace("-", "_")
        if name not in _FIELDS:
            raise ConfigError(key, "unknown configuration key")
        if value is not None:
            values[name] = _coerce(name, value)
    if "command" not in values:
        raise ConfigError("command", "is required")
    return _validate(ExperimentConfig(**values))


# ---------------------------------------------------------------------------
# artifact emission

def _out_dir(cfg: ExperimentConfig) -> str:
    return cfg.out_dir or os.environ.get("WAVEMAPS_OUT", ".")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_value(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def write_csv(path: str, header: list, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_format_value(v) for v in row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def write_metadata(path: str, cfg: ExperimentConfig, extra: dict) -> None:
    meta = {
        "version": __version__,
        "rng": RNG_CONTRACT,
        "config": asdict(cfg),
        **extra,
    }
    meta["config"]["eps_list"] = list(cfg.eps_list)
    _atomic_write(path, json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _paths(cfg: ExperimentConfig, stem: str) -> tuple[str, str]:
    base = os.path.join(_out_dir(cfg), stem)
    return base + ".csv", base + "_meta.json"


# ---------------------------------------------------------------------------
# command drivers

def _data_grid(cfg: ExperimentConfig) -> Grid1D:
    return Grid1D(cfg.data_points, np.pi)


def _solver_config(cfg: ExperimentConfig) -> SolverConfig:
    return SolverConfig(dimension=cfg.dimension, tau=cfg.tau, theta=cfg.theta,
                        epsilon=cfg.eps, s=cfg.s, r=cfg.r, delta=cfg.delta,
                        eta=cfg.eta, grid_points=cfg.grid_points,
                        data_points=cfg.data_points)


def _run_gen_path(cfg: ExperimentConfig) -> int:
    grid = _data_grid(cfg)
    _w, _wbar, path, velocity = brownian_pipeline(
        cfg.seed, grid, cfg.dimension, cfg.eps)
    D = cfg.dimension
    header = (["x"] + [f"B{k+1}" for k in range(D)]
              + [f"V{k+1}" for k in range(D)])
    rows = np.column_stack([grid.points, path.samples.T, velocity.V.T])
    csv_path, meta_path = _paths(cfg, f"path_seed{cfg.seed}_eps{cfg.eps:g}")
    write_csv(csv_path, header, rows)
    write_metadata(meta_path, cfg, {
        "artifact": os.path.basename(csv_path),
        "basepoint": list(path.basepoint),
        "constraint_drift": path.constraint_drift,
    })
    return 0


def _windowed_waves(cfg: ExperimentConfig):
    grid = _data_grid(cfg)
    _w, _wbar, path, velocity = brownian_pipeline(
        cfg.seed, grid, cfg.dimension, cfg.eps)
    return window_waves(linear_waves(path, velocity, cfg.theta))


def _run_hhl(cfg: ExperimentConfig) -> int:
    waves = _windowed_waves(cfg)
    report = hhl_scaling_report(waves, cfg.s, r=cfg.r, ratio_sweep=False)
    header = ["sign1", "sign2", "m", "n", "M", "N", "t", "norm"]
    csv_path, meta_path = _paths(cfg, f"hhl_seed{cfg.seed}_eps{cfg.eps:g}")
    write_csv(csv_path, header, report.rows)
    write_metadata(meta_path, cfg, {
        "artifact": os.path.basename(csv_path),
        "column": {str(M): v for M, v in sorted(report.column.items())},
        "slope": report.slope,
        "intercept": report.intercept,
        "r_squared": report.r_squared,
    })
    return 0


def _run_norms(cfg: ExperimentConfig) -> int:
    waves = _windowed_waves(cfg)
    enh = ds_norm(waves, cfg.s)
    header = ["sign1", "sign2", "m", "n", "M", "N", "norm"]
    rows = [list(key) + [value] for key, value in sorted(enh.table.items())]
    csv_path, meta_path = _paths(cfg, f"norms_seed{cfg.seed}_eps{cfg.eps:g}")
    write_csv(csv_path, header, rows)
    write_metadata(meta_path, cfg, {
        "artifact": os.path.basename(csv_path),
        "ds_norm": enh.ds_value,
        "linear_branch": enh.linear_branch,
        "same_branch": enh.same_branch,
        "mixed_branch": enh.mixed_branch,
        "t_samples": list(enh.t_samples),
    })
    return 0


def _run_solve(cfg: ExperimentConfig) -> int:
    sol_cfg = _solver_config(cfg)
    waves, loc = localized_waves(cfg.seed, sol_cfg, cfg.x0)
    shift = loc.path.basepoint
    stem = f"solution_seed{cfg.seed}_eps{cfg.eps:g}"
    csv_path, meta_path = _paths(cfg, stem)
    try:
        state, diag = solve_picard(waves, sol_cfg, shift)
    except RuntimeError as exc:
        write_metadata(meta_path, cfg, {
            "artifact": None,
            "error": str(exc),
            "converged": False,
        })
        return 1

    D = cfg.dimension
    grid = state.grid
    n = grid.num_points
    uu = np.repeat(grid.points, n)
    vv = np.tile(grid.points, n)
    phi = state.values + shift[:, None, None]
    header = ["u", "v"] + [f"phi{k+1}" for k in range(D)]
    rows = np.column_stack([uu, vv] + [phi[k].ravel() for k in range(D)])
    write_csv(csv_path, header, rows)

    t_grid = np.linspace(-cfg.tau, cfg.tau, 9)
    pos, vel = null_to_cartesian(state, t_grid)
    slice_header = (["t", "x"] + [f"phi{k+1}" for k in range(D)]
                    + [f"dtphi{k+1}" for k in range(D)])
    slice_rows = []
    for j, t in enumerate(t_grid):
        block = np.column_stack(
            [np.full(n, t), grid.points,
             (pos[j] + shift[:, None]).T, vel[j].T])
        slice_rows.append(block)
    slices_path = os.path.join(_out_dir(cfg), stem + "_slices.csv")
    write_csv(slices_path, slice_header, np.vstack(slice_rows))

    write_metadata(meta_path, cfg, {
        "artifact": os.path.basename(csv_path),
        "slices": os.path.basename(slices_path),
        "interpolation": "trigonometric",
        "basepoint": list(shift),
        "converged": diag.converged,
        "iterations": diag.iterations,
        "increments": diag.increments,
    })
    return 0


def _dyadic_exponents(cfg: ExperimentConfig) -> list:
    eps_values = cfg.eps_list or tuple(2.0**-i for i in range(4, 10))
    exponents = []
    for e in eps_values:
        i = -math.log2(e)
        if abs(i - round(i)) > 1e-12:
            raise ConfigError("eps_list", f"{e!r} is not a dyadic 2**-i")
        exponents.append(int(round(i)))
    return exponents


def _run_converge(cfg: ExperimentConfig) -> int:
    sol_cfg = _solver_config(cfg)
    exponents = _dyadic_exponents(cfg)
    report = convergence_experiment(cfg.seed, sol_cfg, exponents, cfg.x0)
    header = ["eps", "d_c0cs", "d_c1cs1", "data_diff"]
    rows = [(row.eps, row.d_c0cs, row.d_c1cs1, row.data_diff)
            for row in report.rows]
    csv_path, meta_path = _paths(cfg, f"convergence_seed{cfg.seed}")
    write_csv(csv_path, header, rows)
    write_metadata(meta_path, cfg, {
        "artifact": os.path.basename(csv_path),
        "exponents": exponents,
        "errors": {str(k): v for k, v in report.errors.items()},
    })
    return 1 if report.errors else 0


def _run_illposed(cfg: ExperimentConfig) -> int:
    scan = divergence_scan(cfg.kappa0, cfg.kappa_max, t=1.0,
                           eps_loc=cfg.eps_loc, base=cfg.b, gap=cfg.g)
    header = ["kappa", "J", "predicted", "residual", "psi1_norm", "psi2_norm"]
    rows = [(r.kappa, r.J, r.predicted, r.residual, r.psi1_norm, r.psi2_norm)
            for r in scan.rows]
    csv_path, meta_path = _paths(
        cfg, f"divergence_k{cfg.kappa0}-{cfg.kappa_max}")
    write_csv(csv_path, header, rows)
    write_metadata(meta_path, cfg, {
        "artifact": os.path.basename(csv_path),
        "slope": scan.slope,
        "intercept": scan.intercept,
        "r_squared": scan.r_squared,
        "predicted_slope": scan.predicted_slope,
        "norm_kappa_cap": scan.norm_kappa_cap,
    })
    return 0


_DRIVERS = {
    "gen-path": _run_gen_path,
    "hhl": _run_hhl,
    "solve": _run_solve,
    "converge": _run_converge,
    "illposed": _run_illposed,
    "norms": _run_norms,
}


def run(cfg: ExperimentConfig) -> int:
    """Dispatch a validated config; returns the process exit status."""
    return _DRIVERS[cfg.command](cfg)


# ---------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavemaps",
        description="Seeded experiments for wave maps with Brownian data")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file (flags override)")
    for f in fields(ExperimentConfig):
        if f.name == "command":
            continue
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {name: getattr(args, name) for name in _FIELDS
                 if name != "command" and getattr(args, name) is not None}
    overrides["command"] = args.command
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
