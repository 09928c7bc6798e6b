"""Command-line front end.

    epirep <equilibria|simulate|bifurcate|slowfast> --config FILE
           [--gamma X] [--eps X] [--out DIR] [--include-nonphysical]

Configuration is a flat ``key = value`` text file with ``#`` comments; flags
override file values.  All outputs are CSV files written atomically
(write-then-rename), so identical configs produce byte-identical artifacts.
Exit codes: 0 success, 2 config error, 3 numerical failure.  The environment
variable EPIREP_THREADS caps the parallelism of independent branch traces.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .continuation import (
    Branch,
    BranchTraceError,
    bifurcations_csv,
    branches_csv,
    detect_transcritical,
    trace_branch,
)
from .equilibria import (
    EQUILIBRIUM_IDS,
    BoundaryCaseError,
    DegenerateParametersError,
    all_equilibria,
    regime,
)
from .integrate import IntegratorConfig, StiffnessError, integrate, trajectory_csv
from .model import ModelParams, SystemState
from .slowfast import delay_csv, measure_bifurcation_delay

__all__ = ["main", "ConfigError", "RunConfig", "load_run_config"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EQUILIBRIA_HEADER = (
    "id,exists,y,z_S,z_I,re_lambda_1,im_lambda_1,re_lambda_2,im_lambda_2,"
    "re_lambda_3,im_lambda_3,stability,regime"
)

_PARAM_KEYS = ("c_P", "alpha", "beta_u", "beta_p", "c_IU", "c_IP", "L", "gamma")

# key -> (converter, default); model parameters have no default and must be
# present in the config file.
_OPTION_KEYS = {
    "method": (str, "rk45_adaptive"),
    "dt": (float, 0.01),
    "abs_tol": (float, 1e-8),
    "rel_tol": (float, 1e-8),
    "t_end": (float, 400.0),
    "record_every": (int, 1),
    "convergence_eps": (float, 1e-9),
    "convergence_window": (float, 10.0),
    "s0": ("triple", (0.3, 0.5, 0.5)),
    "gamma_range": ("pair", (0.01, 0.25)),
    "n_steps": (int, 400),
    "eps": (float, 1.0),
    "mode": (str, "fast-behavior"),
    "delta": (float, 0.01),
    "include_nonphysical": ("bool", False),
    "output_dir": (str, "."),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    method: str
    dt: float
    abs_tol: float
    rel_tol: float
    t_end: float
    record_every: int
    convergence_eps: float
    convergence_window: float
    s0: tuple[float, float, float]
    gamma_range: tuple[float, float]
    n_steps: int
    eps: float
    mode: str
    delta: float
    include_nonphysical: bool
    output_dir: Path

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(
            method=self.method,
            dt=self.dt,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            t_end=self.t_end,
            record_every=self.record_every,
            convergence_eps=self.convergence_eps,
            convergence_window=self.convergence_window,
        )


def _parse_kv_file(path: Path) -> dict[str, str]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _convert(key: str, value: str):
    kind = _OPTION_KEYS[key][0] if key in _OPTION_KEYS else float
    try:
        if kind == "bool":
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if kind == "pair":
            a, b = (float(v) for v in value.split(","))
            return (a, b)
        if kind == "triple":
            a, b, c = (float(v) for v in value.split(","))
            return (a, b, c)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def load_run_config(path: Path, overrides: dict | None = None) -> RunConfig:
    """Parse a config file, apply CLI overrides, and validate everything."""
    raw = _parse_kv_file(path)

    known = set(_PARAM_KEYS) | set(_OPTION_KEYS)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    values: dict = {}
    for key in _PARAM_KEYS:
        if key in raw:
            values[key] = _convert(key, raw[key])
    for key, (_, default) in _OPTION_KEYS.items():
        values[key] = _convert(key, raw[key]) if key in raw else default

    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val

    missing = [k for k in _PARAM_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")

    try:
        params = ModelParams(**{k: values[k] for k in _PARAM_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if values["mode"] not in ("fast-behavior", "fast-epidemic"):
        raise ConfigError(f"mode must be fast-behavior or fast-epidemic, got {values['mode']!r}")
    if not 0.0 < values["eps"] <= 1.0:
        raise ConfigError(f"eps must lie in (0, 1], got {values['eps']}")

    return RunConfig(
        params=params,
        output_dir=Path(values["output_dir"]),
        **{k: values[k] for k in _OPTION_KEYS if k != "output_dir"},
    )


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _thread_cap() -> int:
    env = os.environ.get("EPIREP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"EPIREP_THREADS must be an integer, got {env!r}")
    return min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_equilibria(rc: RunConfig) -> int:
    try:
        row = regime(rc.params)
    except (BoundaryCaseError, DegenerateParametersError) as exc:
        print(f"epirep: boundary regime: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    lines = [EQUILIBRIA_HEADER]
    for rep in all_equilibria(rc.params):
        if rep.point is None:
            coords = "nan,nan,nan"
            eigs = ",".join(["nan"] * 6)
        else:
            coords = f"{rep.point.y:.17g},{rep.point.z_S:.17g},{rep.point.z_I:.17g}"
            eigs = ",".join(f"{z.real:.17g},{z.imag:.17g}" for z in rep.eigenvalues)
        lines.append(f"{rep.id},{1 if rep.exists else 0},{coords},{eigs},{rep.stability},\"{row}\"")
        marker = rep.stability if rep.exists else "absent"
        print(f"{rep.id}: {marker}")
    print(f"regime: {row}")
    _atomic_write(rc.output_dir / "equilibria.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_simulate(rc: RunConfig, eps_y: float = 1.0, eps_z: float = 1.0,
                 filename: str = "trajectory.csv"):
    tr = integrate(rc.params, SystemState(*rc.s0), rc.integrator(), eps_y, eps_z)
    _atomic_write(rc.output_dir / filename, trajectory_csv(tr))
    if tr.converged_to is not None:
        c = tr.converged_to
        print(f"converged to ({c.y:.12g}, {c.z_S:.12g}, {c.z_I:.12g}) at t={tr.times[-1]:.6g}")
    return tr


def cmd_bifurcate(rc: RunConfig) -> int:
    branches: list[Branch] = []
    failures: list[str] = []

    def trace(eq_id: str):
        return trace_branch(rc.params, eq_id, rc.gamma_range, rc.n_steps,
                            include_nonphysical=rc.include_nonphysical)

    with ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        futures = {eq_id: pool.submit(trace, eq_id) for eq_id in EQUILIBRIUM_IDS}
        for eq_id, fut in futures.items():
            try:
                branches.append(fut.result())
            except BranchTraceError as exc:
                failures.append(eq_id)
                print(f"epirep: branch {eq_id} failed: {exc}", file=sys.stderr)

    points = detect_transcritical(rc.params, rc.gamma_range)
    _atomic_write(rc.output_dir / "branches.csv", branches_csv(branches))
    _atomic_write(rc.output_dir / "bifurcations.csv", bifurcations_csv(points))
    for bp in points:
        print(f"{bp.label}: gamma={bp.gamma_star:.12g} ({bp.branches[0]} <-> {bp.branches[1]})")
    return EXIT_NUMERIC if failures else EXIT_OK


def cmd_slowfast(rc: RunConfig) -> int:
    if rc.mode == "fast-epidemic":
        eps_y, eps_z = rc.eps, 1.0
    else:
        eps_y, eps_z = 1.0, rc.eps
    tr = cmd_simulate(rc, eps_y=eps_y, eps_z=eps_z)
    if rc.mode == "fast-epidemic":
        m = measure_bifurcation_delay(tr, rc.params, rc.delta)
        _atomic_write(rc.output_dir / "delay.csv",
                      delay_csv(rc.params.gamma, rc.eps, rc.delta, m))
        if m is None:
            print("bifurcation delay: not applicable")
        else:
            print(f"bifurcation delay: {m.delay:.12g} "
                  f"(t_cross={m.t_cross:.12g}, t_takeoff={m.t_takeoff:.12g})")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epirep",
        description="Coupled SIS-epidemic / replicator dynamics toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("equilibria", "simulate", "bifurcate", "slowfast"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--gamma", type=float, default=None)
        sp.add_argument("--out", type=str, default=None)
        if name == "slowfast":
            sp.add_argument("--eps", type=float, default=None)
        if name == "bifurcate":
            sp.add_argument("--include-nonphysical", action="store_true", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {"gamma": args.gamma}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if getattr(args, "eps", None) is not None:
        overrides["eps"] = args.eps
    if getattr(args, "include_nonphysical", None) is not None:
        overrides["include_nonphysical"] = args.include_nonphysical

    try:
        rc = load_run_config(args.config, overrides)
    except ConfigError as exc:
        print(f"epirep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "equilibria":
            return cmd_equilibria(rc)
        if args.command == "simulate":
            cmd_simulate(rc)
            return EXIT_OK
        if args.command == "bifurcate":
            return cmd_bifurcate(rc)
        if args.command == "slowfast":
            return cmd_slowfast(rc)
    except (StiffnessError, BranchTraceError) as exc:
        print(f"epirep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"epirep: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
