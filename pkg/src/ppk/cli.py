"""Command-line harness: single-point computations, sweeps, scaling tables.

All physical inputs are taken in units of kappa (kappa itself defaults to 1
and is recorded in every output). Outputs are CSV files with '#'-metadata
headers; sweeps flush a manifest per completed point and can resume with
--resume, reproducing the uninterrupted file byte for byte.

Exit codes: 0 success, 1 validation error, 2 numerical failure (the
failing sweep point is named).
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from . import __version__, fcs, io, model, trajectories
from . import wigner as wigner_mod
from .errors import PpkError

DEFAULT_THETA = 0.5 * math.pi

TASK_COLUMNS = {
    "steady_state": ["g", "delta", "u", "kappa", "dim", "n_mean", "n_scaled",
                     "purity", "tail_population", "residual_norm"],
    "phase_diagram": ["g", "delta", "u", "kappa", "dim", "n_mean", "n_scaled",
                      "purity", "tail_population", "residual_norm"],
    "diffusion": ["g", "delta", "u", "kappa", "scheme", "theta", "dim",
                  "mean_current", "diffusion", "residual_norm"],
    "spectrum": ["point", "g", "delta", "u", "kappa", "scheme", "theta", "dim",
                 "omega", "value"],
    "wigner": ["point", "x", "p", "w"],
    "trajectory": ["point", "time", "current", "n_mean", "x_mean", "p_mean", "n_var"],
    "scaling": ["g", "u", "kappa", "kappa_over_u", "scheme", "theta",
                "delta_at_max", "d_max", "dim"],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _scheme_from(name: str, theta: float) -> fcs.MeasurementScheme:
    if name == "pd":
        return fcs.photodetection()
    if name == "hom":
        return fcs.homodyne(theta)
    raise ValueError(f"unknown scheme {name!r} (expected pd or hom)")


def _params_from(values: dict) -> model.ModelParams:
    return model.ModelParams(delta=float(values.get("delta", 0.0)),
                             g=float(values.get("g", 0.0)),
                             u=float(values["u"]),
                             kappa=float(values.get("kappa", 1.0)))


def _base_metadata(task: str, values: dict) -> dict:
    md = {"tool": f"ppk {__version__}", "task": task}
    for key in sorted(values):
        md[f"param.{key}"] = values[key]
    return md


@dataclass
class SweepSpec:
    task: str
    out: str
    fixed: dict
    axes: list = field(default_factory=list)  # (name, start, stop, count, spacing)
    seed: int = 0
    workers: int = 1

    def validate(self):
        if self.task not in TASK_COLUMNS:
            raise ValueError(f"unknown task {self.task!r}")
        if not self.out:
            raise ValueError("output path required")
        allowed = {"delta", "g", "u", "kappa", "theta", "kappa_over_u"}
        for name, start, stop, count, spacing in self.axes:
            if name not in allowed:
                raise ValueError(f"axis over unknown parameter {name!r}")
            if count < 1:
                raise ValueError(f"axis {name}: count must be >= 1")
            if spacing not in ("linear", "log"):
                raise ValueError(f"axis {name}: spacing must be linear or log")
            if spacing == "log" and (start <= 0 or stop <= 0):
                raise ValueError(f"axis {name}: log spacing needs positive bounds")

    def axis_values(self):
        out = []
        for name, start, stop, count, spacing in self.axes:
            if count == 1:
                vals = np.array([start])
            elif spacing == "log":
                vals = np.geomspace(start, stop, count)
            else:
                vals = np.linspace(start, stop, count)
            out.append((name, vals))
        return out

    def points(self):
        axes = self.axis_values()
        if not axes:
            return [dict(self.fixed)]
        grids = np.meshgrid(*[v for _, v in axes], indexing="ij")
        names = [n for n, _ in axes]
        pts = []
        for idx in np.ndindex(grids[0].shape):
            p = dict(self.fixed)
            for name, grid in zip(names, grids):
                p[name] = float(grid[idx])
            pts.append(p)
        return pts

    def key(self) -> str:
        return repr((self.task, sorted(self.fixed.items()), self.axes, self.seed))


def _steady_rows(point: dict, _seed: int, _index: int) -> list:
    params = _params_from(point)
    dim = point.get("dim")
    stats = fcs.CurrentStatistics(params, dim=int(dim) if dim else None)
    n_mean = float(np.real(np.trace(np.diag(np.arange(stats.dim)) @ stats.rho)))
    purity = float(np.real(np.trace(stats.rho @ stats.rho)))
    return [{"g": params.g, "delta": params.delta, "u": params.u, "kappa": params.kappa,
             "dim": stats.dim, "n_mean": n_mean,
             "n_scaled": n_mean * params.u / params.kappa,
             "purity": purity, "tail_population": stats.tail,
             "residual_norm": stats.residual}]


def _diffusion_rows(point: dict, _seed: int, _index: int) -> list:
    params = _params_from(point)
    scheme_name = point.get("scheme", "pd")
    theta = float(point.get("theta", DEFAULT_THETA))
    scheme = _scheme_from(scheme_name, theta)
    dim = point.get("dim")
    stats = fcs.CurrentStatistics(params, dim=int(dim) if dim else None)
    return [{"g": params.g, "delta": params.delta, "u": params.u, "kappa": params.kappa,
             "scheme": scheme.short_name,
             "theta": theta if scheme.kind == "homodyne" else float("nan"),
             "dim": stats.dim, "mean_current": stats.mean_current(scheme),
             "diffusion": stats.diffusion(scheme), "residual_norm": stats.residual}]


def _spectrum_rows(point: dict, _seed: int, index: int) -> list:
    params = _params_from(point)
    scheme = _scheme_from(point.get("scheme", "pd"), float(point.get("theta", DEFAULT_THETA)))
    omegas = np.linspace(float(point.get("omega_min", 0.0)),
                         float(point.get("omega_max", 10.0)),
                         int(point.get("omega_count", 21)))
    dim = point.get("dim")
    stats = fcs.CurrentStatistics(params, dim=int(dim) if dim else None)
    result = stats.spectrum(scheme, omegas)
    theta = scheme.theta if scheme.kind == "homodyne" else float("nan")
    return [{"point": index, "g": params.g, "delta": params.delta, "u": params.u,
             "kappa": params.kappa, "scheme": scheme.short_name, "theta": theta,
             "dim": stats.dim, "omega": float(om), "value": float(val)}
            for om, val in zip(result.omegas, result.values)]


def _wigner_rows(point: dict, _seed: int, index: int) -> list:
    params = _params_from(point)
    dim = point.get("dim")
    stats = fcs.CurrentStatistics(params, dim=int(dim) if dim else None)
    if point.get("half_width"):
        half = float(point["half_width"])
        npts = int(point.get("points", 101))
        xs = np.linspace(-half, half, npts)
        ps = xs.copy()
    else:
        xs, ps = wigner_mod.default_grid(params, stats.rho)
    grid = wigner_mod.wigner(stats.rho, xs, ps)
    rows = []
    for i, x in enumerate(grid.x_values):
        for j, p in enumerate(grid.p_values):
            rows.append({"point": index, "x": float(x), "p": float(p),
                         "w": float(grid.values[i, j])})
    return rows


def _trajectory_rows(point: dict, seed: int, index: int) -> list:
    params = _params_from(point)
    scheme = _scheme_from(point.get("scheme", "pd"), float(point.get("theta", DEFAULT_THETA)))
    dim = point.get("dim")
    config = trajectories.TrajectoryConfig(
        scheme=scheme,
        t_final=float(point.get("t_final", 50.0)),
        dt=float(point.get("dt", 1e-3)),
        seed=seed,
        record_stride=int(point.get("record_stride", 100)),
        dim=int(dim) if dim else None)
    rec = trajectories.simulate(params, config, traj_index=index)
    return [{"point": index, "time": float(t), "current": float(c),
             "n_mean": float(nm), "x_mean": float(xm), "p_mean": float(pm),
             "n_var": float(nv)}
            for t, c, nm, xm, pm, nv in zip(rec.times, rec.current, rec.n_mean,
                                            rec.x_mean, rec.p_mean, rec.n_var)]


def _scaling_rows(point: dict, _seed: int, _index: int) -> list:
    g = float(point["g"])
    kappa = float(point.get("kappa", 1.0))
    kou = float(point["kappa_over_u"])
    u = kappa / kou
    theta = float(point.get("theta", DEFAULT_THETA))
    schemes = [s.strip() for s in str(point.get("schemes", "pd,hom")).split(",") if s.strip()]
    lo = float(point.get("delta_lo", 0.05))
    hi = float(point.get("delta_hi", 3.0))
    step = float(point.get("delta_step", 0.1))
    rows = []
    for name in schemes:
        scheme = _scheme_from(name, theta)
        delta_at, d_max = fcs.max_diffusion_over_delta(
            g, u, kappa, scheme=scheme, delta_lo=lo, delta_hi=hi, step=step)
        dim = model.default_dim(model.ModelParams(delta=delta_at, g=g, u=u, kappa=kappa))
        rows.append({"g": g, "u": u, "kappa": kappa, "kappa_over_u": kou,
                     "scheme": scheme.short_name,
                     "theta": theta if scheme.kind == "homodyne" else float("nan"),
                     "delta_at_max": delta_at, "d_max": d_max, "dim": dim})
    return rows


_TASK_RUNNERS = {
    "steady_state": _steady_rows,
    "phase_diagram": _steady_rows,
    "diffusion": _diffusion_rows,
    "spectrum": _spectrum_rows,
    "wigner": _wigner_rows,
    "trajectory": _trajectory_rows,
    "scaling": _scaling_rows,
}


def _run_point(payload):
    task, point, seed, index = payload
    try:
        return index, _TASK_RUNNERS[task](point, seed, index), None
    except Exception as exc:  # reported with the failing point by the caller
        return index, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, resume: bool = False) -> str:
    spec.validate()
    points = spec.points()
    manifest = io.Manifest(spec.out, spec.key())
    if resume:
        manifest.load_if_matching()
    pending = [(spec.task, pt, spec.seed, i) for i, pt in enumerate(points)
               if not manifest.done(i)]
    def handle(result):
        index, rows, err = result
        if err is not None:
            raise RuntimeError(f"sweep point {index} ({points[index]}) failed: {err}")
        manifest.record(index, rows)
    if spec.workers > 1 and len(pending) > 1:
        with Pool(processes=spec.workers) as pool:
            for result in pool.imap_unordered(_run_point, pending):
                handle(result)
    else:
        for payload in pending:
            handle(_run_point(payload))
    metadata = _base_metadata(spec.task, spec.fixed)
    metadata["seed"] = spec.seed
    metadata["workers"] = spec.workers
    metadata["points"] = len(points)
    for name, start, stop, count, spacing in spec.axes:
        metadata[f"axis.{name}"] = f"{start}:{stop}:{count}:{spacing}"
    rows = manifest.all_rows(len(points))
    io.write_table(spec.out, metadata, TASK_COLUMNS[spec.task], rows)
    manifest.cleanup()
    return spec.out


def _load_config(path: str) -> tuple[dict, dict, list]:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ValueError(f"config file {path!r} not found or unreadable")
    sweep = dict(cp["sweep"]) if cp.has_section("sweep") else {}
    fixed = dict(cp["fixed"]) if cp.has_section("fixed") else {}
    axes = []
    for section in cp.sections():
        if section.startswith("axis:"):
            name = section.split(":", 1)[1]
            s = cp[section]
            axes.append((name, float(s["start"]), float(s["stop"]),
                         int(s["count"]), s.get("spacing", "linear")))
    return sweep, fixed, axes


def _add_model_args(p):
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--config", default=None, help="INI config; flags override it")


def _add_scheme_args(p):
    p.add_argument("--scheme", choices=("pd", "hom"), default=None)
    p.add_argument("--theta", type=float, default=None)


def _collect_point(args, extra=()) -> dict:
    point = {}
    if args.config:
        _, fixed, _ = _load_config(args.config)
        point.update(fixed)
    for name in ("delta", "g", "u", "kappa", "dim", "scheme", "theta") + tuple(extra):
        value = getattr(args, name, None)
        if value is not None:
            point[name] = value
    if "u" not in point:
        raise ValueError("Kerr strength --u is required (directly or via config)")
    return point


def _write_single(task: str, rows: list, args, point: dict) -> None:
    metadata = _base_metadata(task, point)
    if getattr(args, "seed", None) is not None:
        metadata["seed"] = args.seed
    io.write_table(args.out, metadata, TASK_COLUMNS[task], rows)


def build_parser() -> _Parser:
    parser = _Parser(prog="ppk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"ppk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady-state", help="solve one steady state and report moments")
    _add_model_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("wigner", help="steady-state Wigner function on a grid")
    _add_model_args(p)
    p.add_argument("--half-width", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("spectrum", help="measurement-current power spectrum")
    _add_model_args(p)
    _add_scheme_args(p)
    p.add_argument("--omega-min", type=float, default=0.0)
    p.add_argument("--omega-max", type=float, default=10.0)
    p.add_argument("--omega-count", type=int, default=21)
    p.add_argument("--out", required=True)

    p = sub.add_parser("diffusion", help="zero-frequency diffusion coefficient")
    _add_model_args(p)
    _add_scheme_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("trajectory", help="one stochastic measurement record")
    _add_model_args(p)
    _add_scheme_args(p)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--n-traj", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="run a configured parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("scaling", help="max-over-detuning diffusion vs kappa/U")
    _add_model_args(p)
    p.add_argument("--g-list", default="1.0", help="comma-separated pump strengths")
    p.add_argument("--kou-list", default="2,4,6,8,10", help="comma-separated kappa/U values")
    p.add_argument("--schemes", default="pd,hom")
    p.add_argument("--delta-lo", type=float, default=0.05)
    p.add_argument("--delta-hi", type=float, default=3.0)
    p.add_argument("--delta-step", type=float, default=0.1)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (PpkError, RuntimeError) as exc:
        print(f"ppk: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"ppk: validation error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "steady-state":
        point = _collect_point(args)
        _write_single("steady_state", _steady_rows(point, 0, 0), args, point)
    elif cmd == "wigner":
        point = _collect_point(args, extra=("half_width", "points"))
        if args.half_width is not None:
            point["half_width"] = args.half_width
        if args.points is not None:
            point["points"] = args.points
        rows = _wigner_rows(point, 0, 0)
        metadata = _base_metadata("wigner", point)
        metadata["convention"] = ("x=<a+adag>, p=<i(adag-a)>; vacuum peak 1/(2 pi); "
                                  "sum(w) dx dp = 1")
        io.write_table(args.out, metadata, TASK_COLUMNS["wigner"], rows)
    elif cmd == "spectrum":
        point = _collect_point(args)
        point.setdefault("scheme", "pd")
        point["omega_min"] = args.omega_min
        point["omega_max"] = args.omega_max
        point["omega_count"] = args.omega_count
        _write_single("spectrum", _spectrum_rows(point, 0, 0), args, point)
    elif cmd == "diffusion":
        point = _collect_point(args)
        point.setdefault("scheme", "pd")
        _write_single("diffusion", _diffusion_rows(point, 0, 0), args, point)
    elif cmd == "trajectory":
        point = _collect_point(args)
        point.setdefault("scheme", "pd")
        if args.dt is not None:
            point["dt"] = args.dt
        if args.t_final is not None:
            point["t_final"] = args.t_final
        rows = []
        for i in range(args.n_traj):
            rows.extend(_trajectory_rows(point, args.seed, i))
        _write_single("trajectory", rows, args, point)
    elif cmd == "sweep":
        sweep_cfg, fixed, axes = _load_config(args.config)
        spec = SweepSpec(
            task=sweep_cfg.get("task", "steady_state"),
            out=args.out or sweep_cfg.get("out", ""),
            fixed=fixed,
            axes=axes,
            seed=args.seed if args.seed is not None else int(sweep_cfg.get("seed", 0)),
            workers=args.workers if args.workers is not None else int(sweep_cfg.get("workers", 1)))
        run_sweep(spec, resume=args.resume)
    elif cmd == "scaling":
        point_base = {}
        if args.config:
            _, fixed, _ = _load_config(args.config)
            point_base.update(fixed)
        point_base.update({"kappa": args.kappa or 1.0, "theta": args.theta,
                           "schemes": args.schemes, "delta_lo": args.delta_lo,
                           "delta_hi": args.delta_hi, "delta_step": args.delta_step})
        gs = [float(x) for x in args.g_list.split(",") if x]
        kous = [float(x) for x in args.kou_list.split(",") if x]
        points = []
        for g in gs:
            for kou in kous:
                pt = dict(point_base)
                pt["g"] = g
                pt["kappa_over_u"] = kou
                points.append(pt)
        payloads = [("scaling", pt, 0, i) for i, pt in enumerate(points)]
        if args.workers > 1 and len(payloads) > 1:
            with Pool(processes=args.workers) as pool:
                results = pool.map(_run_point, payloads)
        else:
            results = [_run_point(p) for p in payloads]
        rows = []
        for index, point_rows, err in sorted(results, key=lambda r: r[0]):
            if err is not None:
                raise RuntimeError(f"scaling point {index} ({points[index]}) failed: {err}")
            rows.extend(point_rows)
        metadata = _base_metadata("scaling", {"g_list": args.g_list, "kou_list": args.kou_list,
                                              "schemes": args.schemes})
        io.write_table(args.out, metadata, TASK_COLUMNS["scaling"], rows)
    else:
        raise ValueError(f"unknown command {cmd!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
