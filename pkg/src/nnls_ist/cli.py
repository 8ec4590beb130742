"""Command-line front end: nnls-ist {scatter, evolve, blowup-map, check}.

A run is described by one JSON document; command-line flags override its
keys. Every output file is listed in manifest.json with its sha256 so that
reruns can be compared byte for byte. Wall-clock timings go to a separate
timings.json (only with --timings) to keep the manifest deterministic.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, defaults
from .conservation import (check_near_soliton, check_small_H11, check_small_L1, conserved_all)
from .errors import NumericalError, ValidationError
from .pde import split_step
from .potential import Potential, symmetric_grid
from .regularizer import blowup_map, regularize_reflection
from .rh import build_jump, jump_residual, solve_field, solve_mu
from .scattering import SpectralData, discrete_spectrum, scattering_table, trace_formula_residual
from .solitons import multi_soliton
from .spectrum import DiscreteSpectrum

log = logging.getLogger("nnls_ist")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INVARIANT = 0, 2, 3, 4

KINDS = ("gaussian", "sech", "one_soliton", "multi_soliton", "samples_file",
         "soliton_plus_perturbation")

DEFAULT_CONFIG = {
    "initial_data": {"kind": "gaussian", "amplitude": 0.1},
    "sigma": 1,
    "grids": {"L_x": defaults.L_X, "h_x": defaults.H_X, "K": defaults.K_MAX, "n_k": defaults.N_K},
    "time": {"t_list": [0.0]},
    "options": {},
    "seed": 0,
}


# ---------------------------------------------------------------- config


def _complex(value) -> complex:
    try:
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, dict) and set(value) == {"re", "im"}:
            return complex(float(value["re"]), float(value["im"]))
        if isinstance(value, str):
            return complex(value.replace(" ", ""))
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return complex(value)
    except (TypeError, ValueError):
        pass
    raise ValidationError(f"cannot read {value!r} as a complex number")


def _complex_list(values) -> list[complex]:
    if values is None:
        return []
    return [_complex(v) for v in values]


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate_config(cfg: dict) -> dict:
    """Checks ranges and kinds; returns the config unchanged on success."""
    data = cfg.get("initial_data")
    if not isinstance(data, dict) or data.get("kind") not in KINDS:
        raise ValidationError(f"initial_data.kind must be one of {', '.join(KINDS)}")
    if cfg.get("sigma") not in (1, -1):
        raise ValidationError("sigma must be 1 or -1")
    grids = cfg.get("grids", {})
    for key in ("L_x", "h_x", "K", "n_k"):
        val = grids.get(key)
        if not isinstance(val, (int, float)) or val <= 0:
            raise ValidationError(f"grids.{key} must be a positive number")
    if int(grids["n_k"]) != grids["n_k"] or int(grids["n_k"]) % 2:
        raise ValidationError("grids.n_k must be an even integer")
    tm = cfg.get("time", {})
    if "t_list" in tm and not all(isinstance(t, (int, float)) for t in tm["t_list"]):
        raise ValidationError("time.t_list must hold numbers")
    for key in ("dt", "T"):
        if key in tm and (not isinstance(tm[key], (int, float)) or tm[key] <= 0):
            raise ValidationError(f"time.{key} must be positive")
    if not isinstance(cfg.get("seed", 0), int):
        raise ValidationError("seed must be an integer")
    return cfg


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            cfg = _merge(cfg, json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
    return validate_config(_merge(cfg, overrides))


# ---------------------------------------------------------------- initial data


@dataclass
class Problem:
    config: dict
    q0: Potential
    exact: DiscreteSpectrum | None = None  # closed-form spectrum for soliton kinds
    reflectionless: bool = False


def _soliton_spectrum(spec: dict, sigma: int) -> DiscreteSpectrum:
    if spec["kind"] == "one_soliton" or "rho11" in spec:
        return DiscreteSpectrum(sigma, [spec["rho11"]], [spec["rho21"]],
                                [_complex(spec["gamma11"])], [_complex(spec["gamma21"])])
    return DiscreteSpectrum(
        sigma, spec.get("rho1", []), spec.get("rho2", []),
        _complex_list(spec.get("gamma1")), _complex_list(spec.get("gamma2")),
        _complex_list(spec.get("zeta1")), _complex_list(spec.get("zeta2")),
        _complex_list(spec.get("eta1")), _complex_list(spec.get("eta2")),
    )


def _read_samples(path: str, sigma: int) -> Potential:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        x = np.array([float(r["x"]) for r in rows])
        q = np.array([float(r["re_q"]) + 1j * float(r["im_q"]) for r in rows])
    except (OSError, KeyError, ValueError) as exc:
        raise ValidationError(f"cannot read samples file {path}: {exc}") from exc
    return Potential(sigma, x, q)


def build_problem(cfg: dict) -> Problem:
    try:
        return _build_problem(cfg)
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad initial_data entry: {exc!r}") from exc


def _build_problem(cfg: dict) -> Problem:
    spec = cfg["initial_data"]
    sigma = cfg["sigma"]
    grids = cfg["grids"]
    kind = spec["kind"]
    exact = None
    if kind == "samples_file":
        q0 = _read_samples(spec["path"], sigma)
    else:
        x = symmetric_grid(grids["L_x"], grids["h_x"])
        if kind == "gaussian":
            amp = _complex(spec.get("amplitude", 0.1))
            width = float(spec.get("width", 1.0))
            center = float(spec.get("center", 0.0))
            values = amp * np.exp(-((x - center) / width) ** 2)
        elif kind == "sech":
            amp = _complex(spec.get("amplitude", 0.1))
            width = float(spec.get("width", 1.0))
            values = amp / np.cosh(x / width)
        else:
            exact = _soliton_spectrum(spec, sigma)
            values, pole = multi_soliton(exact, x, 0.0)
            if np.any(pole):
                raise ValidationError("the soliton profile is singular at t = 0")
            if kind == "soliton_plus_perturbation":
                eps = _complex(spec.get("epsilon", 0.0))
                width = float(spec.get("width", 1.0))
                values = values + eps * np.exp(-(x / width) ** 2)
        q0 = Potential(sigma, x, values)
    if "l1_norm" in spec:
        norm = q0.l1_norm()
        if norm == 0:
            raise ValidationError("cannot rescale a zero profile to a given L1 norm")
        q0 = q0.scaled(float(spec["l1_norm"]) / norm)
        exact = None
    reflectionless = kind in ("one_soliton", "multi_soliton") and "l1_norm" not in spec
    return Problem(cfg, q0, exact, reflectionless)


def spectral_inputs(problem: Problem, source: str = "auto"):
    """(SpectralData, DiscreteSpectrum, residuals) either from the closed form or by scattering."""
    grids = problem.config["grids"]
    K, n_k = float(grids["K"]), int(grids["n_k"])
    if source == "exact" or (source == "auto" and problem.reflectionless):
        if problem.exact is None:
            raise ValidationError("exact spectral data only exist for soliton initial data")
        sd = SpectralData.reflectionless(problem.q0.sigma, K, n_k)
        return sd, problem.exact, {"source": "exact"}
    problem.q0.check_decay()
    sd = scattering_table(problem.q0, K, n_k)
    ds = discrete_spectrum(problem.q0, K)
    residuals = {
        "source": "scatter",
        "determinant_residual": sd.determinant_residual(),
        "symmetry_residual": sd.symmetry_residual(),
        "trace_formula_residual": trace_formula_residual(sd, ds, problem.q0),
        "winding": sd.winding,
    }
    return sd, ds, residuals


# ---------------------------------------------------------------- output


def fmt(value: float) -> str:
    return "%.17g" % value


def _write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue())


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


@dataclass
class Run:
    command: str
    config: dict
    out_dir: Path
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def stage(self, name: str):
        run = self

        class _Timer:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = time.perf_counter() - self.start

        return _Timer()

    def csv(self, name: str, header, rows) -> None:
        _write_csv(self.out_dir / name, header, rows)
        self.files.append(name)

    def json(self, name: str, obj) -> None:
        _write_json(self.out_dir / name, _jsonable(obj))
        self.files.append(name)

    def finish(self, write_timings: bool) -> None:
        checksums = {name: hashlib.sha256((self.out_dir / name).read_bytes()).hexdigest()
                     for name in self.files}
        manifest = {
            "command": self.command,
            "version": __version__,
            "config": self.config,
            "tolerances": defaults.as_dict(),
            "summary": self.summary,
            "files": checksums,
        }
        _write_json(self.out_dir / "manifest.json", _jsonable(manifest))
        if write_timings:
            _write_json(self.out_dir / "timings.json", self.timings)


# ---------------------------------------------------------------- commands


def cmd_scatter(run: Run) -> int:
    with run.stage("initial_data"):
        problem = build_problem(run.config)
    with run.stage("scattering"):
        sd, ds, residuals = spectral_inputs(problem, run.config["options"].get("spectral_source", "scatter"))
    out = sd.to_json()
    out.update(ds.to_json())
    out["sigma"] = sd.sigma
    run.json("spectral.json", out)
    run.summary.update(residuals)
    run.summary["zero_count"] = ds.size
    return EXIT_OK


def _time_list(cfg: dict) -> list[float]:
    tm = cfg["time"]
    if "t_list" in tm and tm["t_list"]:
        return [float(t) for t in tm["t_list"]]
    if "T" in tm:
        dt = float(tm.get("dt", 1e-3))
        n = int(round(tm["T"] / dt))
        return [i * dt for i in range(n + 1)]
    return [0.0]


def _field_rows(x, ts, q, flags):
    for i, t in enumerate(ts):
        for j, xv in enumerate(x):
            yield (float(xv), float(t), float(q[i, j].real), float(q[i, j].imag), int(flags[i, j]))


def _conserved_rows(x, ts, q, flags, sigma):
    rows = []
    for i, t in enumerate(ts):
        if np.any(flags[i]) or not np.all(np.isfinite(q[i])):
            vals = [complex(np.nan, np.nan)] * 3
        else:
            cq = conserved_all(Potential(sigma, x, q[i]), t)
            vals = [cq.I1, cq.I2, cq.I3]
        rows.append((float(t), *[float(f) for v in vals for f in (v.real, v.imag)]))
    return rows


CONSERVED_HEADER = ["t", "I1_re", "I1_im", "I2_re", "I2_im", "I3_re", "I3_im"]


def cmd_evolve(run: Run) -> int:
    cfg = run.config
    opts = cfg["options"]
    engine = opts.get("engine", "ist")
    if engine not in ("ist", "pde"):
        raise ValidationError("engine must be 'ist' or 'pde'")
    ts = _time_list(cfg)
    with run.stage("initial_data"):
        problem = build_problem(cfg)
    x = problem.q0.x
    sigma = problem.q0.sigma
    if engine == "ist":
        with run.stage("scattering"):
            sd, ds, residuals = spectral_inputs(problem, opts.get("spectral_source", "auto"))
        run.summary.update(residuals)
        with run.stage("reconstruction"):
            if problem.q0.is_zero():
                q = np.zeros((len(ts), len(x)), complex)
                flags = np.zeros(q.shape, bool)
            else:
                sol = solve_field(sd, ds, x, ts, mode=opts.get("mode", "auto"))
                q, flags = sol.q, sol.blowup
        run.summary["flagged_points"] = int(flags.sum())
    else:
        dt = float(cfg["time"].get("dt", 1e-3))
        T = max(ts)
        with run.stage("split_step"):
            steps = max(1, int(np.ceil(T / dt - 1e-9)))
            lattice = [round(t / (T / steps)) * (T / steps) for t in ts]
            traj = split_step(problem.q0, dt, T, t_out=lattice,
                              guard=float(opts.get("guard", defaults.GUARD)), on_guard="record")
        ts = [float(t) for t in traj.t_samples]
        q = traj.fields
        flags = np.zeros(q.shape, bool)
        run.summary["aborted_at"] = traj.aborted_at
        run.summary["dt"] = traj.dt
        run.summary["max_amp"] = float(np.max(traj.max_amp[np.isfinite(traj.max_amp)]))
    run.csv("field.csv", ["x", "t", "re_q", "im_q", "blowup_flag"], _field_rows(x, ts, q, flags))
    with run.stage("conserved"):
        run.csv("conserved.csv", CONSERVED_HEADER, _conserved_rows(x, ts, q, flags, sigma))
    return EXIT_OK


def cmd_blowup_map(run: Run) -> int:
    cfg = run.config
    opts = cfg["options"]
    with run.stage("initial_data"):
        problem = build_problem(cfg)
    with run.stage("scattering"):
        sd, ds, residuals = spectral_inputs(problem, opts.get("spectral_source", "auto"))
    run.summary.update(residuals)
    x_range = tuple(opts.get("x_range", (-2.0, 2.0)))
    t_range = tuple(opts.get("t_range", (0.0, 5.0)))
    resolution = opts.get("resolution", [64, 64])
    with run.stage("blowup_map"):
        bs = blowup_map(sd, ds, x_range, t_range, resolution)
    rows = ((float(xv), float(t), float(bs.indicator[i, j]))
            for i, t in enumerate(bs.t) for j, xv in enumerate(bs.x))
    run.csv("blowup_indicator.csv", ["x", "t", "indicator"], rows)
    run.csv("blowup_points.csv", ["x", "t", "stage", "residual", "jacobian"],
            [(p.x, p.t, p.stage, p.residual, p.jacobian) for p in bs.points])
    run.summary["points"] = len(bs.points)
    run.summary["band_radius"] = bs.band_radius
    return EXIT_OK


def _report_dict(rep) -> dict:
    return {"which": rep.which, "lhs": rep.lhs, "threshold": rep.threshold,
            "satisfied": rep.satisfied, "ingredients": rep.ingredients}


def cmd_check(run: Run) -> int:
    cfg = run.config
    opts = cfg["options"]
    with run.stage("initial_data"):
        problem = build_problem(cfg)
    q0 = problem.q0
    reports = [check_small_L1(q0), check_small_H11(q0)]
    invariants: dict[str, dict] = {}
    ds = problem.exact
    if opts.get("invariants", True) and not q0.is_zero():
        with run.stage("scattering"):
            sd, ds_scat, residuals = spectral_inputs(problem, "scatter")
        ds = ds if ds is not None else ds_scat
        invariants["determinant_relation"] = {"value": residuals["determinant_residual"], "limit": 1e-8}
        invariants["symmetry"] = {"value": residuals["symmetry_residual"], "limit": 1e-8}
        invariants["winding"] = {"value": residuals["winding"], "limit": 0}
        invariants["zero_counts"] = {"value": abs(len(ds_scat.upper_zeros()) - len(ds_scat.lower_zeros())),
                                     "limit": 0}
        with run.stage("jump_check"):
            reg, _ = regularize_reflection(sd, ds_scat)
            if not reg.is_zero():
                rng = np.random.default_rng(cfg.get("seed", 0))
                jd = build_jump(reg, 0.0, 0.0)
                ms = solve_mu(jd, opts.get("mode", "auto"))
                central = np.flatnonzero(np.abs(jd.k) < 0.5 * sd.K)
                idx = np.sort(rng.choice(central, size=min(8, len(central)), replace=False))
                invariants["jump_residual"] = {"value": jump_residual(ms, jd, idx), "limit": 1e-7}
    if ds is not None and not ds.is_empty():
        reports.append(check_near_soliton(q0, ds))
    required = set(opts.get("require", []))
    unknown = required - {r.which for r in reports}
    if unknown:
        raise ValidationError(f"required conditions not applicable here: {sorted(unknown)}")
    ok_reports = all(r.satisfied for r in reports if r.which in required)
    ok_invariants = all(v["value"] <= v["limit"] for v in invariants.values())
    for name, val in invariants.items():
        val["passed"] = bool(val["value"] <= val["limit"])
    run.json("check.json", {"conditions": [_report_dict(r) for r in reports], "invariants": invariants})
    run.summary["required_conditions_satisfied"] = ok_reports
    run.summary["invariants_passed"] = ok_invariants
    for rep in reports:
        print(f"{rep.which}: lhs={rep.lhs:.6g} threshold={rep.threshold:.6g} "
              f"{'satisfied' if rep.satisfied else 'violated'}")
    for name, val in invariants.items():
        print(f"{name}: {val['value']:.3g} (limit {val['limit']:.3g}) {'ok' if val['passed'] else 'FAILED'}")
    return EXIT_OK if ok_reports and ok_invariants else EXIT_INVARIANT


COMMANDS = {
    "scatter": cmd_scatter,
    "evolve": cmd_evolve,
    "blowup-map": cmd_blowup_map,
    "check": cmd_check,
}


# ---------------------------------------------------------------- parser


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {exc}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnls-ist", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--initial-data", type=_json_arg,
                        help='JSON object, e.g. \'{"kind": "gaussian", "amplitude": 0.1}\'')
    common.add_argument("--sigma", type=int, choices=(1, -1))
    common.add_argument("--l-x", type=float, help="half-width of the x-grid")
    common.add_argument("--h-x", type=float, help="x-grid spacing")
    common.add_argument("--k-max", type=float)
    common.add_argument("--n-k", type=int)
    common.add_argument("--t-list", type=_float_list, help="comma-separated times")
    common.add_argument("--dt", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--timings", action="store_true", help="also write timings.json")
    common.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("scatter", parents=[common], help="direct scattering of the initial data")
    evolve = sub.add_parser("evolve", parents=[common], help="solution at the requested times")
    evolve.add_argument("--engine", choices=("ist", "pde"))
    evolve.add_argument("--spectral-source", choices=("auto", "scatter", "exact"))
    bmap = sub.add_parser("blowup-map", parents=[common], help="blow-up set in an (x, t) window")
    bmap.add_argument("--x-range", type=_float_list)
    bmap.add_argument("--t-range", type=_float_list)
    bmap.add_argument("--resolution", type=_float_list, help="nx,nt")
    bmap.add_argument("--spectral-source", choices=("auto", "scatter", "exact"))
    check = sub.add_parser("check", parents=[common], help="sufficient conditions and invariants")
    check.add_argument("--require", action="append", choices=("L1_small", "H11_small", "near_soliton"),
                       help="make the exit code depend on this condition (repeatable)")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    out: dict = {}
    if args.initial_data is not None:
        out["initial_data"] = args.initial_data
    if args.sigma is not None:
        out["sigma"] = args.sigma
    grids = {key: val for key, val in (("L_x", args.l_x), ("h_x", args.h_x),
                                       ("K", args.k_max), ("n_k", args.n_k)) if val is not None}
    if grids:
        out["grids"] = grids
    tm = {}
    if args.t_list is not None:
        tm["t_list"] = args.t_list
    if args.dt is not None:
        tm["dt"] = args.dt
    if tm:
        out["time"] = tm
    if args.seed is not None:
        out["seed"] = args.seed
    opts = {}
    for name in ("engine", "spectral_source", "x_range", "t_range"):
        val = getattr(args, name, None)
        if val is not None:
            opts[name] = val
    if getattr(args, "require", None):
        opts["require"] = args.require
    if getattr(args, "resolution", None) is not None:
        opts["resolution"] = [int(v) for v in args.resolution]
    if opts:
        out["options"] = opts
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, overrides_from_args(args))
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        run = Run(args.command, cfg, out_dir)
        code = COMMANDS[args.command](run)
        run.finish(args.timings)
        return code
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
