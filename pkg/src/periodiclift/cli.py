"""Command-line front end: lift, simulate, bounds, sweep and compare.

Structured outputs are JSON, tabular ones CSV; every float carries 17
significant digits so outputs round-trip losslessly. A manifest recording
the resolved parameters is written next to each output file.

Exit codes: 0 success, 2 usage or spec error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from math import e, isfinite
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BoundsReport,
    carleman_bounds,
    fourier_shortrange_bounds,
    fourier_wholerange_bounds,
    multifreq_bounds,
    muhat0_of,
    optimize_radius,
    positive_wholerange_bounds,
)
from .errors import NUMERIC_ERRORS, InvalidArgument, LiftError
from .lift_carleman import LiftedSystem, carleman_finite_section, maclaurin_from_fourier
from .lift_fourier import extend_positive, extend_two_sided, fourier_finite_section, multifreq_finite_section
from .metrics import Axis, PointSpec, SweepJob, compare, sweep
from .odesolve import SolveConfig, integrate_linear, integrate_nonlinear
from .trigsystem import (
    FourierSystem,
    MaclaurinTable,
    MultiFreqSystem,
    decay_certificate,
    kuramoto_analytic,
    kuramoto_pairfield,
    kuramoto_taylor,
    mu0_of,
    scalar_example,
)

METHODS = ("carleman", "fourier", "multifreq", "positive")
BOUND_SCHEMES = ("carleman", "fourier", "fourier-whole", "multifreq", "positive")
BUILTINS = ("scalar", "kuramoto3", "kuramoto-pair", "kuramoto-taylor")


# system specs


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _complex(value, what: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise InvalidArgument(f"{what} must be a number or a [re, im] pair, got {value!r}")


def _vector(value, d: int, what: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != d:
        raise InvalidArgument(f"{what} must be a list of {d} complex entries")
    return np.array([_complex(v, what) for v in value])


def system_from_spec(spec: dict) -> FourierSystem | MultiFreqSystem:
    """Parse a JSON system spec; infinite or malformed support is rejected."""
    if not isinstance(spec, dict):
        raise InvalidArgument("system spec must be a JSON object")
    kind = spec.get("type", "fourier")
    d = spec.get("d")
    if not isinstance(d, int) or d < 1:
        raise InvalidArgument("system spec needs a positive integer 'd'")
    terms = spec.get("coeffs")
    if not isinstance(terms, list) or not terms:
        raise InvalidArgument("system spec needs a nonempty 'coeffs' list")
    if kind == "fourier":
        coeffs = {}
        for term in terms:
            alpha = term.get("alpha") if isinstance(term, dict) else None
            if not isinstance(alpha, list) or not all(isinstance(a, int) for a in alpha):
                raise InvalidArgument(f"each coefficient needs an integer 'alpha' list, got {term!r}")
            coeffs[tuple(alpha)] = coeffs.get(tuple(alpha), 0) + _vector(term.get("g"), d, "g")
        return FourierSystem(d, coeffs)
    if kind == "multifreq":
        omegas = spec.get("omegas")
        if not isinstance(omegas, list) or not omegas:
            raise InvalidArgument("multifreq spec needs a nonempty 'omegas' list")
        omegas = tuple(_complex(w, "omega") for w in omegas)
        coeffs = {}
        for term in terms:
            alphas = term.get("alphas") if isinstance(term, dict) else None
            if not isinstance(alphas, list) or not all(
                isinstance(a, list) and all(isinstance(v, int) for v in a) for a in alphas
            ):
                raise InvalidArgument(f"each coefficient needs an 'alphas' list of integer lists, got {term!r}")
            key = tuple(tuple(a) for a in alphas)
            coeffs[key] = coeffs.get(key, 0) + _vector(term.get("g"), d, "g")
        return MultiFreqSystem(d, omegas, coeffs)
    raise InvalidArgument(f"unknown system type {kind!r}; expected 'fourier' or 'multifreq'")


def spec_from_system(system: FourierSystem | MultiFreqSystem, name: str = "") -> dict:
    """Serialize a system to the JSON spec accepted by :func:`system_from_spec`."""
    if isinstance(system, FourierSystem):
        coeffs = [{"alpha": list(k), "g": [_pair(z) for z in v]} for k, v in system.coeffs.items()]
        return {"name": name, "type": "fourier", "d": system.d, "coeffs": coeffs}
    coeffs = [{"alphas": [list(a) for a in k], "g": [_pair(z) for z in v]} for k, v in system.coeffs.items()]
    return {
        "name": name,
        "type": "multifreq",
        "d": system.d,
        "omegas": [_pair(complex(w)) for w in system.omegas],
        "coeffs": coeffs,
    }


@dataclass
class Resolved:
    """A parsed system plus, for the Taylor builtin, its precomputed Maclaurin table."""

    name: str
    system: FourierSystem | MultiFreqSystem
    table: MaclaurinTable | None = None
    params: dict = field(default_factory=dict)


def _number(text: str):
    try:
        z = complex(text.replace(" ", ""))
    except ValueError:
        raise InvalidArgument(f"cannot parse {text!r} as a number") from None
    return z.real if z.imag == 0 else z


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InvalidArgument(f"--param expects key=value, got {item!r}")
        out[key] = _number(value)
    return out


def builtin_system(name: str, params: dict) -> Resolved:
    allowed = {
        "scalar": {"a": 1.0, "b": 1.0},
        "kuramoto3": {"omega1": 0.0, "omega2": 0.0, "K": -3.0},
        "kuramoto-pair": {"omega1": 0.0, "omega2": 0.0, "Ktilde": -1.0},
        "kuramoto-taylor": {"omega1": 0.0, "omega2": 0.0, "Ktilde": -1.0, "degree": 10},
    }
    if name not in allowed:
        raise InvalidArgument(f"unknown builtin {name!r}; expected one of {BUILTINS}")
    unknown = set(params) - set(allowed[name])
    if unknown:
        raise InvalidArgument(f"unknown parameters {sorted(unknown)} for builtin {name}")
    p = {**allowed[name], **params}
    if name != "scalar":
        for key, value in p.items():
            if isinstance(value, complex):
                raise InvalidArgument(f"parameter {key} of builtin {name} must be real, got {value}")
    if name == "scalar":
        return Resolved(name, scalar_example(p["a"], p["b"]), params=p)
    if name == "kuramoto3":
        w1, w2 = float(p["omega1"]), float(p["omega2"])
        return Resolved(name, kuramoto_analytic([w1, w2, -w1 - w2], float(p["K"])), params=p)
    pair = kuramoto_pairfield(float(p["omega1"]), float(p["omega2"]), float(p["Ktilde"]))
    if name == "kuramoto-pair":
        return Resolved(name, pair, params=p)
    degree = p["degree"]
    if not float(degree).is_integer():
        raise InvalidArgument(f"degree must be an integer, got {degree}")
    table = kuramoto_taylor(float(p["omega1"]), float(p["omega2"]), float(p["Ktilde"]), int(degree))
    return Resolved(name, pair, table, params=p)


def resolve_system(args) -> Resolved:
    if bool(args.system) == bool(args.builtin):
        raise InvalidArgument("give exactly one of --system and --builtin")
    if args.builtin:
        return builtin_system(args.builtin, _params(args.param))
    if args.param:
        raise InvalidArgument("--param applies to --builtin only")
    path = Path(args.system)
    try:
        spec = json.loads(path.read_text())
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path} is not valid JSON: {exc.msg}") from None
    return Resolved(str(spec.get("name", path.stem)), system_from_spec(spec))


def parse_x0(text: str | None, d: int) -> np.ndarray:
    """``"re,im;re,im;..."`` to a complex vector; missing means the origin."""
    if text is None:
        return np.zeros(d, dtype=complex)
    parts = [p for p in text.split(";") if p.strip()]
    values = []
    for part in parts:
        fields = part.split(",")
        if len(fields) not in (1, 2):
            raise InvalidArgument(f"--x0 entries are 're,im', got {part!r}")
        try:
            nums = [float(f) for f in fields]
        except ValueError:
            raise InvalidArgument(f"cannot parse --x0 entry {part!r}") from None
        values.append(complex(nums[0], nums[1] if len(nums) == 2 else 0.0))
    if len(values) != d:
        raise InvalidArgument(f"--x0 has {len(values)} entries, the system has dimension {d}")
    return np.array(values)


# lifting


def _as_fourier(system) -> FourierSystem:
    if isinstance(system, MultiFreqSystem):
        return system.to_fourier()
    return system


def _as_multifreq(system) -> MultiFreqSystem:
    if isinstance(system, MultiFreqSystem):
        return system
    coeffs = {(k,): v for k, v in system.coeffs.items()}
    return MultiFreqSystem(system.d, (1.0,), coeffs)


def build_lift(resolved: Resolved, method: str, x0, N: int) -> LiftedSystem:
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}; expected one of {METHODS}")
    system = resolved.system
    if method == "carleman":
        source = resolved.table if resolved.table is not None else system
        return carleman_finite_section(source, x0, N)
    if resolved.table is not None:
        raise InvalidArgument("the Taylor builtin supports the carleman method only")
    if method == "fourier":
        return fourier_finite_section(_as_fourier(system), x0, N)
    multi = _as_multifreq(system)
    ext = extend_two_sided(multi) if method == "multifreq" else extend_positive(multi)
    return multifreq_finite_section(ext, x0, N)


def lift_to_dict(lift: LiftedSystem) -> dict:
    blocks = []
    for (k, l), (rows, cols) in lift.block_index.items():
        block = lift.matrix[rows, cols]
        if np.any(block != 0):
            blocks.append({"k": k, "l": l, "re": block.real.tolist(), "im": block.imag.tolist()})
    return {
        "scheme": lift.scheme,
        "N": lift.N,
        "dimension": lift.dimension,
        "basis": [list(m) for m in lift.basis],
        "blocks": blocks,
        "inhomogeneous": [_pair(z) for z in lift.inhomogeneous],
        "initial": [_pair(z) for z in lift.initial],
    }


# bounds


def bounds_report(resolved: Resolved, x0, scheme: str, R: float) -> BoundsReport:
    system = resolved.system
    if scheme == "carleman":
        table = maclaurin_from_fourier(system, 0)
        D = decay_certificate(system, R).D
        return carleman_bounds(D, R, float(np.max(np.abs(x0))), g_at_origin=table[(0,) * system.d])
    if scheme in ("fourier", "fourier-whole"):
        fourier = _as_fourier(system)
        D = decay_certificate(fourier, R).D
        if scheme == "fourier":
            return fourier_shortrange_bounds(D, R, x0)
        return fourier_wholerange_bounds(D, R, mu0_of(fourier), x0)
    multi = _as_multifreq(system)
    if scheme == "multifreq":
        return multifreq_bounds(extend_two_sided(multi).certificate(R).D, R, multi.omegas, x0)
    if scheme == "positive":
        D2 = extend_positive(multi).certificate(R).D
        return positive_wholerange_bounds(D2, R, muhat0_of(multi.omegas, multi.constant_term()), multi.omegas, x0)
    raise InvalidArgument(f"unknown bounds scheme {scheme!r}; expected one of {BOUND_SCHEMES}")


# output


def _dump_json(obj, compact: bool = False) -> str:
    if compact:
        return json.dumps(obj, separators=(",", ":"), allow_nan=False, default=_json_default) + "\n"
    return json.dumps(obj, indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite(x):
    """JSON has no infinity; encode it as the string ``"inf"``."""
    if isinstance(x, float) and not isfinite(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_finite(v) for v in x]
    return x


def _emit(args, text: str, manifest: dict) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.write_text(text)
    manifest = {
        "command": args.command,
        "version": __version__,
        "parameters": _resolved_args(args),
        "outputs": [str(out)],
        **manifest,
    }
    Path(f"{out}.manifest.json").write_text(_dump_json(_finite(manifest)))


def _resolved_args(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}


# commands


def cmd_lift(args) -> int:
    resolved = resolve_system(args)
    x0 = parse_x0(args.x0, resolved.system.d)
    lift = build_lift(resolved, args.method, x0, args.order)
    payload = {"system": resolved.name, **lift_to_dict(lift)}
    _emit(args, _dump_json(payload, compact=True), {"system_params": _finite(_jsonable(resolved.params))})
    return 0


def _jsonable(params: dict) -> dict:
    return {k: _pair(v) if isinstance(v, complex) else v for k, v in params.items()}


def _config(args) -> SolveConfig:
    if args.grid < 2:
        raise InvalidArgument(f"--grid needs at least 2 samples, got {args.grid}")
    if not args.t_end > 0:
        raise InvalidArgument(f"--t-end must be positive, got {args.t_end}")
    return SolveConfig(args.rel_tol, args.abs_tol, output_grid=np.linspace(0.0, args.t_end, args.grid))


def cmd_simulate(args) -> int:
    resolved = resolve_system(args)
    x0 = parse_x0(args.x0, resolved.system.d)
    config = _config(args)
    if args.method == "none":
        traj = integrate_nonlinear(resolved.system, x0, args.t_end, config)
    else:
        traj = integrate_linear(build_lift(resolved, args.method, x0, args.order), args.t_end, config)
    _emit(args, traj.to_csv(), {"status": traj.status, "blowup_time": traj.blowup_time, "steps": traj.steps})
    if args.out is None:
        print(f"status: {traj.status}", file=sys.stderr)
    return 0


def cmd_bounds(args) -> int:
    resolved = resolve_system(args)
    x0 = parse_x0(args.x0, resolved.system.d)
    scheme = args.method
    if scheme not in BOUND_SCHEMES:
        raise InvalidArgument(f"unknown bounds scheme {scheme!r}; expected one of {BOUND_SCHEMES}")
    if args.optimize_r:
        R, report = optimize_radius(lambda r: bounds_report(resolved, x0, scheme, r))
    else:
        R = args.radius
        report = bounds_report(resolved, x0, scheme, R)
    times = [0.0]
    if report.admissible and isfinite(report.horizon):
        times = [0.0, report.horizon / 2, report.horizon]
    payload = {"R": R, **report.to_dict(orders=range(1, args.order + 1), times=times)}
    _emit(args, _dump_json(_finite(payload)), {})
    return 0


def _load_job(path: str) -> dict:
    try:
        job = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidArgument(f"cannot read job file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"job file {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(job, dict):
        raise InvalidArgument("job file must hold a JSON object")
    return job


def _point_spec(job: dict, scheme: str | None = None) -> PointSpec:
    clamp = job.get("clamp", [1e-4, 10.0])
    try:
        return PointSpec(
            family=job["family"],
            scheme=scheme or job["scheme"],
            N=int(job["N"]),
            T=float(job["T"]),
            clamp_lo=float(clamp[0]),
            clamp_hi=float(clamp[1]),
            samples=int(job.get("samples", 512)),
            rel_tol=float(job.get("rel_tol", 1e-10)),
            abs_tol=float(job.get("abs_tol", 1e-12)),
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise InvalidArgument(f"malformed job file: {exc!r}") from None


def sweep_job_from_dict(job: dict) -> SweepJob:
    spec = _point_spec(job)
    try:
        axes = tuple(Axis(str(a["name"]), float(a["lo"]), float(a["hi"]), int(a["n"])) for a in job["axes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed axes in job file: {exc!r}") from None
    fixed = job.get("fixed", {})
    if not isinstance(fixed, dict):
        raise InvalidArgument("'fixed' must be an object")
    return SweepJob(spec, axes, fixed)


def cmd_sweep(args) -> int:
    job = sweep_job_from_dict(_load_job(args.job))
    surface = sweep(job, jobs=args.jobs)
    if args.out is not None and args.out.endswith(".json"):
        text = _dump_json(surface.to_dict())
    else:
        text = surface.to_csv()
    _emit(args, text, {"failed_points": int(surface.failed.sum())})
    return 0


def cmd_compare(args) -> int:
    job = _load_job(args.job)
    try:
        family, param, values = job["family"], job["param"], [float(v) for v in job["values"]]
        schemes = tuple(job.get("schemes", ("fourier", "carleman")))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed compare job: {exc!r}") from None
    for s in schemes:
        _point_spec(job, s)
    spec = _point_spec(job, schemes[0])
    fixed = job.get("fixed", {})
    values, table, failed = compare(family, param, values, fixed, spec.N, spec.T, schemes)
    lines = [",".join([param, *schemes, *(f"{s}_failed" for s in schemes)])]
    for v, row, flags in zip(values, table, failed):
        lines.append(",".join([f"{v:.17g}", *(f"{x:.17g}" for x in row), *(str(int(f)) for f in flags)]))
    _emit(args, "\n".join(lines) + "\n", {})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="periodiclift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def system_flags(p):
        p.add_argument("--system", help="path to a JSON system spec")
        p.add_argument("--builtin", choices=BUILTINS, help="use a built-in system")
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="builtin parameter (repeatable)")
        p.add_argument("--x0", help="initial state as 're,im;re,im;...' (default: origin)")
        p.add_argument("--out", help="output file (default: standard output, no manifest)")

    def solver_flags(p):
        p.add_argument("--t-end", type=float, default=1.0)
        p.add_argument("--grid", type=int, default=512, help="number of output samples")
        p.add_argument("--rel-tol", type=float, default=1e-10)
        p.add_argument("--abs-tol", type=float, default=1e-12)

    p = sub.add_parser("lift", help="write the truncated lifted matrix as JSON")
    system_flags(p)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--order", type=int, required=True)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("simulate", help="integrate the nonlinear or lifted system to CSV")
    system_flags(p)
    solver_flags(p)
    p.add_argument("--method", choices=("none",) + METHODS, default="none")
    p.add_argument("--order", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bounds", help="evaluate admissibility, horizon and error bound as JSON")
    system_flags(p)
    p.add_argument("--method", choices=BOUND_SCHEMES, required=True)
    p.add_argument("--radius", type=float, default=e**2, help="decay radius R (default e^2)")
    p.add_argument("--optimize-r", action="store_true", help="choose R to maximize the horizon")
    p.add_argument("--order", type=int, default=10, help="largest order in the bound samples")
    p.set_defaults(func=cmd_bounds)

    for name, func, text in (
        ("sweep", cmd_sweep, "two-parameter error surface from a job file"),
        ("compare", cmd_compare, "side-by-side scheme errors from a job file"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("job", help="path to the JSON job file")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--out", help="output file (default: standard output, no manifest)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except LiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, OverflowError, np.linalg.LinAlgError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
