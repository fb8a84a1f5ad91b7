"""Command line front end: ``quasispec <command> CONFIG [options]``.

Problems are described by JSON files::

    {
      "interval": [0, 3.141592653589793],
      "coefficients": {"p": 1, "q": 0, "r": 1,
                       "s": {"breakpoints": [0, 1, 3.14159...], "pieces": [[0], [1]]}},
      "boundary": {"a": "dirichlet", "b": 0.0},
      "window": [0, 110]
    }

A ``"preset"`` name (with optional ``"params"``) may replace ``interval``
and ``coefficients``.  Tables go to CSV with ``%.16e`` formatting, reports
to JSON.  Exit codes: 0 success, 1 failed verification, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import asymptotics, debranges, inverse_verify, spectral, transforms
from .coefficients import (
    CoefficientSet,
    InvalidCoefficientsError,
    PiecewiseCoefficient,
    preset,
    validate,
)
from .quasi_ode import DEFAULT_RTOL

__all__ = ["ConfigError", "ProblemConfig", "load_config", "parse_config", "problem_to_config", "main"]

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

_TOP_KEYS = {
    "name",
    "interval",
    "coefficients",
    "preset",
    "params",
    "boundary",
    "window",
    "cpt",
    "phi_c",
    "z",
    "rays",
    "grid",
    "x",
    "transform",
    "second",
    "output",
}
_COEF_KEYS = {"p", "q", "r", "s"}
_BOUNDARY_KEYS = {"a", "b", "a2"}


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key or line."""


@dataclass
class ProblemConfig:
    problem: CoefficientSet
    phi_a: float = 0.0
    phi_b: float = 0.0
    phi_a2: float = math.pi / 2
    window: tuple = (0.0, 100.0)
    cpt: Optional[float] = None
    phi_c: float = 0.0
    z: list = field(default_factory=list)
    rays: tuple = (3 * math.pi / 4,)
    grid: tuple = asymptotics.DEFAULT_GRID
    x: Optional[float] = None
    transform: Optional[dict] = None
    second: Optional["ProblemConfig"] = None
    output: Optional[str] = None


def _angle(value, key):
    try:
        return spectral.as_angle(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _complex(value, key) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{key}: expected a number or [re, im]")


def _pair(value, key) -> tuple:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{key}: expected [lo, hi]")
    lo, hi = float(value[0]), float(value[1])
    if not lo < hi:
        raise ConfigError(f"{key}: need lo < hi")
    return lo, hi


def _coefficient(spec, interval, key):
    try:
        return PiecewiseCoefficient.from_spec(spec, interval)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _problem(data: dict, where: str) -> CoefficientSet:
    if "preset" in data:
        if "coefficients" in data or "interval" in data:
            raise ConfigError(f"{where}preset: cannot be combined with interval/coefficients")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}params: expected an object")
        try:
            return preset(data["preset"], **params)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"{where}preset: {exc}") from None
    if "interval" not in data:
        raise ConfigError(f"{where}interval: missing")
    interval = _pair(data["interval"], f"{where}interval")
    coefs = data.get("coefficients", {})
    if not isinstance(coefs, dict):
        raise ConfigError(f"{where}coefficients: expected an object")
    unknown = set(coefs) - _COEF_KEYS
    if unknown:
        raise ConfigError(f"{where}coefficients: unknown keys {sorted(unknown)}")
    defaults = {"p": 1.0, "q": 0.0, "r": 1.0, "s": 0.0}
    parsed = {
        k: _coefficient(coefs.get(k, defaults[k]), interval, f"{where}coefficients.{k}") for k in "pqrs"
    }
    c = CoefficientSet(interval, parsed["p"], parsed["q"], parsed["r"], parsed["s"], name=str(data.get("name", "")))
    report = validate(c)
    if not report:
        raise ConfigError(f"{where}coefficients: " + "; ".join(str(v) for v in report.violations))
    return c


def parse_config(data, where: str = "") -> ProblemConfig:
    """Build a :class:`ProblemConfig` from decoded JSON; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'}: expected a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{where}unknown keys {sorted(unknown)}")
    cfg = ProblemConfig(_problem(data, where))
    bnd = data.get("boundary", {})
    if not isinstance(bnd, dict) or set(bnd) - _BOUNDARY_KEYS:
        raise ConfigError(f"{where}boundary: expected keys among {sorted(_BOUNDARY_KEYS)}")
    cfg.phi_a = _angle(bnd.get("a", 0.0), f"{where}boundary.a")
    cfg.phi_b = _angle(bnd.get("b", 0.0), f"{where}boundary.b")
    cfg.phi_a2 = _angle(bnd.get("a2", math.pi / 2), f"{where}boundary.a2")
    if "window" in data:
        cfg.window = _pair(data["window"], f"{where}window")
    if "cpt" in data:
        cfg.cpt = float(data["cpt"])
    if "phi_c" in data:
        cfg.phi_c = _angle(data["phi_c"], f"{where}phi_c")
    if "z" in data:
        if not isinstance(data["z"], list):
            raise ConfigError(f"{where}z: expected a list")
        cfg.z = [_complex(v, f"{where}z[{i}]") for i, v in enumerate(data["z"])]
    if "rays" in data:
        cfg.rays = tuple(float(v) for v in data["rays"])
    if "grid" in data:
        cfg.grid = tuple(float(v) for v in data["grid"])
    if "x" in data:
        cfg.x = float(data["x"])
    if "transform" in data:
        if not isinstance(data["transform"], dict):
            raise ConfigError(f"{where}transform: expected an object")
        cfg.transform = data["transform"]
    if "second" in data:
        cfg.second = parse_config(data["second"], where=f"{where}second.")
    if "output" in data:
        cfg.output = str(data["output"])
    return cfg


def load_config(path: str) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def problem_to_config(c: CoefficientSet, phi_a: float = 0.0, phi_b: float = 0.0, **extra) -> dict:
    """JSON-ready description that :func:`parse_config` reads back."""
    out = c.to_dict()
    out["boundary"] = {"a": float(phi_a), "b": float(phi_b)}
    if c.name:
        out["name"] = c.name
    out.update(extra)
    return out


# -- transforms from config -------------------------------------------------------------


def _build_transform(c: CoefficientSet, spec: dict):
    kind = spec.get("kind")
    allowed = {
        "gauge": {"kind", "eta0", "nu"},
        "impedance": {"kind", "eta0", "nu0", "kappa0", "c1"},
        "liouville": {"kind", "eta", "kappa", "nu"},
    }
    if kind not in allowed:
        raise ConfigError("transform.kind: expected 'gauge', 'impedance' or 'liouville'")
    unknown = set(spec) - allowed[kind]
    if unknown:
        raise ConfigError(f"transform: unknown keys {sorted(unknown)}")
    try:
        if kind == "gauge":
            nu = _coefficient(spec.get("nu", 0.0), c.interval, "transform.nu")
            link = transforms.GaugeSpec(float(spec.get("eta0", 0.0)), nu)
            return transforms.gauge_transform(c, link), link
        if kind == "impedance":
            link = transforms.ImpedanceSpec(
                float(spec.get("eta0", 0.0)),
                float(spec.get("nu0", 0.0)),
                float(spec.get("kappa0", 1.0)),
                None if spec.get("c1") is None else float(spec["c1"]),
            )
            return transforms.impedance_transform(c, link), link
        eta = spec.get("eta", {"breakpoints": list(c.interval), "pieces": [[0.0, 1.0]]})
        link = transforms.LiouvilleMap(
            _coefficient(eta, c.interval, "transform.eta"),
            _coefficient(spec.get("kappa", 1.0), c.interval, "transform.kappa"),
            _coefficient(spec.get("nu", 0.0), c.interval, "transform.nu"),
        )
        return transforms.liouville_apply(c, link), link
    except ConfigError:
        raise
    except (ValueError, InvalidCoefficientsError) as exc:
        raise ConfigError(f"transform: {exc}") from None


def _transported(c: CoefficientSet, link, phi_a, phi_b):
    tmap = inverse_verify._as_map(c, link)
    return transforms.transport_angle(tmap, phi_a, "a"), transforms.transport_angle(tmap, phi_b, "b")


# -- output helpers -----------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _write_csv(header, rows, out: Optional[str]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    _emit(buf.getvalue(), out)


def _write_json(obj, out: Optional[str]):
    _emit(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", out)


def _json_default(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"not serialisable: {type(v).__name__}")


def _emit(text: str, out: Optional[str]):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# -- commands -------------------------------------------------------------------------------


def _window(cfg: ProblemConfig, args) -> tuple:
    return tuple(args.window) if args.window is not None else cfg.window


def _cmd_eig(cfg, args) -> int:
    spec = spectral.eigenvalues(
        cfg.problem, cfg.phi_a, cfg.phi_b, _window(cfg, args), rtol=args.tol_ode, tol=args.tol_eig
    )
    rows = [(int(i), float(lam), float(nrm)) for i, lam, nrm in zip(spec.indices, spec.eigenvalues, spec.norming)]
    _write_csv(["index", "eigenvalue", "norming"], rows, args.out)
    return EXIT_OK


def _z_list(cfg, args) -> list:
    zs = [complex(re, im) for re, im in (args.z or [])] or list(cfg.z)
    if not zs:
        raise ConfigError("z: no evaluation points (use --z RE IM or the 'z' key)")
    return zs


def _cmd_mfun(cfg, args) -> int:
    zs = _z_list(cfg, args)
    m = spectral.m_values(cfg.problem, zs, cfg.phi_a, cfg.phi_b, rtol=args.tol_ode)
    rows = [(z.real, z.imag, float(v.real), float(v.imag)) for z, v in zip(zs, m)]
    _write_csv(["re_z", "im_z", "re_m", "im_m"], rows, args.out)
    return EXIT_OK


def _cmd_measure(cfg, args) -> int:
    mu = spectral.spectral_measure(
        cfg.problem, cfg.phi_a, cfg.phi_b, _window(cfg, args), rtol=args.tol_ode, tol=args.tol_eig
    )
    rows = [(float(lam), float(w)) for lam, w in zip(mu.atoms, mu.weights)]
    _write_csv(["eigenvalue", "weight"], rows, args.out)
    return EXIT_OK


def _cpt(cfg, args) -> float:
    cpt = args.cpt if args.cpt is not None else cfg.cpt
    if cpt is None:
        raise ConfigError("cpt: missing (use --cpt or the 'cpt' key)")
    if not cfg.problem.a < cpt < cfg.problem.b:
        raise ConfigError(f"cpt: {cpt} not inside the interval")
    return float(cpt)


def _cmd_debranges(cfg, args) -> int:
    cpt = _cpt(cfg, args)
    rows = []
    for z in _z_list(cfg, args):
        E = debranges.e_function(cfg.problem, z, cpt, cfg.phi_a, rtol=args.tol_ode).E
        rows.append((z.real, z.imag, float(E.real), float(E.imag)))
    _write_csv(["re_z", "im_z", "re_E", "im_E"], rows, args.out)
    return EXIT_OK


def _cmd_transform(cfg, args) -> int:
    if cfg.transform is None:
        raise ConfigError("transform: missing")
    c2, link = _build_transform(cfg.problem, cfg.transform)
    phi_a, phi_b = _transported(cfg.problem, link, cfg.phi_a, cfg.phi_b)
    _write_json(problem_to_config(c2, phi_a, phi_b, window=list(cfg.window)), args.out)
    return EXIT_OK


def _cmd_two_spectra(cfg, args) -> int:
    if cfg.second is not None:
        c2 = cfg.second.problem
        link = None
        if cfg.transform is not None:
            _, link = _build_transform(cfg.problem, cfg.transform)
        window2 = cfg.second.window
    elif cfg.transform is not None:
        c2, link = _build_transform(cfg.problem, cfg.transform)
        window2 = None
    else:
        raise ConfigError("second/transform: need a second problem or a transform")
    window = _window(cfg, args)
    if args.window is not None:
        window2 = None
    rep = inverse_verify.two_spectra_verify(
        cfg.problem,
        c2,
        link,
        (cfg.phi_a, cfg.phi_a2),
        cfg.phi_b,
        window,
        window2,
        rtol=args.tol_ode,
        tol=args.tol_eig,
    )
    _write_json(rep.to_dict(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_three_spectra(cfg, args) -> int:
    zs = _z_list(cfg, args) if (args.z or cfg.z) else list(inverse_verify.DEFAULT_SAMPLES)
    if args.random_z:
        rng = np.random.default_rng(args.seed)
        zs += list(rng.uniform(-10, 10, args.random_z) + 1j * rng.uniform(0.1, 10, args.random_z))
    rep = inverse_verify.three_spectra_verify(
        cfg.problem,
        _cpt(cfg, args),
        cfg.phi_c,
        cfg.phi_a,
        cfg.phi_b,
        _window(cfg, args),
        zs,
        rtol=args.tol_ode,
    )
    _write_json(rep.to_dict(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _cmd_bm(cfg, args) -> int:
    if cfg.second is None:
        raise ConfigError("second: the Borg-Marchenko check needs a second problem")
    ray = args.ray if args.ray is not None else cfg.rays[0]
    rep = inverse_verify.borg_marchenko_decay(
        cfg.problem, cfg.second.problem, _cpt(cfg, args), ray, cfg.grid, cfg.phi_a, cfg.phi_b, rtol=args.tol_ode
    )
    out = rep.to_dict()
    passed = rep.bounded()
    out["status"] = "PASS" if passed else "FAIL"
    _write_json(out, args.out)
    return EXIT_OK if passed else EXIT_FAIL


def _cmd_asym(cfg, args) -> int:
    ray = args.ray if args.ray is not None else cfg.rays[0]
    c = cfg.problem
    x = cfg.x if cfg.x is not None else 0.5 * (c.a + c.b)
    q = args.quantity
    if q == "phi":
        reports = [asymptotics.phi_asymptotics(c, x, ray, cfg.grid, rtol=args.tol_ode)]
    elif q == "m":
        reports = [asymptotics.m_asymptotics(c, cfg.phi_a, ray, cfg.grid, cfg.phi_b, rtol=args.tol_ode)]
    elif q == "green":
        reports = [asymptotics.green_asymptotics(c, x, ray, cfg.grid, cfg.phi_b, rtol=args.tol_ode)]
    else:
        reports = list(asymptotics.b6_fixed_point_check(c, x, ray, cfg.grid, rtol=args.tol_ode))
    rows = []
    for rep in reports:
        for r, m, p, d in rep.rows():
            rows.append((rep.quantity, r, m.real, m.imag, p.real, p.imag, d))
    _write_csv(["quantity", "abs_z", "re_measured", "im_measured", "re_predicted", "im_predicted", "deviation"], rows, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="problem description (JSON)")
    common.add_argument("--tol-ode", type=float, default=DEFAULT_RTOL, help="relative tolerance of the integrator")
    common.add_argument("--tol-eig", type=float, default=1e-8, help="eigenvalue tolerance")
    common.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), help="spectral window [LO, HI)")
    common.add_argument("--ray", type=float, help="argument of z for ray-based checks")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomly drawn sample points")
    common.add_argument("--cpt", type=float, help="interior point")
    common.add_argument("--z", type=float, nargs=2, action="append", metavar=("RE", "IM"), help="evaluation point")

    parser = argparse.ArgumentParser(prog="quasispec", description="Spectral computations for quasi-derivative Sturm-Liouville problems.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("eig", parents=[common], help="eigenvalues and norming constants")
    sub.add_parser("mfun", parents=[common], help="Weyl function values")
    sub.add_parser("measure", parents=[common], help="spectral measure in a window")
    sub.add_parser("debranges", parents=[common], help="de Branges function E(z, c)")
    sub.add_parser("transform", parents=[common], help="apply a gauge, impedance or Liouville transform")
    asym = sub.add_parser("asym", parents=[common], help="high-energy asymptotics along a ray")
    asym.add_argument("--quantity", choices=["phi", "m", "green", "b6"], default="m")
    verify = sub.add_parser("verify", help="verification reports")
    vsub = verify.add_subparsers(dest="check", required=True)
    vsub.add_parser("two-spectra", parents=[common])
    three = vsub.add_parser("three-spectra", parents=[common])
    three.add_argument("--random-z", type=int, default=0, help="extra random sample points in the upper half plane")
    vsub.add_parser("bm", parents=[common])
    return parser


_COMMANDS = {
    "eig": _cmd_eig,
    "mfun": _cmd_mfun,
    "measure": _cmd_measure,
    "debranges": _cmd_debranges,
    "transform": _cmd_transform,
    "asym": _cmd_asym,
    ("verify", "two-spectra"): _cmd_two_spectra,
    ("verify", "three-spectra"): _cmd_three_spectra,
    ("verify", "bm"): _cmd_bm,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    key = ("verify", args.check) if args.command == "verify" else args.command
    if not hasattr(args, "random_z"):
        args.random_z = 0
    try:
        cfg = load_config(args.config)
        if args.out is None:
            args.out = cfg.output
        return _COMMANDS[key](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
