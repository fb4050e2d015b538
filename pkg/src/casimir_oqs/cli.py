"""
Command-line front end.

``casimir-oqs <force|sweep|epsilon|chi|verify> [--config FILE] [--set k=v]...
[--out FILE] [--jobs N]``

The configuration is flat ``section.key = value`` text; ``#`` starts a
comment. Every key has a default (see ``casimir-oqs --help``) and may be
overridden with ``--set``. CSV output begins with ``#`` lines echoing the
fully resolved configuration, followed by a header row. Floats are written
with 17 significant digits.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
import io
import math
import sys

import numpy as np

from . import __version__
from .checks import CHECKS, run_checks
from .environment import Cutoff, EnvironmentSpec, ThermalState
from .errors import CasimirError, ConfigError, DomainError
from .force import (
    ForceConfig,
    force_closed,
    force_decomposed,
    force_lifshitz_T0,
    force_matsubara,
    force_semispace_real,
    require_real_axis,
)
from .optics import Geometry, MediumSpec, permittivity, refractive_index, susceptibility
from .quadrature import QuadratureSettings

__all__ = ["main", "RunConfig", "parse_config", "build_run_config"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

SUBCOMMANDS = ("force", "sweep", "epsilon", "chi", "verify")
ROUTES = ("decomposed", "closed", "matsubara", "lifshitz_t0", "semispace_real", "all")
SWEEP_VARIABLES = ("gap", "temperature", "gamma0", "omega_p", "thickness")
SPACINGS = ("linear", "log")

# key -> (default, parser). Defaults are the built-in verification medium.
_str = str
DEFAULTS = {
    "medium.omega0": (1.0, float),
    "medium.omega_p": (2.0, float),
    "env.alpha": (1.0, float),
    "env.gamma0": (0.2, float),
    "env.lambda_cut": (1.0, float),
    "env.cutoff": ("none", _str),
    "env.mass": (1.0, float),
    "geometry.thickness": (1.0, float),
    "geometry.gap": (1.0, float),
    "thermal.temperature": (0.5, float),
    "quad.rel_tol": (1e-9, float),
    "quad.abs_tol": (1e-12, float),
    "quad.max_panels": (20000, int),
    "run.route": ("closed", _str),
    "sweep.variable": ("gap", _str),
    "sweep.start": (0.5, float),
    "sweep.stop": (4.0, float),
    "sweep.count": (8, int),
    "sweep.spacing": ("log", _str),
    "grid.start": (math.nan, float),
    "grid.stop": (math.nan, float),
    "grid.count": (101, int),
    "grid.spacing": ("linear", _str),
    "output.path": ("", _str),
}

CSV_COLUMNS = {
    "force": ("route", "F_total", "F_vacuum", "F_langevin", "abs_error",
              "evaluations", "error", "consistency"),
    "sweep": ("swept_value", "F_total", "F_vacuum", "F_langevin", "abs_error",
              "evaluations", "route", "error"),
    "epsilon": ("omega", "re_eps", "im_eps", "re_n", "im_n", "error"),
    "chi": ("tau", "chi_analytic", "chi_numeric", "error"),
}

_EPILOG = """\
units: every frequency, wavenumber, length and temperature is a
dimensionless multiple of one reference scale chosen by the user
(hbar = k_B = c = 1). The tool never converts units.

configuration keys (section.key = value) and defaults:
""" + "\n".join(f"  {k} = {v[0]}" for k, v in DEFAULTS.items()) + """
  verify.<check> = <tolerance>   override one verification tolerance

routes: decomposed, closed, semispace_real (real axis); matsubara (T > 0),
lifshitz_t0 (T = 0) (imaginary axis); all.
exit codes: 0 ok, 2 configuration error, 3 numerical failure,
4 verification failure.
"""


@dataclass(frozen=True)
class RunConfig:
    """Validated run description."""

    subcommand: str
    force: ForceConfig
    route: str
    sweep_variable: str
    sweep_grid: np.ndarray
    grid: np.ndarray
    output: str
    tolerances: dict
    resolved: dict


def _err(key, message):
    return ConfigError(f"{key}: {message}", key=key)


def fmt(x):
    """17-significant-digit float text; empty for None."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x).replace(",", ";").replace("\n", " ")


def parse_config(text: str) -> dict:
    """
    Parse ``section.key = value`` lines into raw strings.

    Raises
    ------
    ConfigError
        On malformed lines or keys not in ``DEFAULTS`` (and not ``verify.*``).
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _err(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        _check_key(key)
        out[key] = value
    return out


def _check_key(key):
    if key in DEFAULTS:
        return
    if key.startswith("verify."):
        name = key.split(".", 1)[1]
        if name not in CHECKS:
            raise _err(key, f"unknown check {name!r}")
        return
    raise _err(key, "unknown configuration key")


def _parse_value(key, raw):
    if key.startswith("verify."):
        parser = float
    else:
        parser = DEFAULTS[key][1]
    try:
        value = parser(raw) if isinstance(raw, str) else raw
    except ValueError:
        raise _err(key, f"cannot parse {raw!r} as {parser.__name__}") from None
    if parser is float and isinstance(value, float) and math.isinf(value):
        raise _err(key, "must be finite")
    return value


def _grid(key_prefix, start, stop, count, spacing):
    if count < 2:
        raise _err(f"{key_prefix}.count", "must be >= 2")
    if not start < stop:
        raise _err(f"{key_prefix}.start", "must be < stop")
    if spacing not in SPACINGS:
        raise _err(f"{key_prefix}.spacing", f"must be one of {SPACINGS}")
    if spacing == "log":
        if not start > 0:
            raise _err(f"{key_prefix}.start", "log spacing needs start > 0")
        # Base-2 exponents keep power-of-two grids exact.
        return np.exp2(np.linspace(np.log2(start), np.log2(stop), count))
    return np.linspace(start, stop, count)


def _blame(exc, keys):
    """Key among ``keys`` whose field name appears in the error message."""
    msg = str(exc)
    for key in keys:
        if key.split(".", 1)[1] in msg:
            return key
    return keys[0]


def _build(section_keys, factory):
    try:
        return factory()
    except (ValueError, TypeError, CasimirError) as exc:
        key = _blame(exc, section_keys)
        raise _err(key, str(exc)) from None


def build_run_config(subcommand: str, raw: dict) -> RunConfig:
    """Fill defaults, parse values and build the library objects."""
    if subcommand not in SUBCOMMANDS:
        raise _err("subcommand", f"must be one of {SUBCOMMANDS}")
    for key in raw:
        _check_key(key)
    v = {k: _parse_value(k, raw.get(k, d)) for k, (d, _) in DEFAULTS.items()}
    tolerances = {k.split(".", 1)[1]: _parse_value(k, s)
                  for k, s in raw.items() if k.startswith("verify.")}
    for name, tol in tolerances.items():
        if not tol >= 0:
            raise _err(f"verify.{name}", "tolerance must be >= 0")

    env_keys = ["env.alpha", "env.gamma0", "env.lambda_cut", "env.cutoff", "env.mass"]
    env = _build(env_keys, lambda: EnvironmentSpec(
        alpha=v["env.alpha"], gamma0=v["env.gamma0"], lambda_cut=v["env.lambda_cut"],
        cutoff=Cutoff.parse(v["env.cutoff"]), mass=v["env.mass"]))
    med = _build(["medium.omega0", "medium.omega_p"], lambda: MediumSpec(
        omega0=v["medium.omega0"], omega_p=v["medium.omega_p"], env=env))
    geom = _build(["geometry.thickness", "geometry.gap"], lambda: Geometry(
        thickness=v["geometry.thickness"], gap=v["geometry.gap"]))
    thermal = _build(["thermal.temperature"],
                     lambda: ThermalState(v["thermal.temperature"]))
    quad = _build(["quad.rel_tol", "quad.abs_tol", "quad.max_panels"],
                  lambda: QuadratureSettings(rel_tol=v["quad.rel_tol"],
                                             abs_tol=v["quad.abs_tol"],
                                             max_panels=v["quad.max_panels"]))
    cfg = ForceConfig(med, geom, thermal, quad)

    route = v["run.route"]
    if route not in ROUTES:
        raise _err("run.route", f"must be one of {ROUTES}")
    sweep_grid = np.empty(0)
    grid = np.empty(0)
    if subcommand == "force":
        _validate_route(cfg, route)
    elif subcommand == "sweep":
        if route == "all":
            raise _err("run.route", "sweep needs a single route")
        if v["sweep.variable"] not in SWEEP_VARIABLES:
            raise _err("sweep.variable", f"must be one of {SWEEP_VARIABLES}")
        sweep_grid = _grid("sweep", v["sweep.start"], v["sweep.stop"],
                           v["sweep.count"], v["sweep.spacing"])
        for x in sweep_grid:
            point = _sweep_point(cfg, v["sweep.variable"], x)
            _validate_route(point, route, key="sweep.start")
    elif subcommand in ("epsilon", "chi"):
        scale = med.scale if med.scale > 0 else 1.0
        w0 = med.omega0 if med.omega0 > 0 else scale
        if subcommand == "epsilon":
            lo, hi = 0.01 * scale, 5.0 * scale
        else:
            lo, hi = -5.0 / w0, 20.0 / w0
        start = lo if math.isnan(v["grid.start"]) else v["grid.start"]
        stop = hi if math.isnan(v["grid.stop"]) else v["grid.stop"]
        v["grid.start"], v["grid.stop"] = start, stop
        grid = _grid("grid", start, stop, v["grid.count"], v["grid.spacing"])
        if subcommand == "epsilon" and not grid[0] > 0:
            raise _err("grid.start", "epsilon needs omega > 0")
    resolved = dict(v)
    resolved.update({f"verify.{k}": t for k, t in tolerances.items()})
    return RunConfig(subcommand, cfg, route, v["sweep.variable"], sweep_grid, grid,
                     v["output.path"], tolerances, resolved)


def _validate_route(cfg, route, key="run.route"):
    T = cfg.thermal.temperature
    if route == "matsubara" and T == 0:
        raise _err(key, "matsubara route needs thermal.temperature > 0")
    if route == "lifshitz_t0" and T != 0:
        raise _err(key, "lifshitz_t0 route needs thermal.temperature = 0")
    if route in ("decomposed", "closed", "semispace_real"):
        try:
            require_real_axis(cfg, semispace=route == "semispace_real")
        except DomainError as exc:
            raise _err(key, str(exc)) from None


def _sweep_point(cfg, variable, x):
    x = float(x)
    if variable == "gap":
        return replace(cfg, geometry=replace(cfg.geometry, gap=x))
    if variable == "thickness":
        return replace(cfg, geometry=replace(cfg.geometry, thickness=x))
    if variable == "temperature":
        return replace(cfg, thermal=ThermalState(x))
    if variable == "omega_p":
        return replace(cfg, medium=replace(cfg.medium, omega_p=x))
    env = replace(cfg.medium.env, gamma0=x)
    return replace(cfg, medium=replace(cfg.medium, env=env))


_ROUTE_FUNCS = {
    "decomposed": force_decomposed,
    "closed": force_closed,
    "matsubara": force_matsubara,
    "lifshitz_t0": force_lifshitz_T0,
    "semispace_real": force_semispace_real,
}


def _run_route(cfg, route):
    """``(ForceResult or partial or None, error message or "")``."""
    try:
        return _ROUTE_FUNCS[route](cfg), ""
    except CasimirError as exc:
        return getattr(exc, "partial", None), f"{type(exc).__name__}: {exc}"


def _force_row(res, err):
    if res is None:
        return [None, None, None, None, None]
    return [res.total, res.vacuum_part, res.langevin_part,
            res.abs_error_estimate, res.evaluations]


def _header(rc, out):
    out.write(f"# casimir-oqs {rc.subcommand} {__version__}\n")
    for key in sorted(rc.resolved):
        out.write(f"# {key} = {fmt(rc.resolved[key])}\n")


def _write_rows(out, columns, rows):
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(fmt(x) for x in row) + "\n")


def run_force(rc: RunConfig, out):
    cfg = rc.force
    T = cfg.thermal.temperature
    if rc.route == "all":
        routes = ["decomposed", "closed", "semispace_real",
                  "matsubara" if T > 0 else "lifshitz_t0"]
    else:
        routes = [rc.route]
    rows, status, results = [], EXIT_OK, {}
    for route in routes:
        try:
            if rc.route == "all":
                _validate_route(cfg, route)
        except ConfigError as exc:
            rows.append([route, None, None, None, None, None, f"skipped: {exc}", None])
            continue
        res, err = _run_route(cfg, route)
        if err:
            status = EXIT_NUMERIC
        results[route] = res if not err else None
        rows.append([route] + _force_row(res, err) + [err, None])
    if rc.route == "all":
        dec, clo = results.get("decomposed"), results.get("closed")
        if dec is not None and clo is not None:
            cons = (abs(dec.total - clo.total) / abs(clo.total) if clo.total != 0
                    else abs(dec.total))
            for row in rows:
                row[-1] = cons
    _header(rc, out)
    _write_rows(out, CSV_COLUMNS["force"], rows)
    return status


def _sweep_task(args):
    cfg, variable, x, route = args
    res, err = _run_route(_sweep_point(cfg, variable, x), route)
    return [float(x)] + _force_row(res, err) + [route, err]


def run_sweep(rc: RunConfig, out, jobs=1):
    tasks = [(rc.force, rc.sweep_variable, x, rc.route) for x in rc.sweep_grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    _header(rc, out)
    _write_rows(out, CSV_COLUMNS["sweep"], rows)
    return EXIT_NUMERIC if any(r[-1] for r in rows) else EXIT_OK


def run_epsilon(rc: RunConfig, out):
    med = rc.force.medium
    rows, status = [], EXIT_OK
    for w in rc.grid:
        try:
            eps = complex(permittivity(med, w))
            n = complex(refractive_index(med, w))
            rows.append([w, eps.real, eps.imag, n.real, n.imag, ""])
        except CasimirError as exc:
            status = EXIT_NUMERIC
            rows.append([w, None, None, None, None, f"{type(exc).__name__}: {exc}"])
    _header(rc, out)
    _write_rows(out, CSV_COLUMNS["epsilon"], rows)
    return status


def run_chi(rc: RunConfig, out):
    med = rc.force.medium
    tau = rc.grid
    e = med.env
    analytic = None
    if e.alpha == 3 and e.cutoff is Cutoff.LORENTZIAN and med.omega0 > 0:
        analytic = susceptibility(med, tau, method="analytic")
    status, err = EXIT_OK, ""
    try:
        numeric = susceptibility(med, tau, method="numeric")
    except CasimirError as exc:
        numeric, status = None, EXIT_NUMERIC
        err = f"{type(exc).__name__}: {exc}"
    rows = [[t, None if analytic is None else analytic[i],
             None if numeric is None else numeric[i], err]
            for i, t in enumerate(tau)]
    _header(rc, out)
    _write_rows(out, CSV_COLUMNS["chi"], rows)
    return status


def run_verify(rc: RunConfig, out):
    _header(rc, out)
    results = run_checks(rc.force, rc.tolerances)
    for r in results:
        out.write(r.line() + "\n")
    failed = [r.name for r in results if not r.passed]
    passed = sum(r.passed and not r.skipped for r in results)
    skipped = sum(r.skipped for r in results)
    out.write(f"# {passed} passed, {len(failed)} failed, {skipped} skipped\n")
    if failed:
        out.write("# failing checks: " + ", ".join(failed) + "\n")
        return EXIT_VERIFY
    return EXIT_OK


def _parser():
    p = argparse.ArgumentParser(
        prog="casimir-oqs",
        description="Casimir force between absorbing slabs coupled to an "
                    "oscillator bath.",
        epilog=_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", metavar="FILE", help="configuration file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   help="override one configuration key (repeatable)")
    p.add_argument("--out", metavar="FILE", help="output file (default stdout)")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw.update(parse_config(fh.read()))
            except OSError as exc:
                raise _err("--config", str(exc)) from None
        for item in args.set:
            if "=" not in item:
                raise _err("--set", f"expected KEY=VALUE, got {item!r}")
            key, value = (s.strip() for s in item.split("=", 1))
            _check_key(key)
            raw[key] = value
        if args.jobs < 1:
            raise _err("--jobs", "must be >= 1")
        rc = build_run_config(args.subcommand, raw)
    except ConfigError as exc:
        print(f"casimir-oqs: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    buf = io.StringIO()
    runner = {"force": run_force, "epsilon": run_epsilon, "chi": run_chi,
              "verify": run_verify}.get(rc.subcommand)
    if rc.subcommand == "sweep":
        status = run_sweep(rc, buf, jobs=args.jobs)
    else:
        status = runner(rc, buf)
    path = args.out or rc.output
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if status == EXIT_NUMERIC:
        print("casimir-oqs: numerical failure, see the error column", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
