"""Command-line front end: Fermi data, zero curves, bound certificates and a self-test.

Every output embeds the resolved configuration and a build id, and is
byte-identical across repeated runs with the same configuration.
"""

import argparse
import csv
import io
import json
import logging
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import __version__
from .complexplane import (
    GUARD,
    REGIONS,
    asymptotic_constant,
    certify_bounds,
    curve_samples,
    eval_eps_complex,
    harmonicity_check,
    jump_check,
    omega_eval,
    residue_check,
    symmetry_check,
    trace_curve,
)
from .dressed import dressed_solution
from .errors import DomainError, ParameterError, SolverError
from .fermi import solve_fermi
from .fredholm import build_grid, evaluate, neumann_oracle, solve_fredholm
from .kernels import PI, ModelParams, kernel_K, kernel_fourier, resolvent_inf

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PARAMS, EXIT_SOLVER, EXIT_BOUND = 0, 2, 3, 4

DEFAULTS = {
    "J": 1.0,
    "gamma": 1.3,
    "h": None,
    "h_ratio": None,
    "n": 256,
    "tol": 1e-12,
    "guard": GUARD,
    "out": None,
    "format": None,
    "seed": 0,
    "threads": 1,
    # curve
    "points": 40,
    "eta_min": GUARD,
    # bounds
    "nx": 200,
    "ny": 200,
    "regions": list(REGIONS),
    # sweep
    "ratios": None,
    "count": 20,
    "ratio_min": 0.05,
    "ratio_max": 0.95,
}

DEFAULT_RATIO = 0.5


def build_id():
    """``git describe`` of the source tree, or the package version outside a checkout."""
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if res.returncode == 0 and res.stdout.strip():
            return f"{__version__}+{res.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def make_parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file with option values; flags take precedence")
    common.add_argument("--J", type=float, help="exchange coupling (default 1)")
    common.add_argument("--gamma", type=float, help="anisotropy angle in (0, pi/2) (default 1.3)")
    field = common.add_mutually_exclusive_group()
    field.add_argument("--h", type=float, help="magnetic field")
    field.add_argument("--h-ratio", dest="h_ratio", type=float,
                       help="field in units of h_c (default 0.5)")
    common.add_argument("--n", type=int, help="Gauss-Legendre nodes per solve (default 256)")
    common.add_argument("--tol", type=float, help="tolerance on eps(Q_F|Q_F) (default 1e-12)")
    common.add_argument("--guard", type=float, help="pole and cut guard radius (default 1e-3)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"),
                        help="output format (default csv for curve and sweep, json otherwise)")
    common.add_argument("--seed", type=int, help="seed for randomized checks (default 0)")
    common.add_argument("--threads", type=int, help="worker threads (default 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="xxzdressed", description="Dressed energy of the critical XXZ chain.")
    sub = parser.add_subparsers(dest="command", required=True)
    opts = {"parents": [common], "argument_default": argparse.SUPPRESS}
    sub.add_parser("fermi", help="Fermi rapidity and dQ_F/dh", **opts)
    p = sub.add_parser("curve", help="zero curve Re eps = 0 as CSV", **opts)
    p.add_argument("--points", type=int, help="number of y samples (default 40)")
    p.add_argument("--eta-min", dest="eta_min", type=float,
                   help="distance of the last sample below gamma/2 (default 1e-3)")
    p = sub.add_parser("bounds", help="certify the bounds on Re eps", **opts)
    p.add_argument("--nx", type=int, help="grid points in x (default 200)")
    p.add_argument("--ny", type=int, help="grid points in y (default 200)")
    p.add_argument("--regions", nargs="+", choices=REGIONS)
    sub.add_parser("selftest", help="run the invariant suite", **opts)
    p = sub.add_parser("sweep", help="Q_F over a range of fields", **opts)
    p.add_argument("--ratios", type=float, nargs="+", help="explicit h/h_c values")
    p.add_argument("--count", type=int, help="number of fields (default 20)")
    p.add_argument("--ratio-min", dest="ratio_min", type=float)
    p.add_argument("--ratio-max", dest="ratio_max", type=float)
    return parser


def resolve_config(args):
    """Defaults, overlaid by the config file, overlaid by explicit flags."""
    cfg = dict(DEFAULTS)
    flags = vars(args).copy()
    command = flags.pop("command")
    flags.pop("verbose", None)
    path = flags.pop("config", None)
    if path is not None:
        with open(path) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    if "h" in flags:
        cfg["h_ratio"] = None
    if "h_ratio" in flags:
        cfg["h"] = None
    cfg.update(flags)
    if cfg["h"] is not None and cfg["h_ratio"] is not None:
        raise ParameterError("give either h or h_ratio, not both")
    if cfg["h"] is None and cfg["h_ratio"] is None:
        cfg["h_ratio"] = DEFAULT_RATIO
    for key in ("tol", "guard", "eta_min"):
        if not cfg[key] > 0:
            raise ParameterError(f"{key} must be positive, got {cfg[key]}")
    for key in ("n", "points", "nx", "ny", "count", "threads"):
        if int(cfg[key]) != cfg[key] or cfg[key] < 1:
            raise ParameterError(f"{key} must be a positive integer, got {cfg[key]}")
    if cfg["format"] is None:
        cfg["format"] = {"curve": "csv", "sweep": "csv", "selftest": "text"}.get(command, "json")
    cfg["command"] = command
    return cfg


def params_from(cfg, ratio=None):
    if ratio is not None:
        return ModelParams.from_ratio(cfg["J"], cfg["gamma"], ratio)
    if cfg["h_ratio"] is not None:
        return ModelParams.from_ratio(cfg["J"], cfg["gamma"], cfg["h_ratio"])
    return ModelParams(cfg["J"], cfg["gamma"], cfg["h"])


def fermi_for(cfg, params):
    n = int(cfg["n"])
    return solve_fermi(params, tol=cfg["tol"], n=n, n_final=2 * n)


# --------------------------------------------------------------------------
# output

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def _num(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def render(cfg, payload, columns=None, rows=None):
    """Serialize a result; ``payload`` is a dict, ``rows`` a table for CSV."""
    # the destination does not affect the result, so it stays out of the record
    cfg = {k: v for k, v in cfg.items() if k != "out"}
    meta = {"config": cfg, "build": build_id()}
    if cfg["format"] == "json":
        body = dict(meta)
        body.update(payload)
        if rows is not None:
            body["rows"] = [dict(zip(columns, r)) for r in rows]
        return json.dumps(_clean(body), indent=2, sort_keys=True) + "\n"
    if rows is None:
        columns = sorted(payload)
        flat = {k: v for k, v in payload.items()}
        rows = [[flat[k] if not isinstance(flat[k], dict) else json.dumps(_clean(flat[k]),
                                                                           sort_keys=True)
                 for k in columns]]
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(_clean(cfg), sort_keys=True)}\n")
    buf.write(f"# build: {meta['build']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _num(v) for v in r])
    return buf.getvalue()


def emit(cfg, text):
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands

def cmd_fermi(cfg):
    p = params_from(cfg)
    fd = fermi_for(cfg, p)
    payload = {"params": p.as_dict()}
    payload.update(fd.as_dict())
    emit(cfg, render(cfg, payload))
    return EXIT_OK


def cmd_curve(cfg):
    p = params_from(cfg)
    fd = fermi_for(cfg, p)
    ys = curve_samples(p.gamma, int(cfg["points"]), cfg["eta_min"])
    pts = trace_curve(fd, ys, tol=1e-13)
    cols = ["y", "x", "im_eps", "residual"]
    rows = [[q.y, q.x, q.im_eps, q.residual] for q in pts]
    payload = {"params": p.as_dict(), "Q_F": fd.Q_F,
               "symmetry": "full curve: (+-x, +-y) with Im eps odd in x and y"}
    emit(cfg, render(cfg, payload, cols, rows))
    return EXIT_OK


def _map(cfg, fn, items):
    threads = int(cfg["threads"])
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, items))


def cmd_bounds(cfg):
    p = params_from(cfg)
    fd = fermi_for(cfg, p)
    reports = _map(cfg, lambda r: certify_bounds(fd, r, nx=int(cfg["nx"]), ny=int(cfg["ny"]),
                                                 guard=cfg["guard"]), cfg["regions"])
    payload = {"params": p.as_dict(), "Q_F": fd.Q_F,
               "reports": [r.as_dict() for r in reports]}
    if cfg["format"] == "csv":
        cols = ["region", "y_lo", "y_hi", "nx", "ny", "n_points", "min_value", "bound",
                "margin", "passed", "refined", "skipped"]
        rows = [[r.region, r.y_range[0], r.y_range[1], r.nx, r.ny, r.n_points, r.min_value,
                 r.bound, r.margin, r.passed, r.refined, r.skipped] for r in reports]
        emit(cfg, render(cfg, payload, cols, rows))
    else:
        emit(cfg, render(cfg, payload))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_BOUND


def cmd_sweep(cfg):
    if cfg["ratios"]:
        ratios = [float(r) for r in cfg["ratios"]]
    else:
        ratios = list(np.linspace(cfg["ratio_min"], cfg["ratio_max"], int(cfg["count"])))
    plist = [params_from(cfg, r) for r in ratios]
    results = _map(cfg, lambda p: fermi_for(cfg, p), plist)
    cols = ["h_ratio", "h", "Q_F", "Q_0", "Q_u", "dQF_dh", "g_residual"]
    rows = [[r, f.params.h, f.Q_F, f.Q_0, f.Q_u, f.dQF_dh, f.g_residual]
            for r, f in zip(ratios, results)]
    emit(cfg, render(cfg, {"J": cfg["J"], "gamma": cfg["gamma"]}, cols, rows))
    return EXIT_OK


def selftest_items(cfg):
    """``(name, check)`` pairs; each check returns ``(passed, detail)``."""
    p = params_from(cfg)
    g = p.gamma
    n = int(cfg["n"])
    state = {}

    def fermi():
        if "fd" not in state:
            state["fd"] = fermi_for(cfg, p)
        return state["fd"]

    def kernel_integral():
        val = quad(lambda x: kernel_K(x, g), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
        err = abs(val - (1 - 2 * g / PI))
        return err < 1e-8, err

    def kernel_transform():
        k = 2.0
        val = 2 * quad(lambda x: kernel_K(x, g) * np.cos(k * x), 0, 60, limit=400,
                       epsabs=1e-14)[0]
        err = abs(val - kernel_fourier(k, g))
        return err < 1e-8, err

    def kernel_periodic():
        z = np.array([0.3 + 0.2j, -1.1 + 0.05j, 2.0 - 0.4j])
        err = np.max(np.abs(kernel_K(z + 1j * PI, g) - kernel_K(z, g)))
        return err < 1e-12, err

    def resolvent_backends():
        z = np.array([0.0, 0.7, 2.5, 0.4 + 0.2 * g])
        err = np.max(np.abs(resolvent_inf(z, g) - resolvent_inf(z, g, method="convolution")))
        return err < 1e-10, err

    def nystrom_neumann():
        grid = build_grid(1.0, n)
        f0 = lambda x: np.cosh(0.3 * x)  # noqa: E731
        a = solve_fredholm(f0, grid, g)
        b = neumann_oracle(f0, grid, g)
        err = np.max(np.abs(a.values - b.values))
        return err < 1e-9, err

    def linear_relation():
        sol = dressed_solution(p, 1.0, n)
        diff = sol.eps.values - (p.h * sol.Z.values - 4 * PI * p.J * np.sin(g) * sol.rho.values)
        err = np.max(np.abs(diff))
        return err < 1e-11, err

    def fermi_residual():
        fd = fermi()
        ok = fd.g_residual < 1e-10 and (fd.Q_u is None or fd.Q_u < fd.Q_F) and fd.Q_F < fd.Q_0
        return ok and fd.dQF_dh < 0, fd.g_residual

    def grid_convergence():
        fd = fermi()
        fine = dressed_solution(p, fd.Q_F, 4 * n)
        z = np.array([0.0, 0.5 * fd.Q_F, 0.3 + 0.25j * g, 1.0 + 1.2j])
        err = np.max(np.abs(evaluate(fd.solution.eps, z) - evaluate(fine.eps, z)))
        return err < 1e-10, err

    def residue():
        r = residue_check(fermi())
        err = abs(r - 2j * p.J * np.sin(g)) / (2 * p.J * np.sin(g))
        return err < 1e-6, err

    def jump():
        fd = fermi()
        scale = abs(float(evaluate(fd.solution.eps, 0.0)))
        xs = np.linspace(-0.9, 0.9, 10) * fd.Q_F
        err = max(jump_check(fd, x, delta=1e-5) for x in xs) / scale
        return err < 1e-3, err

    def omega():
        fd = fermi()
        z = np.linspace(0.0, 6.0, 13)
        err = np.max(np.abs(omega_eval(fd, z) - eval_eps_complex(fd, z + 0.5j * PI)))
        return err < 1e-6, err

    def symmetry():
        err = symmetry_check(fermi(), seed=cfg["seed"] + 1)
        return err < 1e-10, err

    def harmonicity():
        err = float(np.max(harmonicity_check(fermi(), seed=cfg["seed"])))
        return err < 1e-4, err

    def curve_start():
        fd = fermi()
        pt = trace_curve(fd, [0.0])[0]
        err = abs(pt.x - fd.Q_F)
        return err < 1e-8, err

    def asymptotics():
        a = asymptotic_constant(fermi())
        pref = np.sqrt(2 * p.J * np.sin(g) / a.c)
        err = abs(a.x_prefactor / pref - 1)
        ok = a.c > 0 and 0.45 < a.x_exponent < 0.55 and -0.55 < a.im_exponent < -0.45
        return ok and err < 0.03, err

    return [
        ("kernel integral", kernel_integral),
        ("kernel Fourier transform", kernel_transform),
        ("kernel i*pi periodicity", kernel_periodic),
        ("resolvent backends", resolvent_backends),
        ("Nystrom vs Neumann", nystrom_neumann),
        ("eps = h Z - 4 pi J sin(gamma) rho", linear_relation),
        ("Fermi point", fermi_residual),
        ("grid convergence", grid_convergence),
        ("residue at i gamma/2", residue),
        ("jump across the cut", jump),
        ("omega representation", omega),
        ("symmetries", symmetry),
        ("harmonicity", harmonicity),
        ("curve starts at Q_F", curve_start),
        ("curve asymptotics", asymptotics),
    ]


def cmd_selftest(cfg):
    results = []
    for name, check in selftest_items(cfg):
        try:
            ok, detail = check()
            detail = float(detail)
        except (SolverError, DomainError, ArithmeticError, np.linalg.LinAlgError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    if cfg["format"] == "json":
        payload = {"items": [{"name": n_, "passed": ok, "detail": d} for n_, ok, d in results]}
        emit(cfg, render(cfg, payload))
    else:
        lines = [f"{'PASS' if ok else 'FAIL'}  {name}: "
                 f"{_num(d) if isinstance(d, float) else d}" for name, ok, d in results]
        emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK if all(ok for _, ok, _ in results) else 1


COMMANDS = {
    "fermi": cmd_fermi,
    "curve": cmd_curve,
    "bounds": cmd_bounds,
    "selftest": cmd_selftest,
    "sweep": cmd_sweep,
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False)
                        else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        params_from(cfg)
        return COMMANDS[cfg["command"]](cfg)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except (SolverError, DomainError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
