"""Command-line front end: one binary, six subcommands, CSV/PGM outputs.

Subcommands: ``thermo``, ``profile``, ``chain``, ``simulate``,
``tabulate``, ``droplet``.  Every run echoes its fully resolved
configuration to ``run.config`` (INI) inside the output directory;
re-running that file through ``--config`` reproduces the outputs byte
for byte.  Exit codes: 0 success, 1 usage, 2 validation, 3 I/O.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .droplet import SurfaceTension, minimize_droplet
from .gchain import (
    GaussianChain,
    WindowScaling,
    ou_covariance,
    rescaled_covariance,
    sample,
)
from .lattice import GravitationalField, LatticeGeometry
from .mc import (
    Boundary,
    CanonicalSampler,
    coarse_grain,
    concentration_distance,
    interface_height_estimate,
    layered_configuration,
    quantize_magnetization,
    snapshot,
    tabulate_isotherm,
)
from .profiles import continuum_gravity_profile, optimal_profile
from .thermo import Exact1D, MeanField, Tabulated, potentials_table

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

OUTDIR_ENV = "GRAVISING_OUTDIR"
FLOAT_FMT = "%.17g"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def _config_text(command: str, params: dict) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep flag case (e.g. N vs n)
    cp["run"] = {"command": command}
    for key in sorted(params):
        val = params[key]
        if val is None:
            continue
        cp["run"][key] = _fmt(val) if isinstance(val, float) else str(val)
    import io

    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def _stamp(cfg_hash: str) -> str:
    return f"# gravising {__version__} config={cfg_hash}\n"


def _write_csv(path: Path, header: str, rows, cfg_hash: str):
    lines = [_stamp(cfg_hash), header + "\n"]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")
    path.write_text("".join(lines), encoding="utf-8")


def _resolve_outdir(args) -> Path:
    outdir = os.environ.get(OUTDIR_ENV) or getattr(args, "outdir", None) or "."
    path = Path(outdir)
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".write_probe"
    probe.write_text("", encoding="utf-8")
    probe.unlink()
    return path


def _make_backend(args):
    if args.backend == "exact1d":
        return Exact1D(args.beta)
    if args.backend == "meanfield":
        return MeanField(args.beta, d=args.dim)
    if args.backend == "tabulated":
        if not args.table:
            raise ValueError("the tabulated backend requires --table CSV")
        return Tabulated.from_csv(args.table, args.beta, phi0=args.phi0)
    raise ValueError(f"unknown backend {args.backend!r}")


def _validate_m(m):
    if not (-1.0 < m < 1.0):
        raise ValueError(f"magnetization m={m:g} violates the bound -1 < m < 1")


def _validate_geometry(n_side, a):
    if n_side % a != 0:
        raise ValueError(f"cell side a={a} violates the divisibility constraint a | N={n_side}")


# -- subcommands -------------------------------------------------------------


def _cmd_thermo(args, params):
    backend = _make_backend(args)
    outdir = _resolve_outdir(args)
    cfg_hash = _echo_config(outdir, "thermo", params)
    h = np.linspace(args.h_min, args.h_max, args.steps)
    table = potentials_table(backend, h)
    _write_csv(outdir / args.out, "h,pressure,magnetization", table, cfg_hash)
    print(f"wrote {outdir / args.out}")
    return EXIT_OK


def _cmd_profile(args, params):
    _validate_m(args.m)
    _validate_geometry(args.N, args.a)
    backend = _make_backend(args)
    outdir = _resolve_outdir(args)
    cfg_hash = _echo_config(outdir, "profile", params)
    geometry = LatticeGeometry(args.N, args.d, args.a)
    field = GravitationalField(geometry, args.g, exponent=args.exponent)
    solution = optimal_profile(field, backend, args.m)

    rows = []
    cells_per_axis = geometry.cells_per_axis
    for flat, value in enumerate(solution.profile.values.reshape(-1)):
        idx = np.unravel_index(flat, geometry.cell_shape)
        height = (idx[-1] * geometry.a + geometry.a / 2.0) / geometry.n_side
        rows.append(tuple(int(k) for k in idx) + (float(height), float(value)))
    index_cols = ",".join(f"cell_index_{k + 1}" for k in range(geometry.d))
    _write_csv(outdir / args.out, f"{index_cols},height,q_star", rows, cfg_hash)

    interface = ""
    if args.g != 0.0:
        continuum = continuum_gravity_profile(backend, args.g, args.m, tol=args.tol)
        if continuum.interface_height is not None:
            interface = _fmt(continuum.interface_height)
    summary = f"{_fmt(solution.hbar)},{interface},{_fmt(solution.psi_value)}"
    (outdir / "summary.csv").write_text(
        _stamp(cfg_hash) + "hbar,interface_height,psi\n" + summary + "\n", encoding="utf-8"
    )
    print(summary)
    return EXIT_OK


def _cmd_chain(args, params):
    if args.g is not None:
        if args.n % 2 != 0:
            raise ValueError("the window scaling (--g) violates the even-n constraint")
        mass = args.g / np.sqrt(args.n)
    else:
        mass = args.mass
    chain = GaussianChain(args.n, mass=mass, constrained=args.constrained)
    outdir = _resolve_outdir(args)
    cfg_hash = _echo_config(outdir, "chain", params)
    if args.mode == "samples":
        fields = sample(chain, seed=args.seed, count=args.count)
        header = ",".join(f"phi_{i + 1}" for i in range(args.n))
        _write_csv(outdir / args.out, header, fields, cfg_hash)
    else:
        if args.g is None:
            raise ValueError("the covariance table mode requires --g (window scaling)")
        scaling = WindowScaling(args.g)
        ts = np.linspace(-args.t_max, args.t_max, args.points)
        rows = []
        for t1 in ts:
            for t2 in ts:
                if t2 < t1:
                    continue
                exact = rescaled_covariance(chain, scaling, float(t1), float(t2))
                limit = ou_covariance(args.g, float(t1), float(t2))
                rows.append((float(t1), float(t2), exact, limit, abs(exact - limit)))
        _write_csv(outdir / args.out, "t1,t2,exact,limit,deviation", rows, cfg_hash)
    print(f"wrote {outdir / args.out}")
    return EXIT_OK


def _cmd_simulate(args, params):
    _validate_m(args.m)
    _validate_geometry(args.N, args.a)
    backend = _make_backend(args)
    outdir = _resolve_outdir(args)
    cfg_hash = _echo_config(outdir, "simulate", params)
    geometry = LatticeGeometry(args.N, args.d, args.a)
    field = GravitationalField(geometry, args.g, exponent=args.exponent)
    if args.boundary == "dobrushin":
        boundary = Boundary.dobrushin(tuple([0.0] * (args.d - 1) + [1.0]))
    else:
        boundary = Boundary(args.boundary)
    total_m = quantize_magnetization(args.m, geometry)
    config = layered_configuration(geometry, total_m, boundary)
    sampler = CanonicalSampler(config, args.beta, field, seed=args.seed, proposal=args.proposal)
    reference = optimal_profile(field, backend, total_m / geometry.n_sites).profile

    rows = []
    for sweep_idx in range(1, args.sweeps + 1):
        sampler.sweep(1)
        profile = coarse_grain(sampler.config)
        dist = concentration_distance(profile, reference)
        height = interface_height_estimate(profile)
        rows.append(
            (sweep_idx, sampler.energy, dist, "" if height is None else _fmt(height))
        )
        if args.snapshot_interval and sweep_idx % args.snapshot_interval == 0:
            if geometry.d == 2:
                snapshot(sampler.config, outdir / f"snapshot_{sweep_idx:06d}.pgm")
    _write_csv(
        outdir / "measurements.csv", "sweep,energy,distance_to_qstar,interface_height",
        rows, cfg_hash,
    )
    final = coarse_grain(sampler.config)
    flat_rows = []
    for flat, value in enumerate(final.values.reshape(-1)):
        idx = np.unravel_index(flat, geometry.cell_shape)
        flat_rows.append(tuple(int(k) for k in idx) + (float(value),))
    index_cols = ",".join(f"cell_index_{k + 1}" for k in range(geometry.d))
    _write_csv(outdir / "profile.csv", f"{index_cols},m_cell", flat_rows, cfg_hash)
    print(f"final distance to q*: {concentration_distance(final, reference):.6f}")
    return EXIT_OK


def _cmd_tabulate(args, params):
    outdir = _resolve_outdir(args)
    cfg_hash = _echo_config(outdir, "tabulate", params)
    h = np.linspace(0.0, args.h_max, args.steps)
    m = tabulate_isotherm(
        args.beta, h, n_side=args.N, d=args.d, sweeps=args.sweeps,
        burnin=args.burnin, seed=args.seed,
    )
    _write_csv(outdir / args.out, "h,m", np.column_stack([h, m]), cfg_hash)
    print(f"wrote {outdir / args.out}")
    return EXIT_OK


def _cmd_droplet(args, params):
    if args.tau == "isotropic":
        tau = SurfaceTension.isotropic()
    elif args.tau == "ell1":
        tau = SurfaceTension.ell1()
    else:
        data = np.loadtxt(args.tau, delimiter=",", comments="#", skiprows=1, ndmin=2)
        tau = SurfaceTension.from_angle_table(data[:, 0], data[:, 1])
    if not 0.0 < args.area <= 1.0:
        raise ValueError(f"area={args.area:g} violates the bound 0 < area <= 1")
    outdir = _resolve_outdir(args)
    cfg_hash = _echo_config(outdir, "droplet", params)
    shape, trace = minimize_droplet(
        tau, args.gamma, args.mstar, args.area,
        n_vertices=args.vertices, max_iter=args.max_iter, with_trace=True,
    )
    _write_csv(outdir / "polygon.csv", "x,y", shape.polygon, cfg_hash)
    _write_csv(
        outdir / "energy_trace.csv", "iteration,energy",
        list(enumerate(trace)), cfg_hash,
    )
    print(f"final energy {trace[-1]:.8f} after {len(trace) - 1} accepted steps")
    return EXIT_OK


def _echo_config(outdir: Path, command: str, params: dict) -> str:
    text = _config_text(command, params)
    (outdir / "run.config").write_text(text, encoding="utf-8")
    return _config_hash(text)


# -- parser ------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="gravising", description=__doc__)
    parser.add_argument("--config", help="INI file with a [run] section of defaults")
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on worker parallelism (computations are single-threaded)")
    sub = parser.add_subparsers(dest="command")

    def add_backend(p):
        p.add_argument("--backend", default="exact1d",
                       choices=["exact1d", "meanfield", "tabulated"])
        p.add_argument("--beta", type=float, default=1.0)
        p.add_argument("--dim", type=int, default=2, help="mean-field dimension")
        p.add_argument("--table", help="h,m CSV for the tabulated backend")
        p.add_argument("--phi0", type=float, default=0.0)

    p = sub.add_parser("thermo", help="emit pressure and magnetization on a field grid")
    add_backend(p)
    p.add_argument("--h-min", type=float, default=-2.0)
    p.add_argument("--h-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=201)
    p.add_argument("--out", default="potentials.csv")
    p.add_argument("--outdir", default=".")

    p = sub.add_parser("profile", help="optimal mesoscopic profile in a gravitational field")
    add_backend(p)
    p.add_argument("--g", type=float, default=-1.0)
    p.add_argument("--exponent", type=int, default=1, choices=[1, 2])
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default="profile.csv")
    p.add_argument("--outdir", default=".")

    p = sub.add_parser("chain", help="Gaussian interface chain: samples or covariance tables")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mass", type=float, default=0.0)
    p.add_argument("--g", type=float, help="window coupling; implies mass = g/sqrt(n)")
    p.add_argument("--constrained", action="store_true", help="condition on zero signed area")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--mode", choices=["samples", "table"], default="samples")
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--out", default="chain.csv")
    p.add_argument("--outdir", default=".")

    p = sub.add_parser("simulate", help="canonical Kawasaki run in a gravitational field")
    add_backend(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--g", type=float, default=-1.0)
    p.add_argument("--exponent", type=int, default=1, choices=[1, 2])
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--boundary", default="free", choices=["free", "plus", "minus", "dobrushin"])
    p.add_argument("--proposal", default="any", choices=["any", "nn"])
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot-interval", type=int, default=0)
    p.add_argument("--outdir", default=".")

    p = sub.add_parser("tabulate", help="grand-canonical isotherm estimates for the tabulated backend")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--h-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--sweeps", type=int, default=2000)
    p.add_argument("--burnin", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="isotherm.csv")
    p.add_argument("--outdir", default=".")

    p = sub.add_parser("droplet", help="gravity-modified Wulff droplet optimization")
    p.add_argument("--tau", default="isotropic",
                   help="'isotropic', 'ell1', or an angle,tau CSV path")
    p.add_argument("--gamma", type=float, default=0.0,
                   help="signed gravity coefficient; > 0 penalizes droplet height")
    p.add_argument("--mstar", type=float, default=1.0)
    p.add_argument("--area", type=float, default=0.1)
    p.add_argument("--vertices", type=int, default=256)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--outdir", default=".")
    return parser


_DISPATCH = {
    "thermo": _cmd_thermo,
    "profile": _cmd_profile,
    "chain": _cmd_chain,
    "simulate": _cmd_simulate,
    "tabulate": _cmd_tabulate,
    "droplet": _cmd_droplet,
}


def _apply_config_file(parser, argv):
    """Inject values from --config as parser defaults (flags still win)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise UsageError("--config requires a path")
    path = argv[idx + 1]
    cp = configparser.ConfigParser()
    cp.optionxform = str
    read = cp.read(path)
    if not read or "run" not in cp:
        raise OSError(f"cannot read config file {path!r} (needs a [run] section)")
    section = dict(cp["run"])
    command = section.pop("command", None)
    rest = [a for k, a in enumerate(argv) if k not in (idx, idx + 1)]
    if command and (not rest or rest[0] not in _DISPATCH):
        rest = [command] + rest
    pre = []  # global flags live before the subcommand
    extra = []
    for key, value in section.items():
        flag = "--" + key.replace("_", "-")
        if flag in rest:
            continue
        target = pre if key == "threads" else extra
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                target.append(flag)
        else:
            target.extend([flag, value])
    if not rest:
        return pre + extra
    return pre + [rest[0]] + extra + rest[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        params = {
            k: v for k, v in vars(args).items() if k not in ("command", "config")
        }
        return _DISPATCH[args.command](args, params)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, IndexError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
