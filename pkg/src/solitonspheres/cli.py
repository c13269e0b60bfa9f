"""Command-line front end: ``solitonspheres <command> ...``.

Exit codes: 0 success, 1 validation or parameter error, 2 numerical
non-convergence, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import spectral_data as sd
from .errors import ConvergenceError, SolitonError

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

# tolerances scaled by --tol-profile
TOLERANCES = {
    "eps_real": 1e-12,
    "eps_real_numeric": 1e-8,
    "unitarity_tol": 1e-8,
    "conv_tol": 1e-6,
    "decay_tol": 1e-8,
    "march_tol": 1e-8,
}
PROFILES = {"default": 1.0, "strict": 0.1}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _tols(args) -> dict:
    f = PROFILES[args.tol_profile]
    return {k: v * f for k, v in TOLERANCES.items()}


def _num(v):
    """Fixed float formatting for reports."""
    if isinstance(v, (complex, np.complexfloating)):
        return [_num(v.real), _num(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not np.isfinite(v):
            return None
        return float(f"{v:.12g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x) for x in v]
    return v


def _dump(obj, path=None) -> None:
    text = json.dumps(_num(obj), indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_table(U, path) -> None:
    from .scattering import save_potential_table
    if path:
        save_potential_table(U, path)
    else:
        sys.stdout.write("x,U\n")
        for x, u in zip(U.x, U.values):
            sys.stdout.write(f"{float(x)!r},{float(u)!r}\n")


# ------------------------------------------------------------------ commands

def cmd_validate(args) -> int:
    data = sd.load(args.path)
    rep = sd.validate(data, args.eps_real if args.eps_real is not None else _tols(args)["eps_real"])
    if rep.valid:
        print(f"valid: {data.n} poles, {'reflectionless' if data.reflectionless else 'with reflection'}")
        return EXIT_OK
    for v in rep.violations:
        print(f"violation {v}")
    return EXIT_INVALID


def cmd_potential(args) -> int:
    from .errors import ParameterError
    from .reflectionless import potential_from_data
    if args.nx < 2:
        raise ParameterError("--nx must be at least 2")
    data = sd.load(args.path)
    grid = np.linspace(-args.xmax, args.xmax, args.nx)
    U = potential_from_data(data, grid, eps_real=_tols(args)["eps_real_numeric"])
    _write_table(U, args.output)
    return EXIT_OK


def cmd_scatter(args) -> int:
    from .scattering import default_k_grid, discrete_spectrum, load_potential_table, scattering_coefficients
    t = _tols(args)
    U = load_potential_table(args.path)
    U.check_decay(t["decay_tol"])
    rep = scattering_coefficients(U, default_k_grid(args.kmax, args.dk), t["unitarity_tol"], t["conv_tol"],
                                  check_decay=False)
    rep.discrete = [] if args.no_discrete else discrete_spectrum(U)
    if args.output:
        rep.save(args.output)
    print(f"|R| max {np.max(np.abs(rep.R)):.3e}; {len(rep.discrete)} bound states; "
          f"unitarity {rep.unitarity_residual:.3e}")
    for kap, _, _, lam in rep.discrete:
        print(f"  kappa {kap.real:+.10f} {kap.imag:+.10f}i  lambda {lam.real:+.10g} {lam.imag:+.10g}i")
    return EXIT_OK


def _load_source(path, eps_real):
    """SpectralData from a spectral file or a scattering report (JSON)."""
    from .scattering import ScatteringReport
    if str(path).endswith(".json"):
        return ScatteringReport.load(path).spectral_data(eps_real)
    return sd.load(path)


def cmd_invert(args) -> int:
    from .errors import ParameterError
    from .marchenko import build_kernel, default_z_grid, recover_potential
    if args.nx < 2:
        raise ParameterError("--nx must be at least 2")
    t = _tols(args)
    data = _load_source(args.path, t["eps_real_numeric"])
    kernel = build_kernel(data, default_z_grid(args.xmin, args.xmax))
    U = recover_potential(kernel, np.linspace(args.xmin, args.xmax, args.nx), march_tol=t["march_tol"])
    _write_table(U, args.output)
    return EXIT_OK


def cmd_kruskal(args) -> int:
    from .kruskal import kruskal_report
    from .scattering import ScatteringReport, load_potential_table
    U = load_potential_table(args.path)
    if args.source is None:
        from .scattering import default_k_grid, discrete_spectrum, scattering_coefficients
        t = _tols(args)
        src = scattering_coefficients(U, default_k_grid(), t["unitarity_tol"], t["conv_tol"])
        src.discrete = discrete_spectrum(U)
    elif str(args.source).endswith(".json"):
        src = ScatteringReport.load(args.source)
    else:
        src = sd.load(args.source)
    rep = kruskal_report(U, src, args.nmax)
    _dump(rep.to_dict(), args.output)
    return EXIT_OK


def cmd_flow(args) -> int:
    data = sd.load(args.path)
    out = sd.mkdv_deform(data, args.m, args.t)
    if args.output:
        sd.save(out, args.output)
    else:
        for k, l in zip(out.poles, out.normings):
            print(f"pole {k.real!r} {k.imag!r} lambda {l.real!r} {l.imag!r}")
    return EXIT_OK


def parse_coeffs(text: str) -> np.ndarray:
    """``"re,im;re,im;..."`` -> complex vector."""
    from .errors import ParameterError
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(",")
        try:
            vals = [float(b) for b in bits]
        except ValueError:
            raise ParameterError(f"bad coefficient '{part}'") from None
        if len(vals) == 1:
            vals.append(0.0)
        if len(vals) != 2:
            raise ParameterError(f"bad coefficient '{part}' (expected 're,im')")
        out.append(complex(*vals))
    if not out:
        raise ParameterError("empty coefficient list")
    return np.array(out)


def cmd_surface(args) -> int:
    from .mesh import write_obj
    from .scattering import load_potential_table
    from .weierstrass import (build_spinor, detect_branch_points, dirac_residual, fit_sphere, immerse,
                              is_revolution, kernel_dimension, willmore)
    data = sd.load(args.path)
    coeffs = parse_coeffs(args.coeffs)
    U = load_potential_table(args.potential) if args.potential else None
    psi = build_spinor(data, coeffs, U=U, nx=args.nx, ny=args.ny, xmax=args.xmax)
    S = immerse(psi)
    L = kernel_dimension(data)
    diag = S.diagnostics
    br = detect_branch_points(S)
    centre, radius, resid = fit_sphere(S.points)
    report = {
        "L": L,
        "W": willmore(S),
        "W_potential": willmore(S, "potential"),
        "W_over_4pi": willmore(S) / (4 * np.pi),
        "period_norm": diag["period_norm"],
        "endpoint_diameters": list(diag["endpoint_diameters"]),
        "decay": {k: list(v) for k, v in diag["decay"].items()},
        "antiperiodic": diag["antiperiodic"],
        "branch_points": [list(n) for n in br["nodes"][:100]],
        "branch_point_count": len(br["nodes"]),
        "branched_ends": br["branched_ends"],
        "is_revolution": is_revolution(coeffs, L),
        "dirac_residual": dirac_residual(psi),
        "sphere_fit": {"center": list(centre), "radius": radius, "relative_residual": resid},
        "grid": {"nx": int(S.x.size), "ny": int(S.y.size), "xmax": float(S.x[-1])},
    }
    if args.output:
        write_obj(S.points, args.output, args.weld_tol)
    _dump(report, args.report)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="solitonspheres", description=__doc__.splitlines()[0])
    p.add_argument("--tol-profile", choices=sorted(PROFILES), default="default",
                   help="scale every tolerance by 1 (default) or 0.1 (strict)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a spectral data file")
    s.add_argument("path")
    s.add_argument("--eps-real", type=float, default=None)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("potential", help="closed-form reflectionless potential")
    s.add_argument("path")
    s.add_argument("--xmax", type=float, default=20.0)
    s.add_argument("--nx", type=int, default=10241)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_potential)

    s = sub.add_parser("scatter", help="forward scattering of a potential table")
    s.add_argument("path")
    s.add_argument("--kmax", type=float, default=8.0)
    s.add_argument("--dk", type=float, default=0.02)
    s.add_argument("--no-discrete", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_scatter)

    s = sub.add_parser("invert", help="Marchenko reconstruction from spectral data or a report")
    s.add_argument("path")
    s.add_argument("--xmin", type=float, default=-8.0)
    s.add_argument("--xmax", type=float, default=8.0)
    s.add_argument("--nx", type=int, default=161)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("kruskal", help="Kruskal integrals vs trace formula")
    s.add_argument("path", help="potential table")
    s.add_argument("--source", help="spectral file or scattering report (default: scatter the table)")
    s.add_argument("--nmax", type=int, default=4)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_kruskal)

    s = sub.add_parser("flow", help="mKdV deformation of spectral data")
    s.add_argument("path")
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--t", type=float, default=0.0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("surface", help="immersed sphere: OBJ mesh and geometry report")
    s.add_argument("path")
    s.add_argument("--coeffs", required=True, help='"re,im;re,im;..." of length 2L')
    s.add_argument("--potential", help="potential table (needed for data with reflection)")
    s.add_argument("--xmax", type=float, default=20.0)
    s.add_argument("--nx", type=int, default=1024)
    s.add_argument("--ny", type=int, default=256)
    s.add_argument("--weld-tol", type=float, default=1e-4)
    s.add_argument("-o", "--output", help="OBJ file")
    s.add_argument("--report", help="JSON report (default stdout)")
    s.set_defaults(func=cmd_surface)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_INVALID
    try:
        return args.func(args)
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SolitonError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
