"""The simplest soliton sphere.

The potential U(x) = 1/(2 cosh x) has a single bound state at kappa = i/2.
Its eigenfunction, spread around the cylinder as phi(x) e^{iy/2}, feeds the
Weierstrass formulas, and the surface that comes out is a round sphere.
This script builds it, measures how round it is, rotates it by acting on
the spinor, and optionally writes an OBJ mesh.

    python3 demos/round_sphere.py [--obj sphere.obj]
"""
import argparse

import numpy as np

from solitonspheres import (SpectralData, build_spinor, detect_branch_points, immerse, rotate_frame,
                            rotation_matrix, willmore)
from solitonspheres.mesh import write_obj
from solitonspheres.weierstrass import conformality_defects, fit_sphere, gauss_bonnet


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--obj", help="write the mesh here")
    args = ap.parse_args()

    data = SpectralData((0.5j,), (1.0,))
    psi = build_spinor(data, [1, 0])
    S = immerse(psi)
    print(f"grid {S.x.size} x {S.y.size} on [{S.x[0]:g}, {S.x[-1]:g}] x [0, 2pi)")

    centre, radius, resid = fit_sphere(S.points)
    print(f"best sphere: centre {np.round(centre, 6)}, radius {radius:.8f}, worst deviation {resid:.1e} r")

    d = conformality_defects(S)
    print(f"conformal to {max(d['F'], d['E-G']):.1e}, metric D^2 to {d['E-D2']:.1e}, H D = 2U to {d['HD-2U']:.1e}")
    print(f"total Gauss curvature / 4pi = {gauss_bonnet(S) / (4 * np.pi):.12f}")
    print(f"Willmore energy / 4pi      = {willmore(S) / (4 * np.pi):.12f}")
    print(f"closing: period norm {S.diagnostics['period_norm']:.1e}, "
          f"end circles {max(S.diagnostics['endpoint_diameters']):.1e} across")
    print(f"branch points: {len(detect_branch_points(S)['nodes'])}")

    # lambda psi + mu psi* moves the surface by a rotation when |lambda|^2 + |mu|^2 = 1
    lam, mu = np.cos(0.3) * np.exp(0.2j), np.sin(0.3) * np.exp(-1.1j)
    Y = immerse(rotate_frame(psi, lam, mu), diagnostics=False).points
    R = rotation_matrix(lam, mu)
    print(f"rotated frame matches R X to {np.max(np.linalg.norm(Y - S.points @ R.T, axis=-1)):.1e}")

    if args.obj:
        write_obj(S.points, args.obj, weld_tol=1e-4)
        print(f"wrote {args.obj}")


if __name__ == "__main__":
    main()
