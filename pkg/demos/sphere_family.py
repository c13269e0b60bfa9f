"""Spheres of revolution with unbounded energy and a one-dimensional kernel.

Adding a symmetric pair of poles -a + it, a + it to the data {i/2} keeps the
kernel dimension at one (the new poles are not half-odd-integer levels),
but every pair adds 2t to sum Im kappa, so the Willmore energy grows like
4 pi + 16 pi t.  The surfaces stay closed spheres of revolution.

    python3 demos/sphere_family.py
"""
import numpy as np

from solitonspheres import SpectralData, build_spinor, immerse, kernel_dimension, willmore
from solitonspheres.weierstrass import revolution_defect


def main():
    a = 0.4
    ts = [0.2, 0.4, 0.8, 1.2, 2.0]
    Ws = []
    print("   t   L   W/pi (mesh)   W/pi (potential)   4 + 16t   axis spread   period")
    for t in ts:
        data = SpectralData((0.5j, -a + 1j * t, a + 1j * t), (1.0, 1.0, 1.0))
        # slow decay for small t: widen the window, keep the step size
        S = immerse(build_spinor(data, [1, 0], nx=2048, xmax=40.0))
        W = willmore(S)
        Ws.append(W)
        print(f"{t:4.1f}  {kernel_dimension(data)}  {W / np.pi:12.7f}  {willmore(S, 'potential') / np.pi:14.7f}"
              f"  {4 + 16 * t:9.3f}  {revolution_defect(S):10.1e}  {S.diagnostics['period_norm']:.1e}")
    slope, icpt = np.polyfit(ts, Ws, 1)
    print(f"fit W = {icpt / np.pi:.5f} pi + {slope / np.pi:.5f} pi t")
    t100 = (100 - icpt) / slope
    print(f"W passes 100 at t = {t100:.3f}")


if __name__ == "__main__":
    main()
