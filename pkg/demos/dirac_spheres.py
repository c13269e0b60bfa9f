"""Willmore numbers of the Dirac spheres.

U_N(x) = N/(2 cosh x) is reflectionless with bound states i/2, 3i/2, ...,
i(2N-1)/2, so its kernel on the cylinder has quaternionic dimension N.
The trace formula gives int U_N^2 = N^2/2, and the Willmore energy of any
sphere built from it is 4 pi N^2, the smallest value allowed for that
kernel dimension.  This script checks the numbers three ways: the trace
formula, the potential, and the curvature of the immersed mesh.

    python3 demos/dirac_spheres.py
"""
import numpy as np

from solitonspheres import (GridPotential, build_spinor, dirac_potential, dirac_sphere_data, immerse,
                            is_revolution, kernel_dimension, kruskal_report, willmore)


def main():
    print(" N  L   4piN^2      mesh W          8pi*I_1        trace I_1   revolution?")
    for N in (1, 2, 3):
        data = dirac_sphere_data(N)
        L = kernel_dimension(data)
        U = GridPotential.from_function(lambda x: dirac_potential(N, x))
        rep = kruskal_report(U, data, 4)
        # mix the two lowest levels when there are two, otherwise rotate within one level
        a = np.zeros(2 * L, dtype=complex)
        a[0] = 1
        a[1 if L > 1 else L] = 0.5
        S = immerse(build_spinor(data, a))
        print(f"{N:2d} {L:2d} {4 * np.pi * N * N:10.6f} {willmore(S):14.9f} {8 * np.pi * rep.I[0].real:14.9f}"
              f" {rep.I_trace[0].real:10.6f}   {is_revolution(a, L)}")
        print("       I_n  (n=1..4)", np.round(rep.I.real, 9), "residuals", np.array2string(rep.residuals,
                                                                                            precision=1))
    print("norming constants:", {N: dirac_sphere_data(N).lam.real.tolist() for N in (1, 2, 3, 4)})


if __name__ == "__main__":
    main()
