"""From a potential to its scattering data and back.

A smooth bump U0 = 0.3 exp(-x^2) is too weak to bind a state, so all of its
spectral information sits in the reflection coefficient.  Forward
integration of the Jost solutions gives R(k); the Marchenko equations turn
R back into a potential.  The Kruskal integrals of U0 are compared with
their trace-formula values along the way.

    python3 demos/scattering_round_trip.py
"""
import numpy as np

from solitonspheres import (GridPotential, build_kernel, default_k_grid, discrete_spectrum, kruskal_report,
                            recover_potential, scattering_coefficients)
from solitonspheres.marchenko import default_z_grid


def main():
    U0 = GridPotential.from_function(lambda x: 0.3 * np.exp(-x * x))
    rep = scattering_coefficients(U0, default_k_grid())
    rep.discrete = discrete_spectrum(U0)
    print(f"{rep.k.size} wavenumbers in [{rep.k[0]:g}, {rep.k[-1]:g}], bound states: {len(rep.discrete)}")
    print(f"|R(0+)| = {abs(rep.R[rep.k > 0][0]):.4f}, max |a|^2 + |b|^2 - 1 = {rep.unitarity_residual:.1e}")

    kr = kruskal_report(U0, rep, 3)
    for n, (I, It) in enumerate(zip(kr.I, kr.I_trace), 1):
        print(f"I_{n}: quadrature {I.real:+.10f}   trace formula {It.real:+.10f}")

    kernel = build_kernel(rep.spectral_data(1e-8), default_z_grid(-4, 4))
    x = np.linspace(-4, 4, 17)
    U = recover_potential(kernel, x)
    print("\n     x      recovered        exact")
    for xi, ui in zip(x, U.values):
        print(f"{xi:6.2f}  {ui:.10f}  {0.3 * np.exp(-xi * xi):.10f}")
    print(f"max error {np.max(np.abs(U.values - 0.3 * np.exp(-x * x))):.1e}")


if __name__ == "__main__":
    main()
