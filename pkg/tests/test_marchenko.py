import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solitonspheres import (GridPotential, SpectralData, build_kernel, default_k_grid, dirac_potential,
                            dirac_sphere_data, discrete_spectrum, goursat_pair, goursat_residual,
                            potential_from_data, recover_potential, scattering_coefficients, solve_marchenko)
from solitonspheres.errors import IllPosedError, ResolutionError, StructuralError
from solitonspheres.marchenko import GoursatPair, default_z_grid, energy_identity
from solitonspheres.spectral_data import ReflectionTable


@pytest.fixture(scope="module")
def K1():
    return build_kernel(dirac_sphere_data(1), default_z_grid(-8, 8))


@pytest.fixture(scope="module")
def U1_grid():
    return GridPotential.from_function(lambda x: dirac_potential(1, x))


# ---------------------------------------------------------------- kernel

def test_one_soliton_kernel_is_exponential(K1):
    z = K1.z
    assert np.max(np.abs(K1.omega + np.exp(-z / 2)) / np.maximum(1, np.exp(-z / 2))) < 1e-14


def test_empty_data_gives_zero_kernel():
    K = build_kernel(SpectralData.empty(), np.linspace(-5, 5, 11))
    assert np.all(K.omega == 0)
    assert not K.has_reflection


@st.composite
def paired_data(draw):
    re = draw(st.floats(0.1, 2.0))
    im = draw(st.floats(0.2, 3.0))
    lam = complex(draw(st.floats(-3, 3)), draw(st.floats(-3, 3))) or 1.0
    poles = [re + 1j * im, -re + 1j * im]
    lams = [lam, lam.conjugate()]
    if draw(st.booleans()):
        poles.append(1j * draw(st.floats(0.1, 3.0)))
        lams.append(draw(st.floats(0.1, 4.0)))
    return SpectralData(tuple(poles), tuple(lams))


@settings(max_examples=30, deadline=None)
@given(paired_data())
def test_symmetric_pair_kernel_is_real(d):
    # build_kernel raises ValidationError if the discarded imaginary part is too large
    K = build_kernel(d, default_z_grid(-4, 4), imag_tol=1e-12)
    assert np.all(np.isfinite(K.omega))


def test_coarse_reflection_table_is_rejected():
    k = np.linspace(-4, 4, 9)
    tab = ReflectionTable(k, 0.1 * np.exp(-k * k))
    with pytest.raises(ResolutionError):
        build_kernel(SpectralData((), (), tab), default_z_grid())


# ---------------------------------------------------------------- solver

def test_zero_kernel_gives_zero_solution():
    K = build_kernel(SpectralData.empty(), default_z_grid(-2, 2))
    B1, B2, row = solve_marchenko(K, 0.0)
    assert np.all(B1 == 0) and np.all(B2 == 0)


def test_one_soliton_value_at_origin(K1):
    B1, _, _ = solve_marchenko(K1, 0.0, np.array([0.0]))
    assert abs(-B1[0] - 0.5) < 1e-6


def test_self_residual(K1):
    # substitute the solution back into both integral equations with a fine quadrature
    x = 0.3
    _, _, row = solve_marchenko(K1, x)
    y = x + np.linspace(0, 6, 13)
    b1, b2 = row.evaluate(y)
    s, w = row.s, row.w
    b1s, b2s = row.evaluate(s)
    Om = K1(s[:, None] + y[None, :])
    r1 = b2 + (w * b1s) @ Om
    r2 = K1(x + y) - b1 + (w * b2s) @ Om
    assert max(np.max(np.abs(r1)), np.max(np.abs(r2))) < 1e-8
    assert row.residual < 1e-8


def test_recover_one_soliton(K1):
    x = np.linspace(-8, 8, 81)
    U = recover_potential(K1, x)
    assert np.max(np.abs(U.values - 0.5 / np.cosh(x))) < 1e-6


def test_recover_two_soliton():
    K = build_kernel(SpectralData((0.5j, 1.5j), (2.0, 6.0)), default_z_grid(-8, 8))
    x = np.linspace(-8, 8, 81)
    U = recover_potential(K, x)
    assert np.max(np.abs(U.values - 1 / np.cosh(x))) < 1e-5


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_agrees_with_closed_form_synthesis(N):
    d = dirac_sphere_data(N)
    x = np.linspace(-6, 6, 49)
    U = recover_potential(build_kernel(d, default_z_grid(-6, 6)), x)
    ref = potential_from_data(d, x)
    assert np.max(np.abs(U.values - ref.values)) < 1e-6


def test_agrees_with_synthesis_for_complex_pair():
    d = SpectralData((0.5j, 0.4 + 1.2j, -0.4 + 1.2j), (1.0, 0.7 - 0.3j, 0.7 + 0.3j))
    x = np.linspace(-6, 6, 49)
    U = recover_potential(build_kernel(d, default_z_grid(-6, 6)), x)
    assert np.max(np.abs(U.values - potential_from_data(d, x).values)) < 1e-6


def test_round_trip_gaussian(gauss_U):
    rep = scattering_coefficients(gauss_U, default_k_grid())
    rep.discrete = discrete_spectrum(gauss_U)
    assert rep.discrete == []
    d = rep.spectral_data(1e-8)
    x = np.linspace(-4, 4, 33)
    U = recover_potential(build_kernel(d, default_z_grid(-4, 4)), x)
    assert np.max(np.abs(U.values - 0.3 * np.exp(-x * x))) < 5e-4


def test_conditioning_guard():
    # any nonzero reflection part makes the condition number exceed 1
    k = np.linspace(-8, 8, 1601)
    tab = ReflectionTable(k, 0.5 * np.exp(-k * k))
    K = build_kernel(SpectralData((), (), tab), default_z_grid(-2, 2))
    solve_marchenko(K, 0.0)
    with pytest.raises(IllPosedError):
        solve_marchenko(K, 0.0, cond_max=1.0 + 1e-9)


def test_bad_grid():
    K = build_kernel(SpectralData.empty(), default_z_grid(-1, 1))
    with pytest.raises(StructuralError):
        recover_potential(K, [0.0])


# ---------------------------------------------------------------- Goursat checks

@pytest.fixture(scope="module")
def pair1(K1):
    h = 1 / 256
    return goursat_pair(K1, np.arange(-1, 1 + h / 2, h), 16)


def test_goursat_residuals_one_soliton(pair1, U1_grid):
    r18, r20, r21 = goursat_residual(pair1, U1_grid)
    assert max(r18, r20, r21) < 1e-4


def test_goursat_detects_corruption(pair1, U1_grid):
    bad = GoursatPair(pair1.x, pair1.dx, pair1.B1, 1.01 * pair1.B2)
    assert goursat_residual(bad, U1_grid)[2] > 1e-3


def test_goursat_zero_pair():
    z = np.zeros((8, 8))
    assert goursat_residual(GoursatPair(np.arange(8) / 8, 1 / 8, z, z), np.zeros(8)) == (0.0, 0.0, 0.0)


def test_goursat_needs_five_nodes():
    z = np.zeros((4, 8))
    with pytest.raises(StructuralError):
        goursat_residual(GoursatPair(np.arange(4) / 8, 1 / 8, z, z), np.zeros(4))


def test_goursat_decay_in_y(K1):
    _, _, row = solve_marchenko(K1, 0.0)
    b1, b2 = row.evaluate(np.array([40.0]))
    assert abs(b1[0]) < 1e-8 and abs(b2[0]) < 1e-8


def test_energy_identity(K1, U1_grid):
    pair = goursat_pair(K1, np.arange(-6, 1e-9, 1 / 64), 5)
    assert energy_identity(pair, U1_grid) < 1e-5


def test_dense_layout(pair1):
    D = pair1.dense("B2")
    assert np.isnan(D[1, 0])
    assert D[3, 5] == pair1.B2[3, 2]
