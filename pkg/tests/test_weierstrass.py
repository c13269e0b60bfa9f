import dataclasses

import numpy as np
import pytest

from solitonspheres import (GridPotential, SpectralData, build_spinor, detect_branch_points, dirac_sphere_data,
                            immerse, is_revolution, jost_from_data, kernel_dimension, potential_from_data,
                            rotate_frame, rotation_matrix, spinor_from_immersion, star_transform, to_plane,
                            willmore)
from solitonspheres.errors import ParameterError, StructuralError, ValidationError
from solitonspheres.spectral_data import ReflectionTable
from solitonspheres.weierstrass import (SpinorField, conformality_defects, dirac_residual, fit_sphere,
                                        gauss_bonnet, level_of, plane_decay_constant, rational_fit,
                                        regular_mask, revolution_defect)

FOUR_PI = 4 * np.pi


def family(t, a=0.4):
    return SpectralData((0.5j, -a + 1j * t, a + 1j * t), (1.0, 1.0, 1.0))


# ---------------------------------------------------------------- levels and kernel

def test_level_of():
    assert level_of(0.5j) == 0
    assert level_of(2.5j) == 2
    assert level_of(1j) is None
    assert level_of(0.1 + 0.5j) is None


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_kernel_dimension_dirac(N):
    assert kernel_dimension(dirac_sphere_data(N)) == N


def test_kernel_dimension_examples():
    assert kernel_dimension(SpectralData((1j,), (1.0,))) == 0
    assert kernel_dimension(SpectralData((0.5j, 0.4 + 0.7j, -0.4 + 0.7j), (1, 1, 1))) == 1


def test_is_revolution_examples():
    assert is_revolution([1, 0, 0, 0], 2)
    assert not is_revolution([1, 1, 0, 0], 2)
    assert not is_revolution([0, 1, 1, 0], 2)
    # psi_1 and psi*_1 together: a rotated copy of the same surface of revolution
    assert is_revolution([1, 0, 1, 0], 2)
    assert is_revolution([0, 1, 0, 0.3 - 2j], 2)
    with pytest.raises(StructuralError):
        is_revolution([1, 0, 0], 2)


# ---------------------------------------------------------------- spinor fields

def test_revolution_field_is_separable(sphere_field):
    d = dirac_sphere_data(1)
    phi = jost_from_data(d, 0.5j, sphere_field.x).samples
    expect = phi[:, :, None] * np.exp(0.5j * sphere_field.y)[None, None, :]
    assert np.max(np.abs(sphere_field.psi - expect)) < 1e-14


def test_second_coefficient_gives_star(sphere_field):
    other = build_spinor(dirac_sphere_data(1), [0, 1])
    assert np.max(np.abs(other.psi - star_transform(sphere_field).psi)) < 1e-14


def test_star_is_involution_up_to_sign(dirac_surfaces):
    psi, _ = dirac_surfaces[2, "mixed"]
    s = star_transform(psi)
    assert np.array_equal(star_transform(s).psi, -psi.psi)
    assert np.allclose(np.abs(s.psi[0]) ** 2 + np.abs(s.psi[1]) ** 2, psi.D, rtol=0, atol=1e-15)
    assert dirac_residual(s) < 1e-6


@pytest.mark.parametrize("N,tag", [(1, "pure"), (2, "pure"), (2, "mixed"), (3, "mixed")])
def test_dirac_residual(N, tag, dirac_surfaces):
    psi, _ = dirac_surfaces[N, tag]
    assert dirac_residual(psi) < 1e-6


def test_antiperiodic(dirac_surfaces):
    for psi, _ in dirac_surfaces.values():
        assert psi.is_antiperiodic()
        p0 = psi.evaluate([0.0])
        p1 = psi.evaluate([2 * np.pi])
        assert np.max(np.abs(p0 + p1)) < 1e-12


def test_build_spinor_guards():
    d = dirac_sphere_data(1)
    with pytest.raises(ParameterError):
        build_spinor(d, [0, 0])
    with pytest.raises(StructuralError):
        build_spinor(d, [1, 0, 0])
    with pytest.raises(ParameterError):
        build_spinor(SpectralData((0.7j,), (1.0,)), [1, 0], poles=[0.7j])
    with pytest.raises(ParameterError):
        build_spinor(SpectralData((1j,), (1.0,)), [1, 0])


def test_build_from_forward_integration(U1):
    # data with a reflection table goes through the ODE eigenfunctions
    U = GridPotential.from_function(lambda x: 0.5 / np.cosh(x), 20.0, 40 / 1023)
    k = np.linspace(-8, 8, 1600)
    d = SpectralData((0.5j,), (1.0,), ReflectionTable(k, np.zeros(k.size)))
    psi_ode = build_spinor(d, [1, 0], U=U, ny=32)
    psi = build_spinor(dirac_sphere_data(1), [1, 0], ny=32)
    assert np.max(np.abs(psi_ode.psi - psi.psi)) < 1e-6


# ---------------------------------------------------------------- round sphere

def test_sphere_fit(sphere):
    _, r, res = fit_sphere(sphere.points)
    assert res < 1e-5


def test_gauss_bonnet(sphere):
    assert abs(gauss_bonnet(sphere) - FOUR_PI) < 1e-3


def test_mean_curvature_identity(sphere):
    assert conformality_defects(sphere)["HD-2U"] < 1e-5


def test_revolution_symmetry(sphere):
    assert revolution_defect(sphere) < 1e-6


def test_sphere_has_no_branch_points(sphere):
    br = detect_branch_points(sphere)
    assert br["nodes"] == [] and br["branched_ends"] == []
    assert br["min_normalized_D"] > 0
    for C, rate in br["decay"].values():
        assert abs(rate - 1) < 1e-3


@pytest.mark.parametrize("key", [(1, "pure"), (1, "mixed"), (2, "pure"), (2, "mixed"), (3, "pure"), (3, "mixed")])
def test_conformality_and_metric(key, dirac_surfaces):
    _, S = dirac_surfaces[key]
    d = conformality_defects(S)
    assert d["F"] < 1e-5 and d["E-G"] < 1e-5 and d["E-D2"] < 1e-5
    assert d["HD-2U"] < 1e-5
    assert abs(gauss_bonnet(S) - FOUR_PI) < 1e-3


@pytest.mark.parametrize("key", [(1, "pure"), (1, "mixed"), (2, "pure"), (2, "mixed"), (3, "pure"), (3, "mixed")])
def test_closure(key, dirac_surfaces):
    _, S = dirac_surfaces[key]
    assert S.diagnostics["period_norm"] < 1e-6
    assert max(S.diagnostics["endpoint_diameters"]) < 1e-5
    assert S.diagnostics["antiperiodic"]


@pytest.mark.parametrize("key", [(1, "pure"), (2, "pure"), (2, "mixed"), (3, "pure"), (3, "mixed")])
def test_willmore_equality(key, dirac_surfaces):
    N = key[0]
    _, S = dirac_surfaces[key]
    W = willmore(S)
    assert abs(W - FOUR_PI * N * N) / (FOUR_PI * N * N) < 1e-5
    assert abs(willmore(S, "potential") - W) / W < 1e-4


def test_willmore_zero_potential():
    assert willmore(GridPotential(-5.0, 0.01, np.zeros(1001))) == 0.0


def test_willmore_bad_route(sphere):
    with pytest.raises(ParameterError):
        willmore(sphere, "nope")


def test_willmore_bound_random_level_data():
    rng = np.random.default_rng(7)
    for _ in range(20):
        levels = rng.choice([0.5, 1.5, 2.5, 3.5], size=rng.integers(1, 4), replace=False)
        poles = [1j * v for v in levels]
        lams = list(rng.uniform(0.2, 20, size=len(poles)) * rng.choice([-1, 1], size=len(poles)))
        if rng.random() < 0.5:
            poles.append(1j * rng.uniform(0.6, 3.0))
            lams.append(rng.uniform(0.2, 5))
        if rng.random() < 0.5:
            a, b = rng.uniform(0.1, 1.5), rng.uniform(0.6, 3.0)
            lam = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
            poles += [a + 1j * b, -a + 1j * b]
            lams += [lam, lam.conjugate()]
        d = SpectralData(tuple(poles), tuple(lams))
        L = kernel_dimension(d)
        U = potential_from_data(d, np.linspace(-40, 40, 16001))
        assert willmore(U) >= FOUR_PI * L * L - 1e-6


# ---------------------------------------------------------------- equivariance

@pytest.fixture(scope="module")
def base_field():
    return build_spinor(dirac_sphere_data(2), [1, 1, 0, 0], nx=1024, ny=64)


def _random_unit(rng):
    v = rng.normal(size=4)
    v /= np.linalg.norm(v)
    return complex(v[0], v[1]), complex(v[2], v[3])


def test_rotation_equivariance(base_field):
    rng = np.random.default_rng(11)
    X = immerse(base_field, diagnostics=False).points
    worst = 0.0
    for _ in range(20):
        lam, mu = _random_unit(rng)
        Y = immerse(rotate_frame(base_field, lam, mu), diagnostics=False).points
        R = rotation_matrix(lam, mu)
        worst = max(worst, float(np.max(np.linalg.norm(Y - X @ R.T, axis=-1))))
    assert worst < 1e-5


def test_printed_coefficients_are_not_equivariant(base_field):
    lam, mu = _random_unit(np.random.default_rng(3))
    X = immerse(base_field, diagnostics=False).points
    Y = immerse(rotate_frame(base_field, lam, mu), diagnostics=False).points
    err = np.max(np.linalg.norm(Y - X @ rotation_matrix(lam, mu, printed=True).T, axis=-1))
    assert err > 1e-2


def test_homothety(base_field):
    X = immerse(base_field, diagnostics=False).points
    Y = immerse(rotate_frame(base_field, 1.7, 0), diagnostics=False).points
    assert np.max(np.abs(Y - 1.7 ** 2 * X)) / np.max(np.abs(X)) < 1e-10


def test_rotation_matrix_examples():
    assert np.allclose(rotation_matrix(1, 0), np.eye(3), atol=1e-15)
    th = 0.3
    R = rotation_matrix(np.exp(1j * th), 0)
    c, s = np.cos(2 * th), np.sin(2 * th)
    assert np.allclose(R, [[c, s, 0], [-s, c, 0], [0, 0, 1]], atol=1e-14)
    assert np.allclose(rotation_matrix(1.5, 0, orthonormalize=False), 2.25 * np.eye(3))
    ph = 0.4
    assert abs(rotation_matrix(np.cos(ph), np.sin(ph))[2, 2] - np.cos(2 * ph)) < 1e-14
    for lam, mu in [(0.6, 0.8j), (0.3 + 0.4j, -0.5 + 0.7j)]:
        R = rotation_matrix(lam, mu, orthonormalize=False) / (abs(lam) ** 2 + abs(mu) ** 2)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)
        assert abs(np.linalg.det(R) - 1) < 1e-14


def test_rotate_frame_identity_and_guard(sphere_field):
    assert np.array_equal(rotate_frame(sphere_field, 1, 0).psi, sphere_field.psi)
    with pytest.raises(ParameterError):
        rotate_frame(sphere_field, 0, 0)


# ---------------------------------------------------------------- closure detectors

def test_nonlevel_pole_does_not_close():
    d = SpectralData((0.7j,), (1.0,))
    psi = build_spinor(d, [1, 0], poles=[0.7j], allow_nonlevel=True, nx=512, ny=64)
    assert not psi.is_antiperiodic()
    assert immerse(psi).diagnostics["period_norm"] > 1e-2


def test_branch_points_at_infinity():
    d = SpectralData((0.5j, 1.5j), (2.0, 6.0))
    S = immerse(build_spinor(d, [0, 1, 0, 0]))
    br = detect_branch_points(S)
    assert sorted(br["branched_ends"]) == ["minus", "plus"]
    for _, rate in br["decay"].values():
        assert abs(rate - 3) < 0.05


def test_constructed_zero_is_flagged(sphere_field):
    x = sphere_field.x
    f = (x - x[600])[None, :, None]
    field = SpinorField(x, sphere_field.y, (), sphere_field.u, (), sphere_field.psi * f)
    nodes = detect_branch_points(immerse(field))["nodes"]
    assert nodes and all(i == 600 for i, _ in nodes)


def test_zero_field_rejected(sphere_field):
    field = SpinorField(sphere_field.x, sphere_field.y, (), sphere_field.u, (), np.zeros((2,) + sphere_field.shape))
    with pytest.raises(ParameterError):
        immerse(field)


# ---------------------------------------------------------------- plane picture

def test_plane_single_valued(dirac_surfaces):
    psi, _ = dirac_surfaces[2, "mixed"]
    pf = to_plane(psi, np.array([0.0, 2 * np.pi]))
    assert np.max(np.abs(pf.Psi1[:, 0] - pf.Psi1[:, 1])) < 1e-10
    assert np.max(np.abs(pf.Psi2[:, 0] - pf.Psi2[:, 1])) < 1e-10


def test_plane_decay_constant(sphere_field):
    C = plane_decay_constant(sphere_field)
    pf = to_plane(sphere_field)
    v = (pf.modulus2 * np.abs(pf.Z) ** 2).mean(axis=1)
    assert C > 0.1
    assert abs(v[-40] - C) / C < 1e-6


def test_dirac_field_is_rational(dirac_surfaces):
    psi, _ = dirac_surfaces[2, "mixed"]
    pf = to_plane(psi)
    m = np.abs(psi.x) < 6
    Z = pf.Z[m][:, ::8]
    for F in (pf.Psi1[m][:, ::8], pf.Psi2[m][:, ::8]):
        _, _, res = rational_fit(Z, F, 3, 3)
        assert res < 1e-6


# ---------------------------------------------------------------- inverse direction

def test_spinor_from_immersion(sphere, sphere_field):
    field, u_rec, m = spinor_from_immersion(sphere)
    assert m.sum() > 0.4 * m.size
    err = np.abs(np.sqrt(field.D) - np.sqrt(sphere_field.D))[m]
    assert np.max(err) < 1e-4
    assert np.max(np.abs(u_rec - sphere.u)[m]) < 1e-4
    # the recovered spinor agrees with the original up to a sign per component
    for c in (0, 1):
        a, b = field.psi[c][m], sphere_field.psi[c][m]
        assert np.max(np.minimum(np.abs(a - b), np.abs(a + b))) < 1e-4


def test_spinor_from_flat_input(sphere):
    flat = dataclasses.replace(sphere, points=np.zeros_like(sphere.points))
    with pytest.raises(ValidationError):
        spinor_from_immersion(flat)


def test_regular_mask_excludes_ends(sphere):
    m = regular_mask(sphere)
    assert not m[:3].any() and not m[-3:].any() and m[512].all()


# ---------------------------------------------------------------- sphere family

@pytest.fixture(scope="module")
def family_surfaces():
    out = {}
    for t in (0.2, 0.4, 0.8):
        out[t] = immerse(build_spinor(family(t), [1, 0], nx=2048, xmax=40.0))
    return out


def test_family_closes(family_surfaces):
    for S in family_surfaces.values():
        assert S.diagnostics["period_norm"] < 1e-6
        assert max(S.diagnostics["endpoint_diameters"]) < 1e-5


def test_family_willmore_routes_agree(family_surfaces):
    for t, S in family_surfaces.items():
        W = willmore(S)
        assert abs(W - willmore(S, "potential")) / W < 1e-4
        assert abs(W - np.pi * (4 + 16 * t)) / W < 1e-5
