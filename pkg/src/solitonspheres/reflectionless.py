"""Closed-form synthesis of reflectionless (N-soliton) potentials.

With ``E = diag(e^{i kappa_j x})``, ``C_jk = 1/(i(kappa_j + kappa_k))`` and
``Lam = diag(lambda_j)`` the kernel matrix factors as ``M = E C Lam E``, so

    (1 +- iM)^{-1} = E^{-1} G_pm^{-1} E^{-1},   G_pm = E^{-2} +- i C Lam.

All formulas below are written in terms of ``G_pm``; the exponentials cancel
out of every quantity except ``E^{-2}`` itself, whose rows are rescaled before
the solve.  This keeps the synthesis well conditioned on the whole line.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, ParameterError, SingularSynthesisError, ValidationError
from .scattering import DEFAULT_DX, DEFAULT_XMAX, GridPotential, JostField
from .spectral_data import SpectralData, validate

N_MAX = 16
DET_FLOOR = 1e-13
POLE_FLOOR = 1e-8


def _check(data: SpectralData, eps_real: float = 1e-8) -> None:
    if not data.reflectionless:
        raise ParameterError("closed-form synthesis needs reflectionless data")
    if data.n > N_MAX:
        raise ParameterError(f"at most {N_MAX} poles are supported, got {data.n}")
    rep = validate(data, eps_real)
    if not rep.valid:
        raise ValidationError("invalid spectral data: " + "; ".join(v.message for v in rep.violations),
                              rep.violations)


def kernel_matrix(data: SpectralData, x: float) -> np.ndarray:
    """M_jk(x) = lambda_k / (i(kappa_j + kappa_k)) e^{i(kappa_j + kappa_k) x}."""
    kap = np.asarray(data.kappa, dtype=complex)
    lam = np.asarray(data.lam, dtype=complex)
    s = kap[:, None] + kap[None, :]
    return lam[None, :] / (1j * s) * np.exp(1j * s * x)


def _G(data: SpectralData, x: np.ndarray, dtype=complex):
    """Row-scaled G_plus, G_minus with shape (nx, N, N) and the row scales."""
    kap = np.asarray(data.kappa, dtype=complex).astype(dtype)
    lam = np.asarray(data.lam, dtype=complex).astype(dtype)
    x = np.asarray(x, dtype=float).astype(np.longdouble if dtype == np.clongdouble else float)
    C = 1.0 / (1j * (kap[:, None] + kap[None, :]))
    CL = C * lam[None, :]
    expo = -2j * kap[None, :] * x[:, None]  # log of E^{-2}, shape (nx, N)
    logs = np.maximum(expo.real, 0.0)  # row scale s_j = max(1, |E^{-2}_jj|)
    inv_s = np.exp(-logs)
    n = kap.size
    eye = np.eye(n)
    diag = np.exp(expo - logs)
    base = diag[:, :, None] * eye[None]
    Gp = base + 1j * inv_s[:, :, None] * CL[None]
    Gm = base - 1j * inv_s[:, :, None] * CL[None]
    return Gp, Gm, inv_s


def _solve_ext(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched Gaussian elimination with partial pivoting in extended precision.

    The Cauchy-like G can reach condition numbers ~1e5 for clustered poles;
    long double keeps the synthesized U real to ~1e-15 there.
    """
    A = np.array(G, dtype=np.clongdouble)
    b = np.array(rhs, dtype=np.clongdouble)
    nb, n, _ = A.shape
    rows = np.arange(nb)
    for j in range(n):
        piv = j + np.argmax(np.abs(A[:, j:, j]), axis=1)
        if np.any(piv != j):
            a_j, a_p = A[rows, j].copy(), A[rows, piv].copy()
            A[rows, j], A[rows, piv] = a_p, a_j
            b_j, b_p = b[rows, j].copy(), b[rows, piv].copy()
            b[rows, j], b[rows, piv] = b_p, b_j
        f = A[:, j + 1:, j] / A[:, j, j][:, None]
        A[:, j + 1:, j:] -= f[:, :, None] * A[:, j, None, j:]
        b[:, j + 1:] -= f[:, :, None] * b[:, j, None, :]
    y = np.empty_like(b)
    for j in range(n - 1, -1, -1):
        acc = b[:, j] - np.einsum("bk,bkm->bm", A[:, j, j + 1:], y[:, j + 1:])
        y[:, j] = acc / A[:, j, j][:, None]
    return y


def _check_singular(Gp: np.ndarray, x: np.ndarray, det_floor: float) -> None:
    """Reciprocal 2-norm condition number of the scaled G_plus against ``det_floor``."""
    sv = np.linalg.svd(np.asarray(Gp, dtype=complex), compute_uv=False)
    d = sv[:, -1] / sv[:, 0]
    bad = np.flatnonzero(d < det_floor)
    if bad.size:
        i = bad[0]
        raise SingularSynthesisError(
            f"det(1 + iM) vanishes numerically at x = {x[i]:.6g} (reciprocal condition {d[i]:.3g})",
            float(d[i]))


def _grid(grid, xmax=DEFAULT_XMAX, dx=DEFAULT_DX) -> np.ndarray:
    if grid is None:
        n = int(round(2 * xmax / dx)) + 1
        return -xmax + dx * np.arange(n)
    return np.asarray(grid, dtype=float)


def synthesize(data: SpectralData, x, det_floor: float = DET_FLOOR) -> np.ndarray:
    """Complex samples of -B1(x, x); real up to rounding for valid data."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if data.n == 0:
        return np.zeros(x.shape, dtype=complex)
    lam = np.asarray(data.lam, dtype=np.clongdouble)
    Gp, Gm, inv_s = _G(data, x, np.clongdouble)
    _check_singular(Gp, x, det_floor)
    rhs = inv_s[:, :, None]  # S^{-1} 1
    yp = _solve_ext(Gp, rhs)[..., 0]
    ym = _solve_ext(Gm, rhs)[..., 0]
    return (0.5 * ((yp + ym) @ lam)).astype(complex)


def potential_from_data(data: SpectralData, grid=None, det_floor: float = DET_FLOOR,
                        eps_real: float = 1e-8) -> GridPotential:
    """Reflectionless potential U = d/dx Im log det(1 + iM) on a uniform grid.

    Evaluated as ``Im tr((1 + iM)^{-1} i M')``, which in the rescaled form is
    ``Re 1^T Lam G_plus^{-1} 1``; no numerical differentiation is involved.
    """
    _check(data, eps_real)
    x = _grid(grid)
    if x.size < 2:
        raise ParameterError("grid needs at least two nodes")
    dx = np.diff(x)
    if np.any(dx <= 0) or np.max(np.abs(dx - dx[0])) > 1e-9 * abs(dx[0]):
        raise ParameterError("grid must be uniform and increasing")
    u = synthesize(data, x, det_floor)
    return GridPotential(x[0], float(dx.mean()), u.real)


def realness_defect(data: SpectralData, grid=None) -> float:
    """max |Im U| of the unsymmetrized synthesis."""
    x = _grid(grid)
    return float(np.max(np.abs(synthesize(data, x).imag)))


def residues(data: SpectralData) -> np.ndarray:
    """gamma_j = 1/a'(kappa_j) for a(k) = prod (k - kappa_l)/(k - conj kappa_l)."""
    kap = np.asarray(data.kappa, dtype=complex)
    out = np.empty(kap.size, dtype=complex)
    for j, kj in enumerate(kap):
        others = np.delete(kap, j)
        da = 1.0 / (kj - np.conj(kj)) * np.prod((kj - others) / (kj - np.conj(others)))
        out[j] = 1.0 / da
    return out


def reflected_data(data: SpectralData) -> SpectralData:
    """Data of U(-x): same poles, norming constants -gamma_j^2 / lambda_j."""
    g = residues(data)
    return SpectralData(data.poles, tuple(-g * g / data.lam))


def _jost_plain(data, k, x):
    kap = np.asarray(data.kappa, dtype=complex)
    lam = np.asarray(data.lam, dtype=complex)
    ek = np.exp(1j * k * x)
    Gp, Gm, inv_s = _G(data, x)
    _check_singular(Gp, x, DET_FLOOR)
    w = ek[:, None] / (kap[None, :] + k)
    rhs = (inv_s * w)[:, :, None]
    yp = np.linalg.solve(Gp, rhs)[..., 0] @ lam
    ym = np.linalg.solve(Gm, rhs)[..., 0] @ lam
    return np.array([-0.5j * (yp + ym), ek + 0.5 * (ym - yp)])


def jost_from_data(data: SpectralData, k: complex, grid=None, pole_floor: float = POLE_FLOOR,
                   det_floor: float = DET_FLOOR) -> JostField:
    """Closed-form right Jost solution (first column) of the reflectionless potential.

    At a bound state ``k = kappa_m`` the solution decays on both sides and the
    formula loses all relative accuracy for x < 0 (it subtracts numbers of size
    ``e^{Im(k)|x|}``).  There the left half is taken from the left Jost
    solution, obtained as the right one of the reflected potential U(-x),
    divided by the proportionality constant ``mu_m = lambda_m / (i gamma_m)``.
    """
    _check(data)
    x = _grid(grid)
    k = complex(k)
    kap = np.asarray(data.kappa, dtype=complex)
    if kap.size and np.min(np.abs(kap + k)) < pole_floor:
        raise ParameterError(f"k = {k} is within {pole_floor:g} of a pole -kappa_j")
    if kap.size == 0:
        out = np.array([np.zeros(x.size, dtype=complex), np.exp(1j * k * x)])
        return JostField("plus_col1", k, x, out)
    Gp, _, _ = _G(data, x)
    _check_singular(Gp, x, det_floor)
    out = _jost_plain(data, k, x)
    m = int(np.argmin(np.abs(kap - k)))
    if abs(kap[m] - k) < 1e-12 * max(1.0, abs(k)):
        left = x < 0
        if np.any(left):
            g = residues(data)[m]
            mu = data.lam[m] / (1j * g)
            ref = _jost_plain(reflected_data(data), k, -x[left])
            out[:, left] = ref[::-1] / mu
    return JostField("plus_col1", k, x, out)


def two_soliton_rational(x, l1: float, l2: float):
    """Rational expression in e^{-x} for the data kappa = (i/2, 3i/2), lambda = (l1, l2)."""
    e = np.exp(-np.asarray(x, dtype=float))
    num = 144 * l1 * e + 144 * l2 * e ** 3 + 36 * l1 ** 2 * l2 * e ** 5 + 4 * l1 * l2 ** 2 * e ** 7
    den = 144 + 144 * l1 ** 2 * e ** 2 + 72 * l1 * l2 * e ** 4 + 16 * l2 ** 2 * e ** 6 \
        + l1 ** 2 * l2 ** 2 * e ** 8
    return num / den


def dirac_potential(N: int, x):
    """U_N(x) = N / (2 cosh x)."""
    return N / (2 * np.cosh(x))


def dirac_poles(N: int) -> tuple:
    return tuple(1j * (2 * j - 1) / 2 for j in range(1, N + 1))


@lru_cache(maxsize=None)
def dirac_sphere_data(N: int, tol: float = 1e-8) -> SpectralData:
    """Reflectionless data of U_N = N/(2 cosh x): poles i(2j-1)/2, real norming constants.

    For N <= 2 the norming constants are known in closed form.  For larger N
    they are read off by forward scattering of U_N and then refined by least
    squares on the synthesized potential.
    """
    if N < 1:
        raise ParameterError("N must be a positive integer")
    if N > N_MAX:
        raise ParameterError(f"N must be at most {N_MAX}")
    poles = dirac_poles(N)
    if N == 1:
        return SpectralData(poles, (1.0,))
    if N == 2:
        return SpectralData(poles, (2.0, 6.0))
    from scipy.optimize import least_squares

    from .scattering import discrete_spectrum
    xmax = DEFAULT_XMAX + np.ceil(np.log(N))
    U = GridPotential.from_function(lambda x: dirac_potential(N, x), xmax=xmax)
    found = discrete_spectrum(U)
    kap = np.array([s[0] for s in found])
    lam0 = np.array([s[3].real for s in found])
    order = np.argsort(kap.imag)
    lam0 = lam0[order]
    if np.max(np.abs(kap[order] - np.array(poles))) > 1e-6:
        raise ConvergenceError("forward scattering did not reproduce the Dirac spectrum",
                               float(np.max(np.abs(kap[order] - np.array(poles)))))
    xs = np.linspace(-15, 15, 301)
    target = dirac_potential(N, xs)

    def resid(loglam):
        d = SpectralData(poles, tuple(np.exp(loglam)))
        return synthesize(d, xs).real - target

    sol = least_squares(resid, np.log(lam0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    lam = np.exp(sol.x)
    data = SpectralData(poles, tuple(float(v) for v in lam))
    err = float(np.max(np.abs(potential_from_data(data).values
                              - dirac_potential(N, _grid(None)))))
    if err > tol:
        raise ConvergenceError(f"norming-constant calibration reached only {err:.3g}", err)
    return data
