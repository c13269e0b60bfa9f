"""Inverse scattering through the Marchenko equations.

For fixed ``x`` the kernels B1(x, .), B2(x, .) on ``[x, infinity)`` solve

    B2(x,y) + int_x^inf B1(x,s) Omega(s+y) ds = 0
    Omega(x+y) - B1(x,y) + int_x^inf B2(x,s) Omega(s+y) ds = 0

with ``Omega(z) = r(z) - sum_j lambda_j e^{i kappa_j z}`` and
``r(z) = (1/2pi) int R(k) e^{ikz} dk``.  The potential is ``U(x) = -B1(x,x)``.

The half-line is truncated at ``x + Z`` and discretized by Nystrom.  The
discrete part of the kernel has rank N; it is split off and handled through
the Woodbury identity in rescaled exponentials ``e^{i kappa_j (s - x)}``, which
keeps the solve well conditioned for large negative ``x`` where the raw
kernel entries grow like ``e^{2 Im(kappa) |x|}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline

from ._numerics import composite_lobatto, smooth_window
from .errors import IllPosedError, ParameterError, ResolutionError, StructuralError, ValidationError
from .scattering import GridPotential
from .spectral_data import SpectralData

Z_TRUNC = 40.0
COND_MAX = 1e6
MARCH_TOL = 1e-8
IMAG_TOL = 1e-10
DECAY_TOL = 1e-8


@dataclass(frozen=True)
class MarchenkoKernel:
    """Omega(z) = r(z) + discrete part; r sampled on ``z`` and splined."""

    z: np.ndarray
    r: np.ndarray
    kappa: np.ndarray
    lam: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return self.r + self.discrete(self.z)

    @property
    def has_reflection(self) -> bool:
        return bool(np.any(self.r != 0))

    def discrete(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.kappa.size == 0:
            return np.zeros_like(z)
        e = np.exp(1j * np.multiply.outer(z, self.kappa))
        return -(e @ self.lam).real

    def reflection(self, z) -> np.ndarray:
        """r(z); zero beyond the right end of the sampled range."""
        z = np.asarray(z, dtype=float)
        if not self.has_reflection:
            return np.zeros_like(z)
        if np.any(z < self.z[0] - 1e-12):
            raise ResolutionError(f"kernel evaluated at z = {z.min():.4g} below its grid start {self.z[0]:.4g}")
        out = np.zeros_like(z)
        m = z <= self.z[-1]
        out[m] = self._spline(z[m])
        return out

    def __call__(self, z):
        return self.reflection(z) + self.discrete(z)

    @property
    def _spline(self):
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = CubicSpline(self.z, self.r)
            object.__setattr__(self, "_sp", sp)
        return sp


@dataclass(frozen=True)
class GoursatPair:
    """B1, B2 on the triangle y >= x of a uniform grid.

    Row ``i`` holds ``B(x_i, x_i + m*dx)`` for ``m = 0..ny-1``.
    """

    x: np.ndarray
    dx: float
    B1: np.ndarray
    B2: np.ndarray

    def dense(self, which: str = "B1") -> np.ndarray:
        """Values on the square grid (x_i, x_j), NaN below the diagonal."""
        B = getattr(self, which)
        n, ny = B.shape
        out = np.full((n, n), np.nan)
        for i in range(n):
            m = min(ny, n - i)
            out[i, i:i + m] = B[i, :m]
        return out


def default_z_grid(x_min: float = -10.0, x_max: float = 10.0, Z: float = Z_TRUNC, dz: float = 0.01):
    return np.arange(2 * x_min - 1.0, 2 * x_max + 2 * Z + 1.0 + dz / 2, dz)


def build_kernel(data: SpectralData, z_grid=None, taper: float = 0.1,
                 imag_tol: float = IMAG_TOL) -> MarchenkoKernel:
    """Marchenko kernel from spectral data.

    The reflection part is a trapezoid quadrature of the sampled R(k) with a
    smooth taper over the outer ``taper`` fraction of the k-range.
    """
    z = default_z_grid() if z_grid is None else np.asarray(z_grid, dtype=float)
    kap = np.asarray(data.kappa, dtype=complex)
    lam = np.asarray(data.lam, dtype=complex)
    disc = np.zeros(z.shape, dtype=complex)
    if kap.size:
        disc = -(np.exp(1j * np.multiply.outer(z, kap)) @ lam)
    r = np.zeros(z.shape, dtype=complex)
    if data.reflection is not None:
        k = np.asarray(data.reflection.k, dtype=float)
        R = np.asarray(data.reflection.values, dtype=complex)
        if k.size < 2:
            raise ResolutionError("reflection table needs at least two samples")
        dk = np.max(np.diff(k))
        zmax = float(np.max(np.abs(z)))
        if np.pi / dk < zmax:
            raise ResolutionError(
                f"reflection table spacing dk = {dk:.4g} cannot resolve |z| up to {zmax:.4g}"
                f" (needs pi/dk >= {zmax:.4g})")
        kmax = np.max(np.abs(k))
        win = smooth_window(k, (1 - taper) * kmax, kmax) if taper > 0 else np.ones_like(k)
        w = np.zeros_like(k)
        w[1:] += 0.5 * np.diff(k)
        w[:-1] += 0.5 * np.diff(k)
        coef = w * win * R / (2 * np.pi)
        step = max(1, int(4_000_000 // max(1, k.size)))
        for s in range(0, z.size, step):
            r[s:s + step] = np.exp(1j * np.multiply.outer(z[s:s + step], k)) @ coef
    om = r + disc
    scale = max(1.0, float(np.max(np.abs(om)))) if om.size else 1.0
    im = float(np.max(np.abs(om.imag))) if om.size else 0.0
    if im > imag_tol * scale:
        raise ValidationError(f"Marchenko kernel is not real: max |Im Omega| = {im:.3g}")
    return MarchenkoKernel(z, r.real.copy(), kap, lam)


class _Nystrom:
    """Quadrature on [x, x+Z] in offsets t = s - x, reused across x."""

    def __init__(self, Z: float, quadrature: str, panels: int, order: int, h: float):
        if quadrature == "lobatto":
            self.t, self.w = composite_lobatto(0.0, Z, panels, order)
        elif quadrature == "trapezoid":
            n = int(round(Z / h))
            self.t = h * np.arange(n + 1)
            self.w = np.full(n + 1, h)
            self.w[0] = self.w[-1] = 0.5 * h
        else:
            raise ParameterError(f"unknown quadrature {quadrature!r}")


def _solve_at(kernel: MarchenkoKernel, x: float, q: _Nystrom, cond_max: float):
    """Nodal B1, B2 at x plus the rank-N coefficients (v1, v2)."""
    s = x + q.t
    W = q.w
    n = s.size
    N = kernel.kappa.size
    f_r = kernel.reflection(x + s)
    refl = kernel.has_reflection
    if refl:
        Kr = kernel.reflection(s[:, None] + s[None, :]) * W[None, :]
        A = np.block([[np.eye(n), -Kr], [Kr, np.eye(n)]])
        lu = sla.lu_factor(A)
        cond = 1.0 / max(sla.lapack.dgecon(lu[0], np.linalg.norm(A, 1), norm="1")[0], 1e-300)
        if not np.isfinite(cond) or cond > cond_max:
            raise IllPosedError(f"Marchenko system at x = {x:.6g} has condition number {cond:.3g}", cond)
        solve = lambda b: sla.lu_solve(lu, b)  # noqa: E731
    else:
        Kr = None
        cond = 1.0
        solve = lambda b: b  # noqa: E731
    b_r = np.concatenate([f_r, np.zeros(n)]).astype(complex)
    if N == 0:
        u = solve(b_r)
        return u[:n], u[n:], np.zeros(0), np.zeros(0), cond, 0.0
    kap = kernel.kappa
    Lam = kernel.lam * np.exp(2j * kap * x)
    Lam_inv = np.exp(-2j * kap * x) / kernel.lam
    Ehat = np.exp(1j * np.multiply.outer(q.t, kap))  # (n, N)
    Z0 = np.zeros((n, N), dtype=complex)
    P = np.block([[Ehat, Z0], [Z0, Ehat]])
    EW = Ehat.T * W[None, :]
    QT = np.block([[EW, Z0.T], [Z0.T, EW]])
    L2inv = np.zeros((2 * N, 2 * N), dtype=complex)
    L2inv[:N, N:] = -np.diag(Lam_inv)
    L2inv[N:, :N] = np.diag(Lam_inv)
    Ar_b = solve(b_r)
    Ar_P = solve(P)
    S = L2inv + QT @ Ar_P
    rhs = QT @ Ar_b
    rhs[N:] += 1.0
    # equilibrate before the small solve: rows of S carry Lam^{-1}
    d = np.maximum(np.max(np.abs(S), axis=1), 1e-300)
    zvec = np.linalg.solve(S / d[:, None], rhs / d)
    u = Ar_b - Ar_P @ zvec
    # consistency of the split: Q^T u - Lam2^{-1} z + [0; 1] = 0
    res_small = QT @ u - L2inv @ zvec
    res_small[N:] += 1.0
    res_big = 0.0
    if refl:
        Ar_u = np.concatenate([u[:n] - Kr @ u[n:], Kr @ u[:n] + u[n:]])
        res_big = float(np.max(np.abs(Ar_u + P @ zvec - b_r)))
    resid = max(res_big, float(np.max(np.abs(res_small))))
    return u[:n], u[n:], zvec[:N], zvec[N:], cond, resid


@dataclass
class MarchenkoRow:
    x: float
    s: np.ndarray
    w: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    cond: float
    residual: float
    kernel: MarchenkoKernel

    def evaluate(self, y):
        """B1(x, y), B2(x, y) at arbitrary y >= x by Nystrom interpolation."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        kern = self.kernel
        b1 = kern.reflection(self.x + y).astype(complex)
        b2 = np.zeros(y.shape, dtype=complex)
        if kern.has_reflection:
            Om = kern.reflection(self.s[:, None] + y[None, :])
            b1 += (self.w * self.B2) @ Om
            b2 -= (self.w * self.B1) @ Om
        if kern.kappa.size:
            eh = np.exp(1j * np.multiply.outer(y - self.x, kern.kappa))
            b1 -= eh @ self.v1
            b2 -= eh @ self.v2
        return b1.real, b2.real


def solve_marchenko(kernel: MarchenkoKernel, x: float, y_grid=None, Z: float = Z_TRUNC,
                    quadrature: str = "lobatto", panels: int | None = None, order: int = 8,
                    h: float = 1.0 / 64, cond_max: float = COND_MAX,
                    march_tol: float = MARCH_TOL):
    """Solve at one x; return B1(x, y), B2(x, y) on ``y_grid`` (default: the nodes).

    Also returns the :class:`MarchenkoRow` with conditioning and the discrete
    residual of the linear system.
    """
    q = _Nystrom(Z, quadrature, panels or int(round(2 * Z)), order, h)
    B1, B2, v1, v2, cond, resid = _solve_at(kernel, float(x), q, cond_max)
    row = MarchenkoRow(float(x), x + q.t, q.w, B1, B2, v1, v2, cond, resid, kernel)
    if resid > march_tol * max(1.0, float(np.max(np.abs(B1)))):
        raise IllPosedError(f"Marchenko residual {resid:.3g} at x = {x:.6g} exceeds {march_tol:g}", resid)
    if y_grid is None:
        return B1.real, B2.real, row
    b1, b2 = row.evaluate(y_grid)
    return b1, b2, row


def recover_potential(kernel: MarchenkoKernel, x_grid, **kw) -> GridPotential:
    """U(x_i) = -B1(x_i, x_i) on a uniform grid."""
    x = np.asarray(x_grid, dtype=float)
    if x.size < 2:
        raise StructuralError("x grid needs at least two nodes")
    u = np.empty(x.size)
    q = _Nystrom(kw.pop("Z", Z_TRUNC), kw.pop("quadrature", "lobatto"),
                 kw.pop("panels", None) or int(round(2 * Z_TRUNC)), kw.pop("order", 8),
                 kw.pop("h", 1.0 / 64))
    cond_max = kw.pop("cond_max", COND_MAX)
    march_tol = kw.pop("march_tol", MARCH_TOL)
    if kw:
        raise TypeError(f"unexpected arguments {sorted(kw)}")
    for i, xi in enumerate(x):
        B1, B2, v1, v2, cond, resid = _solve_at(kernel, float(xi), q, cond_max)
        if resid > march_tol * max(1.0, float(np.max(np.abs(B1)))):
            raise IllPosedError(f"Marchenko residual {resid:.3g} at x = {xi:.6g}", resid)
        u[i] = -B1[0].real
    return GridPotential(x[0], float(np.mean(np.diff(x))), u)


def goursat_pair(kernel: MarchenkoKernel, x_grid, ny: int, **kw) -> GoursatPair:
    """B1, B2 at (x_i, x_i + m dx), m < ny, for a uniform ``x_grid``."""
    x = np.asarray(x_grid, dtype=float)
    dx = float(x[1] - x[0])
    B1 = np.empty((x.size, ny))
    B2 = np.empty((x.size, ny))
    offs = dx * np.arange(ny)
    for i, xi in enumerate(x):
        b1, b2, _ = solve_marchenko(kernel, xi, xi + offs, **kw)
        B1[i], B2[i] = b1, b2
    return GoursatPair(x, dx, B1, B2)


def goursat_residual(pair: GoursatPair, U) -> tuple:
    """Max residuals of the three Goursat identities by central differences.

    ``U`` is a GridPotential (interpolated to the pair's nodes) or samples on
    ``pair.x``.  Returns ``(r18, r20, r21)``:

        r18: dB1/dy - dB1/dx + 2U(x) B2
        r20: dB2/dx + dB2/dy + 2U(x) B1
        r21: d/dx B2(x,x) - 2U(x)^2
    """
    n, ny = pair.B1.shape
    if n < 5 or ny < 5:
        raise StructuralError("Goursat residuals need at least 5 nodes in each direction")
    if isinstance(U, GridPotential):
        u = U(pair.x)
    else:
        u = np.asarray(U, dtype=float)
        if u.shape != pair.x.shape:
            raise StructuralError("potential samples do not match the pair's grid")
    h = pair.dx
    B1, B2 = pair.B1, pair.B2
    # node (i, m) is B(x_i, x_i + m h); its x-neighbours at fixed y are
    # (i+1, m-1) and (i-1, m+1), its y-neighbours (i, m+-1)
    i = np.arange(1, n - 1)[:, None]
    m = np.arange(2, ny - 2)[None, :]

    def dx_(B):
        return (B[i + 1, m - 1] - B[i - 1, m + 1]) / (2 * h)

    def dy_(B):
        return (B[i, m + 1] - B[i, m - 1]) / (2 * h)

    ui = u[i]
    r18 = float(np.max(np.abs(dy_(B1) - dx_(B1) + 2 * ui * B2[i, m])))
    r20 = float(np.max(np.abs(dx_(B2) + dy_(B2) + 2 * ui * B1[i, m])))
    diag = B2[:, 0]
    d = (diag[2:] - diag[:-2]) / (2 * h)
    r21 = float(np.max(np.abs(d - 2 * u[1:-1] ** 2)))
    return r18, r20, r21


def energy_identity(pair: GoursatPair, U: GridPotential) -> float:
    """|int_{x0}^inf 2U^2 + B2(x0, x0)|, using B2(x,x) -> 0 as x -> infinity."""
    from scipy.integrate import simpson
    x0 = pair.x[0]
    m = U.x >= x0 - 1e-12
    tail = simpson(2 * U.values[m] ** 2, x=U.x[m])
    return float(abs(tail + pair.B2[0, 0]))
