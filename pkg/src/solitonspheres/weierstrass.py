"""Weierstrass representation of soliton spheres on the cylinder.

A spinor on the cylinder ``x + iy``, ``y`` mod 2pi, is stored as a sum of
modes ``phi(x) e^{omega y}``; for a pole ``kappa`` the mode ``phi+_1(x, kappa)
e^{kappa y}`` solves the Dirac equation

    d psi2 + U psi1 = 0,   dbar psi1 - U psi2 = 0,

with ``d = (d_x - i d_y)/2``.  The immersion is obtained by integrating the
real 1-forms built from ``psi1^2``, ``conj(psi2)^2`` and ``psi1 conj(psi2)``;
its metric is ``D^2 |dz|^2`` with ``D = |psi1|^2 + |psi2|^2`` and its mean
curvature is ``H = 2U/D``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from ._numerics import (fd6_derivative, fd6_second_derivative, periodic_cumulative_integral,
                        periodic_derivative)
from .errors import ParameterError, StructuralError, ValidationError
from .scattering import GridPotential, bound_state
from .spectral_data import HalfIntegerLevel, SpectralData

LEVEL_TOL = 1e-9
D_FLOOR = 1e-8
REGULAR_FRACTION = 1e-4
MESH_FLOOR = 1e-8
DEFAULT_NX = 1024
DEFAULT_NY = 256
PERIOD = 2 * np.pi


def level_of(kappa: complex, tol: float = LEVEL_TOL):
    """The n with kappa = i(2n+1)/2, or None."""
    kappa = complex(kappa)
    if abs(kappa.real) > tol:
        return None
    v = kappa.imag - 0.5
    n = round(v)
    if n < 0 or abs(v - n) > tol:
        return None
    return int(n)


def kernel_dimension(data: SpectralData) -> int:
    """Number of half-odd-integer levels among the poles (quaternionic kernel dimension)."""
    return sum(level_of(k) is not None for k in data.poles)


# ------------------------------------------------------------------ spinors

@dataclass(frozen=True)
class SpinorField:
    """psi(x, y) on ``x`` (uniform) times ``y`` (uniform on [0, 2pi)).

    ``modes`` holds ``(phi, omega)`` pairs with ``psi = sum phi(x) e^{omega y}``;
    a field reconstructed from samples has no modes and carries ``samples``.
    ``u`` is the potential on the x-grid (or per node).
    """

    x: np.ndarray
    y: np.ndarray
    modes: tuple = ()
    u: np.ndarray | None = None
    levels: tuple = ()
    samples: np.ndarray | None = None

    @property
    def shape(self):
        return (self.x.size, self.y.size)

    def evaluate(self, y) -> np.ndarray:
        """psi at arbitrary y (modes only); shape (2, nx, ny)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if not self.modes:
            raise StructuralError("field has no analytic modes")
        out = np.zeros((2, self.x.size, y.size), dtype=complex)
        for phi, om in self.modes:
            out += phi[:, :, None] * np.exp(om * y)[None, None, :]
        return out

    @property
    def psi(self) -> np.ndarray:
        c = self.__dict__.get("_psi")
        if c is None:
            c = self.samples if self.samples is not None else self.evaluate(self.y)
            object.__setattr__(self, "_psi", c)
        return c

    @property
    def psi_y(self) -> np.ndarray:
        if not self.modes:
            return periodic_derivative(self.psi, PERIOD, axis=2)
        out = np.zeros((2,) + self.shape, dtype=complex)
        for phi, om in self.modes:
            out += om * phi[:, :, None] * np.exp(om * self.y)[None, None, :]
        return out

    @property
    def psi_x(self) -> np.ndarray:
        """x-derivative from the 1-D system; a mode with frequency w solves it at k = w."""
        if not self.modes or self.u is None or np.ndim(self.u) != 1:
            raise StructuralError("analytic x-derivative needs modes and a 1-D potential")
        u = self.u
        out = np.zeros((2,) + self.shape, dtype=complex)
        for phi, om in self.modes:
            d1 = -1j * om * phi[0] + 2 * u * phi[1]
            d2 = 1j * om * phi[1] - 2 * u * phi[0]
            e = np.exp(om * self.y)[None, :]
            out[0] += d1[:, None] * e
            out[1] += d2[:, None] * e
        return out

    @property
    def psi_xx(self) -> np.ndarray:
        """Second x-derivative from the differentiated 1-D system (u' by 6th-order differences)."""
        if not self.modes or self.u is None or np.ndim(self.u) != 1:
            raise StructuralError("analytic x-derivative needs modes and a 1-D potential")
        u = self.u
        ux = fd6_derivative(u, self.x[1] - self.x[0])
        out = np.zeros((2,) + self.shape, dtype=complex)
        for phi, om in self.modes:
            d1 = -1j * om * phi[0] + 2 * u * phi[1]
            d2 = 1j * om * phi[1] - 2 * u * phi[0]
            dd1 = -1j * om * d1 + 2 * ux * phi[1] + 2 * u * d2
            dd2 = 1j * om * d2 - 2 * ux * phi[0] - 2 * u * d1
            e = np.exp(om * self.y)[None, :]
            out[0] += dd1[:, None] * e
            out[1] += dd2[:, None] * e
        return out

    @property
    def D(self) -> np.ndarray:
        p = self.psi
        return np.abs(p[0]) ** 2 + np.abs(p[1]) ** 2

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([om for _, om in self.modes], dtype=complex)

    def is_antiperiodic(self, tol: float = LEVEL_TOL) -> bool:
        """All y-frequencies are i times a half-odd integer."""
        if not self.modes:
            return bool(np.allclose(self.psi[:, :, 0], self.psi[:, :, 0]))  # no information
        for om in self.frequencies:
            v = om.imag - 0.5
            if abs(om.real) > tol or abs(v - round(v)) > tol:
                return False
        return True

    def scale(self, c: complex) -> "SpinorField":
        c = complex(c)
        modes = tuple((c * phi, om) for phi, om in self.modes)
        s = None if self.samples is None else c * self.samples
        return replace(self, modes=modes, samples=s)

    def __add__(self, other: "SpinorField") -> "SpinorField":
        if self.x.shape != other.x.shape or self.y.shape != other.y.shape:
            raise StructuralError("fields live on different grids")
        if self.samples is not None or other.samples is not None:
            return replace(self, modes=(), samples=self.psi + other.psi)
        return replace(self, modes=self.modes + other.modes, levels=self.levels + other.levels)


def star_transform(psi: SpinorField) -> SpinorField:
    """psi* = (conj psi2, -conj psi1); (psi*)* = -psi."""
    modes = tuple((np.array([np.conj(phi[1]), -np.conj(phi[0])]), np.conj(om))
                  for phi, om in psi.modes)
    s = None
    if psi.samples is not None:
        s = np.array([np.conj(psi.samples[1]), -np.conj(psi.samples[0])])
    return replace(psi, modes=modes, samples=s)


def _mode_for(data: SpectralData, U: GridPotential, kappa: complex, closed_form: bool):
    if closed_form:
        from .reflectionless import jost_from_data
        return jost_from_data(data, kappa, U.x).samples
    return bound_state(U, kappa)[0].samples


def build_spinor(data: SpectralData, coeffs, U: GridPotential | None = None,
                 nx: int = DEFAULT_NX, ny: int = DEFAULT_NY, xmax: float = 20.0,
                 poles=None, allow_nonlevel: bool = False) -> SpinorField:
    """psi_a = sum_j a_j psi_j + a_{L+j} psi*_j over the half-odd-integer levels.

    ``psi_j(x, y) = phi+_1(x, kappa_j) e^{kappa_j y}``.  Eigenfunctions come
    from the closed form for reflectionless data and from forward
    integration on ``U`` otherwise.  ``poles`` overrides the list of poles
    used (with ``allow_nonlevel`` a non-level pole can be forced in, which
    produces a field that does not close up; useful as a negative control).
    """
    coeffs = np.asarray(coeffs, dtype=complex).ravel()
    if poles is None:
        poles = sorted((k for k in data.poles if level_of(k) is not None), key=lambda k: k.imag)
    poles = [complex(p) for p in poles]
    for p in poles:
        if level_of(p) is None and not allow_nonlevel:
            raise ParameterError(
                f"pole {p} is not a half-odd-integer level i(2n+1)/2; its modes are neither"
                " periodic nor antiperiodic on the cylinder")
    L = len(poles)
    if L == 0:
        raise ParameterError("no half-odd-integer levels available")
    if coeffs.size != 2 * L:
        raise StructuralError(f"expected {2 * L} coefficients, got {coeffs.size}")
    if not np.any(coeffs != 0):
        raise ParameterError("coefficient vector a must be nonzero")
    closed = data.reflectionless
    if U is None:
        if not closed:
            raise ParameterError("a potential grid is required for data with reflection")
        from .reflectionless import potential_from_data
        U = potential_from_data(data, np.linspace(-xmax, xmax, nx))
    y = PERIOD * np.arange(ny) / ny
    modes = []
    levels = []
    for j, kap in enumerate(poles):
        phi = _mode_for(data, U, kap, closed)
        a, b = coeffs[j], coeffs[L + j]
        if a != 0:
            modes.append((a * phi, kap))
        if b != 0:
            # a_{L+j} psi*_j
            modes.append((b * np.array([np.conj(phi[1]), -np.conj(phi[0])]), np.conj(kap)))
        lv = level_of(kap)
        levels.append((HalfIntegerLevel(lv) if lv is not None else kap, a, b))
    return SpinorField(U.x.copy(), y, tuple(modes), U.values.copy(), tuple(levels))


def rotate_frame(psi: SpinorField, lam: complex, mu: complex) -> SpinorField:
    """lambda psi + mu psi*."""
    if lam == 0 and mu == 0:
        raise ParameterError("lambda and mu must not both vanish")
    if mu == 0:
        return psi.scale(lam)
    return psi.scale(lam) + star_transform(psi).scale(mu)


def rotation_matrix(lam: complex, mu: complex, orthonormalize: bool = True,
                    printed: bool = False) -> np.ndarray:
    """Real 3x3 matrix carrying dX_{1,0} to dX_{lambda,mu}.

    The entries mixing lambda and mu carry the signs that follow from the
    one-forms used by ``immerse`` together with psi* = (conj psi2, -conj psi1).
    ``printed=True`` flips those four entries, which is the commonly quoted
    coefficient table; it does not match the immersion (kept for comparison).
    """
    l, m = complex(lam), complex(mu)
    l2, m2, lm, lmb = l * l, m * m, l * m, l * np.conj(m)
    R = np.array([
        [l2.real + m2.real, l2.imag - m2.imag, -2 * lm.imag],
        [-(l2.imag + m2.imag), l2.real - m2.real, -2 * lm.real],
        [-2 * lmb.imag, 2 * lmb.real, abs(l) ** 2 - abs(m) ** 2],
    ])
    if printed:
        R[:2, 2] *= -1
        R[2, :2] *= -1
    if orthonormalize:
        q, r = np.linalg.qr(R.T)
        q = q * np.sign(np.diag(r))[None, :]
        R = q.T
    return R


def dirac_residual(psi: SpinorField, U=None) -> float:
    """max |d psi2 + U psi1|, |dbar psi1 - U psi2| with 6th-order x-derivatives.

    Three nodes at each x-end are skipped (one-sided stencils).
    """
    u = psi.u if U is None else (U(psi.x) if isinstance(U, GridPotential) else np.asarray(U))
    if u is None:
        raise ParameterError("no potential available for the residual")
    u = u[:, None] if u.ndim == 1 else u
    p = psi.psi
    h = psi.x[1] - psi.x[0]
    px = fd6_derivative(p, h, axis=1)
    py = psi.psi_y
    d2 = 0.5 * (px[1] - 1j * py[1])
    db1 = 0.5 * (px[0] + 1j * py[0])
    r1 = d2 + u * p[0]
    r2 = db1 - u * p[1]
    return float(max(np.max(np.abs(r1[3:-3])), np.max(np.abs(r2[3:-3]))))


def _one_forms(p: np.ndarray):
    """X_x, X_y from spinor samples; shape (2, 3, ...)."""
    p1, p2 = p[0], p[1]
    A = np.conj(p2) ** 2 + p1 ** 2
    B = np.conj(p2) ** 2 - p1 ** 2
    C = p1 * np.conj(p2)
    Xx = np.array([-A.imag, B.real, 2 * C.real])
    Xy = np.array([-A.real, -B.imag, -2 * C.imag])
    return Xx, Xy


def _one_forms_dx(p: np.ndarray, px: np.ndarray) -> np.ndarray:
    """d/dx of X_x given psi and psi_x."""
    p1, p2, q1, q2 = p[0], p[1], px[0], px[1]
    Ax = 2 * np.conj(p2) * np.conj(q2) + 2 * p1 * q1
    Bx = 2 * np.conj(p2) * np.conj(q2) - 2 * p1 * q1
    Cx = q1 * np.conj(p2) + p1 * np.conj(q2)
    return np.array([-Ax.imag, Bx.real, 2 * Cx.real])


def _one_forms_dxx(p: np.ndarray, px: np.ndarray, pxx: np.ndarray) -> np.ndarray:
    """d^2/dx^2 of X_x given psi and its first two x-derivatives."""
    p1, p2, q1, q2, r1, r2 = p[0], p[1], px[0], px[1], pxx[0], pxx[1]
    s2 = 2 * (np.conj(q2) ** 2 + np.conj(p2) * np.conj(r2))
    s1 = 2 * (q1 ** 2 + p1 * r1)
    Cxx = r1 * np.conj(p2) + 2 * q1 * np.conj(q2) + p1 * np.conj(r2)
    return np.array([-(s2 + s1).imag, (s2 - s1).real, 2 * Cxx.real])


def _hermite_cumulative(f: np.ndarray, df: np.ndarray, h: float, ddf: np.ndarray | None = None) -> np.ndarray:
    """Cumulative integral along the last axis by endpoint-corrected trapezoid.

    With first derivatives only the rule is 4th order; adding second
    derivatives gives the 6th-order two-point Hermite rule.
    """
    if ddf is None:
        step = 0.5 * h * (f[..., 1:] + f[..., :-1]) + h * h / 12 * (df[..., :-1] - df[..., 1:])
    else:
        step = (0.5 * h * (f[..., 1:] + f[..., :-1]) + h * h / 10 * (df[..., :-1] - df[..., 1:])
                + h ** 3 / 120 * (ddf[..., :-1] + ddf[..., 1:]))
    out = np.zeros_like(f)
    out[..., 1:] = np.cumsum(step, axis=-1)
    return out


# ------------------------------------------------------------------ surfaces

@dataclass
class ImmersedSurface:
    x: np.ndarray
    y: np.ndarray
    points: np.ndarray  # (nx, ny, 3)
    D: np.ndarray
    H: np.ndarray
    K: np.ndarray
    u: np.ndarray
    psi: SpinorField | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def scaled(self, r2: float) -> "ImmersedSurface":
        return replace(self, points=r2 * self.points)


def immerse(psi: SpinorField, basepoint=(0.0, 0.0), diagnostics: bool = True) -> ImmersedSurface:
    """Integrate the Weierstrass 1-forms; X(basepoint) = 0.

    Integration runs along x at y = y0 (two-point Hermite rule using the
    exact x-derivatives of the integrand when the field has modes,
    cumulative Simpson otherwise), then along
    each y-circle spectrally.  The y-integrand is a trigonometric polynomial
    with integer frequencies for level fields, so the latter is exact up to
    rounding.
    """
    p = psi.psi
    if not np.any(p):
        raise ParameterError("zero spinor field")
    x, y = psi.x, psi.y
    i0 = int(np.argmin(np.abs(x - basepoint[0])))
    j0 = int(np.argmin(np.abs(y - basepoint[1] % PERIOD)))
    Xx, Xy = _one_forms(p)
    h = x[1] - x[0]
    try:
        pc = p[:, :, j0:j0 + 1]
        px = psi.psi_x[:, :, j0:j0 + 1]
        pxx = psi.psi_xx[:, :, j0:j0 + 1]
        dXx = _one_forms_dx(pc, px)[:, :, 0]
        ddXx = _one_forms_dxx(pc, px, pxx)[:, :, 0]
        spine = _hermite_cumulative(Xx[:, :, j0], dXx, h, ddXx)
    except StructuralError:
        spine = cumulative_simpson(Xx[:, :, j0], dx=h, axis=1, initial=0.0)
    spine = spine - spine[:, i0:i0 + 1]
    F, mean = periodic_cumulative_integral(Xy, PERIOD, axis=2)
    F = F - F[:, :, j0:j0 + 1] + mean * (y - y[j0])[None, None, :]
    X = spine[:, :, None] + F
    points = np.moveaxis(X, 0, -1)
    D = np.abs(p[0]) ** 2 + np.abs(p[1]) ** 2
    u = psi.u if psi.u is not None else np.zeros(x.size)
    u2 = u[:, None] * np.ones(y.size)[None, :] if u.ndim == 1 else u
    with np.errstate(divide="ignore", invalid="ignore"):
        H = 2 * u2 / D
        logD = np.log(D)
    K = np.full(D.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):  # zeros of D give NaN curvature
        lap = (logD[2:, :] - 2 * logD[1:-1, :] + logD[:-2, :]) / h ** 2 \
            + (np.roll(logD, -1, axis=1) - 2 * logD + np.roll(logD, 1, axis=1))[1:-1] / (y[1] - y[0]) ** 2
        K[1:-1] = -lap / D[1:-1] ** 2
    surf = ImmersedSurface(x, y, points, D, H, K, u2, psi)
    if diagnostics:
        surf.diagnostics = closure_check(surf)
        surf.diagnostics["branch_points"] = detect_branch_points(surf)["nodes"]
    return surf


def _periods(psi: SpinorField, nq: int = 128) -> np.ndarray:
    """X(x, 2pi) - X(x, 0) for every x-circle, shape (nx, 3)."""
    if psi.modes:
        t, w = np.polynomial.legendre.leggauss(nq)
        yq = np.pi * (t + 1)
        _, Xy = _one_forms(psi.evaluate(yq))
        return np.pi * np.einsum("cij,j->ic", Xy, w)
    _, Xy = _one_forms(psi.psi)
    return PERIOD * Xy.mean(axis=2).T


def _diameter(pts: np.ndarray) -> float:
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


def _decay_fit(x, D, lo: float = 0.4, hi: float = 0.9):
    """Fit log D ~ log C - rate |x| on the outer part of each half-line."""
    out = {}
    L = min(-x[0], x[-1])
    for side, m in (("minus", x < 0), ("plus", x > 0)):
        ax = np.abs(x[m])
        sel = (ax >= lo * L) & (ax <= hi * L)
        d = D[m][sel]
        if d.size < 3 or np.any(d <= 0):
            out[side] = (np.nan, np.nan)
            continue
        slope, icpt = np.polyfit(ax[sel], np.log(d), 1)
        out[side] = (float(np.exp(icpt)), float(-slope))
    return out


def closure_check(surface: ImmersedSurface) -> dict:
    """Period norms of the y-circles, end-circle diameters and tail decay fits."""
    psi = surface.psi
    per = _periods(psi) if psi is not None else None
    pn = float(np.max(np.linalg.norm(per, axis=1))) if per is not None else float("nan")
    Dm = surface.D.mean(axis=1)
    return {
        "period_norm": pn,
        "endpoint_diameters": (_diameter(surface.points[0]), _diameter(surface.points[-1])),
        "decay": _decay_fit(surface.x, Dm),
        "antiperiodic": bool(psi.is_antiperiodic()) if psi is not None else None,
    }


def detect_branch_points(surface: ImmersedSurface, d_floor: float = D_FLOOR,
                         rate_tol: float = 0.25) -> dict:
    """Nodes where the normalized density vanishes, plus branch points at the ends.

    D is compared after dividing out the regular ``e^{-|x|}`` decay, so the
    ends of a regular sphere are not flagged.  An end whose density decays
    faster than ``e^{-(1 + rate_tol)|x|}`` is reported as a branch point at
    that infinity.
    """
    Dn = surface.D * np.exp(np.abs(surface.x))[:, None]
    thr = d_floor * np.max(Dn)
    nodes = [tuple(int(v) for v in ij) for ij in np.argwhere(Dn < thr)]
    fit = _decay_fit(surface.x, surface.D.mean(axis=1))
    ends = [side for side, (_, rate) in fit.items() if np.isfinite(rate) and rate > 1 + rate_tol]
    return {"nodes": nodes, "decay": fit, "branched_ends": ends,
            "min_normalized_D": float(np.min(Dn) / np.max(Dn))}


# ------------------------------------------------------------------ geometry from points

def point_derivatives(surface: ImmersedSurface):
    """X_x, X_y, X_xx, X_yy from the points, spectrally in both directions."""
    P = surface.points
    h = surface.dx
    x = surface.x
    # the points tend to fixed end values; remove a smooth step between them
    # so the remainder is flat at both ends and differentiate spectrally
    w = 0.025 * (x[-1] - x[0])
    c = 0.5 * (x[0] + x[-1])
    s = 0.5 * (1 + np.tanh((x - c) / w))
    ds = 0.5 / w / np.cosh((x - c) / w) ** 2
    dds = -2 * np.tanh((x - c) / w) / w * ds
    a = P[0].mean(axis=0)
    b = P[-1].mean(axis=0)
    R = P - a - s[:, None, None] * (b - a)
    Lx = x.size * h
    Px = periodic_derivative(R, Lx, 1, axis=0) + ds[:, None, None] * (b - a)
    Pxx = periodic_derivative(R, Lx, 2, axis=0) + dds[:, None, None] * (b - a)
    Py = periodic_derivative(P, PERIOD, 1, axis=1)
    Pyy = periodic_derivative(P, PERIOD, 2, axis=1)
    return Px, Py, Pxx, Pyy


def regular_mask(surface: ImmersedSurface, fraction: float = REGULAR_FRACTION) -> np.ndarray:
    """Nodes away from the ends where D is at least ``fraction * max D``."""
    m = surface.D >= fraction * np.max(surface.D)
    m[:3] = False
    m[-3:] = False
    return m


def geometric_curvatures(surface: ImmersedSurface):
    """Mean curvature, metric and conformality defects computed from the points.

    The normal is oriented so that ``H = 2U/D`` (rather than ``-2U/D``) for
    the round sphere built from a positive potential.
    """
    Px, Py, Pxx, Pyy = point_derivatives(surface)
    n = np.cross(Px, Py)
    nn = np.linalg.norm(n, axis=-1)
    E = np.sum(Px * Px, axis=-1)
    G = np.sum(Py * Py, axis=-1)
    F = np.sum(Px * Py, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = np.sum((Pxx + Pyy) * n, axis=-1) / nn / (E + G)
    return {"H": H, "E": E, "G": G, "F": F}


def conformality_defects(surface: ImmersedSurface, mask=None) -> dict:
    g = geometric_curvatures(surface)
    m = regular_mask(surface) if mask is None else mask
    D2 = surface.D ** 2
    return {
        "F": float(np.max(np.abs(g["F"][m]) / D2[m])),
        "E-G": float(np.max(np.abs(g["E"][m] - g["G"][m]) / D2[m])),
        "E-D2": float(np.max(np.abs(g["E"][m] - D2[m]) / D2[m])),
        "HD-2U": float(np.max(np.abs(g["H"][m] * surface.D[m] - 2 * surface.u[m]))),
    }


def gauss_bonnet(surface: ImmersedSurface) -> float:
    """sum K D^2 dx dy over interior rows."""
    K = surface.K[1:-1]
    return float(np.sum(K * surface.D[1:-1] ** 2) * surface.dx * surface.dy)


def willmore(obj, route: str = "mesh", resolve_floor: float = MESH_FLOOR) -> float:
    """Willmore energy.

    For a GridPotential: ``8 pi int U^2 dx``.  For a surface, ``route="mesh"``
    sums ``H^2 D^2 dx dy`` with H computed from the points, and
    ``route="potential"`` sums ``4 U^2 dx dy``.

    The mesh sum skips nodes with ``D < resolve_floor * max D``: there the
    points sit within rounding of the end point and curvature from
    differences is noise.
    """
    if isinstance(obj, GridPotential):
        return float(8 * np.pi * simpson(obj.values ** 2, dx=obj.dx))
    s = obj
    if route == "potential":
        return float(4 * simpson(np.sum(s.u ** 2, axis=1) * s.dy, dx=s.dx))
    if route != "mesh":
        raise ParameterError(f"unknown route {route!r}")
    H = geometric_curvatures(s)["H"]
    f = np.where(s.D >= resolve_floor * np.max(s.D), H ** 2 * s.D ** 2, 0.0)
    f = np.nan_to_num(f[3:-3])
    return float(simpson(np.sum(f, axis=1) * s.dy, dx=s.dx))


def fit_sphere(points: np.ndarray):
    """Least-squares sphere; returns (center, radius, max relative residual)."""
    P = points.reshape(-1, 3)
    A = np.hstack([2 * P, np.ones((P.shape[0], 1))])
    b = np.sum(P * P, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c = sol[:3]
    r = np.sqrt(sol[3] + c @ c)
    res = np.abs(np.linalg.norm(P - c, axis=1) - r) / r
    return c, float(r), float(res.max())


def revolution_defect(surface: ImmersedSurface, mask=None) -> float:
    """Spread over y of the distance to the axis through the circle centroids."""
    P = surface.points
    m = regular_mask(surface) if mask is None else mask
    rows = np.flatnonzero(m.all(axis=1))
    cent = P[rows].mean(axis=1)
    c0 = cent.mean(axis=0)
    _, _, vt = np.linalg.svd(cent - c0)
    axis = vt[0]
    d = P[rows] - c0
    dist = np.linalg.norm(d - (d @ axis)[..., None] * axis, axis=-1)
    return float(np.max(dist.max(axis=1) - dist.min(axis=1)))


def is_revolution(coeffs, L: int) -> bool:
    """True iff the support of ``coeffs`` lies in one pair {j, j+L}."""
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size != 2 * L:
        raise StructuralError(f"expected {2 * L} coefficients, got {c.size}")
    support = {int(i) % L for i in np.flatnonzero(c != 0)}
    return len(support) <= 1


# ------------------------------------------------------------------ plane picture

@dataclass
class PlaneField:
    Z: np.ndarray
    Psi1: np.ndarray
    Psi2: np.ndarray

    @property
    def modulus2(self):
        return np.abs(self.Psi1) ** 2 + np.abs(self.Psi2) ** 2


def to_plane(psi: SpinorField, y=None) -> PlaneField:
    """Psi1 = e^{-(x+iy)/2} psi1, Psi2 = e^{-(x-iy)/2} psi2 on Z = e^{x+iy}."""
    y = psi.y if y is None else np.asarray(y, dtype=float)
    p = psi.psi if y is psi.y else psi.evaluate(y)
    X, Y = np.meshgrid(psi.x, y, indexing="ij")
    Z = np.exp(X + 1j * Y)
    return PlaneField(Z, np.exp(-(X + 1j * Y) / 2) * p[0], np.exp(-(X - 1j * Y) / 2) * p[1])


def plane_decay_constant(psi: SpinorField, side: str = "plus") -> float:
    """Limit of |Psi|^2 |Z|^2 at the end of the x-grid (estimated from the last rows)."""
    pf = to_plane(psi)
    v = pf.modulus2 * np.abs(pf.Z) ** 2
    row = v[-1] if side == "plus" else v[0]
    return float(row.mean())


def rational_fit(Z: np.ndarray, F: np.ndarray, deg_num: int, deg_den: int):
    """Fit F ~ P(Z, conj Z) / Q(|Z|^2) by homogeneous least squares.

    ``P`` runs over monomials Z^a conj(Z)^b with a + b <= deg_num and ``Q`` is
    a polynomial of degree ``deg_den`` in |Z|^2.  Returns the coefficient
    vectors and the max residual relative to max |F|.
    """
    z = np.asarray(Z).ravel()
    f = np.asarray(F).ravel()
    r2 = np.abs(z) ** 2
    mono = [(a, b) for a in range(deg_num + 1) for b in range(deg_num + 1 - a)]
    Pcols = np.array([z ** a * np.conj(z) ** b for a, b in mono]).T
    Qcols = np.array([r2 ** j for j in range(deg_den + 1)]).T
    A = np.hstack([Pcols, -f[:, None] * Qcols])
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1
    _, _, vh = np.linalg.svd(A / scale, full_matrices=False)
    c = np.conj(vh[-1]) / scale
    p, q = c[:len(mono)], c[len(mono):]
    fit = (Pcols @ p) / (Qcols @ q)
    res = float(np.max(np.abs(fit - f)) / np.max(np.abs(f)))
    return p, q, res


# ------------------------------------------------------------------ inverse direction

def spinor_from_immersion(surface: ImmersedSurface, mask=None):
    """Recover psi (up to sign) and U = H D / 2 from the points of a conformal immersion.

    Returns ``(field, U_rec, mask)``; ``mask`` marks the regular nodes on which
    the reconstruction is meaningful.
    """
    Px, Py, Pxx, Pyy = point_derivatives(surface)
    if np.max(np.linalg.norm(Px, axis=-1)) == 0 and np.max(np.linalg.norm(Py, axis=-1)) == 0:
        raise ValidationError("the points do not describe an immersion (all derivatives vanish)")
    Phi_x = Px[..., 1] + 1j * Px[..., 0]
    Phi_y = Py[..., 1] + 1j * Py[..., 0]
    d = 0.5 * (Phi_x - 1j * Phi_y)
    db = 0.5 * (Phi_x + 1j * Phi_y)
    psi1 = np.sqrt(-d)
    psi2 = np.sqrt(db)
    Drec = np.abs(psi1) ** 2 + np.abs(psi2) ** 2
    g = geometric_curvatures(surface)
    u_rec = g["H"] * Drec / 2
    m = regular_mask(surface) if mask is None else mask
    X3z = 0.5 * (Px[..., 2] - 1j * Py[..., 2])
    m = m & (np.abs(X3z) > 1e-8 * np.max(np.abs(X3z)))
    if not np.any(m):
        raise ValidationError("no regular nodes: not an immersion")
    field_ = SpinorField(surface.x, surface.y, (), u_rec, (), np.array([psi1, psi2]))
    return field_, u_rec, m
