"""Forward scattering for the one-dimensional Dirac operator.

The linear problem is the first-order system

    phi1' = -i k phi1 + 2 U phi2
    phi2' =  i k phi2 - 2 U phi1

whose free solutions are ``(0, e^{ikx})`` and ``(e^{-ikx}, 0)``.  Jost
solutions are integrated on the potential's grid with a fourth-order Magnus
scheme; the generator is trace free (and anti-Hermitian for real ``k``), so
every step is an exact SL(2) (resp. SU(2)) matrix.  Wronskians and
``|a|^2 + |b|^2`` are therefore conserved to rounding error independently of
the step size, while accuracy of the coefficients themselves is O(dx^4).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConvergenceError, ParameterError, StructuralError

DEFAULT_XMAX = 20.0
DEFAULT_DX = 1.0 / 256
DECAY_TOL = 1e-8
ROOT_TOL = 1e-10
FD_STEP = 1e-6
DERIVATIVE_FLOOR = 1e-10
UNITARITY_TOL = 1e-8
SYM_TOL = 1e-6

_C1 = 0.5 - np.sqrt(3.0) / 6.0
_C2 = 0.5 + np.sqrt(3.0) / 6.0

KINDS = ("plus_col1", "plus_col2", "minus_col1", "minus_col2")


@dataclass(frozen=True)
class GridPotential:
    """Real potential sampled on ``x0 + i*dx``, ``i = 0..n-1``."""

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise StructuralError("a grid potential needs at least two samples")
        if not self.dx > 0:
            raise StructuralError("grid spacing must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))

    @classmethod
    def from_function(cls, f, xmax: float = DEFAULT_XMAX, dx: float = DEFAULT_DX, xmin=None):
        xmin = -xmax if xmin is None else xmin
        n = int(round((xmax - xmin) / dx)) + 1
        x = xmin + dx * np.arange(n)
        return cls(xmin, dx, f(x))

    @classmethod
    def zero(cls, xmax: float = DEFAULT_XMAX, dx: float = DEFAULT_DX):
        return cls.from_function(np.zeros_like, xmax, dx)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def xmax(self) -> float:
        return self.x0 + (self.n - 1) * self.dx

    def decay_residual(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def check_decay(self, decay_tol: float = DECAY_TOL) -> None:
        r = self.decay_residual()
        if not r < decay_tol:
            raise ParameterError(
                f"potential does not decay at the truncation boundary: |U| = {r:.3g} >= {decay_tol:g}")

    def l2_squared(self) -> float:
        """Integral of U^2 over the grid (Simpson)."""
        from scipy.integrate import simpson
        return float(simpson(self.values ** 2, dx=self.dx))

    def __call__(self, x):
        return self._spline(x)

    @property
    def _spline(self):
        sp = self.__dict__.get("_sp")
        if sp is None:
            sp = CubicSpline(self.x, self.values)
            object.__setattr__(self, "_sp", sp)
        return sp


@dataclass(frozen=True)
class JostField:
    kind: str
    k: complex
    x: np.ndarray
    samples: np.ndarray  # shape (2, n)

    @property
    def phi1(self):
        return self.samples[0]

    @property
    def phi2(self):
        return self.samples[1]


@dataclass
class ScatteringReport:
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    discrete: list = field(default_factory=list)
    unitarity_residual: float = 0.0
    error_estimate: float = 0.0

    @property
    def T(self):
        return 1.0 / self.a

    @property
    def R(self):
        return self.b / self.a

    def to_dict(self) -> dict:
        def c(arr):
            return [[float(z.real), float(z.imag)] for z in np.asarray(arr, dtype=complex)]
        return {
            "k": [float(v) for v in self.k],
            "a": c(self.a), "b": c(self.b), "T": c(self.T), "R": c(self.R),
            "discrete": [
                {name: [float(complex(v).real), float(complex(v).imag)]
                 for name, v in zip(("kappa", "gamma", "mu", "lambda"), d)}
                for d in self.discrete],
            "unitarity_residual": float(self.unitarity_residual),
            "error_estimate": float(self.error_estimate),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScatteringReport":
        def c(rows):
            arr = np.asarray(rows, dtype=float).reshape(-1, 2)
            return arr[:, 0] + 1j * arr[:, 1]
        disc = [tuple(complex(*e[name]) for name in ("kappa", "gamma", "mu", "lambda"))
                for e in d.get("discrete", [])]
        return cls(np.asarray(d["k"], dtype=float), c(d["a"]), c(d["b"]), disc,
                   d.get("unitarity_residual", 0.0), d.get("error_estimate", 0.0))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ScatteringReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def spectral_data(self, eps_real: float = 1e-8):
        """Spectral data (poles, norming constants, sampled R) carried by the report."""
        from .spectral_data import ReflectionTable, SpectralData
        kap = [d[0] for d in self.discrete]
        lam = [d[3] for d in self.discrete]
        kap, lam = _symmetrize(np.array(kap, dtype=complex), np.array(lam, dtype=complex), eps_real)
        return SpectralData(tuple(kap), tuple(lam), ReflectionTable(self.k, self.R))


def _symmetrize(kap, lam, eps):
    """Snap numerically recovered data onto the reality conditions."""
    kap, lam = kap.copy(), lam.copy()
    done = set()
    for j in range(len(kap)):
        if j in done:
            continue
        if abs(kap[j].real) < eps:
            kap[j] = 1j * kap[j].imag
            lam[j] = lam[j].real
            continue
        d = np.abs(kap - (-np.conj(kap[j])))
        d[j] = np.inf
        m = int(np.argmin(d))
        kap[m] = -np.conj(kap[j])
        lam[m] = np.conj(lam[j])
        done.update((j, m))
    return kap, lam


# ------------------------------------------------------------------ Magnus

def _gauss_samples(U: GridPotential):
    x = U.x[:-1]
    return U(x + _C1 * U.dx), U(x + _C2 * U.dx)


def _step_matrices(k, u1, u2, h):
    """exp of the 4th-order Magnus generator, shape (..., ncell, 2, 2).

    ``u1``/``u2`` are potential values at the first/second Gauss point in
    the direction of travel; ``k`` broadcasts against the cell axis.
    """
    k = np.asarray(k, dtype=complex)[..., None]
    us = u1 + u2
    c = 1j * (np.sqrt(3.0) / 3.0) * k * h * h * (u2 - u1)
    al = -1j * k * h
    be = h * us + c
    ga = -h * us + c
    s2 = al * al + be * ga
    s = np.sqrt(s2)
    small = np.abs(s) < 1e-6
    s_safe = np.where(small, 1.0, s)
    ch = np.where(small, 1 + s2 / 2 + s2 * s2 / 24, np.cosh(s_safe))
    sh = np.where(small, 1 + s2 / 6 + s2 * s2 / 120, np.sinh(s_safe) / s_safe)
    E = np.empty(np.broadcast_shapes(al.shape, be.shape) + (2, 2), dtype=complex)
    E[..., 0, 0] = ch + sh * al
    E[..., 0, 1] = sh * be
    E[..., 1, 0] = sh * ga
    E[..., 1, 1] = ch - sh * al
    return E


def _tree_product(E):
    """Ordered product E[n-1] @ ... @ E[0] along axis -3."""
    while E.shape[-3] > 1:
        n = E.shape[-3]
        if n % 2:
            last = E[..., -1:, :, :]
            E = E[..., :-1, :, :]
        else:
            last = None
        E = E[..., 1::2, :, :] @ E[..., 0::2, :, :]
        if last is not None:
            E = np.concatenate([E, last], axis=-3)
    return E[..., 0, :, :]


def _propagator(U: GridPotential, k, coarse: bool = False):
    """Transfer matrix from x0 to xmax for each k (vectorized)."""
    if coarse:
        x = U.x[:-2:2]
        h = 2 * U.dx
        u1, u2 = U(x + _C1 * h), U(x + _C2 * h)
        if (U.n - 1) % 2:
            raise ValueError("coarse propagator needs an even number of cells")
    else:
        u1, u2 = _gauss_samples(U)
        h = U.dx
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    out = np.empty(k.shape + (2, 2), dtype=complex)
    chunk = max(1, int(2_000_000 // max(1, u1.size)))
    for s in range(0, k.size, chunk):
        E = _step_matrices(k[s:s + chunk], u1, u2, h)
        out[s:s + chunk] = _tree_product(E)
    return out


def _a_b_from_propagator(P, U, k):
    v1 = P[..., 0, 0] * np.exp(-1j * k * U.x0)
    v2 = P[..., 1, 0] * np.exp(-1j * k * U.x0)
    a = np.exp(1j * k * U.xmax) * v1
    b = np.exp(-1j * k * U.xmax) * v2
    return a, b


def transmission_a(U: GridPotential, k) -> np.ndarray:
    """a(k), normalized so that a = 1 for the free operator; analytic for Im k >= 0."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    a, _ = _a_b_from_propagator(_propagator(U, k), U, k)
    return a


# ------------------------------------------------------------------ Jost

def jost_solve(U: GridPotential, k: complex, kind: str = "plus_col1") -> JostField:
    """Jost solution of the given kind sampled on the grid of ``U``.

    ``plus_*`` solutions are normalized at +infinity and integrated from the
    right end of the grid, ``minus_*`` at -infinity from the left end.
    """
    if kind not in KINDS:
        raise ParameterError(f"unknown Jost kind {kind!r}; expected one of {KINDS}")
    k = complex(k)
    upper = kind in ("plus_col1", "minus_col2")
    if (upper and k.imag < 0) or (not upper and k.imag > 0):
        half = "upper" if upper else "lower"
        raise ParameterError(f"{kind} is analytic only in the closed {half} half-plane; got k = {k}")
    u1, u2 = _gauss_samples(U)
    n = U.n
    x = U.x
    col = 0 if kind.endswith("col1") else 1
    if kind.startswith("plus"):
        E = _step_matrices(k, u2, u1, -U.dx)  # backward: Gauss points swap roles
        x_start = U.xmax
        order = range(n - 2, -1, -1)
    else:
        E = _step_matrices(k, u1, u2, U.dx)
        x_start = U.x0
        order = range(0, n - 1)
    v = (0.0, np.exp(1j * k * x_start)) if col == 0 else (np.exp(-1j * k * x_start), 0.0)
    out = np.empty((2, n), dtype=complex)
    e = E.tolist()
    p, q = complex(v[0]), complex(v[1])
    if kind.startswith("plus"):
        out[:, n - 1] = p, q
        for i in order:
            (m00, m01), (m10, m11) = e[i]
            p, q = m00 * p + m01 * q, m10 * p + m11 * q
            out[0, i], out[1, i] = p, q
    else:
        out[:, 0] = p, q
        for i in order:
            (m00, m01), (m10, m11) = e[i]
            p, q = m00 * p + m01 * q, m10 * p + m11 * q
            out[0, i + 1], out[1, i + 1] = p, q
    return JostField(kind, k, x, out)


def bound_state(U: GridPotential, kappa: complex):
    """Right Jost solution at a bound state, accurate on the whole grid.

    Integrating ``plus_col1`` past its peak excites the growing solution, so
    left of the peak the left Jost solution divided by ``mu`` is used.
    Returns ``(field, mu)``.
    """
    fp = jost_solve(U, kappa, "plus_col1")
    fm = jost_solve(U, kappa, "minus_col2")
    prod = np.linalg.norm(fp.samples, axis=0) * np.linalg.norm(fm.samples, axis=0)
    i = int(np.argmax(prod))
    c = int(np.argmax(np.abs(fp.samples[:, i])))
    mu = fm.samples[c, i] / fp.samples[c, i]
    out = fp.samples.copy()
    out[:, :i] = fm.samples[:, :i] / mu
    return JostField("plus_col1", fp.k, fp.x, out), complex(mu)


def jost_neumann(U: GridPotential, k: complex, tol: float = 1e-14, max_terms: int = 400) -> JostField:
    """``plus_col1`` Jost solution by Neumann iteration of its Volterra equation.

    Independent of :func:`jost_solve`; used as a cross-check.  Integrals are
    cumulative Simpson from the right end, so accuracy is O(dx^4).
    """
    k = complex(k)
    x = U.x
    w = 2.0 * U.values
    ep, em = np.exp(1j * k * x), np.exp(-1j * k * x)

    def tail(f):
        # int_x^xmax f dx' for every grid x
        g = f[::-1]
        r = cumulative_simpson(g.real, dx=U.dx, initial=0.0) \
            + 1j * cumulative_simpson(g.imag, dx=U.dx, initial=0.0)
        return r[::-1]

    term = np.array([np.zeros_like(ep), ep])
    total = term.copy()
    for _ in range(max_terms):
        t1 = -em * tail(ep * w * term[1])
        t2 = ep * tail(em * w * term[0])
        term = np.array([t1, t2])
        total += term
        if np.max(np.abs(term)) < tol * max(1.0, np.max(np.abs(total))):
            return JostField("plus_col1", k, x, total)
    raise ConvergenceError("Neumann series did not converge", float(np.max(np.abs(term))))


def wronskian(f: JostField, g: JostField):
    """Per-node Wronskian f1 g2 - f2 g1 and its max deviation from the grid mean."""
    if f.x.shape != g.x.shape or not np.allclose(f.x, g.x, rtol=0, atol=1e-12):
        raise StructuralError("Jost fields live on different grids")
    w = f.phi1 * g.phi2 - f.phi2 * g.phi1
    return w, float(np.max(np.abs(w - w.mean())))


def ode_residual(field: JostField, U: GridPotential) -> float:
    """Max residual of the first-order system, derivatives by 4th-order differences.

    The two nodes at each end use one-sided stencils and are excluded.
    """
    from ._numerics import fd4_derivative
    h = field.x[1] - field.x[0]
    p1, p2 = field.phi1, field.phi2
    d1, d2 = fd4_derivative(p1, h), fd4_derivative(p2, h)
    uu = np.interp(field.x, U.x, U.values)
    r1 = d1 - (-1j * field.k * p1 + 2 * uu * p2)
    r2 = d2 - (1j * field.k * p2 - 2 * uu * p1)
    return float(np.max(np.abs(np.concatenate([r1[2:-2], r2[2:-2]]))))


# ------------------------------------------------------------------ coefficients

def scattering_coefficients(U: GridPotential, k_grid, unitarity_tol: float = UNITARITY_TOL,
                            conv_tol: float = 1e-6, check_decay: bool = True) -> ScatteringReport:
    """a(k), b(k) on a grid of real nonzero k.

    ``a`` is normalized to 1 for the free operator; ``b`` is the coefficient
    of the right Jost solution growing like e^{ikx} in the left one.
    """
    k = np.asarray(k_grid, dtype=float)
    if np.any(k == 0):
        raise ParameterError("k = 0 is not allowed on the scattering grid")
    if check_decay:
        U.check_decay()
    P = _propagator(U, k)
    a, b = _a_b_from_propagator(P, U, k)
    unit = float(np.max(np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1))) if k.size else 0.0
    if unit > unitarity_tol:
        raise ConvergenceError(f"unitarity violated by {unit:.3g}", unit)
    err = 0.0
    if (U.n - 1) % 2 == 0 and k.size:
        a2, b2 = _a_b_from_propagator(_propagator(U, k, coarse=True), U, k)
        err = float(max(np.max(np.abs(a - a2)), np.max(np.abs(b - b2)))) / 15.0
        if err > conv_tol:
            raise ConvergenceError(f"integrator error estimate {err:.3g} exceeds {conv_tol:g}", err)
    return ScatteringReport(k, a, b, [], unit, err)


def default_k_grid(kmax: float = 8.0, dk: float = 0.02) -> np.ndarray:
    """Symmetric grid of nonzero k (offset by dk/2 from the origin)."""
    m = int(round(kmax / dk))
    pos = dk * (np.arange(m) + 0.5)
    return np.concatenate([-pos[::-1], pos])


# ------------------------------------------------------------------ discrete spectrum

def _a_derivative(U, kap, h=FD_STEP):
    a = transmission_a(U, np.array([kap + h, kap - h]))
    return (a[0] - a[1]) / (2 * h)


def _winding(U, box, per_edge=400, max_refine=12):
    """Zero count of a(k) inside the rectangle by the argument principle."""
    x0, x1, y0, y1 = box
    t = np.linspace(0, 1, per_edge, endpoint=False)
    pts = np.concatenate([x0 + (x1 - x0) * t + 1j * y0,
                          x1 + 1j * (y0 + (y1 - y0) * t),
                          x1 - (x1 - x0) * t + 1j * y1,
                          x0 + 1j * (y1 - (y1 - y0) * t)])
    pts = np.append(pts, pts[0])
    vals = transmission_a(U, pts)
    for _ in range(max_refine):
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.flatnonzero(np.abs(dphi) > np.pi / 4)
        if bad.size == 0:
            break
        mids = 0.5 * (pts[bad] + pts[bad + 1])
        mvals = transmission_a(U, mids)
        pts = np.insert(pts, bad + 1, mids)
        vals = np.insert(vals, bad + 1, mvals)
    if np.min(np.abs(vals)) < 1e-12:
        raise ConvergenceError("a(k) vanishes on the search-box boundary")
    total = np.sum(np.angle(vals[1:] / vals[:-1])) / (2 * np.pi)
    return total


def _newton(U, k0, tol=ROOT_TOL, maxit=60):
    k = complex(k0)
    for _ in range(maxit):
        a = transmission_a(U, k)[0]
        da = _a_derivative(U, k)
        if not np.isfinite(da) or abs(da) < DERIVATIVE_FLOOR:
            break
        step = a / da
        k -= step
        if k.imag <= 0:
            break
        if abs(step) < tol:
            return k, True
    return k, False


def default_search_box(U: GridPotential):
    m = 2 * float(np.max(np.abs(U.values))) + 0.5
    return (-m, m, 0.02, m)


def discrete_spectrum(U: GridPotential, search_box=None, root_tol: float = ROOT_TOL,
                      sym_tol: float = SYM_TOL, n_axis: int = 600, n_grid: int = 24):
    """Bound states inside ``search_box = (re_min, re_max, im_min, im_max)``.

    Returns a list of ``(kappa, gamma, mu, lambda)`` with ``gamma = 1/a'(kappa)``
    the residue of T, ``mu`` the ratio of the left and right decaying Jost
    solutions, and ``lambda = i gamma mu``.
    """
    U.check_decay()
    box = default_search_box(U) if search_box is None else tuple(search_box)
    full = U
    if (U.n - 1) % 4 == 0 and U.dx < 1.0 / 32:
        # locate on a decimated grid, polish on the full one
        U = GridPotential(U.x0, 4 * U.dx, U.values[::4])
    count = _winding(U, box)
    n_expected = int(round(count))
    if abs(count - n_expected) > 0.05:
        raise ConvergenceError(f"argument principle gave non-integer count {count:.4f}")
    if n_expected == 0:
        return []
    roots = []
    # imaginary axis: a(i eta) is real for real potentials
    if box[0] < 0 < box[1]:
        eta = np.linspace(box[2], box[3], n_axis)
        av = transmission_a(U, 1j * eta).real
        f = lambda e: transmission_a(U, 1j * e)[0].real  # noqa: E731
        for i in np.flatnonzero(np.sign(av[:-1]) * np.sign(av[1:]) < 0):
            roots.append(1j * brentq(f, eta[i], eta[i + 1], xtol=1e-12))
    # off-axis pairs: Newton from local minima of |a| on a coarse grid
    re_lo = max(box[0], 0.0) + 1e-3 * (box[1] - box[0])
    if box[1] > re_lo:
        gx = np.linspace(re_lo, box[1], n_grid)
        gy = np.linspace(box[2], box[3], n_grid)
        G = gx[None, :] + 1j * gy[:, None]
        A = np.abs(transmission_a(U, G.ravel())).reshape(G.shape)
        Ap = np.pad(A, 1, constant_values=np.inf)
        core = Ap[1:-1, 1:-1]
        is_min = np.ones_like(core, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    is_min &= core <= Ap[1 + di:Ap.shape[0] - 1 + di, 1 + dj:Ap.shape[1] - 1 + dj]
        for i, j in zip(*np.nonzero(is_min)):
            k, ok = _newton(U, G[i, j], 1e-8)
            if ok and box[0] <= k.real <= box[1] and box[2] <= k.imag <= box[3] and k.real > 1e-6:
                if all(abs(k - r) > 1e-6 for r in roots):
                    roots.append(k)
                    roots.append(-np.conj(k))
    roots = sorted(roots, key=lambda z: (round(z.imag, 8), z.real))
    if len(roots) != n_expected:
        raise ConvergenceError(
            f"incomplete spectrum: argument principle counts {n_expected} zeros, found {len(roots)}")
    U = full
    polished = []
    for kap in roots:
        k, ok = _newton(U, kap, root_tol)
        if not ok:
            raise ConvergenceError(f"Newton polish failed near {kap}", abs(k - kap))
        polished.append(1j * k.imag if kap.real == 0 else k)
    roots = polished
    out = []
    for kap in roots:
        da = _a_derivative(U, kap)
        if abs(da) < DERIVATIVE_FLOOR:
            raise ConvergenceError(f"degenerate pole at {kap}: |a'| = {abs(da):.3g}")
        gamma = 1.0 / da
        _, mu = bound_state(U, kap)
        out.append((kap, gamma, mu, 1j * gamma * mu))
    for kap, *_ in out:
        mirror = -np.conj(kap)
        if min(abs(mirror - o[0]) for o in out) > sym_tol:
            raise ConvergenceError(f"spectrum not symmetric: no mirror for {kap}")
    return out


# ------------------------------------------------------------------ table I/O

def save_potential_table(U: GridPotential, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,U\n")
        for x, u in zip(U.x, U.values):
            fh.write(f"{float(x)!r},{float(u)!r}\n")


def load_potential_table(path) -> GridPotential:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.replace(",", " ").replace(";", " ").split()
            try:
                rows.append([float(p) for p in parts[:2]])
            except ValueError:
                if rows:
                    raise StructuralError(f"{path}:{lineno}: non-numeric entry") from None
    arr = np.asarray(rows)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] != 2:
        raise StructuralError(f"{path}: expected at least two rows of 'x, U'")
    dx = np.diff(arr[:, 0])
    if np.any(dx <= 0) or np.max(np.abs(dx - dx.mean())) > 1e-9 * max(1.0, abs(dx.mean())):
        raise StructuralError(f"{path}: x column must be uniformly increasing")
    return GridPotential(arr[0, 0], float(dx.mean()), arr[:, 1])
