"""Small numerical kernels used across modules."""
from __future__ import annotations

import numpy as np
from numpy.polynomial import legendre


def fd4_derivative(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Fourth-order central first derivative along ``axis``.

    The two nodes at each end fall back to one-sided fourth-order stencils.
    """
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    if n < 5:
        raise ValueError("need at least 5 nodes for a 4th-order stencil")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return np.moveaxis(d, 0, axis)


def fd4_second_derivative(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Fourth-order central second derivative (one-sided at the ends)."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    if n < 6:
        raise ValueError("need at least 6 nodes for a 4th-order stencil")
    d = np.empty_like(f)
    d[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
    c = np.array([45, -154, 214, -156, 61, -10]) / (12 * h * h)
    d[0] = np.tensordot(c, f[:6], axes=1)
    d[-1] = np.tensordot(c, f[::-1][:6], axes=1)
    c1 = np.array([10, -15, -4, 14, -6, 1]) / (12 * h * h)
    d[1] = np.tensordot(c1, f[:6], axes=1)
    d[-2] = np.tensordot(c1, f[::-1][:6], axes=1)
    return np.moveaxis(d, 0, axis)


def fd6_derivative(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Sixth-order central first derivative; 4th-order stencils at the 3 end nodes."""
    d = np.moveaxis(fd4_derivative(f, h, axis), axis, 0)
    g = np.moveaxis(np.asarray(f), axis, 0)
    if g.shape[0] >= 7:
        d[3:-3] = (-g[:-6] + 9 * g[1:-5] - 45 * g[2:-4] + 45 * g[4:-2] - 9 * g[5:-1] + g[6:]) / (60 * h)
        d[2] = (g[0] - 8 * g[1] + 8 * g[3] - g[4]) / (12 * h)
        d[-3] = (g[-5] - 8 * g[-4] + 8 * g[-2] - g[-1]) / (12 * h)
    return np.moveaxis(d, 0, axis)


def fd6_second_derivative(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Sixth-order central second derivative; lower order at the 3 end nodes."""
    d = np.moveaxis(fd4_second_derivative(f, h, axis), axis, 0)
    g = np.moveaxis(np.asarray(f), axis, 0)
    if g.shape[0] >= 7:
        d[3:-3] = (2 * g[:-6] - 27 * g[1:-5] + 270 * g[2:-4] - 490 * g[3:-3] + 270 * g[4:-2]
                   - 27 * g[5:-1] + 2 * g[6:]) / (180 * h * h)
    return np.moveaxis(d, 0, axis)


def periodic_derivative(f: np.ndarray, period: float, order: int = 1, axis: int = -1) -> np.ndarray:
    """Spectral derivative of samples of a periodic function on a uniform grid."""
    f = np.asarray(f)
    n = f.shape[axis]
    w = 2 * np.pi / period * np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0 and order % 2 == 1:
        w[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    mult = (1j * w).reshape(shape) ** order
    out = np.fft.ifft(np.fft.fft(f, axis=axis) * mult, axis=axis)
    return out.real if np.isrealobj(f) else out


def periodic_cumulative_integral(f: np.ndarray, period: float, axis: int = -1):
    """Integrate periodic samples from the first node, spectrally.

    Returns ``(F, mean)`` where ``F`` is the integral of the zero-mean part,
    vanishing at the first node, and ``mean`` is the per-line average of
    ``f``; the full primitive is ``F + mean * (y - y0)``.
    """
    f = np.asarray(f)
    n = f.shape[axis]
    c = np.fft.fft(f, axis=axis)
    w = 2 * np.pi / period * np.fft.fftfreq(n, d=1.0 / n)
    inv = np.zeros_like(w, dtype=complex)
    nz = w != 0
    if n % 2 == 0:
        nz[n // 2] = False
    inv[nz] = 1.0 / (1j * w[nz])
    shape = [1] * f.ndim
    shape[axis] = n
    mean = np.take(c, [0], axis=axis) / n
    F = np.fft.ifft(c * inv.reshape(shape), axis=axis)
    F = F - np.take(F, [0], axis=axis)
    if np.isrealobj(f):
        F, mean = F.real, mean.real
    return F, mean


def lobatto_rule(n: int):
    """Gauss-Lobatto-Legendre nodes and weights on [-1, 1]."""
    if n < 2:
        raise ValueError("Lobatto rule needs n >= 2")
    cpn = np.zeros(n)
    cpn[-1] = 1.0
    inner = legendre.legroots(legendre.legder(cpn)) if n > 2 else np.array([])
    x = np.concatenate(([-1.0], np.sort(inner.real), [1.0]))
    p = legendre.legval(x, cpn)
    w = 2.0 / (n * (n - 1) * p * p)
    return x, w


def composite_lobatto(a: float, b: float, panels: int, order: int):
    """Composite Lobatto rule on [a, b] with shared panel endpoints."""
    xr, wr = lobatto_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xr[None, :])
    weights = half[:, None] * wr[None, :]
    x = np.concatenate([nodes[0]] + [p[1:] for p in nodes[1:]])
    w = np.zeros(len(x))
    pos = 0
    for i in range(panels):
        w[pos:pos + order] += weights[i]
        pos += order - 1
    return x, w


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


def smooth_window(x: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """C-infinity window: 1 for |x| <= inner, 0 for |x| >= outer."""
    x = np.abs(np.asarray(x, dtype=float))
    t = np.clip((x - inner) / (outer - inner), 0.0, 1.0)

    def g(s):
        out = np.zeros_like(s)
        m = s > 0
        out[m] = np.exp(-1.0 / s[m])
        return out

    return g(1 - t) / (g(1 - t) + g(t))
