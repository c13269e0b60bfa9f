"""Kruskal integrals of the mKdV hierarchy and their trace-formula values."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import smooth_window
from .errors import ParameterError, ValidationError
from .scattering import GridPotential, ScatteringReport
from .spectral_data import SpectralData

N_MAX = 8


def _spectral_setup(U: GridPotential, margin: float = 4.0):
    """Windowed samples and the filtered wavenumber vector for FFT derivatives."""
    x = U.x
    c = 0.5 * (x[0] + x[-1])
    half = 0.5 * (x[-1] - x[0])
    win = smooth_window(x - c, max(half - margin, 0.5 * half), half)
    n = U.n
    w = 2 * np.pi * np.fft.fftfreq(n, d=U.dx)
    wmax = np.pi / U.dx
    # smooth exponential filter; leaves the resolved band untouched
    filt = np.exp(-36.0 * (np.abs(w) / wmax) ** 24)
    return U.values * win, w, filt


def _deriv(f: np.ndarray, w: np.ndarray, filt: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(f) * (1j * w) * filt)


def q_sequence(U: GridPotential, n: int) -> list:
    """q_1 = U, q_{j+1} = -i q_j' - 4U sum_{m=1}^{j-1} q_m q_{j-m}."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    if n > N_MAX:
        raise ParameterError(f"n > {N_MAX} is not supported (derivative noise amplification)")
    u, w, filt = _spectral_setup(U)
    q = [u.astype(complex)]
    for j in range(1, n):
        conv = sum(q[m - 1] * q[j - m - 1] for m in range(1, j)) if j > 1 else 0.0
        q.append(-1j * _deriv(q[j - 1], w, filt) - 4 * u * conv)
    return q


def kruskal_integral(U: GridPotential, n: int) -> complex:
    """I_n = int U q_n dx (trapezoid on the decaying integrand)."""
    q = q_sequence(U, n)[-1]
    u, _, _ = _spectral_setup(U)
    return complex(np.trapezoid(u * q, dx=U.dx))


def kruskal_integrals(U: GridPotential, n_max: int) -> np.ndarray:
    qs = q_sequence(U, n_max)
    u, _, _ = _spectral_setup(U)
    return np.array([np.trapezoid(u * q, dx=U.dx) for q in qs])


def discrete_term(kappa, n: int) -> complex:
    """(i 2^{n-2} / n) sum_j (conj(kappa_j)^n - kappa_j^n)."""
    kap = np.asarray(kappa, dtype=complex)
    return complex(1j * 2.0 ** (n - 2) / n * np.sum(np.conj(kap) ** n - kap ** n))


def _b_squared(source):
    if isinstance(source, ScatteringReport):
        return np.asarray(source.k, dtype=float), np.abs(np.asarray(source.b)) ** 2
    if source.reflection is None:
        return None, None
    k = np.asarray(source.reflection.k, dtype=float)
    r2 = np.abs(np.asarray(source.reflection.values)) ** 2
    return k, r2 / (1.0 + r2)


def trace_rhs(source, n: int) -> complex:
    """Trace-formula value of I_n from spectral data or a scattering report.

    -(1/4pi) int log(1 - |b|^2) (-2k)^{n-1} dk + (i 2^{n-2}/n) sum (conj(kappa)^n - kappa^n)

    For a report the poles are taken from ``report.discrete``; reflectionless
    data drops the integral.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if isinstance(source, ScatteringReport):
        kappa = [d[0] for d in source.discrete]
    elif isinstance(source, SpectralData):
        kappa = source.kappa
    else:
        raise TypeError("expected SpectralData or ScatteringReport")
    val = discrete_term(kappa, n)
    k, b2 = _b_squared(source)
    if k is not None:
        if np.any(b2 >= 1.0):
            raise ValidationError("|b(k)| >= 1 on the grid: not valid scattering data")
        f = np.log1p(-b2) * (-2.0 * k) ** (n - 1)
        val += -np.trapezoid(f, k) / (4 * np.pi)
    return complex(val)


@dataclass
class KruskalReport:
    n_max: int
    I: np.ndarray
    I_trace: np.ndarray

    @property
    def residuals(self) -> np.ndarray:
        return np.abs(self.I - self.I_trace)

    @property
    def realness_flags(self) -> list:
        """Indices n whose quadrature value has |Im I_n| >= 1e-10."""
        return [n + 1 for n, v in enumerate(self.I) if abs(v.imag) >= 1e-10]

    def to_dict(self) -> dict:
        return {
            "n_max": self.n_max,
            "I": [[float(v.real), float(v.imag)] for v in self.I],
            "I_trace": [[float(v.real), float(v.imag)] for v in self.I_trace],
            "residuals": [float(r) for r in self.residuals],
            "imaginary_flags": self.realness_flags,
        }


def kruskal_report(U: GridPotential, source, n_max: int = 4) -> KruskalReport:
    I = kruskal_integrals(U, n_max)
    It = np.array([trace_rhs(source, n) for n in range(1, n_max + 1)])
    return KruskalReport(n_max, I, It)
