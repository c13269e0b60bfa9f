"""Inverse-scattering spectral data: model, validation, mKdV flows, file I/O.

A data set consists of the upper-half-plane poles ``kappa_j`` of the
transmission coefficient, one norming constant ``lambda_j`` per pole and an
optional sampled reflection coefficient ``R(k)``.  The reality conditions for
a real potential are

* R1: the pole set is symmetric under ``kappa -> -conj(kappa)``; mirror
  poles carry conjugate norming constants; a pole on the imaginary axis has a
  real norming constant;
* R2: ``R(-k) = conj(R(k))``.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, SpectralParseError, StructuralError

HEADER = "solitonspec v1"
EPS_REAL_EXACT = 1e-12
EPS_REAL_NUMERIC = 1e-8
POLE_SEPARATION = 1e-10


@dataclass(frozen=True)
class ReflectionTable:
    """Samples ``R(k)`` on a sorted grid of nonzero real ``k``."""

    k: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        r = np.asarray(self.values, dtype=complex)
        if k.ndim != 1 or k.shape != r.shape:
            raise StructuralError("reflection table needs matching 1-D k and R arrays")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", r)

    def __eq__(self, other):
        if not isinstance(other, ReflectionTable):
            return NotImplemented
        return np.array_equal(self.k, other.k) and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class SpectralData:
    """Poles, norming constants and (optionally) a sampled reflection coefficient."""

    poles: tuple
    normings: tuple
    reflection: ReflectionTable | None = None

    def __post_init__(self):
        poles = tuple(complex(p) for p in np.atleast_1d(np.asarray(self.poles, dtype=complex)))
        norms = tuple(complex(v) for v in np.atleast_1d(np.asarray(self.normings, dtype=complex)))
        if len(poles) != len(norms):
            raise StructuralError(
                f"{len(poles)} poles but {len(norms)} norming constants")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "normings", norms)

    @property
    def n(self) -> int:
        return len(self.poles)

    @property
    def kappa(self) -> np.ndarray:
        return np.array(self.poles, dtype=complex)

    @property
    def lam(self) -> np.ndarray:
        return np.array(self.normings, dtype=complex)

    @property
    def reflectionless(self) -> bool:
        return self.reflection is None

    @classmethod
    def empty(cls) -> "SpectralData":
        return cls((), ())


@dataclass(frozen=True)
class HalfIntegerLevel:
    """Pole ``i(2n+1)/2`` whose eigenfunctions are antiperiodic on the cylinder."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ParameterError("level index must be a nonnegative integer")

    @property
    def kappa(self) -> complex:
        return 0.5j * (2 * self.n + 1)

    @classmethod
    def from_pole(cls, kappa: complex, tol: float = 1e-9):
        """Return the level for ``kappa`` or ``None`` if it is not one."""
        kappa = complex(kappa)
        if abs(kappa.real) > tol:
            return None
        m = 2 * kappa.imag - 1
        n = round(m / 2)
        if n >= 0 and abs(m - 2 * n) <= 2 * tol:
            return cls(int(n))
        return None


@dataclass(frozen=True)
class Violation:
    rule: str
    index: int | None
    residual: float
    message: str

    def __str__(self):
        where = "" if self.index is None else f" [index {self.index}]"
        return f"{self.rule}{where}: {self.message} (residual {self.residual:.3g})"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.valid

    def __str__(self):
        if self.valid:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


def validate(data: SpectralData, eps_real: float = EPS_REAL_EXACT) -> ValidationReport:
    """Check the reality conditions and structural invariants of ``data``.

    Returns an empty report for valid data.  Structural problems (list
    length mismatch) are raised at construction time as ``StructuralError``.
    """
    out = []
    kap, lam = data.kappa, data.lam
    for j, (k, l) in enumerate(zip(kap, lam)):
        if not k.imag > 0:
            out.append(Violation("upper-half-plane", j, float(-k.imag),
                                 "Im kappa must be positive"))
        if l == 0:
            out.append(Violation("nonzero-norming", j, 0.0,
                                 "lambda = 0 deletes the bound state"))
    for j in range(len(kap)):
        for m in range(j + 1, len(kap)):
            d = abs(kap[j] - kap[m])
            if d <= POLE_SEPARATION:
                out.append(Violation("simple-poles", j, float(d),
                                     f"pole coincides with pole {m}"))
    used = set()
    for j, k in enumerate(kap):
        if abs(k.real) <= eps_real:
            r = abs(lam[j].imag)
            if r > eps_real * max(1.0, abs(lam[j])):
                out.append(Violation("R1", j, float(r), "Re kappa = 0 requires lambda real"))
            continue
        if j in used:
            continue
        mirror = -np.conj(k)
        dist = np.abs(kap - mirror)
        dist[j] = np.inf
        m = int(np.argmin(dist)) if len(kap) > 1 else None
        if m is None or dist[m] > eps_real * max(1.0, abs(k)):
            res = float(dist[m]) if m is not None else float(abs(k.real))
            out.append(Violation("R1", j, res, "pole set not symmetric under kappa -> -conj(kappa)"))
            continue
        used.update((j, m))
        r = abs(lam[j] - np.conj(lam[m]))
        if r > eps_real * max(1.0, abs(lam[j])):
            out.append(Violation("R1", j, float(r),
                                 f"mirror poles {j},{m} need conjugate norming constants"))
    if data.reflection is not None:
        out.extend(_check_reflection(data.reflection, eps_real))
    return ValidationReport(out)


def _check_reflection(tab: ReflectionTable, eps_real: float) -> list:
    out = []
    k, r = tab.k, tab.values
    if np.any(k == 0):
        out.append(Violation("reflection-grid", int(np.flatnonzero(k == 0)[0]), 0.0,
                             "k = 0 is not allowed"))
    if np.any(np.diff(k) <= 0):
        out.append(Violation("reflection-grid", None, 0.0, "k must be strictly increasing"))
        return out
    # R2 on the mirrored nodes present in the table
    idx = np.searchsorted(k, -k)
    idx = np.clip(idx, 0, len(k) - 1)
    paired = np.abs(k[idx] + k) <= 1e-12 * np.maximum(1.0, np.abs(k))
    if not np.all(paired):
        j = int(np.flatnonzero(~paired)[0])
        out.append(Violation("R2", j, float(abs(k[j])),
                             "reflection grid must be symmetric in k"))
        return out
    res = np.abs(r[idx] - np.conj(r))
    scale = max(1.0, float(np.max(np.abs(r)))) if len(r) else 1.0
    bad = res > eps_real * scale
    if np.any(bad):
        j = int(np.argmax(res))
        out.append(Violation("R2", j, float(res[j]), "R(-k) must equal conj(R(k))"))
    return out


def mkdv_deform(data: SpectralData, m: int, t: float) -> SpectralData:
    """Evolve the data along the ``m``-th mKdV flow for time ``t``.

    Poles are preserved; norming constants pick up
    ``exp(i 2^(2m-1) kappa_j t)`` and the reflection coefficient
    ``exp(i 2^(2m-1) k t)``.
    """
    if int(m) != m or m < 1:
        raise ParameterError("flow index m must be a positive integer")
    c = 2.0 ** (2 * m - 1) * float(t)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        lam = data.lam * np.exp(1j * c * data.kappa)
    if not np.all(np.isfinite(lam)) or np.any((lam == 0) & (data.lam != 0)):
        raise ParameterError(
            f"flow time t = {t:g} at m = {m} takes a norming constant outside double precision"
            f" (|exponent| up to {np.max(np.abs(c * data.kappa.imag)):.3g})")
    refl = None
    if data.reflection is not None:
        tab = data.reflection
        refl = ReflectionTable(tab.k, tab.values * np.exp(1j * c * tab.k))
    return SpectralData(data.poles, tuple(lam), refl)


# ---------------------------------------------------------------- file I/O

def _fmt(v: float) -> str:
    return repr(float(v))


def save(data: SpectralData, path, table_path=None) -> None:
    """Write ``data`` in the line-oriented ``solitonspec v1`` format.

    A reflection table is written next to ``path`` (``<stem>.refl.csv``)
    unless ``table_path`` is given; the reference is stored relative to the
    spectral file.
    """
    path = Path(path)
    lines = [HEADER]
    for k, l in zip(data.poles, data.normings):
        lines.append(f"pole {_fmt(k.real)} {_fmt(k.imag)} lambda {_fmt(l.real)} {_fmt(l.imag)}")
    if data.reflection is None:
        lines.append("reflection none")
    else:
        tpath = Path(table_path) if table_path else path.with_suffix(".refl.csv")
        save_reflection_table(data.reflection, tpath)
        rel = os.path.relpath(tpath, path.parent)
        lines.append(f"reflection table {rel}")
    path.write_text("\n".join(lines) + "\n")


def save_reflection_table(tab: ReflectionTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re_R", "im_R"])
        for k, r in zip(tab.k, tab.values):
            w.writerow([_fmt(k), _fmt(r.real), _fmt(r.imag)])


def load_reflection_table(path) -> ReflectionTable:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.replace(",", " ").replace(";", " ").replace("\t", " ").split()
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                if not rows:  # header line
                    continue
                raise SpectralParseError(f"non-numeric entry in {path}", lineno)
            if len(vals) != 3:
                raise SpectralParseError(f"expected 3 columns (k, Re R, Im R), got {len(vals)}", lineno)
            rows.append(vals)
    if not rows:
        raise SpectralParseError(f"reflection table {path} is empty")
    arr = np.array(rows)
    if np.any(np.diff(arr[:, 0]) <= 0):
        raise SpectralParseError(f"reflection table {path} must be sorted ascending in k")
    return ReflectionTable(arr[:, 0], arr[:, 1] + 1j * arr[:, 2])


def load(path) -> SpectralData:
    """Parse a ``solitonspec v1`` file; raises ``SpectralParseError`` with line numbers."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    poles, norms = [], []
    refl = None
    seen_header = seen_reflection = False
    for lineno, raw in enumerate(lines, 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if not seen_header:
            if s != HEADER:
                raise SpectralParseError(f"expected header '{HEADER}'", lineno)
            seen_header = True
            continue
        if seen_reflection:
            raise SpectralParseError("content after the reflection line", lineno)
        tok = s.split()
        if tok[0] == "pole":
            if len(tok) != 6 or tok[3] != "lambda":
                raise SpectralParseError(
                    "pole line must read 'pole <Re k> <Im k> lambda <Re l> <Im l>'", lineno)
            try:
                kr, ki, lr, li = (float(tok[i]) for i in (1, 2, 4, 5))
            except ValueError:
                raise SpectralParseError("non-numeric value on pole line", lineno) from None
            if not ki > 0:
                raise SpectralParseError("Im kappa must be positive (upper-half-plane condition)", lineno)
            poles.append(complex(kr, ki))
            norms.append(complex(lr, li))
        elif tok[0] == "reflection":
            seen_reflection = True
            if tok[1:] == ["none"]:
                refl = None
            elif len(tok) >= 3 and tok[1] == "table":
                tpath = Path(" ".join(tok[2:]))
                if not tpath.is_absolute():
                    tpath = path.parent / tpath
                refl = load_reflection_table(tpath)
            else:
                raise SpectralParseError("reflection line must be 'none' or 'table <path>'", lineno)
        else:
            raise SpectralParseError(f"unknown record '{tok[0]}'", lineno)
    if not seen_header:
        raise SpectralParseError("empty file", 1)
    if not seen_reflection:
        raise SpectralParseError("missing trailing 'reflection' line", len(lines))
    return SpectralData(tuple(poles), tuple(norms), refl)
