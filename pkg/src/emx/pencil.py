"""Matrix-pencil stability analysis for descriptor systems ``E x' = A x + B``.

The characteristic polynomial ``det(A - sE)`` is recovered by sampling the
determinant on a circle and interpolating, so the number of finite
eigenvalues falls out of its degree and the remainder are infinite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

STABILITY_TOL = 1e-8
WELL_DAMPED_ZETA = 0.05
COEF_RTOL = 1e-9
DEFINITE_TOL = 1e-10


class PencilKind(str, enum.Enum):
    REGULAR = "Regular"
    SINGULAR = "Singular"


class ModeKind(str, enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"


class Verdict(str, enum.Enum):
    ASYMPTOTICALLY_STABLE = "AsymptoticallyStable"
    MARGINAL = "Marginal"
    UNSTABLE = "Unstable"


class SingularPencilError(ValueError):
    pass


class UndefinedMetricsError(ValueError):
    """Damping ratio and natural frequency do not exist for a zero eigenvalue."""


class NotHurwitzError(ValueError):
    pass


@dataclass(frozen=True)
class PencilClass:
    kind: PencilKind
    char_poly: np.ndarray | None = None

    @property
    def degree(self) -> int:
        if self.char_poly is None:
            return -1
        return len(self.char_poly) - 1


@dataclass(frozen=True)
class EigenMode:
    value: complex
    kind: ModeKind
    damping: float | None = None
    natural_freq: float | None = None
    right_vec: np.ndarray | None = None
    left_vec: np.ndarray | None = None

    def to_dict(self) -> dict:
        finite = self.kind is ModeKind.FINITE
        return {
            "re": float(self.value.real) if finite else None,
            "im": float(self.value.imag) if finite else None,
            "kind": self.kind.value,
            "zeta": self.damping,
            "fn": self.natural_freq,
        }


@dataclass(frozen=True)
class SpectrumReport:
    modes: tuple[EigenMode, ...]
    n_finite: int
    n_infinite: int
    verdict: Verdict
    well_damped: bool

    @property
    def finite(self) -> np.ndarray:
        return np.array([md.value for md in self.modes if md.kind is ModeKind.FINITE], dtype=complex)

    def to_dict(self) -> dict:
        return {
            "modes": [md.to_dict() for md in self.modes],
            "p": self.n_finite,
            "q": self.n_infinite,
            "verdict": self.verdict.value,
            "well_damped": self.well_damped,
        }


def _as_pair(E, A) -> tuple[np.ndarray, np.ndarray]:
    E = np.atleast_2d(np.asarray(E, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if E.shape != A.shape:
        raise ValueError(f"E and A must have the same shape, got {E.shape} and {A.shape}")
    return E, A


def _sample_radius(E: np.ndarray, A: np.ndarray) -> float:
    ne, na = np.linalg.norm(E), np.linalg.norm(A)
    if ne == 0 or na == 0:
        return 1.0
    return float(na / ne)


def classify_pencil(E, A) -> PencilClass:
    """Decide regular vs singular and recover the characteristic polynomial.

    ``char_poly`` holds ``det(A - sE)`` in ascending powers of ``s``; it
    differs from ``det(sE - A)`` only by the sign ``(-1)^r``.

    The determinant is evaluated at ``r + 1`` equally spaced points on a
    circle of radius ``rho ~ |A|/|E|``; a discrete Fourier transform turns
    the samples into the coefficients of the degree-``r`` polynomial.
    Coefficients whose scaled size ``|c_j| rho^j`` falls below
    ``1e-9`` of the largest are treated as exact zeros.
    """
    E, A = _as_pair(E, A)
    r, cols = E.shape
    if r != cols:
        return PencilClass(PencilKind.SINGULAR)
    rho = _sample_radius(E, A)
    npts = r + 1
    s = rho * np.exp(2j * np.pi * np.arange(npts) / npts)
    dets = np.array([np.linalg.det(A - sk * E) for sk in s])
    scale = (rho * np.linalg.norm(E, 2) + np.linalg.norm(A, 2)) ** r
    if scale == 0 or np.max(np.abs(dets)) <= 1e-10 * scale:
        return PencilClass(PencilKind.SINGULAR)
    scaled = np.fft.fft(dets) / npts
    scaled = scaled.real
    scaled[np.abs(scaled) < COEF_RTOL * np.max(np.abs(scaled))] = 0.0
    nz = np.flatnonzero(scaled)
    deg = int(nz[-1])
    coef = scaled[:deg + 1] / rho ** np.arange(deg + 1)
    coef.setflags(write=False)
    return PencilClass(PencilKind.REGULAR, coef)


def mode_metrics(lam: complex) -> tuple[float, float]:
    """Damping ratio ``-Re/|lam|`` and natural frequency ``|lam|/(2 pi)`` in Hz."""
    lam = complex(lam)
    mag = abs(lam)
    if mag == 0:
        raise UndefinedMetricsError("damping ratio and natural frequency are undefined at lambda = 0")
    return -lam.real / mag, mag / (2 * math.pi)


def _finite_mode(lam: complex, zero_tol: float = STABILITY_TOL, **vecs) -> EigenMode:
    lam = complex(lam)
    if abs(lam) <= zero_tol:
        return EigenMode(lam, ModeKind.FINITE, None, None, **vecs)
    zeta, fn = mode_metrics(lam)
    return EigenMode(lam, ModeKind.FINITE, zeta, fn, **vecs)


def stability_verdict(modes, tol: float = STABILITY_TOL) -> tuple[Verdict, bool]:
    """Stability verdict from finite modes and the well-damped flag (``zeta > 5%``).

    Infinite modes carry no dynamics and are ignored. Zero eigenvalues make
    the verdict at best marginal and are left out of the damping test.
    """
    modes = list(modes)
    if not modes:
        raise ValueError("stability_verdict needs at least one mode")
    finite = [md for md in modes if md.kind is ModeKind.FINITE]
    if not finite:
        return Verdict.ASYMPTOTICALLY_STABLE, True
    max_re = max(md.value.real for md in finite)
    if max_re < -tol:
        verdict = Verdict.ASYMPTOTICALLY_STABLE
    elif max_re <= tol:
        verdict = Verdict.MARGINAL
    else:
        verdict = Verdict.UNSTABLE
    damped = [md.damping for md in finite if md.damping is not None]
    well_damped = verdict is not Verdict.UNSTABLE and all(z > WELL_DAMPED_ZETA for z in damped)
    return verdict, well_damped


def _sort_key(lam: complex):
    return (-lam.real, -lam.imag)


def _null_vector(M: np.ndarray) -> np.ndarray:
    _, _, Vh = np.linalg.svd(M)
    v = Vh[-1].conj()
    return v / np.linalg.norm(v)


def generalized_eigenvalues(E, A, vectors: bool = False, left: bool = False,
                            method: str = "charpoly") -> SpectrumReport:
    """Spectrum of the regular pencil ``sE - A``.

    ``method="charpoly"`` (default) takes the roots of the interpolated
    characteristic polynomial. ``method="direct"`` uses a dense
    ``E^{-1} A`` eigensolve and is only valid when ``E`` is invertible; it
    exists to cross-check the default path.
    """
    E, A = _as_pair(E, A)
    pc = classify_pencil(E, A)
    if pc.kind is PencilKind.SINGULAR:
        raise SingularPencilError(
            "pencil sE - A is singular (det identically zero); see classify_pencil")
    r = E.shape[0]
    if method == "charpoly":
        coef = pc.char_poly
        roots = np.roots(coef[::-1]) if len(coef) > 1 else np.array([], dtype=complex)
    elif method == "direct":
        roots = np.linalg.eigvals(np.linalg.solve(E, A))
    else:
        raise ValueError(f"unknown method {method!r}")
    roots = sorted((complex(z) for z in roots), key=_sort_key)

    modes = []
    for lam in roots:
        vecs = {}
        if vectors:
            vecs["right_vec"] = _null_vector(A - lam * E)
        if left:
            vecs["left_vec"] = _null_vector((A - lam * E).T)
        modes.append(_finite_mode(lam, **vecs))
    n_inf = r - len(roots)
    for _ in range(n_inf):
        vecs = {}
        if vectors:
            vecs["right_vec"] = _null_vector(E)
        modes.append(EigenMode(complex(math.inf, 0.0), ModeKind.INFINITE, **vecs))
    verdict, damped = stability_verdict(modes)
    return SpectrumReport(tuple(modes), len(roots), n_inf, verdict, damped)


def spectrum_from_values(values) -> SpectrumReport:
    """Build a report from raw eigenvalues; ``inf`` entries become infinite modes."""
    finite, n_inf = [], 0
    for v in values:
        v = complex(v)
        if math.isinf(v.real) or math.isinf(v.imag):
            n_inf += 1
        else:
            finite.append(v)
    modes = [_finite_mode(v) for v in sorted(finite, key=_sort_key)]
    modes += [EigenMode(complex(math.inf, 0.0), ModeKind.INFINITE)] * n_inf
    verdict, damped = stability_verdict(modes)
    return SpectrumReport(tuple(modes), len(finite), n_inf, verdict, damped)


def dual_spectrum(report: SpectrumReport, zero_tol: float = STABILITY_TOL) -> SpectrumReport:
    """Spectrum of the dual pencil ``E - sA``: zero and infinity swap, the rest invert."""
    values = []
    for md in report.modes:
        if md.kind is ModeKind.INFINITE:
            values.append(0j)
        elif abs(md.value) <= zero_tol:
            values.append(complex(math.inf, 0.0))
        else:
            values.append(1.0 / md.value)
    return spectrum_from_values(values)


@dataclass(frozen=True)
class CheckReport:
    energy_positive: bool
    derivative_negative: bool
    energy_eigs: np.ndarray
    derivative_eigs: np.ndarray

    @property
    def passed(self) -> bool:
        return self.energy_positive and self.derivative_negative


def lyapunov_check(E, A, M, tol: float = DEFINITE_TOL) -> CheckReport:
    """Check ``V(x) = x' E' M x`` as a Lyapunov function for ``E x' = A x``.

    Passes when ``E'M`` is symmetric positive definite and ``A'M + MA`` is
    negative definite.
    """
    E, A = _as_pair(E, A)
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape != A.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"M must be square and match A, got {M.shape} vs {A.shape}")
    if np.max(np.abs(M - M.T)) > tol:
        raise ValueError("M must be symmetric")
    EM = E.T @ M
    sym = np.max(np.abs(EM - EM.T)) <= tol * max(1.0, np.max(np.abs(EM)))
    energy = np.linalg.eigvalsh(0.5 * (EM + EM.T))
    deriv = np.linalg.eigvalsh(0.5 * ((A.T @ M + M @ A) + (A.T @ M + M @ A).T))
    return CheckReport(
        energy_positive=bool(sym and energy.min() > tol),
        derivative_negative=bool(deriv.max() < -tol),
        energy_eigs=energy,
        derivative_eigs=deriv,
    )


def lyapunov_solve_standard(A, Q) -> np.ndarray:
    """Solve ``A'M + MA = -Q`` for symmetric ``M`` by vectorisation.

    Uses ``(I kron A' + A' kron I) vec(M) = -vec(Q)``; ``A`` must be Hurwitz
    so that the solution is positive definite.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ValueError("A and Q must be square and of equal size")
    if np.max(np.abs(Q - Q.T)) > DEFINITE_TOL * max(1.0, np.max(np.abs(Q))):
        raise ValueError("Q must be symmetric")
    if np.linalg.eigvalsh(Q).min() <= 0:
        raise ValueError("Q must be positive definite")
    eigs = np.linalg.eigvals(A)
    if eigs.real.max() >= 0:
        raise NotHurwitzError(
            f"A is not Hurwitz (max Re = {eigs.real.max():.6g}); "
            "no positive definite Lyapunov solution exists")
    eye = np.eye(n)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    # column-major vec so that vec(A'M) = (I kron A') vec(M)
    M = np.linalg.solve(K, -Q.flatten(order="F")).reshape((n, n), order="F")
    return 0.5 * (M + M.T)

