"""State representations and dense linear-algebra primitives shared by both decoherence models.

Conventions: qubit Hamiltonians are diagonal in the computational basis
(sigma_3 eigenbasis), oscillator states live in a truncated Fock basis,
and all values are plain numpy arrays wrapped in small frozen dataclasses
that validate their defining constraints once at construction time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import InvalidStateError, ShapeError

log = logging.getLogger(__name__)

SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# Numerical slack used by the state validators.
NORM_SQ_TOL = 1e-12          # Bloch vectors may exceed the unit ball by this much (on |r|^2)
HERMITICITY_TOL = 1e-12      # max-abs deviation from M = M^dagger, relative to scale
TRACE_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10    # eigenvalues above this are clipped to zero, below it are rejected
PURE_STATE_NORM_TOL = 1e-10


def _frozen_array(values, dtype) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


def as_matrix(obj) -> np.ndarray:
    """Extract the raw matrix from a density wrapper or array-like."""
    for attr in ("entries", "matrix"):
        inner = getattr(obj, attr, None)
        if inner is not None:
            return np.asarray(inner)
    return np.asarray(obj)


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of m from its own conjugate transpose."""
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


@dataclass(frozen=True)
class BlochVector:
    """Real 3-vector r with rho = (1 + r.sigma)/2; |r| <= 1, |r| = 1 for pure states."""

    r1: float
    r2: float
    r3: float

    def __post_init__(self):
        r = (float(self.r1), float(self.r2), float(self.r3))
        if not all(np.isfinite(r)):
            raise InvalidStateError(f"Bloch components must be finite, got {r}")
        n2 = r[0] ** 2 + r[1] ** 2 + r[2] ** 2
        if n2 > 1.0 + NORM_SQ_TOL:
            raise InvalidStateError(f"Bloch vector outside the unit ball: |r|^2 = {n2!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.r1, self.r2, self.r3], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.r1 ** 2 + self.r2 ** 2 + self.r3 ** 2))

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(self.norm - 1.0) <= tol


@dataclass(frozen=True)
class QubitDensity:
    """2x2 Hermitian, unit-trace, positive-semidefinite complex matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ShapeError(f"qubit density must be 2x2, got {m.shape}")
        if hermiticity_defect(m) > HERMITICITY_TOL:
            raise InvalidStateError("qubit density is not Hermitian")
        tr = m[0, 0].real + m[1, 1].real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"qubit density trace {tr!r} != 1")
        if np.min(np.linalg.eigvalsh(m)) < EIGENVALUE_FLOOR:
            raise InvalidStateError("qubit density has a negative eigenvalue")
        object.__setattr__(self, "matrix", _frozen_array(m, complex))


@dataclass(frozen=True)
class PureFockState:
    """Normalized amplitude vector over Fock levels 0..dim-1.

    ``truncation_error`` is the probability mass the construction discarded
    *before* renormalization; ``truncation_warning`` flags when it exceeds
    the 1e-6 quality target.
    """

    amplitudes: np.ndarray
    truncation_error: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.amplitudes, dtype=complex)
        if c.ndim != 1 or c.size < 1:
            raise ShapeError("amplitudes must be a non-empty 1-d vector")
        norm_sq = float(np.sum(np.abs(c) ** 2))
        if abs(norm_sq - 1.0) > PURE_STATE_NORM_TOL:
            raise InvalidStateError(f"amplitude vector not normalized: |psi|^2 = {norm_sq!r}")
        object.__setattr__(self, "amplitudes", _frozen_array(c, complex))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def truncation_warning(self) -> bool:
        return self.truncation_error > 1e-6


@dataclass(frozen=True)
class FockDensity:
    """Truncated N x N density matrix with the discarded probability mass on record."""

    entries: np.ndarray
    truncation_error: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ShapeError(f"density must be a square matrix, got shape {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if hermiticity_defect(m) > HERMITICITY_TOL * scale:
            raise InvalidStateError("density matrix is not Hermitian")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > max(TRACE_TOL, 10.0 * self.truncation_error):
            raise InvalidStateError(
                f"density trace {tr!r} deviates from 1 beyond the truncation budget"
            )
        object.__setattr__(self, "entries", _frozen_array(m, complex))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def truncation_warning(self) -> bool:
        return self.truncation_error > 1e-6


@dataclass(frozen=True)
class CoherentSpec:
    """Complex amplitude of a coherent oscillator state."""

    alpha: complex


@dataclass(frozen=True)
class ProbeAngles:
    """Polar/azimuthal angles of a pure qubit state or a spin-measurement axis."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= np.pi + 1e-12):
            raise InvalidStateError(f"theta must lie in [0, pi], got {self.theta!r}")
        if not (-1e-12 <= self.phi < 2 * np.pi):
            raise InvalidStateError(f"phi must lie in [0, 2*pi), got {self.phi!r}")


def bloch_from_angles(angles: ProbeAngles) -> np.ndarray:
    """Unit Bloch vector (cos phi sin theta, sin phi sin theta, cos theta)."""
    st = np.sin(angles.theta)
    return np.array(
        [np.cos(angles.phi) * st, np.sin(angles.phi) * st, np.cos(angles.theta)]
    )


def bloch_to_density(r) -> QubitDensity:
    """Map a Bloch vector to rho = (1 + r.sigma)/2."""
    v = r.as_array() if isinstance(r, BlochVector) else np.asarray(r, dtype=float)
    if v.shape != (3,):
        raise ShapeError(f"expected a 3-vector, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if norm > 1.0 + 1e-9:
        raise InvalidStateError(f"Bloch vector outside the unit ball: |r| = {norm!r}")
    rho = 0.5 * (IDENTITY_2 + v[0] * SIGMA_1 + v[1] * SIGMA_2 + v[2] * SIGMA_3)
    return QubitDensity(rho)


def density_to_bloch(rho) -> BlochVector:
    """Recover r_k = Tr(rho sigma_k); exact inverse of bloch_to_density."""
    m = as_matrix(rho).astype(complex)
    if m.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 matrix, got shape {m.shape}")
    if hermiticity_defect(m) > HERMITICITY_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    r1 = float(np.trace(m @ SIGMA_1).real)
    r2 = float(np.trace(m @ SIGMA_2).real)
    r3 = float(np.trace(m @ SIGMA_3).real)
    return BlochVector(r1, r2, r3)


def purity(rho) -> float:
    """Tr rho^2; equals (1 + |r|^2)/2 on qubits."""
    m = as_matrix(rho)
    return float(np.sum(np.abs(m) ** 2))


def _alpha_of(spec) -> complex:
    return complex(spec.alpha) if isinstance(spec, CoherentSpec) else complex(spec)


def coherent_amplitudes(spec, dim: int) -> PureFockState:
    """Truncated, renormalized coherent-state amplitudes C_n = e^{-|a|^2/2} a^n / sqrt(n!).

    Magnitudes are assembled in log space so that large |alpha| (Fock support
    around |alpha|^2 with hundreds of levels) never overflows n!.  The
    discarded tail mass is recorded before renormalization.
    """
    alpha = _alpha_of(spec)
    dim = int(dim)
    if dim < 1:
        raise ShapeError(f"dim must be >= 1, got {dim}")
    mean = abs(alpha) ** 2
    if alpha == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return PureFockState(amps, truncation_error=0.0)
    n = np.arange(dim)
    log_mag = n * np.log(abs(alpha)) - 0.5 * mean - 0.5 * gammaln(n + 1.0)
    amps = np.exp(log_mag + 1j * n * np.angle(alpha))
    kept = float(np.sum(np.abs(amps) ** 2))
    # Exact Poisson tail P(X >= dim) for the discarded mass.
    tail = float(gammainc(dim, mean))
    amps /= np.sqrt(kept)
    return PureFockState(amps, truncation_error=max(tail, 0.0))


def truncation_dimension(spec, epsilon: float) -> int:
    """Smallest N whose discarded Poisson tail sum_{n>=N} e^{-|a|^2}|a|^{2n}/n! is < epsilon."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    mean = abs(_alpha_of(spec)) ** 2
    if mean == 0.0:
        return 1
    n = 1
    # P(X >= n) for Poisson(mean) equals the regularized lower incomplete gamma P(n, mean).
    while gammainc(n, mean) >= epsilon:
        n += 1
    return n


def hermitian_eigendecomposition(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.

    Eigenvector phases are fixed so the largest-magnitude component of each
    column is real and positive, which makes the output deterministic enough
    for golden tests.
    """
    a = as_matrix(m).astype(complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if hermiticity_defect(a) > HERMITICITY_TOL * scale:
        raise InvalidStateError("matrix is not Hermitian")
    w, v = np.linalg.eigh(a)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    anchors = np.argmax(np.abs(v), axis=0)
    for k, j in enumerate(anchors):
        pivot = v[j, k]
        if abs(pivot) > 0.0:
            v[:, k] *= pivot.conjugate() / abs(pivot)
    return w, v


def clip_spectrum(w: np.ndarray) -> np.ndarray:
    """Zero out round-off negatives in an eigenvalue vector; reject real negativity."""
    w_min = float(np.min(w))
    if w_min < EIGENVALUE_FLOOR:
        raise InvalidStateError(f"matrix has a genuinely negative eigenvalue {w_min!r}")
    if w_min < 0.0:
        log.debug("clipped %d round-off-negative eigenvalues (min %.3e)", int(np.sum(w < 0)), w_min)
        w = np.where(w < 0.0, 0.0, w)
    return w
