"""Classical and quantum Fisher information, SLD, and variance bounds.

Everything in this module is agnostic to the dynamics generating the state
family: states and their parameter derivatives are passed in explicitly
(the model modules supply exact analytic derivatives).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (
    BlochVector,
    PureFockState,
    as_matrix,
    clip_spectrum,
    hermitian_eigendecomposition,
    hermiticity_defect,
)
from .errors import (
    InconsistentDerivativeError,
    InvalidDerivativeError,
    InvalidModelError,
    InvalidStateError,
    ShapeError,
)

log = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-14       # outcomes below this carry no Fisher weight
EIGENPAIR_FLOOR_REL = 1e-12     # (rho_m + rho_n) pairs below floor*max(rho) are skipped
DERIVATIVE_TOL = 1e-8           # Hermiticity/trace tolerance on supplied d(rho)/d(lambda)


class UnboundedVariance:
    """Sentinel returned when the information vanishes: no finite variance bound exists."""

    def __repr__(self):  # pragma: no cover - cosmetic
        return "UnboundedVariance()"


UNBOUNDED_VARIANCE = UnboundedVariance()


@dataclass(frozen=True)
class ProbabilityModel:
    """Outcome probabilities of a measurement and their parameter derivatives."""

    probabilities: np.ndarray
    derivatives: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        dp = np.asarray(self.derivatives, dtype=float)
        if p.ndim != 1 or p.shape != dp.shape:
            raise ShapeError("probabilities and derivatives must be equal-length 1-d vectors")
        if float(np.min(p)) < -1e-12:
            raise InvalidModelError(f"negative outcome probability {float(np.min(p))!r}")
        if abs(float(np.sum(p)) - 1.0) > 1e-9:
            raise InvalidModelError(f"probabilities sum to {float(np.sum(p))!r}, not 1")
        if abs(float(np.sum(dp))) > 1e-7:
            raise InvalidModelError(f"derivatives sum to {float(np.sum(dp))!r}, not 0")
        for name, arr in (("probabilities", p), ("derivatives", dp)):
            a = arr.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def outcomes(self) -> list[tuple[float, float]]:
        return list(zip(self.probabilities.tolist(), self.derivatives.tolist()))


@dataclass(frozen=True)
class EstimationReport:
    """Information quantities for one parameter point.

    ``fi`` is the Fisher information of a named measurement (None when no
    measurement was evaluated); ``cr_variance`` is the quantum Cramer-Rao
    variance bound for a single shot (M = 1).
    """

    lam: float
    qfi: float
    qsnr: float
    cr_variance: float | UnboundedVariance
    fi: float | None = None
    measurement: str | None = None

    def __post_init__(self):
        if self.qfi < 0.0:
            raise InvalidModelError(f"QFI must be non-negative, got {self.qfi!r}")
        if self.fi is not None and self.fi > self.qfi * (1.0 + 1e-6) + 1e-12:
            raise InvalidModelError(f"FI {self.fi!r} exceeds QFI {self.qfi!r}")
        expected = self.lam ** 2 * self.qfi
        if abs(self.qsnr - expected) > 1e-12 * max(1.0, abs(expected)):
            raise InvalidModelError(f"QSNR {self.qsnr!r} inconsistent with lambda^2 * QFI")


def fisher_information(model: ProbabilityModel) -> float:
    """F = sum_x (dp_x)^2 / p_x over outcomes with non-negligible probability."""
    p = model.probabilities
    dp = model.derivatives
    if float(np.min(p)) < -1e-12:
        raise InvalidModelError("negative outcome probability")
    mask = p > PROBABILITY_FLOOR
    if not np.any(mask):
        return 0.0
    return float(np.sum(dp[mask] ** 2 / p[mask]))


def _as_vector(psi) -> np.ndarray:
    v = psi.amplitudes if isinstance(psi, PureFockState) else np.asarray(psi, dtype=complex)
    if v.ndim != 1:
        raise ShapeError("state must be a 1-d amplitude vector")
    return v


def qfi_pure(psi, dpsi) -> float:
    """QFI of a pure-state family: 4(<dpsi|dpsi> - |<psi|dpsi>|^2)."""
    v = _as_vector(psi)
    dv = np.asarray(dpsi, dtype=complex)
    if dv.shape != v.shape:
        raise ShapeError(f"state and derivative dimensions differ: {v.shape} vs {dv.shape}")
    norm_sq = float(np.sum(np.abs(v) ** 2))
    if abs(norm_sq - 1.0) > 1e-6:
        raise InvalidStateError(f"state not normalized: |psi|^2 = {norm_sq!r}")
    q = 4.0 * (float(np.vdot(dv, dv).real) - abs(np.vdot(v, dv)) ** 2)
    if q < 0.0:
        log.debug("clipped round-off-negative pure-state QFI %.3e", q)
        q = 0.0
    return q


def _checked_derivative(drho, dim: int) -> np.ndarray:
    d = as_matrix(drho).astype(complex)
    if d.shape != (dim, dim):
        raise ShapeError(f"derivative shape {d.shape} does not match state dim {dim}")
    scale = max(1.0, float(np.max(np.abs(d)))) if d.size else 1.0
    if hermiticity_defect(d) > DERIVATIVE_TOL * scale:
        raise InvalidDerivativeError("derivative matrix is not Hermitian")
    if abs(float(np.trace(d).real)) > DERIVATIVE_TOL * scale:
        raise InvalidDerivativeError("derivative matrix is not traceless")
    return d


def _eigenbasis_blocks(rho, drho):
    r = as_matrix(rho).astype(complex)
    d = _checked_derivative(drho, r.shape[0])
    w, v = hermitian_eigendecomposition(r)
    w = clip_spectrum(w)
    a = v.conj().T @ d @ v
    s = w[:, None] + w[None, :]
    mask = s > EIGENPAIR_FLOOR_REL * float(np.max(w))
    return w, v, a, s, mask


def qfi_mixed(rho, drho) -> float:
    """QFI from the spectral form 2 sum_{mn} |<m|drho|n>|^2 / (rho_m + rho_n).

    Eigenvalue pairs whose sum falls below 1e-12 of the largest eigenvalue
    are skipped; truncated coherent states make such numerically-zero pairs
    unavoidable.
    """
    _, _, a, s, mask = _eigenbasis_blocks(rho, drho)
    return float(2.0 * np.sum(np.abs(a[mask]) ** 2 / s[mask]))


def sld(rho, drho) -> np.ndarray:
    """Symmetric logarithmic derivative: Hermitian L with L rho + rho L = 2 drho on the support."""
    _, v, a, s, mask = _eigenbasis_blocks(rho, drho)
    l_eig = np.zeros_like(a)
    l_eig[mask] = 2.0 * a[mask] / s[mask]
    l = v @ l_eig @ v.conj().T
    return 0.5 * (l + l.conj().T)


def qfi_bloch(r, dr) -> float:
    """Qubit QFI from the Bloch vector: |dr|^2 + (r.dr)^2 / (1 - |r|^2).

    On the pure-state shell (| |r|-1 | <= 1e-9) the second term is taken in
    its analytic limit, which requires r.dr = 0 up to tolerance: purity
    cannot change to first order in the parameter.
    """
    v = r.as_array() if isinstance(r, BlochVector) else np.asarray(r, dtype=float)
    dv = np.asarray(dr, dtype=float)
    if v.shape != (3,) or dv.shape != (3,):
        raise ShapeError("r and dr must be 3-vectors")
    norm = float(np.linalg.norm(v))
    if norm > 1.0 + 1e-9:
        raise InvalidStateError(f"Bloch vector outside the unit ball: |r| = {norm!r}")
    radial = float(np.dot(v, dv))
    if abs(norm - 1.0) <= 1e-9:
        if abs(radial) > 1e-7:
            raise InconsistentDerivativeError(
                f"pure state with radial derivative r.dr = {radial!r}"
            )
        return float(np.dot(dv, dv))
    return float(np.dot(dv, dv) + radial ** 2 / (1.0 - norm ** 2))


def qsnr(lam: float, qfi: float) -> float:
    """Quantum signal-to-noise ratio lambda^2 * Q(lambda)."""
    if qfi < 0.0:
        raise InvalidModelError(f"QFI must be non-negative, got {qfi!r}")
    return lam ** 2 * qfi


def cramer_rao_variance(qfi: float, m: int) -> float | UnboundedVariance:
    """Variance lower bound 1/(M Q); the UnboundedVariance sentinel when Q = 0."""
    if m < 1:
        raise ValueError(f"measurement count must be >= 1, got {m}")
    if qfi < 0.0:
        raise InvalidModelError(f"QFI must be non-negative, got {qfi!r}")
    if qfi == 0.0:
        return UNBOUNDED_VARIANCE
    return 1.0 / (m * qfi)
