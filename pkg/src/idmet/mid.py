"""Closed-form dephasing-model dynamics and estimability for qubit and oscillator probes.

The model evolves a state under H = omega*sigma_3 (qubit) or H = omega*a^dag*a
(oscillator) while damping coherences between energy eigenstates at a rate set
by the dephasing parameter mu (units of time):

    d(rho)/dt = -i[H, rho] - mu [H, [H, rho]]

Populations in the energy basis are exact constants of motion; an element
connecting levels with gap `g` decays as exp(-mu g^2 t).  Scaling variables:
x = mu*omega^2*t and c = mu*omega^2*t (oscillator convention), x2 = omega*t,
y = mu*omega.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    BlochVector,
    FockDensity,
    ProbeAngles,
    QubitDensity,
    bloch_from_angles,
    coherent_amplitudes,
)
from .errors import AnalyticLimitWarning, IndeterminateRatioError, TruncationWarning
from .estimation import ProbabilityModel, qfi_mixed


@dataclass(frozen=True)
class MidParams:
    """Frequency omega > 0, dephasing parameter mu >= 0 (time), evolution time t >= 0."""

    omega: float
    mu: float
    t: float

    def __post_init__(self):
        if not (np.isfinite(self.omega) and self.omega > 0.0):
            raise ValueError(f"omega must be positive and finite, got {self.omega!r}")
        if not (np.isfinite(self.mu) and self.mu >= 0.0):
            raise ValueError(f"mu must be non-negative and finite, got {self.mu!r}")
        if not (np.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"t must be non-negative and finite, got {self.t!r}")

    @property
    def x(self) -> float:
        """Dimensionless mu * omega^2 * t."""
        return self.mu * self.omega ** 2 * self.t

    @property
    def x2(self) -> float:
        """Dimensionless omega * t."""
        return self.omega * self.t

    @property
    def y(self) -> float:
        """Dimensionless mu * omega."""
        return self.mu * self.omega

    @property
    def c(self) -> float:
        """Oscillator-convention alias for mu * omega^2 * t."""
        return self.x


def mid_qubit_bloch(angles: ProbeAngles, p: MidParams) -> BlochVector:
    """Evolved Bloch vector: transverse part spirals down as e^{-4x}, r3 frozen."""
    envelope = np.exp(-4.0 * p.x)
    st = np.sin(angles.theta)
    phase = 2.0 * p.omega * p.t + angles.phi
    return BlochVector(
        envelope * np.cos(phase) * st,
        envelope * np.sin(phase) * st,
        np.cos(angles.theta),
    )


def mid_qubit_bloch_derivative(angles: ProbeAngles, p: MidParams) -> np.ndarray:
    """d r / d mu: the transverse components scale by -4 omega^2 t, r3 is mu-independent."""
    r = mid_qubit_bloch(angles, p)
    factor = -4.0 * p.omega ** 2 * p.t
    return np.array([factor * r.r1, factor * r.r2, 0.0])


def mid_qubit_density(angles: ProbeAngles, p: MidParams) -> QubitDensity:
    """Evolved qubit density matrix: constant populations, decaying coherence."""
    ch = np.cos(0.5 * angles.theta)
    sh = np.sin(0.5 * angles.theta)
    eta = np.exp(-2.0j * p.omega * p.t - 4.0 * p.x)
    off = 0.5 * np.sin(angles.theta) * np.exp(-1.0j * angles.phi) * eta
    return QubitDensity(np.array([[ch ** 2, off], [np.conj(off), sh ** 2]], dtype=complex))


def mid_qubit_density_derivative(angles: ProbeAngles, p: MidParams) -> np.ndarray:
    """d rho / d mu as a 2x2 Hermitian traceless matrix."""
    dr = mid_qubit_bloch_derivative(angles, p)
    return 0.5 * np.array(
        [[dr[2], dr[0] - 1j * dr[1]], [dr[0] + 1j * dr[1], -dr[2]]], dtype=complex
    )


def mid_qubit_qfi(theta: float, p: MidParams) -> float:
    """QFI for mu: 16 omega^4 t^2 sin^2(theta) / (e^{8x} - 1).

    At mu = 0 the formula has a removable 1/mu pole; the documented analytic
    limit 2 omega^2 t sin^2(theta) (the leading coefficient lim mu*Q) is
    returned and flagged with AnalyticLimitWarning.
    """
    if theta == 0.0 or theta == np.pi:
        return 0.0
    s2 = np.sin(theta) ** 2
    if p.mu == 0.0:
        warnings.warn(
            "QFI diverges as mu -> 0; returning the limit coefficient 2*omega^2*t*sin^2(theta)",
            AnalyticLimitWarning,
            stacklevel=2,
        )
        return 2.0 * p.omega ** 2 * p.t * s2
    return 16.0 * p.omega ** 4 * p.t ** 2 * s2 / np.expm1(8.0 * p.x)


def mid_qubit_qsnr(x: float, theta: float) -> float:
    """QSNR surface R = 16 x^2 sin^2(theta) / (e^{8x} - 1); R(0) = 0 by limit."""
    if x < 0.0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    if x == 0.0:
        return 0.0
    return 16.0 * x ** 2 * np.sin(theta) ** 2 / np.expm1(8.0 * x)


def mid_spin_probabilities(
    state_angles: ProbeAngles, meas_angles: ProbeAngles, p: MidParams
) -> ProbabilityModel:
    """Two-outcome Born probabilities of the spin projector along meas_angles.

    Probabilities are (1 +- r.n)/2 and the mu-derivatives follow from the
    exact d r / d mu of the evolved Bloch vector.
    """
    r = mid_qubit_bloch(state_angles, p).as_array()
    dr = mid_qubit_bloch_derivative(state_angles, p)
    n = bloch_from_angles(meas_angles)
    prob = 0.5 * (1.0 + float(np.dot(r, n)))
    prob = min(max(prob, 0.0), 1.0)
    dprob = 0.5 * float(np.dot(dr, n))
    return ProbabilityModel(
        probabilities=np.array([prob, 1.0 - prob]),
        derivatives=np.array([dprob, -dprob]),
    )


def mid_fid_ratio(x2: float, y: float, theta: float = np.pi / 2) -> float:
    """FI/QFI of the best fixed transverse spin measurement, as a function of
    x2 = omega*t, y = mu*omega and the probe polar angle theta.

    The measurement is the equatorial projector (theta_meas = pi/2) with its
    azimuth equal to the probe's initial azimuth, so the alignment factor is
    cos^2(2*x2).  The ratio equals

        (1 - E^2) cos^2(2 x2) / (1 - E^2 sin^2(theta) cos^2(2 x2)),
        E^2 = e^{-8 x2 y},

    reaches 1 exactly at x2 = pi/2 for any y, and vanishes at x2 = pi/4.
    """
    if x2 <= 0.0 or y <= 0.0:
        raise ValueError("x2 and y must be positive")
    e2 = np.exp(-8.0 * x2 * y)
    c2 = np.cos(2.0 * x2) ** 2
    s2 = np.sin(theta) ** 2
    denom = 1.0 - e2 * s2 * c2
    if abs(denom) < 1e-14:
        raise IndeterminateRatioError(f"FI/QFI denominator vanished at x2={x2!r}, y={y!r}")
    return float(-np.expm1(-8.0 * x2 * y) * c2 / denom)


def mid_fock_density(spec, p: MidParams, dim: int) -> FockDensity:
    """Evolved oscillator density in a dim-level Fock basis from a coherent start.

    Entry (j, k) is C_j C_k^* e^{-i omega (j-k) t} e^{-mu omega^2 (j-k)^2 t}:
    the diagonal is independent of both mu and t.
    """
    state = coherent_amplitudes(spec, dim)
    c = state.amplitudes
    n = np.arange(dim)
    gap = n[:, None] - n[None, :]
    rho = np.outer(c, c.conj()) * np.exp(
        (-1.0j * p.omega * p.t) * gap - (p.mu * p.omega ** 2 * p.t) * gap ** 2
    )
    fd = FockDensity(rho, truncation_error=state.truncation_error)
    if fd.truncation_warning:
        warnings.warn(
            f"discarded coherent mass {fd.truncation_error:.3e} at dim={dim}",
            TruncationWarning,
            stacklevel=2,
        )
    return fd


def mid_fock_density_derivative(spec, p: MidParams, dim: int) -> np.ndarray:
    """d rho / d mu = -omega^2 (j-k)^2 t * rho entrywise; Hermitian and traceless."""
    rho = mid_fock_density(spec, p, dim).entries
    n = np.arange(dim)
    gap = n[:, None] - n[None, :]
    return (-(p.omega ** 2) * p.t) * gap ** 2 * rho


def mid_osc_qfi(spec, c: float, dim: int) -> float:
    """Oscillator QFI at the canonical gauge omega = 1, t = 1, mu = c.

    By the scaling property the QSNR c^2 * Q depends on (|alpha|, c) only, so
    any (mu, omega, t) with mu*omega^2*t = c is represented by this gauge.
    """
    if c < 0.0:
        raise ValueError(f"c must be non-negative, got {c!r}")
    p = MidParams(omega=1.0, mu=c, t=1.0)
    rho = mid_fock_density(spec, p, dim)
    drho = mid_fock_density_derivative(spec, p, dim)
    return qfi_mixed(rho, drho)


def mid_osc_qsnr(spec, c: float, dim: int) -> float:
    """Oscillator QSNR R = c^2 * Q(|alpha|, c), evaluated at the canonical gauge."""
    return c ** 2 * mid_osc_qfi(spec, c, dim)
