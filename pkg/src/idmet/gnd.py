"""Closed-form nonlinear-dissipation-model dynamics and estimability.

The model evolves a state under H = omega*sigma_3 (qubit) or H = omega*a^dag*a
(oscillator) through the deterministic nonlinear equation

    d(rho)/dt = -i[H, rho] - gamma [[H, rho], rho]

with adimensional dissipation parameter gamma.  Pure states stay pure, the
mean energy decreases monotonically, and H-eigenstates are stationary.  The
single scaling variable is x = gamma*omega*t.

Numerics: the qubit solution involves D = (1+cos theta) + e^{4x}(1-cos theta).
All formulas below use half-angle forms (1 -+ cos theta = 2 sin^2/cos^2 of
theta/2) and the rescaled denominator D*e^{-2x}, which avoids both the
catastrophic cancellation in 1-cos(theta) at small theta and e^{4x} overflow
at large x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BlochVector,
    ProbeAngles,
    PureFockState,
    QubitDensity,
    bloch_from_angles,
)
from .estimation import ProbabilityModel


@dataclass(frozen=True)
class GndParams:
    """Frequency omega > 0, adimensional dissipation gamma >= 0, evolution time t >= 0."""

    omega: float
    gamma: float
    t: float

    def __post_init__(self):
        if not (np.isfinite(self.omega) and self.omega > 0.0):
            raise ValueError(f"omega must be positive and finite, got {self.omega!r}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError(f"gamma must be non-negative and finite, got {self.gamma!r}")
        if not (np.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"t must be non-negative and finite, got {self.t!r}")

    @property
    def x(self) -> float:
        """Dimensionless gamma * omega * t."""
        return self.gamma * self.omega * self.t


def _half_angle_blocks(theta: float, x: float):
    """(A, B, s, denom_half) with A = 1+cos, B = 1-cos, s = sin, denom_half = D e^{-2x}."""
    ch = np.cos(0.5 * theta)
    sh = np.sin(0.5 * theta)
    a = 2.0 * ch ** 2
    b = 2.0 * sh ** 2
    s = 2.0 * sh * ch
    denom_half = a * np.exp(-2.0 * x) + b * np.exp(2.0 * x)
    return a, b, s, denom_half


def gnd_qubit_bloch(angles: ProbeAngles, p: GndParams) -> BlochVector:
    """Evolved Bloch vector of an initially pure qubit; |r| = 1 at all times."""
    a, b, s, dh = _half_angle_blocks(angles.theta, p.x)
    if s == 0.0:
        # H-eigenstates are stationary.
        return BlochVector(0.0, 0.0, 1.0 if b == 0.0 else -1.0)
    phase = angles.phi + 2.0 * p.omega * p.t
    transverse = 2.0 * s / dh
    r3 = -1.0 + 2.0 * a * np.exp(-2.0 * p.x) / dh
    return BlochVector(transverse * np.cos(phase), transverse * np.sin(phase), r3)


def gnd_qubit_bloch_derivative(angles: ProbeAngles, p: GndParams) -> np.ndarray:
    """d r / d gamma of the evolved Bloch vector (exact, via d/dx with x = gamma*omega*t)."""
    a, b, s, dh = _half_angle_blocks(angles.theta, p.x)
    if s == 0.0:
        return np.zeros(3)
    em2 = np.exp(-2.0 * p.x)
    e2 = np.exp(2.0 * p.x)
    ddh = -2.0 * a * em2 + 2.0 * b * e2
    phase = angles.phi + 2.0 * p.omega * p.t
    dtransverse = -2.0 * s * ddh / dh ** 2
    dr3 = -8.0 * a * b / dh ** 2
    wt = p.omega * p.t
    return wt * np.array([dtransverse * np.cos(phase), dtransverse * np.sin(phase), dr3])


def gnd_qubit_density(angles: ProbeAngles, p: GndParams) -> QubitDensity:
    """Evolved qubit density matrix; the ground level fills as t grows.

    rho_00 equals 1/(1 + e^{4x} tan^2(theta/2)); the half-angle route used
    here evaluates it as (1+cos theta) e^{-2x} / denom_half, which handles
    the theta = pi limit (rho_00 = 0 for all t) without a singular branch.
    """
    a, b, s, dh = _half_angle_blocks(angles.theta, p.x)
    if s == 0.0:
        top = 1.0 if b == 0.0 else 0.0
        return QubitDensity(np.diag([top, 1.0 - top]).astype(complex))
    rho00 = a * np.exp(-2.0 * p.x) / dh
    off = s * np.exp(-1.0j * (angles.phi + 2.0 * p.omega * p.t)) / dh
    return QubitDensity(np.array([[rho00, off], [np.conj(off), 1.0 - rho00]], dtype=complex))


def gnd_qubit_density_derivative(angles: ProbeAngles, p: GndParams) -> np.ndarray:
    """d rho / d gamma as a 2x2 Hermitian traceless matrix."""
    dr = gnd_qubit_bloch_derivative(angles, p)
    return 0.5 * np.array(
        [[dr[2], dr[0] - 1j * dr[1]], [dr[0] + 1j * dr[1], -dr[2]]], dtype=complex
    )


def gnd_qubit_qfi(theta: float, p: GndParams) -> float:
    """QFI for gamma: 16 omega^2 t^2 e^{4x} sin^2(theta) / D^2 (zero at theta in {0, pi})."""
    if theta == 0.0 or theta == np.pi:
        return 0.0
    _, _, s, dh = _half_angle_blocks(theta, p.x)
    return 16.0 * p.omega ** 2 * p.t ** 2 * (s / dh) ** 2


def gnd_qubit_qsnr(x: float, theta: float) -> float:
    """QSNR surface R(x, theta) = 16 x^2 e^{4x} sin^2(theta) / D^2."""
    if x < 0.0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    if theta == 0.0 or theta == np.pi:
        return 0.0
    _, _, s, dh = _half_angle_blocks(theta, x)
    return 16.0 * x ** 2 * (s / dh) ** 2


def gnd_theta_opt(x: float) -> float:
    """Probe angle maximizing the QSNR at scaling variable x: arccos(tanh(2x)).

    At this angle R(x, theta_m) = 4 x^2 exactly; the x -> 0 limit is pi/2.
    """
    if x < 0.0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    return float(np.arccos(np.tanh(2.0 * x)))


def gnd_spin_probabilities(
    state_angles: ProbeAngles, meas_angles: ProbeAngles, p: GndParams
) -> ProbabilityModel:
    """Two-outcome Born probabilities of the spin projector along meas_angles,
    with exact gamma-derivatives from the closed-form Bloch solution."""
    r = gnd_qubit_bloch(state_angles, p).as_array()
    dr = gnd_qubit_bloch_derivative(state_angles, p)
    n = bloch_from_angles(meas_angles)
    prob = 0.5 * (1.0 + float(np.dot(r, n)))
    prob = min(max(prob, 0.0), 1.0)
    dprob = 0.5 * float(np.dot(dr, n))
    return ProbabilityModel(
        probabilities=np.array([prob, 1.0 - prob]),
        derivatives=np.array([dprob, -dprob]),
    )


def _initial_amplitudes(initial) -> tuple[np.ndarray, float]:
    if isinstance(initial, PureFockState):
        return np.asarray(initial.amplitudes, dtype=complex), initial.truncation_error
    c = np.asarray(initial, dtype=complex)
    return c, 0.0


def gnd_fock_state(initial, p: GndParams) -> PureFockState:
    """Evolved oscillator state: C_n(t) = e^{-(i+gamma) omega n t} C_n(0), renormalized.

    The damping factor is referenced to the lowest occupied level before
    normalizing, so the norm never underflows even for very large x.
    """
    c0, trunc = _initial_amplitudes(initial)
    occupied = np.nonzero(np.abs(c0) > 0.0)[0]
    n0 = int(occupied[0])
    c = np.zeros_like(c0)
    c[occupied] = c0[occupied] * np.exp(
        (-1.0j * p.omega * p.t) * occupied - (p.gamma * p.omega * p.t) * (occupied - n0)
    )
    norm = np.sqrt(float(np.sum(np.abs(c) ** 2)))
    return PureFockState(c / norm, truncation_error=trunc)


def gnd_fock_state_derivative(initial, p: GndParams) -> np.ndarray:
    """d C(t) / d gamma = omega*t*(<n>_t - n) * C_n(t), exact for the normalized evolution."""
    c = gnd_fock_state(initial, p).amplitudes
    n = np.arange(c.size)
    mean_n = float(np.sum(n * np.abs(c) ** 2))
    return (p.omega * p.t) * (mean_n - n) * c


def gnd_osc_qfi(spec, p: GndParams) -> float:
    """Closed-form oscillator QFI from a coherent start: 4 omega^2 t^2 |alpha|^2 e^{-2x}.

    Equals 4 t^2 Var(H) on the evolved state (still coherent, with amplitude
    alpha * e^{-x}).
    """
    alpha = complex(spec.alpha) if hasattr(spec, "alpha") else complex(spec)
    return 4.0 * p.omega ** 2 * p.t ** 2 * abs(alpha) ** 2 * np.exp(-2.0 * p.x)


def gnd_osc_qsnr(spec, x: float) -> float:
    """Oscillator QSNR R = 4 x^2 |alpha|^2 e^{-2x}; maximal at x = 1."""
    if x < 0.0:
        raise ValueError(f"x must be non-negative, got {x!r}")
    alpha = complex(spec.alpha) if hasattr(spec, "alpha") else complex(spec)
    return 4.0 * x ** 2 * abs(alpha) ** 2 * np.exp(-2.0 * x)
