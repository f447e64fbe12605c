"""Nonlinear dissipation model: closed forms, purity, derivatives, information."""

import numpy as np
import pytest

from idmet import (
    GndParams,
    ProbeAngles,
    bloch_to_density,
    coherent_amplitudes,
    fisher_information,
    gnd_fock_state,
    gnd_fock_state_derivative,
    gnd_osc_qfi,
    gnd_osc_qsnr,
    gnd_qubit_bloch,
    gnd_qubit_bloch_derivative,
    gnd_qubit_density,
    gnd_qubit_density_derivative,
    gnd_qubit_qfi,
    gnd_qubit_qsnr,
    gnd_spin_probabilities,
    gnd_theta_opt,
    qfi_bloch,
    qfi_mixed,
    qfi_pure,
    truncation_dimension,
)

HALF_PI = np.pi / 2


def random_angles(rng):
    return ProbeAngles(rng.uniform(0.05, np.pi - 0.05), rng.uniform(0.0, 2 * np.pi - 1e-9))


# ---------------------------------------------------------------------------
# qubit Bloch solution
# ---------------------------------------------------------------------------

def test_bloch_unitary_limit():
    angles = ProbeAngles(0.8, 0.3)
    for t in (0.0, 0.7, 2.0):
        r = gnd_qubit_bloch(angles, GndParams(1.0, 0.0, t))
        assert abs(r.r3 - np.cos(0.8)) < 1e-14
        expected_phase = 0.3 + 2.0 * t
        assert abs(r.r1 - np.sin(0.8) * np.cos(expected_phase)) < 1e-14
        assert abs(r.r2 - np.sin(0.8) * np.sin(expected_phase)) < 1e-14


def test_bloch_frozen_point():
    # theta=pi/2, x=0.25: r3 = -1 + 2/(1+e)
    r = gnd_qubit_bloch(ProbeAngles(HALF_PI, 0.0), GndParams(1.0, 0.25, 1.0))
    assert abs(r.r3 - (-0.4621171572600098)) < 1e-14


def test_bloch_long_time_ground_state():
    for theta in (0.4, HALF_PI, 2.8):
        r = gnd_qubit_bloch(ProbeAngles(theta, 1.0), GndParams(1.0, 1.2, 10.0))  # x = 12
        assert np.max(np.abs(r.as_array() - [0.0, 0.0, -1.0])) < 1e-8


def test_bloch_stationary_eigenstates():
    for t in (0.0, 3.0, 100.0):
        top = gnd_qubit_bloch(ProbeAngles(0.0, 0.0), GndParams(1.0, 0.5, t))
        np.testing.assert_allclose(top.as_array(), [0.0, 0.0, 1.0], atol=1e-15)
        bottom = gnd_qubit_bloch(ProbeAngles(np.pi, 0.0), GndParams(1.0, 0.5, t))
        assert np.max(np.abs(bottom.as_array() - [0.0, 0.0, -1.0])) < 1e-12


def test_purity_preserved():
    rng = np.random.default_rng(31)
    for _ in range(300):
        angles = random_angles(rng)
        p = GndParams(rng.uniform(0.2, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 20.0))
        r = gnd_qubit_bloch(angles, p)
        assert abs(r.norm - 1.0) < 1e-9


def test_energy_non_increasing():
    angles = ProbeAngles(1.2, 0.0)
    r3s = [gnd_qubit_bloch(angles, GndParams(1.0, 0.15, t)).r3 for t in np.linspace(0, 20, 60)]
    assert np.all(np.diff(r3s) <= 1e-14)


def test_overflow_safe_far_regime():
    r = gnd_qubit_bloch(ProbeAngles(1.0, 0.0), GndParams(1.0, 1.0, 1000.0))  # e^{4x} overflows
    assert np.all(np.isfinite(r.as_array()))
    assert np.max(np.abs(r.as_array() - [0.0, 0.0, -1.0])) < 1e-12


# ---------------------------------------------------------------------------
# qubit density
# ---------------------------------------------------------------------------

def test_density_stationary_poles():
    for t in (0.0, 2.0, 50.0):
        np.testing.assert_allclose(
            gnd_qubit_density(ProbeAngles(0.0, 0.0), GndParams(1.0, 0.4, t)).matrix,
            np.diag([1.0, 0.0]),
            atol=1e-15,
        )
        np.testing.assert_allclose(
            gnd_qubit_density(ProbeAngles(np.pi, 0.0), GndParams(1.0, 0.4, t)).matrix,
            np.diag([0.0, 1.0]),
            atol=1e-12,
        )


def test_density_frozen_population():
    rho = gnd_qubit_density(ProbeAngles(HALF_PI, 0.0), GndParams(1.0, 1.0, 1.0))  # x = 1
    assert abs(rho.matrix[0, 0].real - 0.01798620996209156) < 1e-14  # 1/(1+e^4)


def test_density_consistent_with_bloch_and_pure():
    rng = np.random.default_rng(32)
    for _ in range(100):
        angles = random_angles(rng)
        p = GndParams(rng.uniform(0.3, 2.0), rng.uniform(0.0, 0.8), rng.uniform(0.0, 5.0))
        direct = gnd_qubit_density(angles, p).matrix
        via_bloch = bloch_to_density(gnd_qubit_bloch(angles, p)).matrix
        assert np.max(np.abs(direct - via_bloch)) < 1e-12
        tr_sq = float(np.trace(direct @ direct).real)
        assert abs(tr_sq - 1.0) < 1e-10  # purity 1


# ---------------------------------------------------------------------------
# qubit QFI / QSNR
# ---------------------------------------------------------------------------

def test_qfi_zero_at_poles():
    p = GndParams(1.0, 0.2, 1.0)
    assert gnd_qubit_qfi(0.0, p) == 0.0
    assert gnd_qubit_qfi(np.pi, p) == 0.0


def test_qfi_frozen_value_and_bloch_route():
    p = GndParams(1.0, 0.25, 1.0)
    q = gnd_qubit_qfi(HALF_PI, p)
    assert abs(q - 3.1457909318637096) < 1e-12  # 16 e / (1+e)^2
    angles = ProbeAngles(HALF_PI, 0.0)
    q_bloch = qfi_bloch(
        gnd_qubit_bloch(angles, p), gnd_qubit_bloch_derivative(angles, p)
    )
    assert abs(q - q_bloch) < 1e-8 * q


def test_qfi_equals_mixed_route():
    angles = ProbeAngles(1.1, 0.4)
    p = GndParams(1.0, 0.3, 0.8)
    q_mixed = qfi_mixed(
        gnd_qubit_density(angles, p).matrix, gnd_qubit_density_derivative(angles, p)
    )
    assert abs(q_mixed - gnd_qubit_qfi(1.1, p)) < 1e-8 * q_mixed


def test_bloch_derivative_tangent_and_fd():
    rng = np.random.default_rng(33)
    for _ in range(50):
        angles = random_angles(rng)
        gamma = rng.uniform(0.02, 0.8)
        p = GndParams(rng.uniform(0.3, 2.0), gamma, rng.uniform(0.1, 4.0))
        r = gnd_qubit_bloch(angles, p).as_array()
        dr = gnd_qubit_bloch_derivative(angles, p)
        assert abs(np.dot(r, dr)) < 1e-7  # purity preserved to first order
        h = 1e-6 * max(1.0, gamma)
        plus = gnd_qubit_bloch(angles, GndParams(p.omega, gamma + h, p.t)).as_array()
        minus = gnd_qubit_bloch(angles, GndParams(p.omega, gamma - h, p.t)).as_array()
        assert np.max(np.abs((plus - minus) / (2 * h) - dr)) < 1e-6


def test_density_derivative_finite_difference():
    angles = ProbeAngles(1.234, 0.567)
    gamma = 0.2
    p = GndParams(1.3, gamma, 0.7)
    analytic = gnd_qubit_density_derivative(angles, p)
    h = 1e-5 * max(1.0, gamma)
    plus = gnd_qubit_density(angles, GndParams(1.3, gamma + h, 0.7)).matrix
    minus = gnd_qubit_density(angles, GndParams(1.3, gamma - h, 0.7)).matrix
    assert np.max(np.abs((plus - minus) / (2 * h) - analytic)) < 1e-6


def test_theta_opt_limits_and_values():
    assert abs(gnd_theta_opt(0.0) - HALF_PI) < 1e-15
    assert abs(gnd_theta_opt(1.0) - 0.2690359907488815) < 1e-14  # arccos(tanh 2)
    # asymptotic small angle ~ 2 e^{-2x}
    assert abs(gnd_theta_opt(5.0) / (2.0 * np.exp(-10.0)) - 1.0) < 1e-3


def test_theta_opt_is_the_maximum():
    for x in (0.1, 0.5, 1.0, 2.0):
        theta_m = gnd_theta_opt(x)
        r_m = gnd_qubit_qsnr(x, theta_m)
        for theta in np.linspace(0.01, np.pi - 0.01, 400):
            assert gnd_qubit_qsnr(x, float(theta)) <= r_m + 1e-12


def test_qsnr_identity_high_precision():
    for x in np.linspace(0.01, 5.0, 50):
        r = gnd_qubit_qsnr(float(x), gnd_theta_opt(float(x)))
        assert abs(r - 4.0 * x * x) < 1e-10 * 4.0 * x * x


def test_qsnr_scaling_invariance():
    rng = np.random.default_rng(34)
    x, theta = 0.7, 0.9
    values = []
    for _ in range(20):
        omega = rng.uniform(0.2, 3.0)
        t = rng.uniform(0.1, 5.0)
        gamma = x / (omega * t)
        q = gnd_qubit_qfi(theta, GndParams(omega, gamma, t))
        values.append(gamma ** 2 * q)
    values = np.array(values)
    assert (values.max() - values.min()) / values.mean() < 1e-10
    assert abs(values.mean() - gnd_qubit_qsnr(x, theta)) < 1e-10


# ---------------------------------------------------------------------------
# spin measurement
# ---------------------------------------------------------------------------

def test_spin_stationary_state_no_information():
    model = gnd_spin_probabilities(
        ProbeAngles(0.0, 0.0), ProbeAngles(0.0, 0.0), GndParams(1.0, 0.3, 2.0)
    )
    assert model.derivatives[0] == 0.0


def test_spin_saturation_at_quarter_periods():
    for k in (1, 2, 3, 8):
        t = k * np.pi / 2
        gamma = 1.0 / t  # x = 1
        p = GndParams(1.0, gamma, t)
        theta_m = gnd_theta_opt(p.x)
        f = fisher_information(
            gnd_spin_probabilities(ProbeAngles(theta_m, 0.0), ProbeAngles(theta_m, 0.0), p)
        )
        q = gnd_qubit_qfi(theta_m, p)
        assert abs(f / q - 1.0) < 1e-6


def test_fi_never_exceeds_qfi():
    rng = np.random.default_rng(35)
    for _ in range(500):
        state = random_angles(rng)
        meas = random_angles(rng)
        p = GndParams(rng.uniform(0.2, 2.0), rng.uniform(1e-3, 0.8), rng.uniform(0.05, 5.0))
        f = fisher_information(gnd_spin_probabilities(state, meas, p))
        q = gnd_qubit_qfi(state.theta, p)
        assert f <= q * (1.0 + 1e-6) + 1e-12


# ---------------------------------------------------------------------------
# oscillator
# ---------------------------------------------------------------------------

def test_fock_state_unitary_limit():
    psi0 = coherent_amplitudes(1.2, 25)
    psit = gnd_fock_state(psi0, GndParams(1.0, 0.0, 2.2))
    np.testing.assert_allclose(np.abs(psit.amplitudes), np.abs(psi0.amplitudes), atol=1e-12)
    expected = psi0.amplitudes * np.exp(-1j * np.arange(25) * 2.2)
    np.testing.assert_allclose(psit.amplitudes, expected, atol=1e-12)


def test_fock_state_coherent_decay():
    alpha = 1.3
    dim = truncation_dimension(alpha, 1e-14) + 10
    psi0 = coherent_amplitudes(alpha, dim)
    p = GndParams(1.0, 0.25, 2.0)  # x = 0.5
    psit = gnd_fock_state(psi0, p)
    decayed = coherent_amplitudes(alpha * np.exp(-p.x), dim).amplitudes
    rotated = decayed * np.exp(-1j * np.arange(dim) * p.omega * p.t)
    fidelity = abs(np.vdot(rotated, psit.amplitudes)) ** 2
    assert abs(fidelity - 1.0) < 1e-8


def test_fock_eigenstate_stationary():
    c0 = np.zeros(10, dtype=complex)
    c0[4] = 1.0
    psit = gnd_fock_state(c0, GndParams(1.0, 0.7, 3.0))
    assert abs(abs(psit.amplitudes[4]) - 1.0) < 1e-12


def test_fock_state_no_underflow_with_shifted_reference():
    c0 = np.zeros(6, dtype=complex)
    c0[3] = 1.0 / np.sqrt(2)
    c0[4] = 1.0 / np.sqrt(2)
    psit = gnd_fock_state(c0, GndParams(1.0, 1.0, 800.0))  # would underflow unshifted
    assert abs(abs(psit.amplitudes[3]) - 1.0) < 1e-12  # collapses onto the lower level


def test_fock_derivative_finite_difference():
    alpha = 0.9
    dim = truncation_dimension(alpha, 1e-14) + 5
    psi0 = coherent_amplitudes(alpha, dim)
    gamma = 0.2
    p = GndParams(1.1, gamma, 1.4)
    analytic = gnd_fock_state_derivative(psi0, p)
    h = 1e-6 * max(1.0, gamma)
    plus = gnd_fock_state(psi0, GndParams(1.1, gamma + h, 1.4)).amplitudes
    minus = gnd_fock_state(psi0, GndParams(1.1, gamma - h, 1.4)).amplitudes
    assert np.max(np.abs((plus - minus) / (2 * h) - analytic)) < 1e-6


def test_osc_qfi_closed_form_and_routes():
    assert gnd_osc_qfi(0.0, GndParams(1.0, 0.2, 1.0)) == 0.0
    q = gnd_osc_qfi(1.0, GndParams(1.0, 0.0, 1.0))
    assert abs(q - 4.0) < 1e-14
    # variance form: 4 t^2 Var(H) on the evolved state
    alpha = 1.1
    dim = truncation_dimension(alpha, 1e-14) + 10
    p = GndParams(1.2, 0.15, 1.7)
    psit = gnd_fock_state(coherent_amplitudes(alpha, dim), p).amplitudes
    n = np.arange(dim)
    h = p.omega * n
    weights = np.abs(psit) ** 2
    var_h = float(np.sum(h ** 2 * weights) - np.sum(h * weights) ** 2)
    q_closed = gnd_osc_qfi(alpha, p)
    assert abs(q_closed - 4.0 * p.t ** 2 * var_h) < 1e-8 * q_closed
    # pure-state formula with the exact derivative
    q_pure = qfi_pure(psit, gnd_fock_state_derivative(coherent_amplitudes(alpha, dim), p))
    assert abs(q_closed - q_pure) < 1e-8 * q_closed


def test_osc_qsnr_values_and_peak():
    assert gnd_osc_qsnr(1.0, 0.0) == 0.0
    assert abs(gnd_osc_qsnr(1.0, 1.0) - 0.5413411329464508) < 1e-14  # 4 e^{-2}
    assert abs(gnd_osc_qsnr(10.0, 1.0) - 54.134113294645075) < 1e-12
    assert gnd_osc_qsnr(1.0, 1.0) > gnd_osc_qsnr(1.0, 1.0 + 1e-4)
    assert gnd_osc_qsnr(1.0, 1.0) > gnd_osc_qsnr(1.0, 1.0 - 1e-4)


def test_osc_energy_dissipation():
    alpha = 1.4
    xs = np.linspace(0.0, 3.0, 40)
    energies = [alpha ** 2 * np.exp(-2 * x) for x in xs]
    assert np.all(np.diff(energies) < 0.0)
