"""RK4 oracle: agreement with every closed form, gauge invariance, convergence order."""

import numpy as np
import pytest

from idmet import (
    GndParams,
    IntegratorConfig,
    MidParams,
    ProbeAngles,
    bloch_from_angles,
    bloch_to_density,
    coherent_amplitudes,
    compare_trajectories,
    gnd_fock_state,
    gnd_qubit_density,
    integrate_ensemble,
    integrate_gnd_density,
    integrate_mid,
    integrate_state_vector,
    mid_fock_density,
    mid_qubit_density,
    to_projectors,
)
from idmet.errors import ConfigError, ShapeError

QUBIT_H = np.array([1.0, -1.0])


def qubit_projector(angles):
    return bloch_to_density(bloch_from_angles(angles)).matrix


def test_config_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig(dt=-0.1, t_end=1.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(dt=0.5, t_end=0.1)
    with pytest.raises(ConfigError):
        IntegratorConfig(dt=1e-3, t_end=1.0, method="euler")
    with pytest.raises(ConfigError):
        # dt * max|H| above the 0.01 ceiling
        integrate_mid(np.diag([1.0, 0.0]).astype(complex), QUBIT_H, 0.1, IntegratorConfig(dt=0.02, t_end=1.0))


def test_compare_trajectories_contract():
    cfg = IntegratorConfig(dt=1e-3, t_end=0.5, record_every=50)
    a = integrate_mid(np.diag([1.0, 0.0]).astype(complex), QUBIT_H, 0.0, cfg)
    assert compare_trajectories(a, a) == 0.0
    cfg2 = IntegratorConfig(dt=1e-3, t_end=0.5, record_every=100)
    b = integrate_mid(np.diag([1.0, 0.0]).astype(complex), QUBIT_H, 0.0, cfg2)
    with pytest.raises(ShapeError):
        compare_trajectories(a, b)


def test_mid_unitary_limit():
    angles = ProbeAngles(0.9, 0.4)
    cfg = IntegratorConfig(dt=1e-3, t_end=3.0, record_every=100)
    traj = integrate_mid(qubit_projector(angles), QUBIT_H, 0.0, cfg)
    h = np.diag(QUBIT_H)
    for t, rho in zip(traj.times, traj.states):
        u = np.diag(np.exp(-1j * QUBIT_H * t))
        expected = u @ qubit_projector(angles) @ u.conj().T
        assert np.max(np.abs(rho - expected)) < 1e-8


def test_mid_qubit_matches_closed_form():
    angles = ProbeAngles(np.pi / 4, np.pi / 2)
    cfg = IntegratorConfig(dt=1e-3, t_end=10.0, record_every=200)
    traj = integrate_mid(qubit_projector(angles), QUBIT_H, 0.1, cfg)
    analytic = np.array(
        [mid_qubit_density(angles, MidParams(1.0, 0.1, float(t))).matrix for t in traj.times]
    )
    assert np.max(np.abs(traj.states - analytic)) < 1e-6


def test_mid_fock_matches_closed_form():
    dim = 20
    cfg = IntegratorConfig(dt=4e-4, t_end=10.0, record_every=500)
    psi = coherent_amplitudes(1.0, dim)
    rho0 = np.outer(psi.amplitudes, psi.amplitudes.conj())
    traj = integrate_mid(rho0, np.arange(dim, dtype=float), 0.1, cfg)
    analytic = np.array(
        [mid_fock_density(1.0, MidParams(1.0, 0.1, float(t)), dim).entries for t in traj.times]
    )
    assert np.max(np.abs(traj.states - analytic)) < 1e-6


def test_gnd_qubit_matches_closed_form():
    angles = ProbeAngles(np.pi / 2, np.pi / 2)
    cfg = IntegratorConfig(dt=1e-3, t_end=10.0, record_every=200)
    traj = integrate_gnd_density(qubit_projector(angles), QUBIT_H, 0.1, cfg)
    analytic = np.array(
        [gnd_qubit_density(angles, GndParams(1.0, 0.1, float(t))).matrix for t in traj.times]
    )
    assert np.max(np.abs(traj.states - analytic)) < 1e-6


def test_gnd_coherent_decay_fidelity():
    dim = 20
    alpha = 1.0
    cfg = IntegratorConfig(dt=4e-4, t_end=5.0, record_every=1000)
    psi = coherent_amplitudes(alpha, dim)
    rho0 = np.outer(psi.amplitudes, psi.amplitudes.conj())
    traj = integrate_gnd_density(rho0, np.arange(dim, dtype=float), 0.1, cfg)
    for t, rho in zip(traj.times, traj.states):
        # amplitude decays by e^{-gamma omega t} while rotating at the free frequency
        target = coherent_amplitudes(alpha * np.exp(-(1j + 0.1) * t), dim).amplitudes
        fidelity = float(np.vdot(target, rho @ target).real)
        assert fidelity >= 1.0 - 1e-6


def test_gnd_purity_preserved_from_pure_start():
    angles = ProbeAngles(1.1, 0.3)
    cfg = IntegratorConfig(dt=1e-3, t_end=10.0, record_every=500)
    traj = integrate_gnd_density(qubit_projector(angles), QUBIT_H, 0.2, cfg)
    for rho in traj.states:
        assert abs(float(np.trace(rho @ rho).real) - 1.0) < 1e-7


def test_ensemble_equals_gnd_from_pure():
    angles = ProbeAngles(np.pi / 2, np.pi / 2)
    cfg = IntegratorConfig(dt=1e-3, t_end=10.0, record_every=200)
    a = integrate_ensemble(qubit_projector(angles), QUBIT_H, 0.1, cfg)
    b = integrate_gnd_density(qubit_projector(angles), QUBIT_H, 0.1, cfg)
    assert compare_trajectories(a, b) < 1e-7


def test_ensemble_eigenstate_stationary():
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    cfg = IntegratorConfig(dt=1e-3, t_end=2.0, record_every=100)
    traj = integrate_ensemble(rho0, QUBIT_H, 0.3, cfg)
    assert np.max(np.abs(traj.states - rho0)) < 1e-9


def test_ensemble_maximally_mixed_stays_diagonal():
    rho0 = 0.5 * np.eye(2, dtype=complex)
    cfg = IntegratorConfig(dt=1e-3, t_end=2.0, record_every=100)
    traj = integrate_ensemble(rho0, QUBIT_H, 0.3, cfg)
    for rho in traj.states:
        assert abs(float(np.trace(rho).real) - 1.0) < 1e-9
        assert abs(rho[0, 1]) < 1e-12


def test_state_vector_gauge_invariance():
    dim = 12
    psi0 = coherent_amplitudes(0.8, dim)
    cfg = IntegratorConfig(dt=5e-4, t_end=6.0, record_every=500)
    h = np.arange(dim, dtype=float)
    run0 = integrate_state_vector(psi0, h, 0.15, 0.0, cfg)
    run1 = integrate_state_vector(psi0, h, 0.15, 3.7, cfg)
    assert compare_trajectories(to_projectors(run0), to_projectors(run1)) < 1e-7


def test_state_vector_unitary_phases():
    dim = 8
    psi0 = coherent_amplitudes(0.6, dim)
    cfg = IntegratorConfig(dt=1e-3, t_end=2.0, record_every=200)
    traj = integrate_state_vector(psi0, np.arange(dim, dtype=float), 0.0, 0.0, cfg)
    for t, psi in zip(traj.times, traj.states):
        expected = psi0.amplitudes * np.exp(-1j * np.arange(dim) * t)
        assert np.max(np.abs(psi - expected)) < 1e-8


def test_state_vector_matches_closed_form():
    dim = 16
    psi0 = coherent_amplitudes(1.0, dim)
    cfg = IntegratorConfig(dt=5e-4, t_end=8.0, record_every=400)
    traj = integrate_state_vector(psi0, np.arange(dim, dtype=float), 0.1, 0.0, cfg)
    closed = np.array(
        [gnd_fock_state(psi0, GndParams(1.0, 0.1, float(t))).amplitudes for t in traj.times]
    )
    assert np.max(np.abs(traj.states - closed)) < 1e-7


def test_state_vector_matches_qubit_bloch():
    from idmet import density_to_bloch, gnd_qubit_bloch

    angles = ProbeAngles(1.0, 0.5)
    psi0 = np.array([np.cos(0.5), np.exp(0.5j) * np.sin(0.5)], dtype=complex)
    # qubit H = omega sigma_3 has levels (+1, -1)
    cfg = IntegratorConfig(dt=1e-3, t_end=6.0, record_every=300)
    traj = integrate_state_vector(psi0, QUBIT_H, 0.1, 0.0, cfg)
    for t, psi in zip(traj.times, traj.states):
        r_numeric = density_to_bloch(np.outer(psi, psi.conj())).as_array()
        r_closed = gnd_qubit_bloch(angles, GndParams(1.0, 0.1, float(t))).as_array()
        assert np.max(np.abs(r_numeric - r_closed)) < 1e-6


@pytest.mark.parametrize("equation", ["mid", "gnd", "ensemble", "state"])
def test_fourth_order_convergence(equation):
    # omega = 0.25 keeps dt*|H| within the ceiling at the coarse step
    omega = 0.25
    h = np.array([omega, -omega])
    angles = ProbeAngles(1.2, 0.4)
    rho0 = qubit_projector(angles)
    psi0 = np.array([np.cos(0.6), np.exp(0.4j) * np.sin(0.6)], dtype=complex)
    errors = []
    for dt in (0.04, 0.02):
        steps_per_record = int(round(4.0 / dt))
        cfg = IntegratorConfig(dt=dt, t_end=40.0, record_every=steps_per_record, renormalize=False)
        if equation == "mid":
            traj = integrate_mid(rho0, h, 0.5, cfg)
            exact = np.array(
                [mid_qubit_density(angles, MidParams(omega, 0.5, float(t))).matrix for t in traj.times]
            )
            err = np.max(np.abs(traj.states - exact))
        else:
            if equation == "gnd":
                traj = integrate_gnd_density(rho0, h, 0.3, cfg)
            elif equation == "ensemble":
                traj = integrate_ensemble(rho0, h, 0.3, cfg)
            else:
                traj = to_projectors(integrate_state_vector(psi0, h, 0.3, 0.0, cfg))
            exact = np.array(
                [gnd_qubit_density(angles, GndParams(omega, 0.3, float(t))).matrix for t in traj.times]
            )
            err = np.max(np.abs(traj.states - exact))
        errors.append(err)
    assert errors[0] > 1e-12  # well above round-off so the ratio is meaningful
    assert errors[0] / errors[1] >= 8.0


def test_trace_preserved():
    angles = ProbeAngles(0.8, 0.1)
    cfg = IntegratorConfig(dt=1e-3, t_end=5.0, record_every=100)
    for integrate, lam in ((integrate_mid, 0.2), (integrate_gnd_density, 0.2), (integrate_ensemble, 0.2)):
        traj = integrate(qubit_projector(angles), QUBIT_H, lam, cfg)
        traces = np.einsum("tii->t", traj.states).real
        assert np.max(np.abs(traces - 1.0)) < 1e-9
