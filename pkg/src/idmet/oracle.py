"""Independent fixed-step RK4 integration of the four evolution equations.

These integrators exist to validate the closed-form solutions and analytic
derivatives; they share no algebra with the model modules beyond the
Hamiltonians themselves.  All Hamiltonians handled here are diagonal in the
computational basis, so commutators with H act entrywise through the gap
matrix g_jk = h_j - h_k.

Equations (h = H diagonal, all states complex numpy arrays):

    dephasing density:       rho' = -i[H,rho] - mu [H,[H,rho]]
    dissipation density:     rho' = -i[H,rho] - gamma [[H,rho],rho]
    dissipation ensemble:    rho' = -i[H,rho] - gamma {H,rho} + 2 gamma rho Tr(H rho)
    dissipation state:       psi' = (-(i+gamma) H + gamma <H> + i k) psi

The ensemble form is the pure-state-compatible sign: for rho = |psi><psi|
one has [[H,rho],rho] = {H,rho} - 2 rho Tr(H rho), so both dissipation
equations coincide on pure states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_matrix
from .errors import ConfigError, ShapeError, StepSizeError

MAX_PHASE_PER_STEP = 0.01  # dt * max|h| must not exceed this


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 run: step dt, horizon t_end, optional per-step renormalization.

    ``record_every`` thins the stored trajectory to every k-th step (the
    final step is always recorded); it has no effect on the integration.
    """

    dt: float
    t_end: float
    method: str = "rk4"
    renormalize: bool = True
    record_every: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (np.isfinite(self.t_end) and self.t_end >= self.dt):
            raise ConfigError(f"t_end must be >= dt, got {self.t_end!r}")
        if self.method != "rk4":
            raise ConfigError(f"unsupported method {self.method!r}")
        if int(self.record_every) < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every!r}")


@dataclass(frozen=True)
class Trajectory:
    """Times and the matching stack of states (k,d,d) for densities, (k,d) for vectors."""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def compare_trajectories(a: Trajectory, b: Trajectory) -> float:
    """Max over time and entries of |a - b|; requires identical time grids."""
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise ShapeError("trajectories are sampled on different time grids")
    if a.states.shape != b.states.shape:
        raise ShapeError(
            f"trajectory state shapes differ: {a.states.shape} vs {b.states.shape}"
        )
    return float(np.max(np.abs(a.states - b.states)))


def to_projectors(traj: Trajectory) -> Trajectory:
    """Convert a state-vector trajectory to its rank-1 density trajectory."""
    if traj.states.ndim != 2:
        raise ShapeError("expected a state-vector trajectory")
    states = np.einsum("tj,tk->tjk", traj.states, traj.states.conj())
    return Trajectory(times=traj.times, states=states)


def _check_step(h: np.ndarray, cfg: IntegratorConfig):
    scale = float(np.max(np.abs(h)))
    if scale > 0.0 and cfg.dt * scale > MAX_PHASE_PER_STEP * (1.0 + 1e-12):
        raise ConfigError(
            f"dt={cfg.dt!r} too large for max|H|={scale!r}: "
            f"dt*|H| must stay below {MAX_PHASE_PER_STEP}"
        )


def _grid(cfg: IntegratorConfig) -> int:
    n = int(round(cfg.t_end / cfg.dt))
    return max(n, 1)


def _record_indices(n_steps: int, every: int) -> np.ndarray:
    idx = np.arange(0, n_steps + 1, every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def _integrate_density(rho0, h, cfg: IntegratorConfig, rhs) -> Trajectory:
    rho = as_matrix(rho0).astype(complex)
    h = np.asarray(h, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] != h.size:
        raise ShapeError(
            f"state shape {rho.shape} incompatible with H_diag of length {h.size}"
        )
    _check_step(h, cfg)
    n_steps = _grid(cfg)
    record = _record_indices(n_steps, cfg.record_every)
    trace0 = float(np.trace(rho).real)
    out = np.empty((record.size, *rho.shape), dtype=complex)
    out[0] = rho
    dt = cfg.dt
    pos = 1
    for step in range(1, n_steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if pos < record.size and step == record[pos]:
            out[pos] = rho
            pos += 1
    drift = abs(float(np.trace(rho).real) - trace0)
    if drift > 1e-9:
        raise StepSizeError(f"trace drifted by {drift:.3e} over the run")
    return Trajectory(times=record * dt, states=out)


def integrate_mid(rho0, h_diag, mu: float, cfg: IntegratorConfig) -> Trajectory:
    """RK4 trajectory of the dephasing master equation (diagonal H)."""
    h = np.asarray(h_diag, dtype=float)
    gap = h[:, None] - h[None, :]
    multiplier = -1.0j * gap - mu * gap ** 2

    def rhs(rho):
        return multiplier * rho

    return _integrate_density(rho0, h, cfg, rhs)


def integrate_gnd_density(rho0, h_diag, gamma: float, cfg: IntegratorConfig) -> Trajectory:
    """RK4 trajectory of the nonlinear dissipation equation (diagonal H)."""
    h = np.asarray(h_diag, dtype=float)
    gap = h[:, None] - h[None, :]

    def rhs(rho):
        comm = gap * rho
        return -1.0j * comm - gamma * (comm @ rho - rho @ comm)

    return _integrate_density(rho0, h, cfg, rhs)


def integrate_ensemble(rho0, h_diag, gamma: float, cfg: IntegratorConfig) -> Trajectory:
    """RK4 trajectory of the ensemble (anticommutator) form of the dissipation equation.

    Coincides with integrate_gnd_density whenever the initial state is pure.
    """
    h = np.asarray(h_diag, dtype=float)
    gap = h[:, None] - h[None, :]
    hsum = h[:, None] + h[None, :]

    def rhs(rho):
        mean_h = float(np.dot(h, np.diag(rho).real))
        return -1.0j * gap * rho - gamma * hsum * rho + 2.0 * gamma * mean_h * rho

    return _integrate_density(rho0, h, cfg, rhs)


def integrate_state_vector(
    psi0, h_diag, gamma: float, k: float, cfg: IntegratorConfig
) -> Trajectory:
    """RK4 trajectory of the state-vector dissipation equation for constant gauge k.

    The projector trajectory is k-independent; with ``cfg.renormalize`` the
    state is renormalized each step and a per-step norm drift beyond 1e-6
    raises StepSizeError (the continuum equation conserves the norm only
    through the <H> counterterm).
    """
    psi = (
        np.asarray(psi0.amplitudes, dtype=complex)
        if hasattr(psi0, "amplitudes")
        else np.asarray(psi0, dtype=complex)
    )
    h = np.asarray(h_diag, dtype=float)
    if psi.ndim != 1 or psi.size != h.size:
        raise ShapeError(f"state length {psi.size} incompatible with H_diag length {h.size}")
    _check_step(h, cfg)
    n_steps = _grid(cfg)
    record = _record_indices(n_steps, cfg.record_every)
    out = np.empty((record.size, psi.size), dtype=complex)
    out[0] = psi

    def rhs(v):
        norm_sq = float(np.sum(np.abs(v) ** 2))
        mean_h = float(np.dot(h, np.abs(v) ** 2)) / norm_sq
        return (-(1.0j + gamma) * h + gamma * mean_h + 1.0j * k) * v

    dt = cfg.dt
    pos = 1
    for step in range(1, n_steps + 1):
        k1 = rhs(psi)
        k2 = rhs(psi + 0.5 * dt * k1)
        k3 = rhs(psi + 0.5 * dt * k2)
        k4 = rhs(psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if cfg.renormalize:
            norm = float(np.linalg.norm(psi))
            if abs(norm - 1.0) > 1e-6:
                raise StepSizeError(f"norm drifted to {norm!r} within one step")
            psi = psi / norm
        if pos < record.size and step == record[pos]:
            out[pos] = psi
            pos += 1
    return Trajectory(times=record * dt, states=out)
