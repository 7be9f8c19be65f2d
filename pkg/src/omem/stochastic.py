"""Monte Carlo oracle: sampled noise paths through the linear Langevin equations.

Random numbers come from NumPy's Philox4x32-10 counter-based generator.
Trajectory ``j`` of a run with seed ``s`` draws from its own stream keyed by
``SeedSequence(s, spawn_key=(j,))``: first five normals for its initial
state, then five per time step (four input noises and the laser noise
increment). Results are therefore independent of block size and of the
order in which blocks are processed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import (
    ConfigurationError,
    CouplingPhase,
    NoiseMode,
    NoiseSpec,
    PhysicalParams,
    diffusion_matrix,
    drift_matrix,
)
from .propagate import GaussianState

__all__ = [
    "StepSizeError",
    "TrajectoryConfig",
    "EmpiricalMoments",
    "trajectory_rng",
    "ou_path",
    "simulate_trajectories",
    "jackknife_cov_stderr",
]

BLOWUP = 1e9
TIME_CHUNK = 4096


class StepSizeError(RuntimeError):
    """A trajectory diverged; the step is too coarse for the dynamics."""


@dataclass(frozen=True)
class TrajectoryConfig:
    """Step ``dt`` in seconds. ``n_steps`` is only used by :func:`ou_path`; the
    trajectory simulator derives its step counts from the segment durations."""

    dt: float
    n_traj: int = 5000
    seed: int = 0
    n_steps: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.n_traj < 2:
            raise ValueError("at least two trajectories are needed for moments")


@dataclass(frozen=True, eq=False)
class EmpiricalMoments:
    mean: np.ndarray
    cov: np.ndarray
    stderr_mean: np.ndarray
    stderr_cov: np.ndarray
    n_traj: int


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def ou_path(noise: NoiseSpec, dt: float, n_steps: int, seed: int, *,
            psi0: str | float = "stationary") -> np.ndarray:
    """Exactly discretized laser frequency noise, ``n_steps + 1`` samples in rad/s.

    ``psi0`` is ``"stationary"`` (drawn from the equilibrium law), ``"zero"``,
    ``"paper"`` (variance 1/4) or an explicit starting value.
    """
    if noise.mode is NoiseMode.WHITE_EXACT:
        raise ConfigurationError("white noise has no path; use a large gamma_c instead")
    rng = trajectory_rng(seed, 0)
    var = noise.Gamma_L * noise.gamma_c if noise.active else 0.0
    if psi0 == "stationary":
        start = math.sqrt(var) * rng.standard_normal()
    elif psi0 == "paper":
        start = 0.5 * rng.standard_normal()
    elif psi0 == "zero":
        start = 0.0
    else:
        start = float(psi0)
    decay = math.exp(-noise.gamma_c * dt)
    sd = math.sqrt(var * (1 - decay**2))
    xi = rng.standard_normal(n_steps)
    path = np.empty(n_steps + 1)
    path[0] = start
    for k in range(n_steps):
        path[k + 1] = path[k] * decay + sd * xi[k]
    return path


def _segment_coefficients(params, phase, dt_s, laser_on):
    Q = drift_matrix(params, phase)
    N = diffusion_matrix(params, laser_on=laser_on)
    gamma_c = Q[4, 4] * -1.0
    decay = math.exp(-gamma_c * dt_s)
    if gamma_c > 0:
        ou_sd = math.sqrt(N[4, 4] / (2 * gamma_c) * (1 - decay**2))
    else:
        ou_sd = math.sqrt(N[4, 4] * dt_s)
    sd = np.sqrt(np.diag(N)[:4] * dt_s)
    return np.ascontiguousarray(Q[:4, :4]), float(Q[3, 4]), sd, decay, ou_sd


def _max_rate(params):
    Q = drift_matrix(params, CouplingPhase.WRITE)
    Q[3, 4] = 0.0
    return float(np.abs(Q).sum(axis=1).max())


def _cov_sqrt(cov):
    w, U = np.linalg.eigh(cov)
    return U * np.sqrt(np.clip(w, 0.0, None))


def jackknife_cov_stderr(x: np.ndarray) -> np.ndarray:
    """Delete-one jackknife standard error of the sample covariance (closed form).

    With two samples the delete-one covariance is undefined; the normal-theory
    value ``sqrt((c_ii c_jj + c_ij^2) / (n - 1))`` is returned instead.
    """
    n = x.shape[0]
    d = x - x.mean(axis=0)
    if n < 3:
        c = np.cov(x, rowvar=False)
        return np.sqrt((np.outer(np.diag(c), np.diag(c)) + c**2) / (n - 1))
    outer = np.einsum("ki,kj->kij", d, d)
    dev = outer - outer.mean(axis=0)
    var = n / ((n - 1) * (n - 2) ** 2) * np.einsum("kij,kij->ij", dev, dev)
    return np.sqrt(var)


def simulate_trajectories(params: PhysicalParams, state0: GaussianState,
                          phase_sequence: list[tuple[CouplingPhase, float]],
                          cfg: TrajectoryConfig, *, phase_noise_in_store: bool = False,
                          block: int = 256) -> EmpiricalMoments:
    """Euler-Maruyama integration of the quadratures, exact updates for the laser noise.

    Input noises are real white noises whose variances match the symmetrized
    quantum correlators, so the ensemble reproduces the covariance the
    deterministic engine evolves.
    """
    s = params.omega_m
    dt_s = cfg.dt * s
    if dt_s > 0.05 / max(_max_rate(params), 1e-300):
        warnings.warn(f"dt = {cfg.dt:.3g} s is coarse for these rates; expect bias", stacklevel=2)

    segments = []
    for phase, duration in phase_sequence:
        steps = int(round(duration / cfg.dt))
        if steps == 0:
            continue
        laser_on = phase is not CouplingPhase.STORE or phase_noise_in_store
        segments.append((steps, _segment_coefficients(params, phase, dt_s, laser_on)))

    mean5 = np.append(state0.mean, 0.0)
    L = _cov_sqrt(state0.cov)
    final = np.empty((cfg.n_traj, 5))
    for start in range(0, cfg.n_traj, block):
        idx = range(start, min(start + block, cfg.n_traj))
        rngs = [trajectory_rng(cfg.seed, j) for j in idx]
        z = np.stack([g.standard_normal(5) for g in rngs])
        x = np.ascontiguousarray(mean5 + z @ L.T)
        for steps, (A, coupling, sd, decay, ou_sd) in segments:
            done = 0
            while done < steps:
                n = min(TIME_CHUNK, steps - done)
                noise = np.ascontiguousarray(np.stack([g.standard_normal((n, 5)) for g in rngs]))
                bad = kernels.em_segment(x, noise, A, coupling, sd, decay, ou_sd, dt_s, BLOWUP)
                if bad >= 0:
                    raise StepSizeError(
                        f"trajectory {start + bad} diverged (|x| > {BLOWUP:g}); reduce dt"
                    )
                done += n
        final[start:start + len(idx)] = x

    n = cfg.n_traj
    cov = np.cov(final, rowvar=False)
    return EmpiricalMoments(
        mean=final[:, :4].mean(axis=0),
        cov=(cov + cov.T) / 2,
        stderr_mean=final[:, :4].std(axis=0, ddof=1) / math.sqrt(n),
        stderr_cov=jackknife_cov_stderr(final),
        n_traj=n,
    )
