"""Write/store/read storage protocol and the Gaussian overlap fidelity."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import (
    CouplingPhase,
    PhysicalParams,
    diffusion_matrix,
    drift_matrix,
    drift_matrix_mean,
    rotation_generator,
)
from .propagate import GaussianState, expm, propagate_cov_analytic, propagate_mean

__all__ = [
    "DegenerateStateError",
    "Psi0Mode",
    "RotationMode",
    "InputState",
    "ProtocolSpec",
    "FidelityResult",
    "initial_state",
    "cooled_start",
    "run_protocol",
    "propagate_phases",
    "protocol_phases",
    "rotate",
    "optimal_rotation",
    "rotate_compensate",
    "fidelity",
    "fidelity_direct",
    "storage_fidelity",
]

GRID_POINTS = 720


class DegenerateStateError(ValueError):
    """Sum of optical covariances is singular."""


class Psi0Mode(enum.Enum):
    PAPER_QUARTER = "paper"
    STATIONARY = "stationary"


class RotationMode(enum.Enum):
    FIXED_TOTAL_TIME = "fixed"
    NUMERIC_OPTIMIZE = "optimize"


@dataclass(frozen=True)
class InputState:
    """Displaced squeezed optical input ``D(alpha) S(r)|0>``.

    ``mechanical_cooled=False`` starts the oscillator in its thermal state.
    """

    alpha: complex = 1.0
    r: float = 0.0
    mechanical_cooled: bool = True
    psi0_mode: Psi0Mode = Psi0Mode.PAPER_QUARTER

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(abs(self.alpha))):
            raise ValueError("alpha and r must be finite")


@dataclass(frozen=True)
class ProtocolSpec:
    """Timing of the protocol, in seconds.

    ``t_s=None`` means a pi/2 pulse, ``pi / (2 G)``. Laser phase noise is
    injected only while the control laser is on unless
    ``phase_noise_in_store`` is set. ``cooling_prepulse`` simulates the
    cooling swap explicitly instead of assuming a cooled oscillator.
    """

    tau: float = 0.0
    t_s: float | None = None
    rotation_compensation: RotationMode = RotationMode.FIXED_TOTAL_TIME
    phase_noise_in_store: bool = False
    cooling_prepulse: bool = False

    def __post_init__(self):
        if not self.tau >= 0 or (self.t_s is not None and not self.t_s >= 0):
            raise ValueError("tau and t_s must be >= 0")

    def pulse_time(self, params: PhysicalParams) -> float:
        if self.t_s is not None:
            return self.t_s
        if params.G <= 0:
            raise ValueError("a pi/2 pulse needs G > 0; give t_s explicitly")
        return math.pi / (2 * params.G)

    def total_time(self, params: PhysicalParams) -> float:
        return 2 * self.pulse_time(params) + self.tau


@dataclass(frozen=True)
class FidelityResult:
    F: float
    n_h: float
    lam: float
    theta_opt: float = 0.0


def _psi0_variance(input: InputState, params: PhysicalParams) -> float:
    noise = params.noise
    if not noise.colored:
        return 0.0
    if input.psi0_mode is Psi0Mode.STATIONARY:
        return noise.Gamma_L * noise.gamma_c / params.omega_m**2
    # a quarter in physical units (rad/s)^2, expressed in scaled units
    return 0.25 / params.omega_m**2


def initial_state(input: InputState, params: PhysicalParams) -> GaussianState:
    alpha = complex(input.alpha)
    mech = 0.25 if input.mechanical_cooled else (1 + 2 * params.N_m) / 4
    cov = np.diag(
        [
            mech,
            mech,
            math.exp(-2 * input.r) / 4,
            math.exp(2 * input.r) / 4,
            _psi0_variance(input, params),
        ]
    )
    return GaussianState(np.array([0.0, 0.0, alpha.real, alpha.imag]), cov)


def _segment(state, params, phase, duration, laser_on):
    s = params.omega_m
    t = duration * s
    state = propagate_mean(state, drift_matrix_mean(params, phase), t, time_unit=1 / s)
    N = diffusion_matrix(params, laser_on=laser_on)
    # elapsed already advanced by propagate_mean
    return propagate_cov_analytic(state, drift_matrix(params, phase), N, t, time_unit=0.0)


def cooled_start(input: InputState, params: PhysicalParams, spec: ProtocolSpec) -> GaussianState:
    """Explicit cooling pulse: swap a thermal oscillator with the vacuum cavity,
    then load the input state into the (reset) optical mode."""
    thermal = InputState(alpha=0.0, r=0.0, mechanical_cooled=False, psi0_mode=input.psi0_mode)
    state = _segment(initial_state(thermal, params), params, CouplingPhase.WRITE,
                     spec.pulse_time(params), True)
    target = initial_state(input, params)
    cov = state.cov.copy()
    cov[2:4, :] = 0.0
    cov[:, 2:4] = 0.0
    cov[2:4, 2:4] = target.cov[2:4, 2:4]
    mean = state.mean.copy()
    mean[2:4] = target.mean[2:4]
    return GaussianState(mean, cov, 0.0)


def propagate_phases(params: PhysicalParams, state: GaussianState,
                     phases: list[tuple[CouplingPhase, float]], *,
                     phase_noise_in_store: bool = False) -> GaussianState:
    """Propagate through ``(phase, seconds)`` segments in order."""
    for phase, duration in phases:
        laser_on = phase is not CouplingPhase.STORE or phase_noise_in_store
        state = _segment(state, params, phase, duration, laser_on)
    return state


def protocol_phases(params: PhysicalParams, spec: ProtocolSpec) -> list[tuple[CouplingPhase, float]]:
    t_s = spec.pulse_time(params)
    return [(CouplingPhase.WRITE, t_s), (CouplingPhase.STORE, spec.tau), (CouplingPhase.READ, t_s)]


def run_protocol(params: PhysicalParams, state: GaussianState, spec: ProtocolSpec) -> GaussianState:
    """Write pulse, storage interval, then a read pulse with the coupling sign flipped."""
    return propagate_phases(params, state, protocol_phases(params, spec),
                            phase_noise_in_store=spec.phase_noise_in_store)


def rotate(state: GaussianState, theta: float) -> GaussianState:
    """Apply ``expm(-Q_r theta)`` (unit frequency) to means and covariance."""
    R = expm(-rotation_generator(1.0), theta)
    return state.replace(mean=R[:4, :4] @ state.mean, cov=R @ state.cov @ R.T)


def _fidelity_curve(reference: GaussianState, state: GaussianState, thetas: np.ndarray):
    c, s = np.cos(thetas), np.sin(thetas)
    R = np.empty(thetas.shape + (2, 2))
    R[..., 0, 0] = c
    R[..., 0, 1] = -s
    R[..., 1, 0] = s
    R[..., 1, 1] = c
    Vf = R @ state.optical_cov @ np.swapaxes(R, -1, -2)
    xf = R @ state.optical_mean
    S = reference.optical_cov + Vf
    d = reference.optical_mean - xf
    det = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    quad = (d[..., 0] ** 2 * S[..., 1, 1] - 2 * d[..., 0] * d[..., 1] * S[..., 0, 1]
            + d[..., 1] ** 2 * S[..., 0, 0]) / det
    return np.exp(-0.5 * quad) / (2 * np.sqrt(det))


def optimal_rotation(state: GaussianState, reference: GaussianState) -> float:
    """Angle in [0, 2 pi) maximizing the fidelity of the rotated state against ``reference``."""
    grid = np.linspace(0.0, 2 * np.pi, GRID_POINTS, endpoint=False)
    values = _fidelity_curve(reference, state, grid)
    k = int(np.argmax(values))
    step = grid[1] - grid[0]
    a, b, c = grid[k] - step, grid[k], grid[k] + step
    f = lambda th: -float(_fidelity_curve(reference, state, np.array(th)))  # noqa: E731
    best = grid[k]
    if f(b) < min(f(a), f(c)):
        res = optimize.minimize_scalar(f, bracket=(a, b, c), method="golden",
                                       options={"xtol": 1e-12})
        if res.fun <= f(b):
            best = float(res.x)
    return best % (2 * np.pi)


def rotate_compensate(state: GaussianState, spec: ProtocolSpec, omega_m: float, *,
                      total_time: float | None = None,
                      reference: GaussianState | None = None) -> tuple[GaussianState, float]:
    """Undo the free rotation accumulated during the protocol.

    Returns the rotated state and the angle used. ``total_time`` (seconds)
    is required for the fixed-time mode, ``reference`` for the optimizing one.
    """
    if spec.rotation_compensation is RotationMode.FIXED_TOTAL_TIME:
        if total_time is None:
            if spec.t_s is None:
                raise ValueError("total_time is needed when t_s is not fixed")
            total_time = 2 * spec.t_s + spec.tau
        theta = omega_m * total_time
    else:
        if reference is None:
            raise ValueError("numeric optimization needs the reference state")
        theta = optimal_rotation(state, reference)
    return rotate(state, theta), theta % (2 * np.pi)


def _sum_cov(initial, final):
    S = initial.optical_cov + final.optical_cov
    det = float(np.linalg.det(S))
    if not det > 0:
        raise DegenerateStateError(f"singular optical covariance sum (det={det:.3g})")
    return S, det


def fidelity(initial: GaussianState, final: GaussianState, theta: float = 0.0) -> FidelityResult:
    """Overlap ``Tr(rho_i rho_f)`` of the optical modes via heating and damping parameters."""
    S, det = _sum_cov(initial, final)
    d = initial.optical_mean - final.optical_mean
    root = math.sqrt(det)
    n_h = 2 * root - 1
    lam2 = float(d @ (root * np.linalg.inv(S)) @ d)
    F = math.exp(-lam2 / (1 + n_h)) / (1 + n_h)
    return FidelityResult(F, n_h, math.sqrt(max(lam2, 0.0)), theta)


def fidelity_direct(initial: GaussianState, final: GaussianState) -> float:
    """Same overlap written as a Gaussian integral, without the intermediate parameters."""
    S, det = _sum_cov(initial, final)
    d = initial.optical_mean - final.optical_mean
    return math.exp(-0.5 * float(d @ np.linalg.solve(S, d))) / (2 * math.sqrt(det))


def storage_fidelity(params: PhysicalParams, input: InputState | None = None,
                     spec: ProtocolSpec | None = None) -> FidelityResult:
    input = input or InputState()
    spec = spec or ProtocolSpec()
    start = initial_state(input, params)
    if spec.cooling_prepulse:
        start = cooled_start(input, params, spec)
    final = run_protocol(params, start, spec)
    rotated, theta = rotate_compensate(final, spec, params.omega_m,
                                       total_time=spec.total_time(params), reference=start)
    return fidelity(start, rotated, theta)
