"""Physical parameters and the matrices of the linearized cavity-oscillator model.

Matrix layout (public contract): rows and columns are ordered
``(x1, p1, x2, p2, psi)`` where ``(x1, p1)`` are the mechanical quadratures,
``(x2, p2)`` the optical quadratures and ``psi`` the laser frequency noise.
Quadratures follow ``x = (a + a^dag)/2``, so the vacuum variance is 1/4.

Every builder returns matrices in units scaled by the mechanical frequency
(rates divided by ``omega_m``, times multiplied by it, ``psi`` divided by
``omega_m``) unless called with ``scaled=False``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

__all__ = [
    "ConfigurationError",
    "UnstableConfigurationError",
    "NoiseMode",
    "NoiseSpec",
    "PhysicalParams",
    "CouplingPhase",
    "FixedPoint",
    "thermal_occupation",
    "drift_matrix",
    "drift_matrix_mean",
    "diffusion_matrix",
    "rotation_generator",
    "drift_matrix_full",
    "fixed_points",
    "select_fixed_point",
    "is_hurwitz",
]

MECH = slice(0, 2)
OPT = slice(2, 4)
PSI = 4


class ConfigurationError(ValueError):
    """Invalid or contradictory physical configuration."""


class UnstableConfigurationError(RuntimeError):
    """No dynamically stable operating point exists."""


class NoiseMode(enum.Enum):
    COLORED = "colored"
    WHITE_EXACT = "white"
    NO_NOISE = "none"


@dataclass(frozen=True)
class NoiseSpec:
    """Laser frequency noise: linewidth ``Gamma_L`` and cutoff ``gamma_c`` in rad/s.

    ``WHITE_EXACT`` is the delta-correlated limit and requires ``gamma_c == 0``.
    A colored spec with ``Gamma_L == 0`` behaves exactly like ``NO_NOISE``.
    """

    Gamma_L: float = 0.0
    gamma_c: float = 0.0
    mode: NoiseMode = NoiseMode.COLORED

    def __post_init__(self):
        if not (self.Gamma_L >= 0 and self.gamma_c >= 0):
            raise ConfigurationError(
                f"Gamma_L and gamma_c must be >= 0 (got {self.Gamma_L}, {self.gamma_c})"
            )
        if self.mode is NoiseMode.WHITE_EXACT and self.gamma_c != 0:
            raise ConfigurationError(
                "white-noise mode and a finite cutoff gamma_c are mutually exclusive"
            )

    @property
    def active(self) -> bool:
        return self.mode is not NoiseMode.NO_NOISE and self.Gamma_L > 0

    @property
    def colored(self) -> bool:
        return self.active and self.mode is NoiseMode.COLORED


@dataclass(frozen=True)
class PhysicalParams:
    """One cavity/oscillator/laser configuration. All rates in rad/s.

    Use :meth:`from_coupling` to specify the coupling ``G`` directly.
    """

    omega_m: float
    kappa: float
    gamma: float
    g0: float
    alpha_s: float
    N_m: float = 0.0
    N_C: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self):
        if not (self.omega_m > 0 and self.kappa >= 0):
            raise ConfigurationError("omega_m must be > 0 and kappa >= 0")
        for name in ("gamma", "g0", "alpha_s", "N_m", "N_C"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigurationError(f"{name} must be finite and >= 0 (got {value})")
        if self.kappa >= self.omega_m:
            warnings.warn(
                f"kappa ({self.kappa:.4g}) >= omega_m ({self.omega_m:.4g}): outside the "
                "resolved-sideband regime, the rotating-wave model is unreliable",
                stacklevel=3,
            )

    @classmethod
    def from_coupling(cls, *, G: float, g0: float, **kwargs) -> "PhysicalParams":
        if g0 <= 0:
            raise ConfigurationError("g0 must be > 0 to derive alpha_s from G")
        return cls(g0=g0, alpha_s=G / g0, **kwargs)

    @property
    def G(self) -> float:
        return self.g0 * self.alpha_s

    @property
    def Q_m(self) -> float:
        return self.omega_m / self.gamma if self.gamma > 0 else math.inf

    def with_(self, **changes) -> "PhysicalParams":
        """Copy with fields replaced; accepts ``G`` (keeps g0) and noise fields."""
        noise_keys = {"Gamma_L", "gamma_c", "mode"} & changes.keys()
        if noise_keys:
            changes["noise"] = replace(
                changes.get("noise", self.noise), **{k: changes.pop(k) for k in noise_keys}
            )
        if "G" in changes:
            G = changes.pop("G")
            g0 = changes.get("g0", self.g0)
            changes["alpha_s"] = G / g0
        return replace(self, **changes)


class CouplingPhase(enum.Enum):
    """Sign of the beam-splitter coupling during each protocol segment."""

    WRITE = 1
    STORE = 0
    READ = -1


@dataclass(frozen=True)
class FixedPoint:
    alpha_s: complex
    beta: complex
    stable: bool
    detuning_used: float
    selected: bool = False

    @property
    def intensity(self) -> float:
        return abs(self.alpha_s) ** 2


def thermal_occupation(T: float, omega: float) -> float:
    """Bose-Einstein occupancy of a mode at angular frequency ``omega`` and temperature ``T``."""
    if not (T > 0 and omega > 0):
        raise ValueError(f"temperature and frequency must be positive (got T={T}, omega={omega})")
    x = constants.hbar * omega / (constants.k * T)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def _rates(params: PhysicalParams, scaled: bool):
    s = params.omega_m if scaled else 1.0
    return (
        params.omega_m / s,
        params.kappa / s,
        params.gamma / s,
        params.G / s,
        params.noise.Gamma_L / s,
        params.noise.gamma_c / s,
    )


def drift_matrix(params: PhysicalParams, phase: CouplingPhase = CouplingPhase.WRITE,
                 *, scaled: bool = True) -> np.ndarray:
    """Extended 5x5 drift of the rotating-wave quadrature equations.

    The noise coupling ``-alpha_s`` at (p2, psi) is present only while the
    control laser is on (write and read segments).
    """
    wm, kappa, gamma, G, _, gamma_c = _rates(params, scaled)
    G = G * phase.value
    laser = 0.0 if phase is CouplingPhase.STORE else params.alpha_s
    return np.array(
        [
            [-gamma / 2, wm, 0.0, -G, 0.0],
            [-wm, -gamma / 2, G, 0.0, 0.0],
            [0.0, -G, -kappa / 2, wm, 0.0],
            [G, 0.0, -wm, -kappa / 2, -laser],
            [0.0, 0.0, 0.0, 0.0, -gamma_c],
        ]
    )


def drift_matrix_mean(params: PhysicalParams, phase: CouplingPhase = CouplingPhase.WRITE,
                      *, scaled: bool = True) -> np.ndarray:
    """4x4 drift of the quadrature means (the noise variable drops out)."""
    return drift_matrix(params, phase, scaled=scaled)[:4, :4].copy()


def diffusion_matrix(params: PhysicalParams, *, laser_on: bool = True,
                     scaled: bool = True) -> np.ndarray:
    """Diagonal diffusion matrix for the extended state.

    ``laser_on=False`` drops the laser contribution (the storage segment);
    thermal and vacuum inputs act regardless.
    """
    noise = params.noise
    if noise.mode is NoiseMode.WHITE_EXACT and noise.gamma_c != 0:
        raise ConfigurationError("white-noise mode requires gamma_c == 0")
    _, kappa, gamma, _, Gamma_L, gamma_c = _rates(params, scaled)
    gamma_bar = gamma * (1 + 2 * params.N_m)
    kappa_bar = kappa * (1 + 2 * params.N_C)
    diag = np.array([gamma_bar / 4, gamma_bar / 4, kappa_bar / 4, kappa_bar / 4, 0.0])
    if laser_on and noise.active:
        if noise.mode is NoiseMode.COLORED:
            diag[PSI] = 2 * gamma_c**2 * Gamma_L
        else:
            diag[3] += 2 * Gamma_L * params.alpha_s**2
    return np.diag(diag)


def rotation_generator(omega_m: float = 1.0) -> np.ndarray:
    """Free-rotation generator of both modes; ``expm(-Q_r t)`` undoes the rotation."""
    if not omega_m > 0:
        raise ValueError("omega_m must be > 0")
    Q_r = np.zeros((5, 5))
    Q_r[0, 1] = Q_r[2, 3] = omega_m
    Q_r[1, 0] = Q_r[3, 2] = -omega_m
    return Q_r


def drift_matrix_full(params: PhysicalParams, Delta: float, *, G: float | None = None,
                      scaled: bool = True) -> np.ndarray:
    """4x4 linearized drift without the rotating-wave approximation.

    Used only to classify the stability of a fixed point; ``Delta`` is the
    effective detuning in rad/s.
    """
    s = params.omega_m if scaled else 1.0
    wm = params.omega_m / s
    kappa, gamma = params.kappa / s, params.gamma / s
    G = (params.G if G is None else G) / s
    D = Delta / s
    return np.array(
        [
            [-gamma / 2, wm, 0.0, 0.0],
            [-wm, -gamma / 2, 2 * G, 0.0],
            [0.0, 0.0, -kappa / 2, D],
            [2 * G, 0.0, -D, -kappa / 2],
        ]
    )


def is_hurwitz(M: np.ndarray) -> bool:
    return bool(np.max(np.linalg.eigvals(M).real) < 0)


def _fixed_point_residuals(params, E_L, Delta_0, alpha, beta):
    s = params.omega_m
    wm, kappa, gamma, g0 = 1.0, params.kappa / s, params.gamma / s, params.g0 / s
    E, D0 = E_L / s, Delta_0 / s
    u = abs(alpha) ** 2
    Delta = D0 - g0 * 2 * beta.real
    r1 = abs(alpha * (1j * Delta + kappa / 2) - E) / max(E, 1e-300)
    r2 = abs(beta * (1j * wm + gamma / 2) - 1j * g0 * u) / max(g0 * u, 1e-300)
    return r1, r2


def fixed_points(params: PhysicalParams, E_L: float, Delta_0: float) -> list[FixedPoint]:
    """Steady intracavity amplitude and mirror displacement for drive ``E_L``, detuning ``Delta_0``.

    ``params.alpha_s`` is ignored. Roots are returned in decreasing intensity;
    the highest-intensity stable root carries ``selected=True``.
    """
    if E_L < 0:
        raise ValueError("E_L must be >= 0")
    s = params.omega_m
    kappa, gamma, g0 = params.kappa / s, params.gamma / s, params.g0 / s
    E, D0 = E_L / s, Delta_0 / s
    if E == 0:
        fp = FixedPoint(0j, 0j, is_hurwitz(drift_matrix_full(params, Delta_0, G=0.0)), Delta_0)
        return _mark_selected([fp])

    c = 2 * g0**2 / (1 + gamma**2 / 4)
    lin = D0**2 + kappa**2 / 4
    if c == 0:
        us = [E**2 / lin]
    else:
        # u = u0 * v with u0 the empty-cavity intensity keeps coefficients O(1)
        u0 = E**2 / lin
        coeffs = [c**2 * u0**3, -2 * D0 * c * u0**2, lin * u0, -E**2]
        coeffs = np.asarray(coeffs) / E**2
        vs = np.roots(coeffs)
        us = []
        for v in vs:
            if abs(v.imag) <= 1e-7 * max(abs(v), 1.0) and v.real >= 0:
                us.append(_polish(v.real * u0, c, D0, lin, E))
        us = sorted(set(us), reverse=True)
    if not us:
        raise AssertionError("a non-negative drive always admits a real non-negative root")

    points = []
    for u in us:
        Delta = D0 - c * u
        alpha = E / (1j * Delta + kappa / 2)
        beta = 1j * g0 * abs(alpha) ** 2 / (1j + gamma / 2)
        Delta_si = (D0 - g0 * 2 * beta.real) * s
        Qf = drift_matrix_full(params, Delta_si, G=params.g0 * abs(alpha))
        points.append(FixedPoint(alpha, beta, is_hurwitz(Qf), Delta_si))
    return _mark_selected(points)


def _polish(u, c, D0, lin, E, iters=8):
    f = lambda u: c**2 * u**3 - 2 * D0 * c * u**2 + lin * u - E**2  # noqa: E731
    df = lambda u: 3 * c**2 * u**2 - 4 * D0 * c * u + lin  # noqa: E731
    for _ in range(iters):
        d = df(u)
        if d == 0:
            break
        step = f(u) / d
        u -= step
        if abs(step) <= 1e-16 * abs(u):
            break
    return max(u, 0.0)


def _mark_selected(points):
    stable = [p for p in points if p.stable]
    if not stable:
        return points
    best = max(stable, key=lambda p: p.intensity)
    return [replace(p, selected=(p is best)) for p in points]


def select_fixed_point(points: list[FixedPoint]) -> FixedPoint:
    for p in points:
        if p.selected:
            return p
    raise UnstableConfigurationError("no stable fixed point for this drive and detuning")
