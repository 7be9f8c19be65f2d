"""Propagation of Gaussian first and second moments under a fixed drift/diffusion pair.

Matrices and times are in mechanical-frequency-scaled units. ``time_unit``
converts a scaled duration back to seconds for the ``elapsed`` bookkeeping.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels

__all__ = [
    "GaussianState",
    "Method",
    "PropagationReport",
    "expm",
    "lyapunov_increment",
    "propagate_mean",
    "propagate_cov_analytic",
    "propagate_cov_ode",
    "symplectic_form",
]


def symplectic_form(n_modes: int = 2) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Quadrature means ``(x1, p1, x2, p2)`` and the 5x5 extended covariance.

    The covariance is symmetrized on construction. ``elapsed`` is in seconds.
    """

    mean: np.ndarray
    cov: np.ndarray
    elapsed: float = 0.0

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(4)
        cov = np.array(self.cov, dtype=float).reshape(5, 5)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2)

    @property
    def optical_mean(self) -> np.ndarray:
        return self.mean[2:4]

    @property
    def optical_cov(self) -> np.ndarray:
        return self.cov[2:4, 2:4]

    def uncertainty_floor(self) -> float:
        """Smallest eigenvalue of ``V4 + (i/4) Omega``; negative means unphysical."""
        H = self.cov[:4, :4] + 0.25j * symplectic_form(2)
        return float(np.linalg.eigvalsh(H).min())

    def is_physical(self, tol: float = 1e-10) -> bool:
        return self.uncertainty_floor() >= -tol and self.cov[4, 4] >= -tol

    def replace(self, **changes) -> "GaussianState":
        kw = {"mean": self.mean, "cov": self.cov, "elapsed": self.elapsed}
        kw.update(changes)
        return GaussianState(**kw)


class Method(enum.Enum):
    ANALYTIC = "analytic"
    RK4 = "rk4"


@dataclass(frozen=True)
class PropagationReport:
    """``max_symmetry_defect`` is ``max|V - V^T|`` before re-symmetrizing,
    relative to ``max(1, max|V|)``."""

    method: Method
    steps: int
    max_symmetry_defect: float = field(default=0.0)


def expm(M: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Matrix exponential ``exp(M t)`` (Pade scaling-and-squaring)."""
    M = np.asarray(M, dtype=float)
    if not (np.all(np.isfinite(M)) and math.isfinite(t)):
        raise ValueError("matrix exponential of non-finite input")
    return scipy.linalg.expm(M * t)


def _check_time(t):
    if not t >= 0:
        raise ValueError(f"propagation time must be >= 0 (got {t})")


def lyapunov_increment(Q: np.ndarray, N: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Return ``(exp(Q t), W, k)`` with ``W = int_0^t exp(Q s) N exp(Q^T s) ds``.

    The integral comes from the exponential of the block matrix
    ``[[-Q, N], [0, Q^T]]`` over a sub-interval ``h = t / 2**k`` short enough
    that ``exp(-Q h)`` does not overflow the cancellation; ``k`` doublings
    ``W <- P W P^T + W``, ``P <- P P`` then cover ``t``.
    """
    Q = np.asarray(Q, dtype=float)
    N = np.asarray(N, dtype=float)
    n = Q.shape[0]
    if t == 0:
        return np.eye(n), np.zeros((n, n)), 0
    decay = max(float(np.max(np.abs(np.linalg.eigvals(Q).real))), 1e-300)
    k = max(0, math.ceil(math.log2(decay * t / 0.5))) if decay * t > 0.5 else 0
    h = t / 2**k
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -Q
    M[:n, n:] = N
    M[n:, n:] = Q.T
    E = expm(M, h)
    P = E[n:, n:].T
    W = P @ E[:n, n:]
    W = (W + W.T) / 2
    for _ in range(k):
        W = P @ W @ P.T + W
        P = P @ P
    return P, (W + W.T) / 2, k


def propagate_mean(state: GaussianState, Q4: np.ndarray, t: float, *,
                   time_unit: float = 1.0) -> GaussianState:
    _check_time(t)
    if t == 0:
        return state
    mean = expm(Q4, t) @ state.mean
    return state.replace(mean=mean, elapsed=state.elapsed + t * time_unit)


def _symmetrize(V):
    # asymmetry before re-symmetrizing, relative to the largest entry
    scale = max(1.0, float(np.max(np.abs(V)))) if V.size else 1.0
    defect = float(np.max(np.abs(V - V.T))) / scale if V.size else 0.0
    return (V + V.T) / 2, defect


def propagate_cov_analytic(state: GaussianState, Q_E: np.ndarray, N: np.ndarray, t: float, *,
                           time_unit: float = 1.0, with_report: bool = False):
    """Exact covariance update ``P V P^T + W`` over time ``t``."""
    _check_time(t)
    P, W, k = lyapunov_increment(Q_E, N, t)
    V, defect = _symmetrize(P @ state.cov @ P.T + W)
    out = state.replace(cov=V, elapsed=state.elapsed + t * time_unit)
    if with_report:
        return out, PropagationReport(Method.ANALYTIC, k + 1, defect)
    return out


def propagate_cov_ode(state: GaussianState, Q_E: np.ndarray, N: np.ndarray, t: float,
                      dt: float, *, time_unit: float = 1.0, with_report: bool = False):
    """Classical RK4 on ``dV/dt = Q_E V + V Q_E^T + N``.

    The step is shrunk to ``t / ceil(t / dt)`` so the last step lands on ``t``.
    """
    _check_time(t)
    if not dt > 0:
        raise ValueError(f"step size must be > 0 (got {dt})")
    if t == 0:
        out = state
        steps = 0
        defect = 0.0
    else:
        if dt > t:
            raise ValueError(f"step size {dt} exceeds the propagation time {t}")
        steps = math.ceil(t / dt - 1e-9)
        V = kernels.lyapunov_rk4(state.cov, Q_E, N, t / steps, steps)
        V, defect = _symmetrize(np.asarray(V))
        out = state.replace(cov=V, elapsed=state.elapsed + t * time_unit)
    if with_report:
        return out, PropagationReport(Method.RK4, steps, defect)
    return out
