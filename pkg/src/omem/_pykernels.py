"""Pure NumPy versions of the compiled inner loops in ``_ckernels.pyx``."""
import numpy as np


def em_segment(x, noise, A, coupling, sd, decay, ou_sd, dt, blowup):
    # vectorized across trajectories, sequential in time
    q = x[:, :4].copy()
    psi = x[:, 4].copy()
    At = np.asarray(A).T
    sd = np.asarray(sd)
    for k in range(noise.shape[1]):
        xi = noise[:, k, :]
        dq = q @ At
        dq[:, 3] += coupling * psi
        q += dt * dq + sd * xi[:, :4]
        psi = psi * decay + ou_sd * xi[:, 4]
    x[:, :4] = q
    x[:, 4] = psi
    bad = np.flatnonzero(~(np.abs(q) <= blowup).all(axis=1))
    return int(bad[0]) if bad.size else -1


def lyapunov_rk4(V0, Q, N, dt, n_steps):
    V = np.array(V0, dtype=float)
    Q = np.asarray(Q, dtype=float)
    N = np.asarray(N, dtype=float)

    def f(V):
        return Q @ V + V @ Q.T + N

    for _ in range(int(n_steps)):
        k1 = f(V)
        k2 = f(V + 0.5 * dt * k1)
        k3 = f(V + 0.5 * dt * k2)
        k4 = f(V + dt * k3)
        V = V + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return V
