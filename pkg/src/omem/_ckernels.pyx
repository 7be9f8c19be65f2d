# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Semantics must match ``omem._pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def em_segment(double[:, ::1] x, const double[:, :, ::1] noise, const double[:, ::1] A,
               double coupling, const double[::1] sd, double decay, double ou_sd,
               double dt, double blowup):
    """Advance every trajectory in ``x`` through ``noise.shape[1]`` steps.

    Returns the index of the first trajectory whose state exceeds ``blowup``,
    or -1.
    """
    cdef Py_ssize_t B = x.shape[0], S = noise.shape[1]
    cdef Py_ssize_t b, k, i, j
    cdef double q[4]
    cdef double dq[4]
    cdef double psi, acc
    for b in range(B):
        for i in range(4):
            q[i] = x[b, i]
        psi = x[b, 4]
        for k in range(S):
            for i in range(4):
                acc = 0.0
                for j in range(4):
                    acc = acc + A[i, j] * q[j]
                dq[i] = acc
            dq[3] = dq[3] + coupling * psi
            for i in range(4):
                q[i] = q[i] + dt * dq[i] + sd[i] * noise[b, k, i]
            psi = psi * decay + ou_sd * noise[b, k, 4]
        for i in range(4):
            x[b, i] = q[i]
            if not fabs(q[i]) <= blowup:
                return b
        x[b, 4] = psi
    return -1


cdef inline void _lyap(const double[:, ::1] Q, const double[:, ::1] N, double[:, ::1] V,
                       double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = V.shape[0], i, j, k
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for k in range(n):
                acc = acc + Q[i, k] * V[k, j] + V[i, k] * Q[j, k]
            out[i, j] = acc + N[i, j]


def lyapunov_rk4(V0, Q, N, double dt, Py_ssize_t n_steps):
    """Classical RK4 on dV/dt = Q V + V Q^T + N; returns the final matrix."""
    cdef double[:, ::1] Qv = np.ascontiguousarray(Q, dtype=np.float64)
    cdef double[:, ::1] Nv = np.ascontiguousarray(N, dtype=np.float64)
    V_arr = np.array(V0, dtype=np.float64, order="C")
    cdef double[:, ::1] V = V_arr
    cdef Py_ssize_t n = V.shape[0], s, i, j
    cdef double[:, ::1] k1 = np.empty((n, n)), k2 = np.empty((n, n))
    cdef double[:, ::1] k3 = np.empty((n, n)), k4 = np.empty((n, n))
    cdef double[:, ::1] tmp = np.empty((n, n))
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    with nogil:
        for s in range(n_steps):
            _lyap(Qv, Nv, V, k1)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = V[i, j] + h2 * k1[i, j]
            _lyap(Qv, Nv, tmp, k2)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = V[i, j] + h2 * k2[i, j]
            _lyap(Qv, Nv, tmp, k3)
            for i in range(n):
                for j in range(n):
                    tmp[i, j] = V[i, j] + dt * k3[i, j]
            _lyap(Qv, Nv, tmp, k4)
            for i in range(n):
                for j in range(n):
                    V[i, j] = V[i, j] + h6 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
    return V_arr
