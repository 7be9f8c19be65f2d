"""Time the compiled kernels against the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--traj 1000] [--steps 2000]

Both backends are run on identical inputs; the script also reports the
largest difference between their outputs.
"""
import argparse
import timeit

import numpy as np

from omem import _pykernels

try:
    from omem import _ckernels
except ImportError:
    _ckernels = None


def em_inputs(n_traj, n_steps, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n_traj, 5)) * 0.5
    noise = rng.normal(size=(n_traj, n_steps, 5))
    A = np.array([[-0.01, 1.0, 0.0, 0.0],
                  [-1.0, -0.01, 0.0, 0.05],
                  [0.0, 0.0, -0.1, 1.0],
                  [0.05, 0.0, -1.0, -0.1]])
    sd = np.full(4, 0.01)
    return x, noise, A, -0.1, sd, 0.999, 0.01, 1e-3


def lyapunov_inputs(seed=0):
    rng = np.random.default_rng(seed)
    V0 = np.eye(5) / 4
    Q = rng.normal(size=(5, 5)) * 0.2 - np.eye(5)
    N = np.diag(np.abs(rng.normal(size=5)))
    return V0, Q, N, 1e-3


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def run(repeat, n_traj, n_steps):
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    em = em_inputs(n_traj, n_steps)
    ly = lyapunov_inputs()
    rows = []
    outputs = {}
    for name, mod in backends.items():
        x = em[0].copy()
        mod.em_segment(x, *em[1:], 1e9)
        outputs[(name, "em")] = x
        outputs[(name, "rk4")] = np.asarray(mod.lyapunov_rk4(*ly, n_steps))
        t_em = best_of(lambda: mod.em_segment(em[0].copy(), *em[1:], 1e9), repeat)
        t_rk = best_of(lambda: mod.lyapunov_rk4(*ly, n_steps), repeat)
        rows.append((name, t_em, t_rk))

    print(f"em_segment: {n_traj} trajectories x {n_steps} steps; "
          f"lyapunov_rk4: {n_steps} steps (best of {repeat})")
    print(f"{'backend':<8} {'em_segment [s]':>15} {'lyapunov_rk4 [s]':>17}")
    for name, t_em, t_rk in rows:
        print(f"{name:<8} {t_em:>15.4f} {t_rk:>17.4f}")
    if len(rows) == 2:
        (_, pe, pr), (_, ce, cr) = rows
        print(f"speedup  {pe / ce:>15.1f}x {pr / cr:>16.1f}x")
        for kind in ("em", "rk4"):
            diff = np.max(np.abs(outputs[("python", kind)] - outputs[("cython", kind)]))
            print(f"max |python - cython| ({kind}) = {diff:.2e}")
    else:
        print("compiled kernels not built; only the fallback was timed")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--traj", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args(argv)
    run(args.repeat, args.traj, args.steps)


if __name__ == "__main__":
    main()
