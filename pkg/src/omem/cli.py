"""``omem`` command-line interface.

Exit codes: 0 ok, 1 Monte Carlo disagreement (some |z| > 4), 2 invalid
configuration, 3 no stable operating point, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import kernels
from .config import (
    PRESETS,
    Config,
    apply_preset,
    build_scenario,
    canonical_config,
    effective_parameters,
    load_config,
    parse_quantity,
)
from .model import ConfigurationError, CouplingPhase, UnstableConfigurationError
from .protocol import DegenerateStateError, initial_state, propagate_phases, protocol_phases
from .stochastic import StepSizeError, TrajectoryConfig, simulate_trajectories
from .sweep import FIGURES, Axis, SweepSpec, _fmt, evaluate, run_figure, run_sweep, to_csv

EXIT_MC = 1
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
EXIT_NUMERIC = 4
Z_LIMIT = 4.0

# flag -> config key
FLAG_KEYS = {
    "GammaL": "GammaL",
    "gammac": "gammac",
    "alpha": "alpha",
    "r": "r",
    "tau": "tau",
    "Qm": "Qm",
    "G": "G",
    "T": "T",
    "frequency_convention": "frequency_convention",
    "psi0": "psi0",
    "rotation": "rotation",
    "noise_mode": "noise_mode",
}


def _config_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("configuration")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--config", metavar="PATH", help="key = value file")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    g.add_argument("--GammaL", help="laser linewidth, e.g. 1kHz")
    g.add_argument("--gammac", help="frequency-noise cutoff, e.g. 0.5MHz")
    g.add_argument("--alpha", help="input displacement, e.g. 1 or 1+0.5j")
    g.add_argument("--r", help="squeezing parameter")
    g.add_argument("--tau", help="storage time, e.g. 0.95us")
    g.add_argument("--Qm", help="mechanical quality factor (gamma = omega_m / Qm)")
    g.add_argument("--G", help="coupling rate, e.g. 0.05wm or 534.5kHz")
    g.add_argument("--T", help="bath temperature (sets N_m), e.g. 1.7mK")
    g.add_argument("--frequency-convention", dest="frequency_convention",
                   choices=["angular", "ordinary"])
    g.add_argument("--psi0", choices=["paper", "stationary"])
    g.add_argument("--rotation", choices=["fixed", "optimize"])
    g.add_argument("--noise-mode", dest="noise_mode", choices=["colored", "white", "none"])


def build_config(args, default_preset: str | None = None) -> Config:
    config = Config()
    preset = args.preset or (None if args.config else default_preset)
    if preset:
        apply_preset(config, preset)
    if args.config:
        load_config(args.config, config)
    if not config.values:
        raise ConfigurationError("no configuration: give --preset or --config")
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            config.set(key, value, origin=f"--{flag.replace('_', '-')}")
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        config.set(key.strip(), value, origin="--set")
    return config


def cmd_fidelity(args) -> int:
    config = build_config(args)
    scenario, res = evaluate(config)
    eff = effective_parameters(scenario, config.convention)
    print(f"F        = {res.F:.6f}")
    print(f"n_h      = {res.n_h:.6g}")
    print(f"lambda   = {res.lam:.6g}")
    print(f"theta    = {res.theta_opt:.6g} rad")
    for key, value in eff.items():
        print(f"{key:<21}= {_fmt(value)}")
    if res.F < 0.5:
        print(f"warning: fidelity {res.F:.3f} is below 0.5", file=sys.stderr)
    if args.out:
        from .sweep import ResultRow, PARAM_COLUMNS

        row = ResultRow("", "", float("nan"), res.F, res.n_h, res.lam, res.theta_opt,
                        eff["t_s"], eff["tau"], {k: eff[k] for k in PARAM_COLUMNS})
        _write(args.out, to_csv([row], eff))
    return 0


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_sweep(args) -> int:
    if args.figure:
        overrides = None
        if any(getattr(args, f, None) is not None for f in FLAG_KEYS) or args.set or args.config:
            overrides = build_config(args, default_preset=None) if (args.config or args.preset) \
                else _flags_only(args)
        rows = run_figure(args.figure, overrides=overrides, n_jobs=args.jobs)
        meta = {"figure": args.figure, "series": len(FIGURES[args.figure])}
        if overrides is not None:
            meta.update({f"override {k}": v for k, v in overrides.values.items()})
    else:
        if not (args.axis and args.start is not None and args.stop is not None):
            raise ConfigurationError("sweep needs --figure, or --axis with --start and --stop")
        config = build_config(args)
        spec = SweepSpec(Axis(args.axis), args.start, args.stop, args.points, args.spacing)
        rows = run_sweep(spec, config, label=args.axis, n_jobs=args.jobs)
        meta = {"axis": args.axis, "points": args.points, "spacing": args.spacing}
        meta.update(effective_parameters(build_scenario(config), config.convention))
    failed = sum(1 for r in rows if r.error)
    _write(args.out, to_csv(rows, meta))
    if failed:
        print(f"warning: {failed} sweep point(s) failed; see the error column", file=sys.stderr)
    return 0


def _flags_only(args) -> Config:
    config = Config()
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            config.set(key, value, origin=f"--{flag}")
    for item in args.set:
        key, _, value = item.partition("=")
        config.set(key.strip(), value, origin="--set")
    return config


PHASE_NAMES = {"write": CouplingPhase.WRITE, "store": CouplingPhase.STORE, "read": CouplingPhase.READ}


def cmd_montecarlo(args) -> int:
    config = build_config(args, default_preset="mc-write")
    scenario = build_scenario(config)
    p, spec = scenario.params, scenario.spec
    durations = dict(zip(("write", "store", "read"), (d for _, d in protocol_phases(p, spec))))
    phases = []
    for name in args.phases.split(","):
        name = name.strip().lower()
        if name not in PHASE_NAMES:
            raise ConfigurationError(f"--phases: unknown phase {name!r}")
        phases.append((PHASE_NAMES[name], durations[name]))
    try:
        dt = parse_quantity(args.dt, "time", omega_m=p.omega_m)
    except ValueError as exc:
        raise ConfigurationError(f"--dt: {exc}") from None
    cfg = TrajectoryConfig(dt=dt, n_traj=args.ntraj, seed=args.seed)
    start = initial_state(scenario.input, p)
    exact = propagate_phases(p, start, phases, phase_noise_in_store=spec.phase_noise_in_store)
    emp = simulate_trajectories(p, start, phases, cfg, phase_noise_in_store=spec.phase_noise_in_store)

    names = ["x1", "p1", "x2", "p2", "psi"]
    print(f"# backend={kernels.BACKEND} n_traj={cfg.n_traj} dt={cfg.dt!r} seed={cfg.seed} "
          f"phases={args.phases}")
    print(f"{'moment':<12}{'deterministic':>16}{'empirical':>16}{'stderr':>13}{'z':>9}")
    worst = 0.0
    rows = [(f"<{names[i]}>", exact.mean[i], emp.mean[i], emp.stderr_mean[i]) for i in range(4)]
    rows += [(f"V[{names[i]},{names[j]}]", exact.cov[i, j], emp.cov[i, j], emp.stderr_cov[i, j])
             for i in range(5) for j in range(i, 5)]
    for label, d, e, se in rows:
        if se > 0:
            z = (e - d) / se
        else:
            z = 0.0 if np.isclose(e, d, rtol=0, atol=1e-15) else np.inf
        worst = max(worst, abs(z))
        print(f"{label:<12}{d:>16.6g}{e:>16.6g}{se:>13.3g}{z:>9.2f}")
    print(f"# max |z| = {worst:.2f} (limit {Z_LIMIT})")
    return 0 if worst <= Z_LIMIT else EXIT_MC


def cmd_presets(args) -> int:
    for name, values in PRESETS.items():
        print(f"[{name}]")
        for k, v in values.items():
            print(f"  {k} = {v}")
    print("figures: " + ", ".join(sorted(FIGURES)))
    return 0


def cmd_dump_config(args) -> int:
    config = build_config(args)
    if args.raw:
        sys.stdout.write(config.dump())
    else:
        sys.stdout.write(canonical_config(build_scenario(config), config.convention).dump())
    return 0


def cmd_calibrate(args) -> int:
    from .calibration import render_report

    _write(args.out, render_report())
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omem",
        description="Storage fidelity of optomechanical quantum memories under laser phase noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="evaluate one configuration")
    _config_args(p)
    p.add_argument("--out", help="also write a one-row CSV")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("sweep", help="parameter sweep or canned figure to CSV")
    _config_args(p)
    p.add_argument("--figure", choices=sorted(FIGURES))
    p.add_argument("--axis", choices=[a.value for a in Axis])
    p.add_argument("--start")
    p.add_argument("--stop")
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--spacing", choices=["linear", "log"], default="linear")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("montecarlo", help="compare the deterministic moments with sampled trajectories")
    _config_args(p)
    p.add_argument("--ntraj", type=int, default=5000)
    p.add_argument("--dt", default="1e-3/wm", help="time step, e.g. 1e-3/wm or 0.1ns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phases", default="write", help="comma list of write,store,read")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("presets", help="list presets and figures")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("dump-config", help="print the effective configuration")
    _config_args(p)
    p.add_argument("--raw", action="store_true", help="merged input text instead of SI values")
    p.set_defaults(func=cmd_dump_config)

    p = sub.add_parser("calibrate", help="frequency-convention calibration report")
    p.add_argument("--out", help="markdown path (default stdout)")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (StepSizeError, DegenerateStateError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
