"""Declarative one-axis parameter sweeps and the canned figure bundles."""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import (
    KINDS,
    Config,
    build_scenario,
    effective_parameters,
    parse_quantity,
    preset_config,
)
from .protocol import storage_fidelity

__all__ = ["Axis", "SweepSpec", "Series", "ResultRow", "FIGURES", "run_sweep", "run_figure",
           "evaluate", "to_csv"]


class Axis(enum.Enum):
    QM = "Qm"
    GAMMA_L = "GammaL"
    GAMMA_C = "gammac"
    G = "G"
    TAU = "tau"
    R = "r"
    T = "T"


@dataclass(frozen=True)
class SweepSpec:
    """Sweep ``axis`` over ``points`` values from ``start`` to ``stop``.

    Bounds are strings with units (``"0.02wm"``, ``"10kHz"``) or SI numbers.
    ``overrides`` are extra config entries applied before sweeping.
    """

    axis: Axis
    start: str | float
    stop: str | float
    points: int
    spacing: str = "linear"
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("a sweep needs at least two points")
        if self.spacing not in ("linear", "log"):
            raise ValueError("spacing is 'linear' or 'log'")

    def values(self, config: Config) -> np.ndarray:
        omega_m = config.quantity("omega_m") if "omega_m" in config.values else None
        kind = KINDS[self.axis.value]
        lo, hi = (
            x if isinstance(x, (int, float)) else
            parse_quantity(x, kind, convention=config.convention, omega_m=omega_m)
            for x in (self.start, self.stop)
        )
        if not lo < hi:
            raise ValueError(f"sweep start {lo!r} must be below stop {hi!r}")
        if self.spacing == "log":
            if lo <= 0:
                raise ValueError("log spacing needs a positive start")
            return np.geomspace(lo, hi, self.points)
        return np.linspace(lo, hi, self.points)


@dataclass(frozen=True)
class Series:
    label: str
    preset: str
    sweep: SweepSpec


@dataclass
class ResultRow:
    series: str
    axis: str
    value: float
    F: float = math.nan
    n_h: float = math.nan
    lam: float = math.nan
    theta: float = math.nan
    t_s: float = math.nan
    tau: float = math.nan
    params: dict = field(default_factory=dict)
    error: str = ""


PARAM_COLUMNS = ["omega_m", "kappa", "gamma", "Qm", "g0", "alpha_s", "G", "N_m", "N_C",
                 "GammaL", "gammac", "noise_mode", "alpha", "r", "psi0", "rotation"]
COLUMNS = ["series", "axis", "value", "F", "n_h", "lambda", "theta", "t_s", "tau",
           *PARAM_COLUMNS, "error"]


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, complex):
        return f"{x.real!r}{x.imag:+}j"
    return str(x)


def evaluate(config: Config):
    scenario = build_scenario(config)
    result = storage_fidelity(scenario.params, scenario.input, scenario.spec)
    return scenario, result


def _point(args) -> ResultRow:
    config, series, axis, value = args
    row = ResultRow(series, axis.value, float(value))
    try:
        scenario, res = evaluate(config)
    except Exception as exc:  # noqa: BLE001 - recorded per point, sweep continues
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    eff = effective_parameters(scenario, config.convention)
    row.F, row.n_h, row.lam, row.theta = res.F, res.n_h, res.lam, res.theta_opt
    row.t_s, row.tau = eff["t_s"], eff["tau"]
    row.params = {k: eff[k] for k in PARAM_COLUMNS}
    return row


def _jobs(base: Config, sweep: SweepSpec, label: str):
    config = base.copy()
    config.update({k: str(v) for k, v in sweep.overrides.items()}, origin=f"series {label}")
    values = np.sort(sweep.values(config))
    out = []
    for value in values:
        c = config.copy()
        c.set(sweep.axis.value, repr(float(value)), origin=f"sweep {sweep.axis.value}")
        out.append((c, label, sweep.axis, value))
    return out


def _map(jobs, n_jobs):
    if n_jobs <= 1:
        return [_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        # map keeps input order whatever the completion order
        return list(pool.map(_point, jobs, chunksize=1))


def run_sweep(sweep: SweepSpec, config: Config, *, label: str = "", n_jobs: int = 1) -> list[ResultRow]:
    return _map(_jobs(config, sweep, label), n_jobs)


def run_figure(name: str, *, overrides: Config | None = None, n_jobs: int = 1) -> list[ResultRow]:
    """Evaluate every series of a canned figure; ``overrides`` apply on top of each preset."""
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r} (have {sorted(FIGURES)})")
    jobs = []
    for series in FIGURES[name]:
        base = preset_config(series.preset)
        if overrides is not None:
            base.update(overrides.values, origin="command line")
        jobs.extend(_jobs(base, series.sweep, series.label))
    return _map(jobs, n_jobs)


def to_csv(rows: list[ResultRow], metadata: dict | None = None) -> str:
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key} = {_fmt(value)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        p = [_fmt(r.params.get(k, "")) for k in PARAM_COLUMNS]
        w.writerow([r.series, r.axis, _fmt(r.value), _fmt(r.F), _fmt(r.n_h), _fmt(r.lam),
                    _fmt(r.theta), _fmt(r.t_s), _fmt(r.tau), *p, r.error])
    return buf.getvalue()


def _noise_series(preset, sweep_kw, settings):
    return [Series(label, preset, SweepSpec(overrides=o, **sweep_kw)) for label, o in settings]


_FIG3_NOISE = [
    ("GammaL=0", {"GammaL": "0"}),
    ("GammaL=1kHz,gammac=100kHz", {"GammaL": "1kHz", "gammac": "100kHz"}),
    ("GammaL=1kHz,gammac=0.5MHz", {"GammaL": "1kHz", "gammac": "0.5MHz"}),
    ("GammaL=1kHz,gammac=10MHz", {"GammaL": "1kHz", "gammac": "10MHz"}),
]
_FIG6_NOISE = [
    ("GammaL=0", {"GammaL": "0"}),
    ("GammaL=1kHz,gammac=100kHz", {"GammaL": "1kHz", "gammac": "100kHz"}),
    ("GammaL=1kHz,gammac=200kHz", {"GammaL": "1kHz", "gammac": "200kHz"}),
    ("GammaL=1kHz,gammac=300kHz", {"GammaL": "1kHz", "gammac": "300kHz"}),
]
_QM = dict(axis=Axis.QM, start=1e3, stop=1e7, points=41, spacing="log")

FIGURES: dict[str, list[Series]] = {
    "fig3": _noise_series("teufel", _QM, _FIG3_NOISE),
    "fig4a": [Series("gammac=0.5MHz", "teufel",
                     SweepSpec(Axis.GAMMA_L, "0kHz", "10kHz", 21, overrides={"gammac": "0.5MHz"}))],
    "fig4b": [
        Series(f"GammaL={g}", "teufel",
               SweepSpec(Axis.GAMMA_C, "1kHz", "100MHz", 41, "log", overrides={"GammaL": g}))
        for g in ("1kHz", "5kHz", "10kHz")
    ],
    "fig5": [
        Series(label, "teufel", SweepSpec(Axis.TAU, "1us", "0.5ms", 50, overrides=o))
        for label, o in [
            ("T=1.7mK,GammaL=0", {"T": "1.7mK", "GammaL": "0"}),
            ("T=1.7mK,GammaL=1kHz,gammac=300kHz", {"T": "1.7mK", "GammaL": "1kHz", "gammac": "300kHz"}),
            ("T=0.01K,GammaL=0", {"T": "0.01K", "GammaL": "0"}),
            ("T=0.01K,GammaL=1kHz,gammac=300kHz", {"T": "0.01K", "GammaL": "1kHz", "gammac": "300kHz"}),
        ]
    ],
    "fig6a": _noise_series("teufel", dict(axis=Axis.G, start="0.02wm", stop="0.05wm", points=31),
                           _FIG6_NOISE),
    "fig6b": _noise_series("teufel", dict(axis=Axis.G, start="0.02wm", stop="1wm", points=99),
                           _FIG6_NOISE),
    "fig7a": [
        Series(f"r={r}", "teufel",
               SweepSpec(overrides={"r": r, "GammaL": "1kHz", "gammac": "10kHz", "tau": "0.95us"}, **_QM))
        for r in ("0", "0.2", "0.5", "0.8")
    ],
    "fig7b": [Series("Qm=360000", "teufel",
                     SweepSpec(Axis.R, 0.0, 0.8, 17,
                               overrides={"Qm": "360000", "GammaL": "1kHz", "gammac": "10kHz",
                                          "tau": "0.95us"}))],
    "fig8": _noise_series("groblacher", _QM, [
        ("GammaL=0", {"GammaL": "0"}),
        ("GammaL=1kHz,gammac=0.5kHz", {"GammaL": "1kHz", "gammac": "0.5kHz"}),
        ("GammaL=1kHz,gammac=1kHz", {"GammaL": "1kHz", "gammac": "1kHz"}),
    ]),
}
