"""Flat ``key = value`` configuration with unit suffixes, presets, and scenario assembly.

Frequencies take ``Hz``, ``kHz``, ``MHz`` or ``GHz`` (ordinary frequency,
multiplied by 2 pi), ``rad/s``, or ``omega_m`` / ``wm`` (a multiple of the
mechanical frequency). Bare numbers are rad/s. Times take ``s``, ``ms``,
``us``, ``ns`` or ``/wm`` (``64/wm`` is 64 mechanical periods over 2 pi).
Temperatures take ``K``, ``mK`` or ``uK``.

The laser-noise keys ``GammaL`` and ``gammac`` are quoted without a 2 pi in
the literature. ``frequency_convention`` decides how their Hz suffixes are
read: ``angular`` (default; ``1kHz`` is 1000 rad/s) or ``ordinary``
(``1kHz`` is 2 pi x 1000 rad/s). Every other frequency key is ordinary.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .model import (
    ConfigurationError,
    NoiseMode,
    NoiseSpec,
    PhysicalParams,
    fixed_points,
    select_fixed_point,
    thermal_occupation,
)
from .protocol import InputState, ProtocolSpec, Psi0Mode, RotationMode

__all__ = [
    "Config",
    "Scenario",
    "PRESETS",
    "parse_quantity",
    "load_config",
    "build_scenario",
    "DEFAULT_CONVENTION",
]

DEFAULT_CONVENTION = "angular"
TWO_PI = 2 * math.pi

_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_TEMP = {"k": 1.0, "mk": 1e-3, "uk": 1e-6}
_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"

KINDS = {
    "omega_m": "frequency",
    "kappa": "frequency",
    "gamma": "frequency",
    "g0": "frequency",
    "G": "frequency",
    "E_L": "frequency",
    "Delta_0": "frequency",
    "GammaL": "noise",
    "gammac": "noise",
    "alpha_s": "number",
    "Qm": "number",
    "N_m": "number",
    "N_C": "number",
    "T": "temperature",
    "alpha": "complex",
    "r": "number",
    "tau": "time",
    "t_s": "time",
    "noise_mode": "choice",
    "psi0": "choice",
    "rotation": "choice",
    "frequency_convention": "choice",
    "mechanical_cooled": "bool",
    "phase_noise_in_store": "bool",
    "cooling_prepulse": "bool",
}
CHOICES = {
    "noise_mode": {m.value for m in NoiseMode},
    "psi0": {m.value for m in Psi0Mode},
    "rotation": {m.value for m in RotationMode},
    "frequency_convention": {"angular", "ordinary"},
}
# keys that specify the same quantity; setting one clears the others
EXCLUSIVE = [("G", "alpha_s", "E_L"), ("gamma", "Qm"), ("N_m", "T")]

PRESETS: dict[str, dict[str, str]] = {
    # electromechanical drum
    "teufel": {
        "omega_m": "10.69MHz",
        "kappa": "170kHz",
        "Qm": "360000",
        "g0": "230Hz",
        "G": "0.05wm",
        "N_m": "3",
        "N_C": "0",
        "GammaL": "0",
        "gammac": "0.5MHz",
        "alpha": "1",
        "r": "0",
        "tau": "64/wm",
    },
    # Fabry-Perot micromirror
    "groblacher": {
        "omega_m": "947kHz",
        "kappa": "215kHz",
        "gamma": "140Hz",
        "g0": "1.91Hz",
        "G": "229.81kHz",
        "N_m": "3",
        "N_C": "0",
        "GammaL": "0",
        "gammac": "1kHz",
        "alpha": "1",
        "r": "0",
        "tau": "0.95us",
    },
    # shortened, strongly damped write pulse sized for the Monte Carlo oracle
    "mc-write": {
        "omega_m": "10.69MHz",
        "kappa": "0.1wm",
        "gamma": "0.02wm",
        "g0": "2.3kHz",
        "G": "0.25wm",
        "N_m": "3",
        "N_C": "0",
        "GammaL": "500rad/s",
        "gammac": "0.2wm",
        "alpha": "1+0.5j",
        "r": "0.3",
        "mechanical_cooled": "false",
        "psi0": "stationary",
        "tau": "0",
    },
}


@dataclass(frozen=True)
class Scenario:
    params: PhysicalParams
    input: InputState
    spec: ProtocolSpec


class Config:
    """Ordered raw ``key -> text`` settings with the origin of each value."""

    def __init__(self):
        self.values: dict[str, str] = {}
        self.origin: dict[str, str] = {}

    def set(self, key: str, value: str, origin: str = "<override>") -> None:
        if key not in KINDS:
            raise ConfigurationError(f"{origin}: unknown key {key!r}")
        for group in EXCLUSIVE:
            if key in group:
                for other in group:
                    if other != key:
                        self.values.pop(other, None)
                        self.origin.pop(other, None)
        self.values[key] = str(value).strip()
        self.origin[key] = origin

    def update(self, mapping: dict[str, str], origin: str) -> None:
        for k, v in mapping.items():
            self.set(k, v, origin)

    def copy(self) -> "Config":
        c = Config()
        c.values = dict(self.values)
        c.origin = dict(self.origin)
        return c

    @property
    def convention(self) -> str:
        return self.values.get("frequency_convention", DEFAULT_CONVENTION)

    def quantity(self, key: str, omega_m: float | None = None):
        text = self.values[key]
        try:
            return parse_quantity(text, KINDS[key], convention=self.convention, omega_m=omega_m)
        except ValueError as exc:
            raise ConfigurationError(f"{self.origin.get(key, '?')}: field {key!r}: {exc}") from None

    def dump(self) -> str:
        lines = [f"{k} = {v}" for k, v in self.values.items()]
        return "\n".join(lines) + "\n"


def parse_quantity(text: str, kind: str, *, convention: str = DEFAULT_CONVENTION,
                   omega_m: float | None = None):
    """Convert ``text`` to SI (rad/s, s, K) according to ``kind``."""
    text = text.strip()
    if kind == "choice":
        return text.lower()
    if kind == "bool":
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "complex":
        try:
            return complex(text.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ValueError(f"expected a complex number, got {text!r}") from None
    m = re.fullmatch(rf"({_NUM})\s*(.*)", text)
    if not m:
        raise ValueError(f"cannot parse {text!r} as a number")
    value, unit = float(m.group(1)), m.group(2).strip()
    unit_l = unit.lower()
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    if kind == "number":
        if unit:
            raise ValueError(f"unexpected unit {unit!r}")
        return value
    if kind in ("frequency", "noise"):
        if unit == "" or unit_l == "rad/s":
            return value
        if unit_l in ("wm", "omega_m"):
            return value * _need(omega_m, text)
        if unit_l in _FREQ:
            factor = _FREQ[unit_l]
            if kind == "frequency" or convention == "ordinary":
                factor *= TWO_PI
            elif convention != "angular":
                raise ValueError(f"unknown frequency convention {convention!r}")
            return value * factor
        raise ValueError(f"unknown frequency unit {unit!r}")
    if kind == "time":
        if unit == "":
            return value
        if unit_l in ("/wm", "/omega_m"):
            return value / _need(omega_m, text)
        if unit in _TIME or unit_l in _TIME:
            return value * _TIME.get(unit, _TIME.get(unit_l))
        raise ValueError(f"unknown time unit {unit!r}")
    if kind == "temperature":
        if unit == "":
            return value
        if unit_l in _TEMP:
            return value * _TEMP[unit_l]
        raise ValueError(f"unknown temperature unit {unit!r}")
    raise ValueError(f"unknown quantity kind {kind!r}")


def _need(omega_m, text):
    if omega_m is None:
        raise ValueError(f"{text!r} is relative to omega_m, which is not set")
    return omega_m


def load_config(path: str | Path, config: Config | None = None) -> Config:
    """Read ``key = value`` lines (``#`` starts a comment) into ``config``."""
    config = config or Config()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "preset":
            apply_preset(config, value, origin=f"{path}:{lineno}")
            continue
        config.set(key, value, origin=f"{path}:{lineno}")
    return config


def apply_preset(config: Config, name: str, origin: str = "--preset") -> Config:
    if name not in PRESETS:
        raise ConfigurationError(f"{origin}: unknown preset {name!r} (have {sorted(PRESETS)})")
    config.update(PRESETS[name], origin=f"preset {name}")
    return config


def preset_config(name: str) -> Config:
    return apply_preset(Config(), name)


def _get(config, key, default=None, omega_m=None):
    if key in config.values:
        return config.quantity(key, omega_m)
    return default


def build_scenario(config: Config) -> Scenario:
    """Resolve a configuration into validated model inputs.

    Raises ``ConfigurationError`` for bad or missing fields and
    ``UnstableConfigurationError`` when a drive specification has no stable
    operating point.
    """
    v = config.values
    for key, choices in CHOICES.items():
        if key in v and v[key].lower() not in choices:
            raise ConfigurationError(
                f"{config.origin[key]}: field {key!r}: {v[key]!r} not in {sorted(choices)}"
            )
    for key in ("omega_m", "kappa", "g0"):
        if key not in v:
            raise ConfigurationError(f"missing required field {key!r}")
    omega_m = config.quantity("omega_m")
    if not omega_m > 0:
        raise ConfigurationError("field 'omega_m': must be > 0")
    q = lambda key, default=None: _get(config, key, default, omega_m)  # noqa: E731

    kappa = q("kappa")
    g0 = q("g0")
    if "Qm" in v:
        Qm = q("Qm")
        if not Qm > 0:
            raise ConfigurationError(f"{config.origin['Qm']}: field 'Qm': must be > 0")
        gamma = omega_m / Qm
    else:
        gamma = q("gamma", 0.0)
    if "T" in v:
        T = q("T")
        try:
            N_m = thermal_occupation(T, omega_m)
        except ValueError as exc:
            raise ConfigurationError(f"{config.origin['T']}: field 'T': {exc}") from None
    else:
        N_m = q("N_m", 0.0)
    N_C = q("N_C", 0.0)

    mode = NoiseMode(v.get("noise_mode", "colored").lower())
    Gamma_L = q("GammaL", 0.0)
    gamma_c = q("gammac", 0.0)
    if mode is NoiseMode.WHITE_EXACT:
        if config.origin.get("gammac", "").startswith("preset"):
            gamma_c = 0.0
    noise = NoiseSpec(Gamma_L=Gamma_L, gamma_c=gamma_c, mode=mode)

    common = dict(omega_m=omega_m, kappa=kappa, gamma=gamma, g0=g0, N_m=N_m, N_C=N_C, noise=noise)
    if "G" in v:
        params = PhysicalParams.from_coupling(G=q("G"), **common)
    elif "alpha_s" in v:
        params = PhysicalParams(alpha_s=q("alpha_s"), **common)
    elif "E_L" in v:
        if "Delta_0" not in v:
            raise ConfigurationError("field 'E_L' needs 'Delta_0'")
        probe = PhysicalParams(alpha_s=0.0, **common)
        fp = select_fixed_point(fixed_points(probe, q("E_L"), q("Delta_0")))
        params = PhysicalParams(alpha_s=abs(fp.alpha_s), **common)
    else:
        raise ConfigurationError("coupling unspecified: give one of 'G', 'alpha_s' or 'E_L'")

    input = InputState(
        alpha=q("alpha", 1.0),
        r=q("r", 0.0),
        mechanical_cooled=q("mechanical_cooled", True),
        psi0_mode=Psi0Mode(v.get("psi0", "paper").lower()),
    )
    spec = ProtocolSpec(
        tau=q("tau", 0.0),
        t_s=q("t_s"),
        rotation_compensation=RotationMode(v.get("rotation", "fixed").lower()),
        phase_noise_in_store=q("phase_noise_in_store", False),
        cooling_prepulse=q("cooling_prepulse", False),
    )
    if params.G == 0 and spec.t_s is None:
        raise ConfigurationError("zero coupling: set 't_s' explicitly")
    return Scenario(params, input, spec)


def effective_parameters(scenario: Scenario, convention: str = DEFAULT_CONVENTION) -> dict:
    """All resolved inputs in SI units, for echoing into outputs."""
    p, i, s = scenario.params, scenario.input, scenario.spec
    return {
        "omega_m": p.omega_m,
        "kappa": p.kappa,
        "gamma": p.gamma,
        "Qm": p.Q_m,
        "g0": p.g0,
        "alpha_s": p.alpha_s,
        "G": p.G,
        "N_m": p.N_m,
        "N_C": p.N_C,
        "GammaL": p.noise.Gamma_L,
        "gammac": p.noise.gamma_c,
        "noise_mode": p.noise.mode.value,
        "alpha": complex(i.alpha),
        "r": i.r,
        "mechanical_cooled": i.mechanical_cooled,
        "psi0": i.psi0_mode.value,
        "t_s": s.pulse_time(p),
        "tau": s.tau,
        "rotation": s.rotation_compensation.value,
        "phase_noise_in_store": s.phase_noise_in_store,
        "cooling_prepulse": s.cooling_prepulse,
        "frequency_convention": convention,
    }


def canonical_config(scenario: Scenario, convention: str = DEFAULT_CONVENTION) -> Config:
    """Config with every value as a bare SI number; re-ingesting reproduces ``scenario``."""
    eff = effective_parameters(scenario, convention)
    c = Config()
    for key in ("omega_m", "kappa", "gamma", "g0", "alpha_s", "N_m", "N_C", "GammaL", "gammac",
                "noise_mode", "r", "mechanical_cooled", "psi0", "tau", "rotation",
                "phase_noise_in_store", "cooling_prepulse", "frequency_convention"):
        c.set(key, _fmt(eff[key]), origin="dump")
    c.set("alpha", _fmt(eff["alpha"]), origin="dump")
    if scenario.spec.t_s is not None:
        c.set("t_s", _fmt(scenario.spec.t_s), origin="dump")
    return c


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, complex):
        return f"{x.real!r}{x.imag:+}j"
    if isinstance(x, float):
        return repr(x)
    return str(x)
