"""Flat key-value configuration: defaults, file parsing, typed resolution.

The config file format is one `key = value` per line with `#` comments.
Every tunable constant in the model is a key here, so a fully resolved
snapshot (``to_flat``) pins an experiment exactly and reproduces it
bit-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .lif import NeuronParams
from .network import NetworkConfig
from .stdp import StdpParams

_LAYER_FIELDS = (
    "c_m", "g_leak", "e_leak", "e_exc", "e_inh", "v_thresh", "v_reset",
    "v_rest", "tau_exc", "tau_inh", "tau_ref", "noise_sigma",
)
_STDP_FIELDS = (
    "a_plus", "a_minus", "tau_plus", "tau_minus", "w_max", "w_init_low", "w_init_high",
)

# Layer defaults. Voltages follow the published table; capacitance, leak and
# time constants are standard cortical-model values. Experiments run with
# noise on; unit tests construct NeuronParams directly (noise_sigma 0).
_MEM_DEFAULTS = dict(
    c_m=200.0, g_leak=10.0, e_leak=-65.0, e_exc=0.0, e_inh=-75.0,
    v_thresh=-55.0, v_reset=-70.0, v_rest=-70.0,
    tau_exc=5.0, tau_inh=10.0, tau_ref=5.0, noise_sigma=5.0,
)
_RESP_DEFAULTS = dict(_MEM_DEFAULTS)

_IM_DEFAULTS = dict(a_plus=0.01, a_minus=-0.012, tau_plus=20.0, tau_minus=20.0,
                    w_max=1.0, w_init_low=0.0, w_init_high=0.3)
_IR_DEFAULTS = dict(_IM_DEFAULTS)
_MR_DEFAULTS = dict(_IM_DEFAULTS)


def _prefixed(prefix: str, d: dict) -> dict:
    return {f"{prefix}.{k}": v for k, v in d.items()}


DEFAULTS: dict = {
    "dt": 0.1,
    "n_mem": 100,
    "w_inh_lateral": 3.0,
    "w_exc_recurrent": 0.8,
    "w_resp_mutual_inh": 2.0,
    **_prefixed("mem", _MEM_DEFAULTS),
    **_prefixed("resp", _RESP_DEFAULTS),
    **_prefixed("im", _IM_DEFAULTS),
    **_prefixed("ir", _IR_DEFAULTS),
    **_prefixed("mr", _MR_DEFAULTS),
    "im.plastic": True,
    "ir.plastic": True,
    "mr.plastic": True,
    # encoding
    "r_max": 63.75,
    # experiment protocol
    "schedule": "short",
    "presentation_short_ms": 350.0,
    "presentation_long_ms": 550.0,
    "gap_short_ms": 0.0,
    "gap_long_ms": 350.0,
    "mix": 0.7,
    "n_trials": 200,
    "calibration_trials": 40,
    "probe_anchor_ms": 100.0,
    "probe_on_ms": 500.0,
    "probe_observe_ms": 800.0,
    "lesion_p": 1.0,
    "seed": 1,
    # stimuli
    "target_class": 0,
    "non_target_class": 9,
    "anchor_policy": "first",
    "data_dir": "synthetic",
}


class ConfigError(ValueError):
    pass


def _coerce(key: str, raw: str):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc
    return raw


def parse_config_text(text: str) -> dict:
    """Parse `key = value` lines into typed overrides; unknown keys error."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text())


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved configuration: network plus experiment protocol."""

    network: NetworkConfig
    r_max: float
    schedule: str
    presentation_short_ms: float
    presentation_long_ms: float
    gap_short_ms: float
    gap_long_ms: float
    mix: float
    n_trials: int
    calibration_trials: int
    probe_anchor_ms: float
    probe_on_ms: float
    probe_observe_ms: float
    lesion_p: float
    seed: int
    target_class: int
    non_target_class: int
    anchor_policy: str
    data_dir: str
    flat: dict = field(repr=False, default_factory=dict)

    @property
    def presentation_ms(self) -> float:
        return self.presentation_short_ms if self.schedule == "short" else self.presentation_long_ms

    @property
    def gap_ms(self) -> float:
        return self.gap_short_ms if self.schedule == "short" else self.gap_long_ms

    def to_flat(self) -> dict:
        return dict(self.flat)

    def snapshot_text(self) -> str:
        """Canonical config snapshot; parses back to an identical config."""
        lines = [f"{k} = {_format_value(self.flat[k])}" for k in sorted(self.flat)]
        return "\n".join(lines) + "\n"


def _layer_params(flat: dict, prefix: str) -> NeuronParams:
    return NeuronParams(**{f: flat[f"{prefix}.{f}"] for f in _LAYER_FIELDS})


def _stdp_params(flat: dict, prefix: str) -> StdpParams:
    return StdpParams(**{f: flat[f"{prefix}.{f}"] for f in _STDP_FIELDS})


def resolve_config(overrides: dict | None = None) -> ExperimentConfig:
    """Merge overrides onto the defaults and build typed config objects."""
    flat = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        flat[key] = value
    if flat["schedule"] not in ("short", "long"):
        raise ConfigError(f"schedule must be 'short' or 'long', got {flat['schedule']!r}")
    if not 0.0 <= flat["lesion_p"] <= 1.0:
        raise ConfigError(f"lesion_p must lie in [0, 1], got {flat['lesion_p']}")
    if not 0.0 < flat["mix"] <= 1.0:
        raise ConfigError(f"mix must lie in (0, 1], got {flat['mix']}")
    if flat["n_trials"] <= 0:
        raise ConfigError("n_trials must be positive")
    if flat["target_class"] == flat["non_target_class"]:
        raise ConfigError("target_class and non_target_class must differ")

    network = NetworkConfig(
        n_mem=flat["n_mem"],
        dt=flat["dt"],
        w_inh_lateral=flat["w_inh_lateral"],
        w_exc_recurrent=flat["w_exc_recurrent"],
        w_resp_mutual_inh=flat["w_resp_mutual_inh"],
        mem_params=_layer_params(flat, "mem"),
        resp_params=_layer_params(flat, "resp"),
        stdp_input_mem=_stdp_params(flat, "im"),
        stdp_input_resp=_stdp_params(flat, "ir"),
        stdp_mem_resp=_stdp_params(flat, "mr"),
        plastic_input_mem=flat["im.plastic"],
        plastic_input_resp=flat["ir.plastic"],
        plastic_mem_resp=flat["mr.plastic"],
    )
    network.validate()
    return ExperimentConfig(
        network=network,
        r_max=flat["r_max"],
        schedule=flat["schedule"],
        presentation_short_ms=flat["presentation_short_ms"],
        presentation_long_ms=flat["presentation_long_ms"],
        gap_short_ms=flat["gap_short_ms"],
        gap_long_ms=flat["gap_long_ms"],
        mix=flat["mix"],
        n_trials=flat["n_trials"],
        calibration_trials=flat["calibration_trials"],
        probe_anchor_ms=flat["probe_anchor_ms"],
        probe_on_ms=flat["probe_on_ms"],
        probe_observe_ms=flat["probe_observe_ms"],
        lesion_p=flat["lesion_p"],
        seed=flat["seed"],
        target_class=flat["target_class"],
        non_target_class=flat["non_target_class"],
        anchor_policy=flat["anchor_policy"],
        data_dir=flat["data_dir"],
        flat=flat,
    )
