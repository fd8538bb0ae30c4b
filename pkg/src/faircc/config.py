"""
Scenario presets and the run-configuration text format.

A configuration file is a flat list of ``key = value`` lines (``#``
starts a comment). Keys carry their units where one applies, and floats
are written with ``repr`` so a dumped file parses back to the same
``RunConfig``.
"""

import configparser
import math

from .channel import DETERMINISTIC, IID_EXPONENTIAL, two_class_gains
from .engine import RunConfig
from .errors import ConfigError
from .params import SystemParams
from .policies import INFINITE_BACKLOG, ArrivalModel, FairnessConfig

SCENARIOS = ("det_two_class", "sym_fading", "two_class_fading", "custom")

# constants shared by every preset
PRESET_M = 0.6
PRESET_F = 1000.0
PRESET_T_SLOT = 100.0
PRESET_P = 10.0  # 10 dB

_SECTION = "run"

# key -> (type, default); None means required
_KEYS = {
    "users": (int, None),
    "cache_fraction": (float, PRESET_M),
    "file_size_bits": (float, PRESET_F),
    "slot_channel_uses": (float, PRESET_T_SLOT),
    "power_linear": (float, PRESET_P),
    "channel": (str, None),
    "mean_gains": ("floats", None),
    "gain_profile": (str, "none"),
    "alpha": (float, 0.0),
    "utility_shift": (float, 0.01),
    "V": (float, 1000.0),
    "gamma_max_files_per_slot": (float, 2.0),
    "sigma_max": (int, 2),
    "arrivals": (str, INFINITE_BACKLOG),
    "arrival_means_files_per_slot": ("floats", ""),
    "arrival_max_files_per_slot": (float, 0.0),
    "policy": (str, "proposed"),
    "horizon_slots": (int, 100_000),
    "sample_every_slots": (int, 0),
    "warmup_fraction": (float, 0.1),
    "seed": (int, 0),
}


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def preset(name, K, **overrides):
    """``RunConfig`` of a named scenario with ``K`` users.

    ``overrides`` are passed to ``RunConfig`` (``fairness``, ``policy``,
    ``horizon``, ``seed`` ...); ``P`` replaces the power budget.
    """
    if name not in SCENARIOS or name == "custom":
        raise ConfigError(f"unknown scenario {name!r}; presets are {SCENARIOS[:-1]}")
    P = overrides.pop("P", PRESET_P)
    params = SystemParams(K, m=PRESET_M, F=PRESET_F, T_slot=PRESET_T_SLOT, P=P)
    if name == "det_two_class":
        kind, beta, profile = DETERMINISTIC, two_class_gains(K), "two_class"
    elif name == "sym_fading":
        kind, beta, profile = IID_EXPONENTIAL, (1.0,) * K, "uniform"
    else:
        kind, beta, profile = IID_EXPONENTIAL, two_class_gains(K), "two_class"
    return RunConfig(params, kind, tuple(beta), gain_profile=profile, **overrides).validate()


def _fmt(value):
    if isinstance(value, bool):
        raise TypeError("no boolean keys")
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(float(v)) for v in value)
    return str(value)


def dumps(config):
    """Resolved configuration as text."""
    p, f, arr = config.params, config.fairness, config.arrivals
    values = {
        "users": p.K,
        "cache_fraction": float(p.m),
        "file_size_bits": float(p.F),
        "slot_channel_uses": float(p.T_slot),
        "power_linear": float(p.P),
        "channel": config.channel_kind,
        "mean_gains": config.beta,
        "gain_profile": config.gain_profile or "none",
        "alpha": float(f.alpha),
        "utility_shift": float(f.d),
        "V": float(f.V),
        "gamma_max_files_per_slot": float(f.gamma_max),
        "sigma_max": int(f.sigma_max),
        "arrivals": arr.kind,
        "arrival_means_files_per_slot": arr.lam or "",
        "arrival_max_files_per_slot": float(arr.A_max),
        "policy": config.policy,
        "horizon_slots": int(config.horizon),
        "sample_every_slots": int(config.sample_every),
        "warmup_fraction": float(config.warmup_fraction),
        "seed": int(config.seed),
    }
    lines = ["# faircc run configuration"]
    lines += [f"{k} = {_fmt(v)}" for k, v in values.items()]
    return "\n".join(lines) + "\n"


def _parse(key, raw, kind):
    raw = raw.strip()
    try:
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",")) if raw else None
        if kind is int:
            x = float(raw)
            if not x.is_integer():
                raise ValueError
            return int(x)
        if kind is float:
            x = float(raw)
            if math.isnan(x):
                raise ValueError
            return x
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def loads(text):
    """Parse configuration text into a validated ``RunConfig``."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable configuration: {exc}") from None
    got = dict(cp[_SECTION])
    unknown = set(got) - set(_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    v = {}
    for key, (kind, default) in _KEYS.items():
        if key in got:
            v[key] = _parse(key, got[key], kind)
        elif default is None:
            raise ConfigError(f"missing key {key}")
        else:
            v[key] = _parse(key, str(default), kind) if kind == "floats" else default
    if v["mean_gains"] is None:
        raise ConfigError("mean_gains must list one gain per user")
    params = SystemParams(v["users"], v["cache_fraction"], v["file_size_bits"],
                          v["slot_channel_uses"], v["power_linear"])
    fairness = FairnessConfig(v["alpha"], v["utility_shift"], v["V"],
                              v["gamma_max_files_per_slot"], v["sigma_max"])
    if v["arrivals"] == INFINITE_BACKLOG:
        arrivals = ArrivalModel()
    else:
        arrivals = ArrivalModel(v["arrivals"], v["arrival_means_files_per_slot"], v["arrival_max_files_per_slot"])
    profile = None if v["gain_profile"] == "none" else v["gain_profile"]
    config = RunConfig(
        params,
        v["channel"],
        v["mean_gains"],
        fairness=fairness,
        arrivals=arrivals,
        policy=v["policy"],
        horizon=v["horizon_slots"],
        sample_every=v["sample_every_slots"],
        seed=v["seed"],
        warmup_fraction=v["warmup_fraction"],
        gain_profile=profile,
    )
    return config.validate()


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def dump(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(config))
