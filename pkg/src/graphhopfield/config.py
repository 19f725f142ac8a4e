"""Flat key=value configuration with strict keys and layered precedence.

Precedence: built-in defaults < config file < command-line overrides.
Unknown keys are hard errors with a did-you-mean suggestion.
"""

from __future__ import annotations

import difflib

from .errors import ConfigError
from .model import TrainConfig

# key -> (type, default, help);  defaults follow the published grid midpoints
SCHEMA = {
    "variant": (str, "lse", "retrieval variant: lse | lsr | hier | nomem"),
    "hidden_dim": (int, 64, "hidden width (grid {64, 128})"),
    "num_patterns": (int, 64, "patterns per bank K (grid {64, 256})"),
    "beta_init": (float, 1.0, "inverse-temperature init, learnable afterwards"),
    "lambda": (float, 0.3, "Laplacian weight; negative values sharpen"),
    "alpha": (float, 0.3, "damping coefficient in (0, 1]"),
    "iterations": (int, 4, "update iterations per layer T"),
    "num_layers": (int, 2, "stacked retrieval layers L"),
    "groups": (int, 8, "groups G for hierarchical retrieval"),
    "heads": (int, 1, "memory heads H (grid {1, 2, 4, 8})"),
    "dropout": (float, 0.3, "dropout rate (grid {0.3, 0.5})"),
    "gate_bias_init": (float, 2.0, "gate bias initialization"),
    "skip_weight": (float, 0.1, "per-layer skip-connection weight"),
    "learning_rate": (float, 0.01, "Adam learning rate (grid {0.001, 0.005, 0.01})"),
    "weight_decay": (float, 5e-4, "L2 weight decay (grid {1e-4, 5e-4, 1e-3})"),
    "epochs": (int, 300, "maximum training epochs"),
    "patience": (int, 50, "early-stopping patience on validation accuracy"),
    "freeze_log_beta": (bool, False, "keep the temperature fixed during training"),
    "dataset": (str, "synth-homophilous", "synth-homophilous | synth-heterophilous | files"),
    "data_nodes": (int, 200, "synthetic graph size"),
    "data_features": (int, 16, "synthetic feature dimension"),
    "data_seed": (int, 0, "synthetic data seed"),
    "self_loops": (bool, True, "add self-loops before Laplacian normalization"),
}

# config keys that map onto TrainConfig fields (lambda is a keyword in Python)
_TRAIN_KEY_TO_FIELD = {
    "lambda": "lam",
    **{
        k: k
        for k in (
            "variant",
            "hidden_dim",
            "num_patterns",
            "beta_init",
            "alpha",
            "iterations",
            "num_layers",
            "groups",
            "heads",
            "dropout",
            "gate_bias_init",
            "skip_weight",
            "learning_rate",
            "weight_decay",
            "epochs",
            "patience",
            "freeze_log_beta",
        )
    },
}


def defaults() -> dict:
    return {key: spec[1] for key, spec in SCHEMA.items()}


def _coerce(key: str, raw):
    kind = SCHEMA[key][0]
    if isinstance(raw, kind):
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(text)
        return kind(text)
    except ValueError:
        raise ConfigError(f"config key '{key}' expects {kind.__name__}, got {raw!r}")


def _reject_unknown(key: str):
    if key not in SCHEMA:
        close = difflib.get_close_matches(key, SCHEMA, n=1)
        hint = f"; did you mean '{close[0]}'?" if close else ""
        raise ConfigError(f"unknown config key '{key}'{hint}")


def parse_config_file(path) -> dict:
    """Read `key=value` lines; '#' comments and blank lines are ignored."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            _reject_unknown(key)
            values[key] = _coerce(key, value)
    return values


def parse_overrides(pairs) -> dict:
    values = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override must be key=value, got {pair!r}")
        key, value = (part.strip() for part in pair.split("=", 1))
        _reject_unknown(key)
        values[key] = _coerce(key, value)
    return values


def resolve_config(config_path=None, overrides=None) -> dict:
    """Defaults, then the config file, then explicit overrides."""
    resolved = defaults()
    if config_path:
        resolved.update(parse_config_file(config_path))
    resolved.update(parse_overrides(overrides))
    return resolved


def train_config_from(resolved: dict, seed: int = 0) -> TrainConfig:
    kwargs = {
        field: resolved[key] for key, field in _TRAIN_KEY_TO_FIELD.items() if key in resolved
    }
    return TrainConfig(seed=seed, **kwargs)


def describe_keys() -> str:
    """Human-readable key listing with defaults, for --help."""
    lines = ["configuration keys (key=value in the config file or via --set):"]
    width = max(len(k) for k in SCHEMA)
    for key, (kind, default, help_text) in SCHEMA.items():
        lines.append(f"  {key:<{width}}  default {default!r:<18} {help_text}")
    return "\n".join(lines)
