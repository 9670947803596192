"""Run configuration: strict YAML parsing with field-path diagnostics.

Configs are single YAML documents (JSON is accepted too, being a YAML
subset).  Parsing is strict: unknown keys are fatal, every value is
domain-checked, and defaults are applied only where the schema declares
them, so a parsed config serializes back to an equivalent document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .params import SystemParams

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config",
           "params_from_config"]


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


_REQUIRED = object()


@dataclass(frozen=True)
class _Field:
    kind: str                 # int | float | str | bool | list | block | blocklist
    default: object = _REQUIRED
    minimum: float | None = None
    maximum: float | None = None
    exclusive_min: bool = False
    choices: tuple = ()
    schema: dict | None = None
    element: "._Field" = None  # type: ignore[name-defined]


def _err(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _check_number(value, field: _Field, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _err(path, f"expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        _err(path, "must be finite")
    if field.minimum is not None:
        if field.exclusive_min and not v > field.minimum:
            _err(path, f"must be > {field.minimum}, got {value}")
        if not field.exclusive_min and not v >= field.minimum:
            _err(path, f"must be >= {field.minimum}, got {value}")
    if field.maximum is not None and not v <= field.maximum:
        _err(path, f"must be <= {field.maximum}, got {value}")
    return v


def _validate(node, field: _Field, path: str):
    if field.kind == "block":
        if not isinstance(node, dict):
            _err(path, f"expected a mapping, got {type(node).__name__}")
        return _validate_block(node, field.schema, path)
    if field.kind == "blocklist":
        if not isinstance(node, list):
            _err(path, f"expected a list, got {type(node).__name__}")
        return [_validate_block(item, field.schema, f"{path}[{i}]")
                if isinstance(item, dict) else _err(f"{path}[{i}]", "expected a mapping")
                for i, item in enumerate(node)]
    if field.kind == "list":
        if not isinstance(node, list):
            _err(path, f"expected a list, got {type(node).__name__}")
        return [_validate(item, field.element, f"{path}[{i}]")
                for i, item in enumerate(node)]
    if field.kind == "int":
        if isinstance(node, bool) or not isinstance(node, int):
            _err(path, f"expected an integer, got {node!r}")
        _check_number(node, field, path)
        return int(node)
    if field.kind == "float":
        return _check_number(node, field, path)
    if field.kind == "bool":
        if not isinstance(node, bool):
            _err(path, f"expected true/false, got {node!r}")
        return node
    if field.kind == "str":
        if not isinstance(node, str):
            _err(path, f"expected a string, got {node!r}")
        if field.choices and node not in field.choices:
            _err(path, f"must be one of {sorted(field.choices)}, got {node!r}")
        return node
    raise AssertionError(f"unhandled field kind {field.kind}")


def _validate_block(node: dict, schema: dict, path: str) -> dict:
    out = {}
    for key, field in schema.items():
        child_path = f"{path}.{key}" if path else key
        if key in node:
            out[key] = _validate(node[key], field, child_path)
        elif field.default is _REQUIRED:
            _err(child_path, "required key is missing")
        elif field.default is not None or field.kind not in ("block", "blocklist"):
            out[key] = field.default
        # optional blocks defaulting to None are simply omitted
    unknown = set(node) - set(schema)
    if unknown:
        key = sorted(unknown)[0]
        child_path = f"{path}.{key}" if path else key
        _err(child_path, "unknown key")
    return out


def _params_schema() -> dict:
    return {
        "n": _Field("int", minimum=1, maximum=3),
        "m": _Field("float", default=1.0, minimum=1.0, maximum=2.0),
        "delta1": _Field("float", minimum=0.0, maximum=0.5),
        "delta2": _Field("float", minimum=0.0, maximum=0.5),
        "p": _Field("float", minimum=1.0, exclusive_min=True),
        "q": _Field("float", minimum=1.0, exclusive_min=True),
    }


_FLOAT_LIST = _Field("list", element=_Field("float", minimum=0.0))
_RANGE = _Field("list", element=_Field("float", minimum=1.0, exclusive_min=True))

SCHEMAS: dict = {
    "simulate": {
        "params": _Field("block", schema=_params_schema()),
        "grid": _Field("block", schema={
            "points_per_axis": _Field("int", minimum=8),
            "half_width": _Field("float", minimum=0.0, exclusive_min=True),
        }),
        "data": _Field("block", schema={
            "kind": _Field("str", choices=("gaussian_bump", "slow_decay_profile",
                                           "small_energy")),
            "amplitude": _Field("float", default=1.0, minimum=0.0, exclusive_min=True),
            "width": _Field("float", default=1.0, minimum=0.0, exclusive_min=True),
            "eps_tilde": _Field("float", default=0.2),
        }),
        "time": _Field("block", schema={
            "T": _Field("float", minimum=0.0),
            "h": _Field("float", minimum=0.0, exclusive_min=True),
            "record_every": _Field("int", default=1, minimum=1),
        }),
        "blowup": _Field("block", default=None, schema={
            "threshold": _Field("float", default=1e8, minimum=0.0, exclusive_min=True),
            "window": _Field("int", default=5, minimum=1),
        }),
        "nonlinearity_enabled": _Field("bool", default=True),
        "seed": _Field("int", default=0),
    },
    "kernels": {
        "t_values": _FLOAT_LIST,
        "xi_values": _FLOAT_LIST,
        "delta_values": _Field("list", element=_Field("float", minimum=0.0, maximum=0.5)),
        "sweep": _Field("block", default=None, schema={
            "delta": _Field("float", minimum=0.0, maximum=0.5),
            "center": _Field("float", minimum=0.0, exclusive_min=True),
            "halfwidth": _Field("float", minimum=0.0, exclusive_min=True),
            "count": _Field("int", default=200, minimum=3),
            "t": _Field("float", default=1.0, minimum=0.0),
        }),
        "seed": _Field("int", default=0),
    },
    "rates": {
        "n_values": _Field("list", element=_Field("int", minimum=1)),
        "delta_values": _Field("list", element=_Field("float", minimum=0.0, maximum=0.5)),
        "m": _Field("float", default=1.0, minimum=1.0, maximum=2.0),
        "j": _Field("int", default=0, minimum=0, maximum=1),
        "k": _Field("int", default=0, minimum=0),
        "channels": _Field("list", default=["w0", "w1"],
                           element=_Field("str", choices=("w0", "w1"))),
        "t_lo": _Field("float", default=1e2, minimum=0.0, exclusive_min=True),
        "t_hi": _Field("float", default=1e4, minimum=0.0, exclusive_min=True),
        "num_times": _Field("int", default=20, minimum=8),
        "seed": _Field("int", default=0),
    },
    "atlas": {
        "params": _Field("block", schema=_params_schema()),
        "p_range": _RANGE,
        "q_range": _RANGE,
        "resolution": _Field("int", minimum=1, maximum=2000),
        "seed": _Field("int", default=0),
    },
    "testfn": {
        "decay_bounds": _Field("blocklist", default=None, schema={
            "r": _Field("float", minimum=0.0, exclusive_min=True),
            "s": _Field("float", minimum=0.0, maximum=1.0, exclusive_min=True),
            "n": _Field("int", minimum=1, maximum=2),
            "radius_max": _Field("float", default=50.0, minimum=1.0),
        }),
        "scaling_check": _Field("block", default=None, schema={
            "r": _Field("float", default=3.0, minimum=0.0, exclusive_min=True),
            "s": _Field("float", minimum=0.0, maximum=1.0, exclusive_min=True),
            "kappa": _Field("float", default=1.0, minimum=0.0, exclusive_min=True),
            "scales": _Field("list", default=[2.0, 4.0, 8.0],
                             element=_Field("float", minimum=0.0, exclusive_min=True)),
            "points": _Field("list", default=[0.0, 1.0, 5.0], element=_Field("float")),
        }),
        "scalings_params": _Field("block", default=None, schema=_params_schema()),
        "critical_params": _Field("block", default=None, schema=_params_schema()),
        "seed": _Field("int", default=0),
    },
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    data: dict

    @property
    def seed(self) -> int:
        return self.data.get("seed", 0)


def parse_config(text: str, command: str) -> RunConfig:
    """Parse and validate a config document for one subcommand."""
    if command not in SCHEMAS:
        raise ConfigError(f"command: unknown subcommand {command!r}")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config: top level must be a mapping, got {type(doc).__name__}")
    data = _validate_block(doc, SCHEMAS[command], "")
    # cross-field domain checks shared with the library types
    if "params" in data:
        try:
            params_from_config(data["params"])
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from exc
    if command == "simulate" and data["data"]["kind"] == "slow_decay_profile":
        if data["data"]["eps_tilde"] <= 0:
            raise ConfigError(
                "data.eps_tilde: slow-decay profile requires a positive value, "
                f"got {data['data']['eps_tilde']}"
            )
    if command == "rates" and data["t_hi"] <= data["t_lo"]:
        raise ConfigError("t_hi: fit window must satisfy t_hi > t_lo")
    return RunConfig(command, data)


def serialize_config(config: RunConfig) -> str:
    """Canonical YAML rendering of a validated config; stable for round-trips."""
    return yaml.safe_dump(config.data, sort_keys=True, default_flow_style=False)


def params_from_config(block: dict) -> SystemParams:
    return SystemParams(n=block["n"], m=block["m"], delta1=block["delta1"],
                        delta2=block["delta2"], p=block["p"], q=block["q"])
