# Licensed under the MIT license

"""
Run configuration: JSON documents keyed by `RunConfig` field names, merged
with command-line flags (flags win).
"""

import json
import logging
from typing import Any, Dict, Mapping, Optional, Tuple

from .degrees import build_distribution, parse_degrees
from .types import InvalidParameter, MalformedDegrees, RunConfig

log = logging.getLogger(__name__)

FIELDS = RunConfig._fields

FLOAT_FIELDS = {
    "gamma",
    "tau",
    "t_max",
    "rel_tol",
    "abs_tol",
    "tau_min",
    "tau_max",
    "eps",
    "initial_infected",
}
INT_FIELDS = {"steps", "max_iter", "processes"}
BOOL_FIELDS = {"allow_virtual", "verify", "plain_rate", "stop_at_equilibrium"}


def _scalar(key: str, value: Any) -> Any:
    if key in BOOL_FIELDS:
        if not isinstance(value, bool):
            raise InvalidParameter(f"{key} must be true or false, got {value!r}")
        return value

    # bool is an int subclass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameter(f"{key} must be a number, got {value!r}")
    if key in INT_FIELDS:
        if isinstance(value, float) and not value.is_integer():
            raise InvalidParameter(f"{key} must be an integer, got {value!r}")
        return int(value)
    assert key in FLOAT_FIELDS, key
    return float(value)


def _infected(value: Any) -> Tuple[float, ...]:
    if isinstance(value, (str, bytes)):
        raise InvalidParameter(f"initial_infected must be a list, got {value!r}")
    try:
        return tuple(_scalar("initial_infected", v) for v in value)
    except TypeError:
        raise InvalidParameter(f"initial_infected must be a list, got {value!r}")


def _degree_pairs(value: Any) -> Tuple[Tuple[int, int], ...]:
    if isinstance(value, str):
        pairs = parse_degrees(value)
    else:
        try:
            pairs = [
                (entry["degree"], entry["count"]) if isinstance(entry, dict) else entry
                for entry in value
            ]
        except (KeyError, TypeError):
            raise MalformedDegrees(f"degrees entries need degree and count: {value!r}")
    dist = build_distribution(pairs)
    return tuple(dist.pairs())


def from_mapping(
    data: Mapping[str, Any], base: Optional[RunConfig] = None
) -> RunConfig:
    """Overlay `data` onto `base`; `None` values leave the base untouched."""
    unknown = set(data) - set(FIELDS)
    if unknown:
        raise InvalidParameter(f"unknown config keys: {', '.join(sorted(unknown))}")

    values: Dict[str, Any] = {}
    for key, value in data.items():
        if value is None:
            continue
        if key == "degrees":
            value = _degree_pairs(value)
        elif key == "initial_infected":
            value = _infected(value)
        else:
            value = _scalar(key, value)
        values[key] = value
    return (base or RunConfig())._replace(**values)


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise InvalidParameter(f"cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise InvalidParameter(f"config {path} is not valid JSON: {e}")

    if not isinstance(data, dict):
        raise InvalidParameter(f"config {path} must hold a JSON object")
    log.debug(f"loaded config {path}: {sorted(data)}")
    return from_mapping(data)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.as_dict(), indent=2, sort_keys=True)


def emit_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w") as f:
        f.write(dump_config(cfg))
        f.write("\n")
