"""Scenario files: JSON with ``flight``, ``solver``, ``sim``, ``sweep`` and
``latency_model`` sections, layered over a named profile.

Precedence is built-in profile < config file < ``--set`` overrides.
Profiles other than the built-in ``defaults`` are looked up as
``<name>.json`` in ``$SAFESPEED_PROFILE_DIR``.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .model import PARAM_NAMES, FlightParams, total_latency
from .sim import SimConfig
from .solver import LatencyModel, SolverConfig

PROFILE_DIR_ENV = "SAFESPEED_PROFILE_DIR"


class ConfigError(ValueError):
    """Bad scenario input; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


_FLIGHT_KEYS = set(PARAM_NAMES) | {"latency_components"}
_SECTIONS = {
    "flight": _FLIGHT_KEYS,
    "solver": {f.name for f in dataclasses.fields(SolverConfig)},
    "sim": {f.name for f in dataclasses.fields(SimConfig)},
    "sweep": {"param", "values", "simulate"},
    "latency_model": {f.name for f in dataclasses.fields(LatencyModel)},
}

BUILTIN_PROFILES = {
    # default flight parameters of the reference scenario
    "defaults": {
        "flight": {"r": 0.1, "d": 0.37, "a_max": 20.0, "j_max": 120.0,
                   "R": 3.0, "e": 0.01, "S": 6.0, "tau": 0.01},
    },
}


@dataclass
class Scenario:
    flight: FlightParams
    solver: SolverConfig
    sim: SimConfig
    sweep: Optional[dict] = None
    latency_model: Optional[LatencyModel] = None

    def to_dict(self) -> dict:
        out = {
            "flight": self.flight.as_dict(),
            "solver": dataclasses.asdict(self.solver),
            "sim": dataclasses.asdict(self.sim),
        }
        if self.flight.latency_components is not None:
            out["flight"]["latency_components"] = dict(self.flight.latency_components)
        if self.sweep is not None:
            out["sweep"] = copy.deepcopy(self.sweep)
        if self.latency_model is not None:
            out["latency_model"] = dataclasses.asdict(self.latency_model)
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_profile(name: str) -> dict:
    if name in BUILTIN_PROFILES:
        return copy.deepcopy(BUILTIN_PROFILES[name])
    directory = os.environ.get(PROFILE_DIR_ENV)
    if directory:
        path = Path(directory) / f"{name}.json"
        if path.is_file():
            return _read_json(path)
    raise ConfigError("profile", f"unknown profile {name!r}")


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    return doc


def _check_keys(doc: dict) -> None:
    for section, body in doc.items():
        if section not in _SECTIONS:
            raise ConfigError(section, "unknown section")
        if not isinstance(body, dict):
            raise ConfigError(section, "section must be an object")
        for key in body:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")


def merge(base: dict, layer: dict) -> dict:
    _check_keys(layer)
    out = copy.deepcopy(base)
    for section, body in layer.items():
        target = out.setdefault(section, {})
        if section == "flight" and "latency_components" in body and "tau" not in body:
            # tau follows the components unless set in the same layer
            target.pop("tau", None)
        target.update(copy.deepcopy(body))
    return out


def parse_override(text: str) -> dict:
    """``key=value`` to a one-entry layer; bare keys belong to ``flight``."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    section, _, name = key.rpartition(".")
    section = section or "flight"
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    layer = {section: {name: value}}
    _check_keys(layer)
    return layer


def _build(cls, section: str, body: dict):
    try:
        return cls(**body)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        # messages start with the field name, as "R: ..." or "dt must ..."
        head = msg.split(":", 1)[0] if ":" in msg else msg.split(" ", 1)[0]
        if head in _SECTIONS[section]:
            rest = msg.split(":", 1)[1].strip() if ":" in msg and msg.startswith(head + ":") else msg
            raise ConfigError(f"{section}.{head}", rest) from None
        raise ConfigError(section, msg) from None


def resolve(doc: dict) -> Scenario:
    """Validate a merged document into a :class:`Scenario`."""
    _check_keys(doc)
    flight = dict(doc.get("flight", {}))
    missing = [k for k in PARAM_NAMES if k not in flight and k != "tau"]
    if missing:
        raise ConfigError(f"flight.{missing[0]}", "missing")
    components = flight.get("latency_components")
    if components is not None:
        if not isinstance(components, dict):
            raise ConfigError("flight.latency_components", "must be an object of name: seconds")
        try:
            summed = total_latency(components)
        except ValueError as exc:
            raise ConfigError("flight.latency_components", str(exc)) from None
        flight.setdefault("tau", summed)
    if "tau" not in flight:
        raise ConfigError("flight.tau", "missing")
    for key in PARAM_NAMES:
        if not isinstance(flight[key], (int, float)) or isinstance(flight[key], bool):
            raise ConfigError(f"flight.{key}", f"must be a number, got {flight[key]!r}")
    fp = _build(FlightParams, "flight", flight)
    solver = _build(SolverConfig, "solver", doc.get("solver", {}))
    sim = _build(SimConfig, "sim", doc.get("sim", {}))
    lm = _build(LatencyModel, "latency_model", doc["latency_model"]) if "latency_model" in doc else None
    sweep = None
    if "sweep" in doc:
        sweep = dict(doc["sweep"])
        if sweep.get("param") not in PARAM_NAMES:
            raise ConfigError("sweep.param", f"must be one of {PARAM_NAMES}")
        values = sweep.get("values", [])
        if not isinstance(values, list) or any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep.values", "must be a strictly increasing list")
        sweep.setdefault("simulate", False)
    return Scenario(fp, solver, sim, sweep, lm)


def load_scenario(profile: str = "defaults", path=None, overrides=()) -> Scenario:
    doc = load_profile(profile)
    if path is not None:
        doc = merge(doc, _read_json(path))
    for text in overrides:
        doc = merge(doc, parse_override(text))
    return resolve(doc)


def parse_config(path) -> Scenario:
    """Read one config file; absent sections fall back to the ``defaults`` profile."""
    return load_scenario("defaults", path)
