"""Simulated vacuum robot: component taxonomy, sensors, actions, fault catalog.

Everything here is immutable after loading. A config document is a JSON tree
with top-level keys ``schema_version``, ``taxonomy``, ``sensors``, ``actions``
and ``faults``; :func:`load_robot_config` parses and fully validates it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import IO

import numpy as np

SCHEMA_VERSION = "1"

ROOT_LEVEL = 0
LEAF_LEVEL = 3

KIND_CATEGORY = "category"
KIND_SENSOR = "sensor-leaf"
KIND_ACTUATOR = "actuator-leaf"


class ConfigError(ValueError):
    """Raised when a config document is malformed or violates an invariant."""


@dataclass(frozen=True)
class TaxonomyNode:
    id: str
    label: str
    level: int
    parent_id: str | None
    kind: str


@dataclass(frozen=True)
class SensorSpec:
    id: str
    unit: str
    nominal_mean: float
    noise_std: float
    min_value: float
    max_value: float
    taxonomy_leaf: str


@dataclass(frozen=True)
class ActionSpec:
    id: str
    label: str
    taxonomy_leaf: str


@dataclass(frozen=True)
class SensorEffect:
    """How a fault shifts one sensor's reading distribution."""

    shifted_mean: float
    shifted_std: float


@dataclass(frozen=True)
class FaultSpec:
    id: str
    symptom_message: str
    sensor_effects: dict[str, SensorEffect]
    resolution: tuple[str, ...]
    ideal_reads: tuple[str, ...]
    # Sensors that are causally adjacent to the fault: not shifted by it, but
    # part of the reference diagnostic sweep. ideal_reads may only reference
    # affected or related sensors.
    related_sensors: tuple[str, ...] = ()


@dataclass(frozen=True)
class RobotConfig:
    schema_version: str
    taxonomy: tuple[TaxonomyNode, ...]
    sensors: tuple[SensorSpec, ...]
    actions: tuple[ActionSpec, ...]
    faults: tuple[FaultSpec, ...]

    @cached_property
    def nodes_by_id(self) -> dict[str, TaxonomyNode]:
        return {n.id: n for n in self.taxonomy}

    @cached_property
    def sensors_by_id(self) -> dict[str, SensorSpec]:
        return {s.id: s for s in self.sensors}

    @cached_property
    def actions_by_id(self) -> dict[str, ActionSpec]:
        return {a.id: a for a in self.actions}

    @cached_property
    def faults_by_id(self) -> dict[str, FaultSpec]:
        return {f.id: f for f in self.faults}

    @cached_property
    def root(self) -> TaxonomyNode:
        return next(n for n in self.taxonomy if n.level == ROOT_LEVEL)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _parse_node(raw: dict, idx: int) -> TaxonomyNode:
    try:
        return TaxonomyNode(
            id=str(raw["id"]),
            label=str(raw["label"]),
            level=int(raw["level"]),
            parent_id=raw.get("parent_id"),
            kind=str(raw["kind"]),
        )
    except KeyError as exc:
        raise ConfigError(f"taxonomy[{idx}]: missing field {exc}") from exc


def _parse_sensor(raw: dict, idx: int) -> SensorSpec:
    try:
        return SensorSpec(
            id=str(raw["id"]),
            unit=str(raw["unit"]),
            nominal_mean=float(raw["nominal_mean"]),
            noise_std=float(raw["noise_std"]),
            min_value=float(raw["min_value"]),
            max_value=float(raw["max_value"]),
            taxonomy_leaf=str(raw["taxonomy_leaf"]),
        )
    except KeyError as exc:
        raise ConfigError(f"sensors[{idx}]: missing field {exc}") from exc


def _parse_action(raw: dict, idx: int) -> ActionSpec:
    try:
        return ActionSpec(
            id=str(raw["id"]),
            label=str(raw["label"]),
            taxonomy_leaf=str(raw["taxonomy_leaf"]),
        )
    except KeyError as exc:
        raise ConfigError(f"actions[{idx}]: missing field {exc}") from exc


def _parse_fault(raw: dict, idx: int) -> FaultSpec:
    try:
        effects = {
            str(sid): SensorEffect(
                shifted_mean=float(eff["shifted_mean"]),
                shifted_std=float(eff["shifted_std"]),
            )
            for sid, eff in raw["sensor_effects"].items()
        }
        return FaultSpec(
            id=str(raw["id"]),
            symptom_message=str(raw["symptom_message"]),
            sensor_effects=effects,
            resolution=tuple(raw["resolution"]),
            ideal_reads=tuple(raw["ideal_reads"]),
            related_sensors=tuple(raw.get("related_sensors", ())),
        )
    except KeyError as exc:
        raise ConfigError(f"faults[{idx}]: missing field {exc}") from exc


def _validate_taxonomy(nodes: tuple[TaxonomyNode, ...]) -> None:
    seen: set[str] = set()
    for n in nodes:
        _require(n.id not in seen, f"duplicate id: taxonomy node {n.id!r}")
        seen.add(n.id)

    roots = [n for n in nodes if n.level == ROOT_LEVEL]
    _require(len(roots) == 1, f"taxonomy must have exactly one root, found {len(roots)}")
    _require(roots[0].parent_id is None, f"root node {roots[0].id!r} must have no parent")

    by_id = {n.id: n for n in nodes}
    for n in nodes:
        _require(
            ROOT_LEVEL <= n.level <= LEAF_LEVEL,
            f"taxonomy node {n.id!r}: level {n.level} out of range",
        )
        if n.level > ROOT_LEVEL:
            _require(n.parent_id is not None, f"taxonomy node {n.id!r}: missing parent")
            parent = by_id.get(n.parent_id)
            _require(parent is not None, f"dangling reference: parent {n.parent_id!r} of node {n.id!r}")
            _require(
                parent.level == n.level - 1,
                f"taxonomy level violation: node {n.id!r} at level {n.level} "
                f"has parent {parent.id!r} at level {parent.level}",
            )
        is_leaf_kind = n.kind in (KIND_SENSOR, KIND_ACTUATOR)
        if n.level == LEAF_LEVEL:
            _require(
                is_leaf_kind,
                f"taxonomy node {n.id!r}: level-3 node must be {KIND_SENSOR} or {KIND_ACTUATOR}",
            )
        else:
            _require(
                n.kind == KIND_CATEGORY,
                f"taxonomy node {n.id!r}: kind {n.kind!r} only allowed at level 3",
            )


def validate_config(config: RobotConfig) -> None:
    """Check every cross-reference and structural invariant; raise ConfigError."""
    _validate_taxonomy(config.taxonomy)
    nodes = config.nodes_by_id

    seen: set[str] = set()
    for s in config.sensors:
        _require(s.id not in seen, f"duplicate id: sensor {s.id!r}")
        seen.add(s.id)
        _require(s.noise_std >= 0, f"sensor {s.id!r}: noise_std must be >= 0")
        _require(s.min_value < s.max_value, f"sensor {s.id!r}: min_value must be < max_value")
        _require(
            s.min_value <= s.nominal_mean <= s.max_value,
            f"sensor {s.id!r}: nominal_mean outside [min_value, max_value]",
        )
        leaf = nodes.get(s.taxonomy_leaf)
        _require(leaf is not None, f"dangling reference: taxonomy_leaf {s.taxonomy_leaf!r} of sensor {s.id!r}")
        _require(
            leaf.kind == KIND_SENSOR,
            f"kind mismatch: sensor {s.id!r} points at {leaf.kind} node {leaf.id!r}",
        )

    seen = set()
    for a in config.actions:
        _require(a.id not in seen, f"duplicate id: action {a.id!r}")
        seen.add(a.id)
        leaf = nodes.get(a.taxonomy_leaf)
        _require(leaf is not None, f"dangling reference: taxonomy_leaf {a.taxonomy_leaf!r} of action {a.id!r}")
        _require(
            leaf.kind == KIND_ACTUATOR,
            f"kind mismatch: action {a.id!r} points at {leaf.kind} node {leaf.id!r}",
        )

    _require(len(config.faults) > 0, "faults must be non-empty")
    sensors = config.sensors_by_id
    actions = config.actions_by_id
    seen = set()
    for f in config.faults:
        _require(f.id not in seen, f"duplicate id: fault {f.id!r}")
        seen.add(f.id)
        _require(len(f.sensor_effects) > 0, f"fault {f.id!r}: sensor_effects must be non-empty")
        for sid, eff in f.sensor_effects.items():
            _require(sid in sensors, f"dangling reference: sensor {sid!r} in fault {f.id!r}")
            _require(eff.shifted_std >= 0, f"fault {f.id!r}: shifted_std for {sid!r} must be >= 0")
        _require(len(f.resolution) > 0, f"fault {f.id!r}: resolution must be non-empty")
        _require(
            len(set(f.resolution)) == len(f.resolution),
            f"fault {f.id!r}: resolution contains duplicates",
        )
        for aid in f.resolution:
            _require(aid in actions, f"dangling reference: action {aid!r} in fault {f.id!r}")
        for sid in f.related_sensors:
            _require(sid in sensors, f"dangling reference: related sensor {sid!r} in fault {f.id!r}")
        allowed = set(f.sensor_effects) | set(f.related_sensors)
        for sid in f.ideal_reads:
            _require(
                sid in allowed,
                f"fault {f.id!r}: ideal read {sid!r} is neither affected nor related",
            )


def load_robot_config(document: bytes | str | IO) -> RobotConfig:
    """Parse and validate a config document. Pure: no global state is touched."""
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse failure: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("parse failure: top level must be an object")
    for key in ("schema_version", "taxonomy", "sensors", "actions", "faults"):
        _require(key in raw, f"missing top-level key {key!r}")

    config = RobotConfig(
        schema_version=str(raw["schema_version"]),
        taxonomy=tuple(_parse_node(n, i) for i, n in enumerate(raw["taxonomy"])),
        sensors=tuple(_parse_sensor(s, i) for i, s in enumerate(raw["sensors"])),
        actions=tuple(_parse_action(a, i) for i, a in enumerate(raw["actions"])),
        faults=tuple(_parse_fault(f, i) for i, f in enumerate(raw["faults"])),
    )
    validate_config(config)
    return config


def config_to_document(config: RobotConfig) -> str:
    """Serialize back to the on-disk JSON format (inverse of load)."""
    doc = {
        "schema_version": config.schema_version,
        "taxonomy": [
            {"id": n.id, "label": n.label, "level": n.level, "parent_id": n.parent_id, "kind": n.kind}
            for n in config.taxonomy
        ],
        "sensors": [
            {
                "id": s.id,
                "unit": s.unit,
                "nominal_mean": s.nominal_mean,
                "noise_std": s.noise_std,
                "min_value": s.min_value,
                "max_value": s.max_value,
                "taxonomy_leaf": s.taxonomy_leaf,
            }
            for s in config.sensors
        ],
        "actions": [
            {"id": a.id, "label": a.label, "taxonomy_leaf": a.taxonomy_leaf}
            for a in config.actions
        ],
        "faults": [
            {
                "id": f.id,
                "symptom_message": f.symptom_message,
                "sensor_effects": {
                    sid: {"shifted_mean": e.shifted_mean, "shifted_std": e.shifted_std}
                    for sid, e in f.sensor_effects.items()
                },
                "resolution": list(f.resolution),
                "ideal_reads": list(f.ideal_reads),
                "related_sensors": list(f.related_sensors),
            }
            for f in config.faults
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_default_config() -> RobotConfig:
    """Load the vacuum-robot config shipped with the package."""
    doc = resources.files("tocbench").joinpath("data/vacuum_robot.json").read_bytes()
    return load_robot_config(doc)


def taxonomy_path(config: RobotConfig, leaf_id: str) -> list[str]:
    """Node ids from the root down to ``leaf_id``, always length 4."""
    node = config.nodes_by_id.get(leaf_id)
    if node is None:
        raise ConfigError(f"unknown taxonomy node {leaf_id!r}")
    if node.level != LEAF_LEVEL:
        raise ConfigError(f"node {leaf_id!r} is not a leaf")
    path = [node.id]
    while node.parent_id is not None:
        node = config.nodes_by_id[node.parent_id]
        path.append(node.id)
    return path[::-1]


def sample_reading(
    config: RobotConfig,
    fault: FaultSpec | None,
    sensor_id: str,
    rng: np.random.Generator,
) -> float:
    """Draw one noisy reading for a sensor, optionally under a fault's effect.

    The value is clamped to the sensor's range and quantized to one decimal
    place, mimicking a fixed-precision display.
    """
    sensor = config.sensors_by_id.get(sensor_id)
    if sensor is None:
        raise ConfigError(f"unknown sensor {sensor_id!r}")
    effect = fault.sensor_effects.get(sensor_id) if fault is not None else None
    if effect is not None:
        mean, std = effect.shifted_mean, effect.shifted_std
    else:
        mean, std = sensor.nominal_mean, sensor.noise_std
    value = mean if std == 0 else float(rng.normal(mean, std))
    value = min(max(value, sensor.min_value), sensor.max_value)
    return round(value, 1)
