"""Diagnostic session state machine.

A session injects one fault into the simulated robot and then answers sensor
reveals with noisy readings until the operator (human, scripted, or model)
has triggered every action in the fault's resolution set. Every reveal and
every action is logged in order; the log is the unit of training data.

Resolution is set-completion: the session flips to resolved as soon as the
applied actions cover the resolution set, regardless of order or of wrong
actions tried in between. Wrong actions are logged but have no effect on the
robot. Once resolved, the session refuses further reveals and actions.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

import numpy as np

from .robot import FaultSpec, RobotConfig, sample_reading

OPERATOR_KINDS = ("synthetic", "human", "model")


class SessionError(ValueError):
    """Raised on invalid session operations (unknown ids, resolved session)."""


@dataclass(frozen=True)
class ReadStep:
    sensor_id: str
    value: float


@dataclass(frozen=True)
class ActStep:
    action_id: str


Step = Union[ReadStep, ActStep]


@dataclass(frozen=True)
class SessionLog:
    """Immutable record of one finished (or abandoned) diagnostic session."""

    session_id: str
    fault_id: str
    steps: tuple[Step, ...]
    resolved: bool
    operator: str
    seed: int
    created_at: float = 0.0

    def __post_init__(self) -> None:
        if self.operator not in OPERATOR_KINDS:
            raise SessionError(f"unknown operator kind: {self.operator!r}")


@dataclass
class SessionState:
    """Live mutable session; single-owner, not thread-safe by itself."""

    config: RobotConfig
    fault: FaultSpec
    session_id: str
    seed: int
    operator: str
    rng: np.random.Generator
    revealed: dict[str, float] = field(default_factory=dict)
    applied_actions: list[str] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)
    resolved: bool = False
    created_at: float = 0.0


def start_session(
    config: RobotConfig,
    fault_id: str,
    seed: int,
    session_id: Optional[str] = None,
    operator: str = "synthetic",
) -> SessionState:
    """Open a fresh session with `fault_id` injected and a private RNG."""
    fault = config.faults_by_id.get(fault_id)
    if fault is None:
        raise SessionError(f"unknown fault id: {fault_id!r}")
    if session_id is None:
        session_id = f"{fault_id}-{seed & 0xFFFFFFFF:08x}"
    return SessionState(
        config=config,
        fault=fault,
        session_id=session_id,
        seed=seed,
        operator=operator,
        rng=np.random.default_rng(seed),
        created_at=time.time(),
    )


def _check_open(state: SessionState) -> None:
    if state.resolved:
        raise SessionError(f"session {state.session_id} already resolved")


def reveal_sensor(state: SessionState, sensor_id: str) -> float:
    """Sample a fresh reading for `sensor_id` and log it.

    Repeated reveals of the same sensor re-sample; the robot's sensors are
    live and noisy, so the session never caches values.
    """
    _check_open(state)
    if sensor_id not in state.config.sensors_by_id:
        raise SessionError(f"unknown sensor id: {sensor_id!r}")
    value = sample_reading(state.config, state.fault, sensor_id, state.rng)
    state.revealed[sensor_id] = value
    state.steps.append(ReadStep(sensor_id, value))
    return value


def trigger_action(state: SessionState, action_id: str) -> bool:
    """Apply `action_id`, log it, and return the updated resolved flag."""
    _check_open(state)
    if action_id not in state.config.actions_by_id:
        raise SessionError(f"unknown action id: {action_id!r}")
    state.applied_actions.append(action_id)
    state.steps.append(ActStep(action_id))
    if set(state.fault.resolution) <= set(state.applied_actions):
        state.resolved = True
    return state.resolved


def finalize(state: SessionState) -> SessionLog:
    """Freeze the session into an immutable log."""
    return SessionLog(
        session_id=state.session_id,
        fault_id=state.fault.id,
        steps=tuple(state.steps),
        resolved=state.resolved,
        operator=state.operator,
        seed=state.seed,
        created_at=state.created_at,
    )


def replay_log(config: RobotConfig, log: SessionLog) -> bool:
    """Re-run a log's steps against a fresh session and report resolution.

    Reads re-sample from the same per-session seed, so a faithful log replays
    to identical values; only the action steps decide the outcome. Steps after
    the resolving action (none are produced by well-behaved drivers) are
    ignored rather than rejected.
    """
    state = start_session(config, log.fault_id, log.seed, session_id=log.session_id, operator=log.operator)
    for step in log.steps:
        if state.resolved:
            break
        if isinstance(step, ReadStep):
            reveal_sensor(state, step.sensor_id)
        else:
            trigger_action(state, step.action_id)
    return state.resolved


def action_to_read_ratio(logs: Iterable[SessionLog]) -> float:
    """Total Act steps divided by total Read steps across `logs`."""
    acts = 0
    reads = 0
    for log in logs:
        for step in log.steps:
            if isinstance(step, ReadStep):
                reads += 1
            else:
                acts += 1
    if reads == 0:
        raise SessionError("action-to-read ratio undefined: no Read steps")
    return acts / reads


# ---------------------------------------------------------------------------
# JSONL serialization.
#
# One object per line; field order and names are part of the on-disk contract
# shared with the HTTP service and the training pipeline. `created_at` stays
# in memory only so that regenerated datasets are byte-identical.

def _step_to_obj(step: Step) -> dict:
    if isinstance(step, ReadStep):
        return {"type": "read", "sensor": step.sensor_id, "value": step.value}
    return {"type": "act", "action": step.action_id}


def _step_from_obj(obj: dict) -> Step:
    kind = obj.get("type")
    if kind == "read":
        return ReadStep(sensor_id=obj["sensor"], value=float(obj["value"]))
    if kind == "act":
        return ActStep(action_id=obj["action"])
    raise SessionError(f"unknown step type: {kind!r}")


def log_to_json(log: SessionLog) -> str:
    obj = {
        "session_id": log.session_id,
        "fault_id": log.fault_id,
        "steps": [_step_to_obj(s) for s in log.steps],
        "resolved": log.resolved,
        "operator": log.operator,
        "seed": log.seed,
    }
    return json.dumps(obj, separators=(",", ":"))


def log_from_json(line: str) -> SessionLog:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SessionError(f"parse failure in session log: {exc}") from exc
    try:
        return SessionLog(
            session_id=obj["session_id"],
            fault_id=obj["fault_id"],
            steps=tuple(_step_from_obj(s) for s in obj["steps"]),
            resolved=bool(obj["resolved"]),
            operator=obj["operator"],
            seed=int(obj["seed"]),
        )
    except KeyError as exc:
        raise SessionError(f"session log missing field {exc.args[0]!r}") from exc


def write_logs_jsonl(logs: Iterable[SessionLog], stream: IO[str]) -> int:
    count = 0
    for log in logs:
        stream.write(log_to_json(log) + "\n")
        count += 1
    return count


def read_logs_jsonl(stream: IO[str]) -> list[SessionLog]:
    logs = []
    for line in stream:
        line = line.strip()
        if line:
            logs.append(log_from_json(line))
    return logs
