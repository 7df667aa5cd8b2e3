"""HTTP backend for interactive diagnosis sessions.

Exposes the session state machine over JSON endpoints for the browser tool:
create a session (random or chosen fault), reveal sensors, trigger actions,
ask the loaded model for next-step suggestions, and persist the finished log
to the same JSONL format the synthetic pipeline writes, so human sessions
feed straight into training.

Concurrency: per-session locks serialize requests touching one session;
different sessions proceed in parallel. The config and model are read-only
after startup. Suggestions are advisory only; the backend never executes a
step on its own in a human session.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .codec import (
    EncodedStep,
    KIND_SYMPTOM,
    START_ID,
    Vocabulary,
    build_vocabulary,
    encode_act,
    encode_read,
)
from .lstm import Checkpoint, forward_step, initial_state, load_checkpoint
from .robot import RobotConfig, load_default_config, load_robot_config
from .session import (
    ReadStep,
    SessionError,
    SessionState,
    finalize,
    log_to_json,
    reveal_sensor,
    start_session,
    trigger_action,
)

DEFAULT_PORT = 8080


@dataclass
class ServiceState:
    config: RobotConfig
    vocab: Vocabulary
    checkpoint: Optional[Checkpoint]
    data_out: Path
    master_seed: int
    sessions: dict[str, SessionState] = field(default_factory=dict)
    locks: dict[str, threading.Lock] = field(default_factory=dict)
    registry_lock: threading.Lock = field(default_factory=threading.Lock)
    master_rng: np.random.Generator = field(init=False)
    counter: int = 0

    def __post_init__(self) -> None:
        self.master_rng = np.random.default_rng(self.master_seed)


def _http_error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def _sensor_view(state: ServiceState) -> list[dict]:
    out = []
    for sensor in state.config.sensors:
        node = state.config.nodes_by_id[sensor.taxonomy_leaf]
        group = node.parent_id
        out.append({"id": sensor.id, "label": node.label, "group": group, "color_key": group})
    return out


def _action_view(state: ServiceState) -> list[dict]:
    out = []
    for action in state.config.actions:
        node = state.config.nodes_by_id[action.taxonomy_leaf]
        out.append({"id": action.id, "label": action.label, "group": node.parent_id})
    return out


def _session_prefix(state: ServiceState, session: SessionState) -> list[EncodedStep]:
    """Encode the session so far the same way training sequences are built."""
    steps = [EncodedStep(token_id=START_ID)]
    include_symptom = state.checkpoint.include_symptom if state.checkpoint else True
    if include_symptom:
        steps.append(EncodedStep(token_id=state.vocab.token_id(KIND_SYMPTOM, session.fault.id)))
    for step in session.steps:
        if isinstance(step, ReadStep):
            steps.append(encode_read(state.vocab, state.config, step.sensor_id, step.value))
        else:
            steps.append(encode_act(state.vocab, state.config, step.action_id))
    return steps


def _suggestions(state: ServiceState, session: SessionState, top_k: int = 5) -> list[dict]:
    checkpoint = state.checkpoint
    assert checkpoint is not None
    params = checkpoint.params
    lstm_state = initial_state(params.dims)
    logits = None
    for step in _session_prefix(state, session):
        logits, lstm_state = forward_step(params, step, lstm_state)
    shifted = logits - logits.max()
    probs = np.exp(shifted) / np.exp(shifted).sum()
    order = np.argsort(-probs, kind="stable")[:top_k]
    out = []
    for token_id in order:
        token = state.vocab.tokens[int(token_id)]
        out.append({"kind": token.kind, "entity_id": token.entity_id, "score": float(probs[token_id])})
    return out


def create_app(
    config: Optional[RobotConfig] = None,
    checkpoint: Optional[Checkpoint] = None,
    data_out: Optional[Path] = None,
    master_seed: int = 0,
) -> FastAPI:
    if config is None:
        config = load_default_config()
    vocab = build_vocabulary(config)
    if checkpoint is not None and checkpoint.vocab_hash != vocab.vocab_hash:
        raise SessionError(
            f"model vocabulary hash {checkpoint.vocab_hash[:12]}... does not match "
            f"the active config {vocab.vocab_hash[:12]}..."
        )
    state = ServiceState(
        config=config,
        vocab=vocab,
        checkpoint=checkpoint,
        data_out=data_out or Path("human_sessions.jsonl"),
        master_seed=master_seed,
    )

    app = FastAPI(title="tocbench service")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(_request: Request, exc: RequestValidationError):
        return _http_error(400, f"malformed request: {exc.errors()[:1]}")

    async def _json_body(request: Request) -> Optional[dict]:
        if not await request.body():
            return {}
        try:
            body = await request.json()
        except Exception:
            return None
        return body if isinstance(body, dict) else None

    def _locked(session_id: str):
        with state.registry_lock:
            session = state.sessions.get(session_id)
            lock = state.locks.get(session_id)
        if session is None:
            return None, None
        return session, lock

    @app.post("/api/session")
    async def create_session(request: Request):
        body = await _json_body(request)
        if body is None:
            return _http_error(400, "malformed request body: expected a JSON object")
        fault_id = body.get("fault_id")
        seed = body.get("seed")
        if fault_id is not None and not isinstance(fault_id, str):
            return _http_error(400, "fault_id must be a string")
        if seed is not None and not isinstance(seed, int):
            return _http_error(400, "seed must be an integer")
        with state.registry_lock:
            if fault_id is None:
                fault_id = state.config.faults[int(state.master_rng.integers(len(state.config.faults)))].id
            elif fault_id not in state.config.faults_by_id:
                return _http_error(400, f"unknown fault id: {fault_id}")
            if seed is None:
                seed = int(state.master_rng.integers(0, 2**63 - 1))
            state.counter += 1
            session_id = f"h{state.counter:05d}"
            session = start_session(state.config, fault_id, seed, session_id=session_id, operator="human")
            state.sessions[session_id] = session
            state.locks[session_id] = threading.Lock()
        return {
            "session_id": session_id,
            "symptom_message": session.fault.symptom_message,
            "sensors": _sensor_view(state),
            "actions": _action_view(state),
        }

    @app.post("/api/session/{session_id}/reveal")
    async def reveal(session_id: str, request: Request):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("sensor_id"), str):
            return _http_error(400, "malformed request body: sensor_id required")
        session, lock = _locked(session_id)
        if session is None:
            return _http_error(404, f"unknown session: {session_id}")
        with lock:
            if session.resolved:
                return _http_error(409, "session already resolved")
            sensor_id = body["sensor_id"]
            if sensor_id not in state.config.sensors_by_id:
                return _http_error(400, f"unknown sensor id: {sensor_id}")
            value = reveal_sensor(session, sensor_id)
        return {"value": value, "unit": state.config.sensors_by_id[sensor_id].unit}

    @app.post("/api/session/{session_id}/action")
    async def action(session_id: str, request: Request):
        body = await _json_body(request)
        if body is None or not isinstance(body.get("action_id"), str):
            return _http_error(400, "malformed request body: action_id required")
        session, lock = _locked(session_id)
        if session is None:
            return _http_error(404, f"unknown session: {session_id}")
        with lock:
            if session.resolved:
                return _http_error(409, "session already resolved")
            action_id = body["action_id"]
            if action_id not in state.config.actions_by_id:
                return _http_error(400, f"unknown action id: {action_id}")
            resolved = trigger_action(session, action_id)
        return {"resolved": resolved}

    @app.get("/api/session/{session_id}/suggest")
    async def suggest(session_id: str):
        session, lock = _locked(session_id)
        if session is None:
            return _http_error(404, f"unknown session: {session_id}")
        if state.checkpoint is None:
            return {"suggestions": [], "model_loaded": False}
        with lock:
            suggestions = _suggestions(state, session)
        return {"suggestions": suggestions, "model_loaded": True}

    @app.post("/api/session/{session_id}/finish")
    async def finish(session_id: str):
        session, lock = _locked(session_id)
        if session is None:
            return _http_error(404, f"unknown session: {session_id}")
        with lock:
            log = finalize(session)
        line = log_to_json(log)
        with state.registry_lock:
            state.data_out.parent.mkdir(parents=True, exist_ok=True)
            with open(state.data_out, "a") as fh:
                fh.write(line + "\n")
            state.sessions.pop(session_id, None)
            state.locks.pop(session_id, None)
        return json.loads(line)

    @app.get("/api/config/taxonomy")
    async def taxonomy():
        return {
            "nodes": [
                {
                    "id": n.id,
                    "label": n.label,
                    "level": n.level,
                    "parent_id": n.parent_id,
                    "kind": n.kind,
                }
                for n in state.config.taxonomy
            ]
        }

    return app


def app_from_env() -> FastAPI:
    """Build the app from TOC_CONFIG / TOC_MODEL / TOC_DATA_OUT / TOC_SEED."""
    config_path = os.environ.get("TOC_CONFIG")
    if config_path:
        config = load_robot_config(Path(config_path).read_bytes())
    else:
        config = load_default_config()
    model_path = os.environ.get("TOC_MODEL")
    checkpoint = load_checkpoint(model_path) if model_path else None
    data_out = Path(os.environ.get("TOC_DATA_OUT", "human_sessions.jsonl"))
    seed = int(os.environ.get("TOC_SEED", "0"))
    return create_app(config=config, checkpoint=checkpoint, data_out=data_out, master_seed=seed)
