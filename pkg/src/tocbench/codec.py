"""Token encoding for diagnostic sequences.

A session log becomes a flat token sequence: START, a symptom token naming
the injected fault, one token per read or action, and STOP. Each encoded
step carries the features the model embeds alongside the token identity: a
normalized sensor value for reads, and the taxonomy path (level-1 category,
level-2 category, leaf) for reads and actions. Non-entity tokens carry a
sentinel taxonomy triple and a zero value feature.

Token ids are assigned deterministically from the config alone (sorted by
kind block, then entity id), so any two processes over the same config agree
on the vocabulary; the hash over the full assignment guards checkpoints
against config drift.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

from .robot import RobotConfig, taxonomy_path
from .session import ActStep, ReadStep, SessionLog

KIND_START = "start"
KIND_STOP = "stop"
KIND_SYMPTOM = "symptom"
KIND_READ = "read"
KIND_ACT = "act"

TAXONOMY_SENTINEL = (-1, -1, -1)


class CodecError(ValueError):
    """Raised on unknown ids or malformed sequences."""


@dataclass(frozen=True)
class Token:
    kind: str
    entity_id: Optional[str] = None


@dataclass(frozen=True)
class EncodedStep:
    token_id: int
    value_feature: float = 0.0
    taxonomy_levels: tuple[int, int, int] = TAXONOMY_SENTINEL


@dataclass(frozen=True)
class EncodedSequence:
    steps: tuple[EncodedStep, ...]
    fault_id: str


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[Token, ...]
    index: dict[Token, int]
    level_categories: tuple[tuple[str, ...], ...]
    vocab_hash: str

    @property
    def size(self) -> int:
        return len(self.tokens)

    def token_id(self, kind: str, entity_id: Optional[str] = None) -> int:
        token = Token(kind, entity_id)
        if token not in self.index:
            raise CodecError(f"unknown token: {kind}:{entity_id}")
        return self.index[token]

    def level_index(self, level: int, node_id: str) -> int:
        try:
            return self.level_categories[level - 1].index(node_id)
        except ValueError:
            raise CodecError(f"node {node_id!r} not indexed at level {level}") from None


START_ID = 0
STOP_ID = 1


def build_vocabulary(config: RobotConfig) -> Vocabulary:
    """Deterministic token table: START, STOP, symptoms, reads, acts."""
    tokens: list[Token] = [Token(KIND_START), Token(KIND_STOP)]
    tokens += [Token(KIND_SYMPTOM, fid) for fid in sorted(f.id for f in config.faults)]
    tokens += [Token(KIND_READ, sid) for sid in sorted(s.id for s in config.sensors)]
    tokens += [Token(KIND_ACT, aid) for aid in sorted(a.id for a in config.actions)]

    level_categories = tuple(
        tuple(sorted(n.id for n in config.taxonomy if n.level == level)) for level in (1, 2, 3)
    )

    hasher = hashlib.sha256()
    for token in tokens:
        hasher.update(f"token:{token.kind}:{token.entity_id or ''}\n".encode())
    for level, cats in enumerate(level_categories, start=1):
        hasher.update(f"level{level}:{','.join(cats)}\n".encode())

    return Vocabulary(
        tokens=tuple(tokens),
        index={token: i for i, token in enumerate(tokens)},
        level_categories=level_categories,
        vocab_hash=hasher.hexdigest(),
    )


def _taxonomy_levels(vocab: Vocabulary, config: RobotConfig, leaf_id: str) -> tuple[int, int, int]:
    _root, l1, l2, leaf = taxonomy_path(config, leaf_id)
    return (vocab.level_index(1, l1), vocab.level_index(2, l2), vocab.level_index(3, leaf))


def normalize_value(config: RobotConfig, sensor_id: str, value: float) -> float:
    """Map a raw reading into [0,1] over the sensor's declared range."""
    sensor = config.sensors_by_id.get(sensor_id)
    if sensor is None:
        raise CodecError(f"unknown sensor id: {sensor_id!r}")
    span = sensor.max_value - sensor.min_value
    if span <= 0:
        raise CodecError(f"sensor {sensor_id!r} has an empty value range")
    return min(1.0, max(0.0, (value - sensor.min_value) / span))


def encode_read(vocab: Vocabulary, config: RobotConfig, sensor_id: str, value: float) -> EncodedStep:
    sensor = config.sensors_by_id.get(sensor_id)
    if sensor is None:
        raise CodecError(f"unknown sensor id: {sensor_id!r}")
    return EncodedStep(
        token_id=vocab.token_id(KIND_READ, sensor_id),
        value_feature=normalize_value(config, sensor_id, value),
        taxonomy_levels=_taxonomy_levels(vocab, config, sensor.taxonomy_leaf),
    )


def encode_act(vocab: Vocabulary, config: RobotConfig, action_id: str) -> EncodedStep:
    action = config.actions_by_id.get(action_id)
    if action is None:
        raise CodecError(f"unknown action id: {action_id!r}")
    return EncodedStep(
        token_id=vocab.token_id(KIND_ACT, action_id),
        taxonomy_levels=_taxonomy_levels(vocab, config, action.taxonomy_leaf),
    )


def encode_session(
    vocab: Vocabulary,
    config: RobotConfig,
    log: SessionLog,
    include_symptom: bool = True,
) -> EncodedSequence:
    """Encode a full log as [START, SYMPTOM, step tokens..., STOP].

    `include_symptom` exists to ablate the symptom conditioning token; the
    default matches the training pipeline.
    """
    if log.fault_id not in config.faults_by_id:
        raise CodecError(f"unknown fault id: {log.fault_id!r}")
    steps = [EncodedStep(token_id=START_ID)]
    if include_symptom:
        steps.append(EncodedStep(token_id=vocab.token_id(KIND_SYMPTOM, log.fault_id)))
    for step in log.steps:
        if isinstance(step, ReadStep):
            steps.append(encode_read(vocab, config, step.sensor_id, step.value))
        elif isinstance(step, ActStep):
            steps.append(encode_act(vocab, config, step.action_id))
        else:
            raise CodecError(f"unknown step variant: {step!r}")
    steps.append(EncodedStep(token_id=STOP_ID))
    return EncodedSequence(steps=tuple(steps), fault_id=log.fault_id)


def decode_token(vocab: Vocabulary, token_id: int) -> Token:
    if not 0 <= token_id < vocab.size:
        raise CodecError(f"token id out of range: {token_id}")
    return vocab.tokens[token_id]
