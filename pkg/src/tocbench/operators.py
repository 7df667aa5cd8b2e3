"""Scripted non-expert operators and the dataset pipeline built on them.

The original study data comes from humans diagnosing faults through an
interactive tool; here a small family of scripted operator profiles stands in
for them. A profile alternates informative reads (cycling over the injected
fault's affected sensors in shuffled order) with detour reads of irrelevant
sensors, acts once enough informative readings have been seen, sometimes
tries a wrong-but-related action first, and then applies the resolution.

The default mix is calibrated by Monte Carlo so the filtered corpus matches
the published dataset statistics: around 570 kept sequences out of 600, mean
length near 12.8, and an action-to-read ratio near 15.3%, with a small tail
of over-long outliers and a few capped, unresolved runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .robot import RobotConfig
from .session import (
    SessionLog,
    finalize,
    replay_log,
    reveal_sensor,
    start_session,
    trigger_action,
)

MAX_SESSION_STEPS = 64

# Offset mixed into the policy RNG seed so that policy decisions (detours,
# shuffles, misfires) never share a stream with the session's sensor noise.
_POLICY_STREAM = 0x9E3779B9


class GenerationError(ValueError):
    """Raised on invalid generation or split requests."""


@dataclass(frozen=True)
class OperatorProfile:
    """Behavioral knobs for one scripted operator.

    detour_rate: probability that any given read is an irrelevant detour.
    confidence_threshold: informative reads required before acting.
    misfire_rate: probability of one wrong related action before the fix.
    """

    detour_rate: float
    confidence_threshold: int
    misfire_rate: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.detour_rate <= 1.0:
            raise GenerationError(f"detour_rate out of range: {self.detour_rate}")
        if not 0.0 <= self.misfire_rate <= 1.0:
            raise GenerationError(f"misfire_rate out of range: {self.misfire_rate}")
        if self.confidence_threshold < 1:
            raise GenerationError(f"confidence_threshold must be >= 1: {self.confidence_threshold}")


# (name, mix weight, profile). Weights sum to 1. The "lost" profile never
# reaches its confidence threshold and exists to produce capped unresolved
# runs; "meandering" supplies the long tail that the outlier filter trims.
DEFAULT_PROFILE_MIX: tuple[tuple[str, float, OperatorProfile], ...] = (
    ("focused", 0.30, OperatorProfile(detour_rate=0.30, confidence_threshold=5, misfire_rate=0.3)),
    ("typical", 0.44, OperatorProfile(detour_rate=0.50, confidence_threshold=6, misfire_rate=0.3)),
    ("thorough", 0.21, OperatorProfile(detour_rate=0.60, confidence_threshold=6, misfire_rate=0.3)),
    ("meandering", 0.04, OperatorProfile(detour_rate=0.75, confidence_threshold=6, misfire_rate=0.3)),
    ("lost", 0.01, OperatorProfile(detour_rate=0.97, confidence_threshold=8, misfire_rate=0.3)),
)


def wrong_action_candidates(config: RobotConfig, fault_id: str) -> list[str]:
    """Plausible wrong actions for a fault, nearest taxonomy group first.

    Prefers actions sharing the level-2 category of the resolution's first
    action, then the level-1 subsystem, then anything else; the resolution
    actions themselves are never candidates.
    """
    fault = config.faults_by_id[fault_id]
    resolution = set(fault.resolution)
    first_leaf = config.actions_by_id[fault.resolution[0]].taxonomy_leaf
    level2 = config.nodes_by_id[first_leaf].parent_id
    level1 = config.nodes_by_id[level2].parent_id

    def group_of(action_id: str) -> str:
        return config.nodes_by_id[config.actions_by_id[action_id].taxonomy_leaf].parent_id

    pools = (
        [a.id for a in config.actions if a.id not in resolution and group_of(a.id) == level2],
        [
            a.id
            for a in config.actions
            if a.id not in resolution and config.nodes_by_id[group_of(a.id)].parent_id == level1
        ],
        [a.id for a in config.actions if a.id not in resolution],
    )
    for pool in pools:
        if pool:
            return pool
    return []


def simulate_operator(
    config: RobotConfig,
    fault_id: str,
    profile: OperatorProfile,
    session_id: Optional[str] = None,
) -> SessionLog:
    """Run one scripted diagnosis and return its log.

    The session's sensor noise stream is seeded with profile.seed so the log
    replays exactly; policy decisions draw from a separate derived stream.
    A hard cap of MAX_SESSION_STEPS guards against non-terminating profiles
    and yields an unresolved log when hit.
    """
    if fault_id not in config.faults_by_id:
        raise GenerationError(f"unknown fault id: {fault_id!r}")
    fault = config.faults_by_id[fault_id]
    policy_rng = np.random.default_rng([profile.seed, _POLICY_STREAM])
    state = start_session(config, fault_id, profile.seed, session_id=session_id, operator="synthetic")

    affected = list(fault.sensor_effects)
    others = [s.id for s in config.sensors if s.id not in fault.sensor_effects]
    order = policy_rng.permutation(len(affected))
    cursor = 0
    informative = 0
    while informative < profile.confidence_threshold and len(state.steps) < MAX_SESSION_STEPS:
        if others and policy_rng.random() < profile.detour_rate:
            reveal_sensor(state, others[policy_rng.integers(len(others))])
        else:
            reveal_sensor(state, affected[order[cursor]])
            informative += 1
            cursor += 1
            if cursor == len(affected):
                order = policy_rng.permutation(len(affected))
                cursor = 0

    if informative >= profile.confidence_threshold:
        if policy_rng.random() < profile.misfire_rate:
            candidates = wrong_action_candidates(config, fault_id)
            if candidates and len(state.steps) < MAX_SESSION_STEPS:
                trigger_action(state, candidates[policy_rng.integers(len(candidates))])
        for action_id in fault.resolution:
            if len(state.steps) >= MAX_SESSION_STEPS:
                break
            trigger_action(state, action_id)

    return finalize(state)


@dataclass
class FilterResult:
    kept: list[SessionLog]
    removed_outliers: int
    removed_unresolved: int


def filter_dataset(logs: Sequence[SessionLog]) -> FilterResult:
    """Drop unresolved logs, then trim length outliers by the IQR rule.

    A resolved log is an outlier when its step count exceeds Q3 + 1.5 * IQR
    of the resolved-log length distribution.
    """
    resolved = [log for log in logs if log.resolved]
    removed_unresolved = len(logs) - len(resolved)
    if not resolved:
        return FilterResult(kept=[], removed_outliers=0, removed_unresolved=removed_unresolved)
    lengths = np.array([len(log.steps) for log in resolved], dtype=np.float64)
    q1, q3 = np.percentile(lengths, [25.0, 75.0])
    cutoff = q3 + 1.5 * (q3 - q1)
    kept = [log for log in resolved if len(log.steps) <= cutoff]
    return FilterResult(
        kept=kept,
        removed_outliers=len(resolved) - len(kept),
        removed_unresolved=removed_unresolved,
    )


@dataclass(frozen=True)
class DatasetStats:
    count: int
    mean_length: float
    action_to_read_ratio: float


@dataclass
class Dataset:
    logs: list[SessionLog]
    split_assignment: dict[str, str]
    stats: DatasetStats

    def split(self, name: str) -> list[SessionLog]:
        return [log for log in self.logs if self.split_assignment[log.session_id] == name]


def compute_stats(logs: Sequence[SessionLog]) -> DatasetStats:
    from .session import action_to_read_ratio

    lengths = [len(log.steps) for log in logs]
    return DatasetStats(
        count=len(logs),
        mean_length=float(np.mean(lengths)) if lengths else 0.0,
        action_to_read_ratio=action_to_read_ratio(logs),
    )


def _largest_remainder(counts: dict[str, int], total_quota: int, n_total: int) -> dict[str, int]:
    """Apportion `total_quota` slots over strata proportionally to counts."""
    shares = {fid: c * total_quota / n_total for fid, c in counts.items()}
    base = {fid: math.floor(s) for fid, s in shares.items()}
    leftover = total_quota - sum(base.values())
    by_remainder = sorted(counts, key=lambda fid: (-(shares[fid] - base[fid]), fid))
    for fid in by_remainder[:leftover]:
        base[fid] += 1
    return base


def split_dataset(logs: Sequence[SessionLog], seed: int) -> Dataset:
    """Stratified 80/10/10 split by fault id, deterministic under seed.

    Global split sizes are fixed first (10% each for val and test, rounded),
    then apportioned across faults by largest remainder so each fault's test
    share stays within one session of 10%.
    """
    if len(logs) < 10:
        raise GenerationError(f"need at least 10 logs to split, got {len(logs)}")
    n = len(logs)
    n_val = round(0.1 * n)
    n_test = round(0.1 * n)

    by_fault: dict[str, list[SessionLog]] = {}
    for log in logs:
        by_fault.setdefault(log.fault_id, []).append(log)
    counts = {fid: len(group) for fid, group in by_fault.items()}
    test_quota = _largest_remainder(counts, n_test, n)
    val_quota = _largest_remainder(counts, n_val, n)

    assignment: dict[str, str] = {}
    for idx, fid in enumerate(sorted(by_fault)):
        group = sorted(by_fault[fid], key=lambda log: log.session_id)
        rng = np.random.default_rng([seed, idx])
        perm = rng.permutation(len(group))
        t, v = test_quota[fid], val_quota[fid]
        for pos, gi in enumerate(perm):
            if pos < t:
                assignment[group[gi].session_id] = "test"
            elif pos < t + v:
                assignment[group[gi].session_id] = "val"
            else:
                assignment[group[gi].session_id] = "train"

    ordered = list(logs)
    return Dataset(logs=ordered, split_assignment=assignment, stats=compute_stats(ordered))


@dataclass
class GenerateResult:
    raw: list[SessionLog]
    filter_result: FilterResult
    dataset: Dataset


def generate_dataset(
    config: RobotConfig,
    sessions_per_fault: int = 30,
    seed: int = 7,
    profile_mix: tuple[tuple[str, float, OperatorProfile], ...] = DEFAULT_PROFILE_MIX,
) -> GenerateResult:
    """Full pipeline: simulate, filter, and split.

    Per-session randomness is derived from (seed, session index) so the
    output is independent of scheduling and reproducible log by log.
    """
    if sessions_per_fault < 1:
        raise GenerationError(f"sessions_per_fault must be >= 1: {sessions_per_fault}")
    weights = np.array([w for _name, w, _p in profile_mix], dtype=np.float64)
    if weights.sum() <= 0:
        raise GenerationError("profile mix weights must sum to a positive value")
    weights = weights / weights.sum()
    profiles = [p for _name, _w, p in profile_mix]

    raw: list[SessionLog] = []
    for fi, fault in enumerate(config.faults):
        for si in range(sessions_per_fault):
            index = fi * sessions_per_fault + si
            g = np.random.default_rng([seed, index])
            which = int(g.choice(len(profiles), p=weights))
            session_seed = int(g.integers(0, 2**63 - 1))
            profile = replace(profiles[which], seed=session_seed)
            raw.append(simulate_operator(config, fault.id, profile, session_id=f"{fault.id}-{si:03d}"))

    filtered = filter_dataset(raw)
    for log in filtered.kept:
        if not replay_log(config, log):
            raise GenerationError(f"kept log {log.session_id} does not replay to resolved")
    dataset = split_dataset(filtered.kept, seed)
    return GenerateResult(raw=raw, filter_result=filtered, dataset=dataset)
