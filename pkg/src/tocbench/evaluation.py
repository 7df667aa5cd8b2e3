"""Evaluation metrics, experiments, and report emission.

Two correctness notions drive everything here. Prediction correctness is
membership: a predicted token counts if a token with the same kind and
entity occurs anywhere in the reference test sequence. Sequence correctness
is behavioral: a generated log counts if replaying it against the simulator
resolves the injected fault.

The k-step experiment rolls the model out closed-loop from truncated test
prefixes and scores the k-th generated token for k in 1..5; the autonomous
experiment starts from an empty prefix (START and the symptom token only)
and stops at the first action. A Monte Carlo random-action baseline with a
Wilson interval calibrates the autonomous success rate.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .codec import EncodedSequence, EncodedStep, KIND_SYMPTOM, START_ID, Vocabulary
from .lstm import LstmParams, RolloutPolicy, rollout
from .robot import RobotConfig
from .session import SessionLog, log_to_json, replay_log, start_session

DEFAULT_HORIZONS = (1, 2, 3, 4, 5)
DEFAULT_START_BUCKETS = (2, 4, 6, 8)


def prediction_correct(predicted_token_id: int, test_sequence: EncodedSequence) -> bool:
    """Membership test: does the predicted token occur anywhere in the sequence?

    Token ids are bijective with (kind, entity) pairs, so id membership is
    the same relation as kind-and-entity membership.
    """
    return any(step.token_id == predicted_token_id for step in test_sequence.steps)


def prediction_correct_suffix(
    predicted_token_id: int, test_sequence: EncodedSequence, from_position: int
) -> bool:
    """Stricter variant: membership in the sequence suffix only.

    `from_position` is the index of the first step still unseen by the
    model, i.e. prefix length in steps.
    """
    return any(step.token_id == predicted_token_id for step in test_sequence.steps[from_position:])


def sequence_correct(config: RobotConfig, generated: SessionLog) -> bool:
    """Behavioral check: replay the log and report whether it resolves."""
    if generated.fault_id not in config.faults_by_id:
        raise ValueError(f"unknown fault id: {generated.fault_id!r}")
    return replay_log(config, generated)


def _derived_seed(*parts: int) -> int:
    return int(np.random.default_rng(list(parts)).integers(0, 2**63 - 1))


def _lead_length(vocab: Vocabulary, seq: EncodedSequence) -> int:
    """Number of leading START/SYMPTOM steps (2 normally, 1 when ablated)."""
    lead = 0
    for step in seq.steps:
        if vocab.tokens[step.token_id].kind in ("start", KIND_SYMPTOM):
            lead += 1
        else:
            break
    return lead


def _prefix_sequence(vocab: Vocabulary, seq: EncodedSequence, start_length: int) -> EncodedSequence:
    """First `start_length` body steps plus the START/SYMPTOM lead-in."""
    lead = _lead_length(vocab, seq)
    return EncodedSequence(steps=seq.steps[: lead + start_length], fault_id=seq.fault_id)


def _body_length(vocab: Vocabulary, seq: EncodedSequence) -> int:
    # steps between the START/SYMPTOM lead-in and the trailing STOP
    return max(0, len(seq.steps) - _lead_length(vocab, seq) - 1)


@dataclass
class KstepResult:
    start_buckets: tuple[int, ...]
    horizons: tuple[int, ...]
    accuracy: np.ndarray  # (len(buckets), len(horizons)), NaN marks absent cells
    eligible: np.ndarray  # (len(buckets),) int


def kstep_experiment(
    params: LstmParams,
    vocab: Vocabulary,
    config: RobotConfig,
    test_seqs: Sequence[EncodedSequence],
    horizons: Sequence[int] = DEFAULT_HORIZONS,
    start_buckets: Sequence[int] = DEFAULT_START_BUCKETS,
    eval_seed: int = 0,
    suffix_only: bool = False,
) -> KstepResult:
    """Closed-loop horizon accuracy over truncated test prefixes.

    For each eligible (sequence, bucket) pair one rollout of max(horizons)
    tokens runs against a fresh session of the sequence's fault; the k-th
    generated token is scored by membership against the full reference
    sequence. Rollouts that terminate before producing a k-th token (an
    early STOP, or the session resolving) count as incorrect for that k.
    Cells with no eligible sequences are NaN.
    """
    horizons = tuple(horizons)
    start_buckets = tuple(start_buckets)
    max_k = max(horizons)
    policy = RolloutPolicy(stop_condition="until-stop", max_steps=max_k)

    hits = np.zeros((len(start_buckets), len(horizons)))
    counts = np.zeros(len(start_buckets), dtype=np.int64)
    for si, seq in enumerate(test_seqs):
        body = _body_length(vocab, seq)
        for bi, bucket in enumerate(start_buckets):
            if body < bucket:
                continue
            counts[bi] += 1
            prefix = _prefix_sequence(vocab, seq, bucket)
            session = start_session(
                config,
                seq.fault_id,
                seed=_derived_seed(eval_seed, si, bucket),
                operator="model",
            )
            result = rollout(params, vocab, config, session, prefix, policy)
            for ki, k in enumerate(horizons):
                if len(result.steps) < k:
                    continue
                token_id = result.steps[k - 1].token_id
                if suffix_only:
                    ok = prediction_correct_suffix(token_id, seq, len(prefix.steps))
                else:
                    ok = prediction_correct(token_id, seq)
                hits[bi, ki] += ok

    with np.errstate(invalid="ignore"):
        accuracy = hits / counts[:, None]
    accuracy[counts == 0, :] = np.nan
    return KstepResult(start_buckets=start_buckets, horizons=horizons, accuracy=accuracy, eligible=counts)


@dataclass
class AutonomousOutcome:
    resolved: bool
    steps_taken: int
    ideal_steps: int


@dataclass
class AutonomousResult:
    outcomes: dict[str, AutonomousOutcome]
    success_rate: float


def autonomous_experiment(
    params: LstmParams,
    vocab: Vocabulary,
    config: RobotConfig,
    eval_seed: int = 0,
    max_steps: int = 64,
) -> AutonomousResult:
    """First-action rollouts from an empty start sequence, one per fault.

    steps_taken counts generated tokens before the terminating action;
    ideal_steps is the fault's designed read count for comparison.
    """
    policy = RolloutPolicy(stop_condition="first-action", max_steps=max_steps)
    outcomes: dict[str, AutonomousOutcome] = {}
    for fi, fault in enumerate(config.faults):
        session = start_session(config, fault.id, seed=_derived_seed(eval_seed, fi), operator="model")
        prefix = EncodedSequence(
            steps=(
                EncodedStep(token_id=START_ID),
                EncodedStep(token_id=vocab.token_id(KIND_SYMPTOM, fault.id)),
            ),
            fault_id=fault.id,
        )
        result = rollout(params, vocab, config, session, prefix, policy)
        steps_taken = len(result.steps) - (1 if result.actions_taken else 0)
        outcomes[fault.id] = AutonomousOutcome(
            resolved=result.resolved,
            steps_taken=steps_taken,
            ideal_steps=len(fault.ideal_reads),
        )
    success_rate = sum(o.resolved for o in outcomes.values()) / len(outcomes)
    return AutonomousResult(outcomes=outcomes, success_rate=success_rate)


@dataclass
class BaselineEstimate:
    mean: float
    ci95: tuple[float, float]
    trials: int


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = p + z * z / (2 * n)
    margin = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n))
    return ((center - margin) / denom, (center + margin) / denom)


def random_baseline(config: RobotConfig, trials: int = 100_000, seed: int = 0) -> BaselineEstimate:
    """Monte Carlo success rate of a random policy under first-action stopping.

    The random policy reveals uniformly random sensors and then triggers one
    uniformly random action at a random step within budget. Reads never
    influence resolution, so the simulation draws only the action; success
    happens iff the fault needs a single action and the draw hits it. The
    equivalence with fully materialized sessions is covered by tests.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1: {trials}")
    rng = np.random.default_rng(seed)
    n_actions = len(config.actions)
    action_ids = sorted(a.id for a in config.actions)
    index_of = {aid: i for i, aid in enumerate(action_ids)}
    single_target = np.array(
        [index_of[f.resolution[0]] if len(f.resolution) == 1 else -1 for f in config.faults],
        dtype=np.int64,
    )
    draws = rng.integers(0, n_actions, size=(trials, len(config.faults)))
    successes = int((draws == single_target[None, :]).sum())
    n = trials * len(config.faults)
    return BaselineEstimate(mean=successes / n, ci95=wilson_interval(successes, n), trials=trials)


def closed_form_baseline(config: RobotConfig) -> float:
    """Exact expectation of the random baseline over the catalog."""
    singles = sum(1 for f in config.faults if len(f.resolution) == 1)
    return singles / len(config.faults) / len(config.actions)


@dataclass
class EvalReport:
    kstep: KstepResult
    autonomous: AutonomousResult
    random_baseline: BaselineEstimate
    dataset_fingerprint: str
    model_fingerprint: str


def fingerprint_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fingerprint_file(path: Union[str, Path]) -> str:
    return fingerprint_bytes(Path(path).read_bytes())


def fingerprint_logs(logs: Sequence[SessionLog]) -> str:
    """Fingerprint identical to hashing the logs' JSONL file bytes."""
    payload = "".join(log_to_json(log) + "\n" for log in logs)
    return fingerprint_bytes(payload.encode())


def report_to_dict(report: EvalReport) -> dict:
    values = [
        [None if np.isnan(v) else float(v) for v in row]
        for row in report.kstep.accuracy
    ]
    return {
        "kstep_accuracy": {
            "start_buckets": list(report.kstep.start_buckets),
            "horizons": list(report.kstep.horizons),
            "eligible": [int(c) for c in report.kstep.eligible],
            "values": values,
        },
        "autonomous": {
            fid: {
                "resolved": out.resolved,
                "steps_taken": out.steps_taken,
                "ideal_steps": out.ideal_steps,
            }
            for fid, out in report.autonomous.outcomes.items()
        },
        "success_rate": report.autonomous.success_rate,
        "random_baseline": {
            "mean": report.random_baseline.mean,
            "ci95": list(report.random_baseline.ci95),
            "trials": report.random_baseline.trials,
        },
        "dataset_fingerprint": report.dataset_fingerprint,
        "model_fingerprint": report.model_fingerprint,
    }


def emit_report(report: EvalReport, out_dir: Union[str, Path]) -> tuple[Path, Path]:
    """Write report.json and a flat report.csv of the k-step matrix."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    csv_path = out / "report.csv"

    json_path.write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["start_bucket", "horizon", "accuracy"])
        for bi, bucket in enumerate(report.kstep.start_buckets):
            for ki, k in enumerate(report.kstep.horizons):
                v = report.kstep.accuracy[bi, ki]
                writer.writerow([bucket, k, "" if np.isnan(v) else repr(float(v))])
    return json_path, csv_path


def load_report(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())
