"""Single-layer LSTM next-step predictor, written directly against numpy.

The model consumes encoded diagnostic steps. Each step's input vector is the
concatenation of a token embedding, a learned projection of the normalized
sensor value (zero for non-read tokens), and one embedding per taxonomy
level; taxonomy tables reserve row 0 as the null embedding that sentinel
(-1) indices select, so non-entity tokens train their own "no taxonomy"
representation.

Gate weights are stored stacked as one (4h, d_in + h) matrix in i, f, o, g
order; per-gate views are exposed as properties. Training is plain
backpropagation through time with Adam, global-norm gradient clipping, and
early stopping on validation loss. Everything runs in float64, which keeps
finite-difference gradient checks tight and is fast enough at this scale.

All randomness flows through explicit seeds; two runs with the same seed
produce bitwise-identical parameters, so checkpoints can be compared by
hash.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .codec import (
    KIND_ACT,
    KIND_READ,
    KIND_START,
    KIND_STOP,
    CodecError,
    EncodedSequence,
    EncodedStep,
    START_ID,
    Vocabulary,
    decode_token,
    encode_act,
    encode_read,
)
from .robot import RobotConfig
from .session import SessionState, reveal_sensor, trigger_action


class TrainingError(RuntimeError):
    """Raised on divergence or malformed training inputs."""


class CheckpointError(ValueError):
    """Raised on unreadable or mismatched checkpoint files."""


@dataclass(frozen=True)
class ModelDims:
    vocab_size: int
    level_sizes: tuple[int, int, int]
    d_tok: int = 16
    d_val: int = 4
    d_tax: int = 4
    hidden: int = 64

    @property
    def d_in(self) -> int:
        return self.d_tok + self.d_val + 3 * self.d_tax


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 60
    grad_clip_norm: float = 5.0
    seed: int = 0
    early_stop_patience: int = 8

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.epochs < 1 or self.grad_clip_norm <= 0:
            raise TrainingError("learning_rate, epochs, and grad_clip_norm must be positive")
        if self.early_stop_patience < 1:
            raise TrainingError("early_stop_patience must be >= 1")


PARAM_FIELDS = (
    "token_embedding",
    "value_weight",
    "value_bias",
    "tax_l1",
    "tax_l2",
    "tax_l3",
    "W",
    "b",
    "W_out",
    "b_out",
)


@dataclass
class LstmParams:
    dims: ModelDims
    token_embedding: np.ndarray  # (V, d_tok)
    value_weight: np.ndarray  # (d_val,)
    value_bias: np.ndarray  # (d_val,)
    tax_l1: np.ndarray  # (n1 + 1, d_tax), row 0 = sentinel
    tax_l2: np.ndarray  # (n2 + 1, d_tax)
    tax_l3: np.ndarray  # (n3 + 1, d_tax)
    W: np.ndarray  # (4h, d_in + h), gate order i, f, o, g
    b: np.ndarray  # (4h,)
    W_out: np.ndarray  # (V, h)
    b_out: np.ndarray  # (V,)

    @property
    def W_i(self) -> np.ndarray:
        return self.W[: self.dims.hidden]

    @property
    def W_f(self) -> np.ndarray:
        return self.W[self.dims.hidden : 2 * self.dims.hidden]

    @property
    def W_o(self) -> np.ndarray:
        return self.W[2 * self.dims.hidden : 3 * self.dims.hidden]

    @property
    def W_g(self) -> np.ndarray:
        return self.W[3 * self.dims.hidden :]

    def arrays(self):
        for name in PARAM_FIELDS:
            yield name, getattr(self, name)

    def copy(self) -> "LstmParams":
        return LstmParams(dims=self.dims, **{name: arr.copy() for name, arr in self.arrays()})

    def zeros_like(self) -> "LstmParams":
        return LstmParams(dims=self.dims, **{name: np.zeros_like(arr) for name, arr in self.arrays()})


def init_params(dims: ModelDims, seed: int) -> LstmParams:
    """Small random init; forget-gate biases start at 1.0."""
    rng = np.random.default_rng(seed)
    h = dims.hidden
    k = 1.0 / np.sqrt(h)
    b = np.zeros(4 * h)
    b[h : 2 * h] = 1.0
    return LstmParams(
        dims=dims,
        token_embedding=rng.normal(0.0, 0.1, size=(dims.vocab_size, dims.d_tok)),
        value_weight=rng.normal(0.0, 0.1, size=dims.d_val),
        value_bias=np.zeros(dims.d_val),
        tax_l1=rng.normal(0.0, 0.1, size=(dims.level_sizes[0] + 1, dims.d_tax)),
        tax_l2=rng.normal(0.0, 0.1, size=(dims.level_sizes[1] + 1, dims.d_tax)),
        tax_l3=rng.normal(0.0, 0.1, size=(dims.level_sizes[2] + 1, dims.d_tax)),
        W=rng.uniform(-k, k, size=(4 * h, dims.d_in + h)),
        b=b,
        W_out=rng.uniform(-k, k, size=(dims.vocab_size, h)),
        b_out=np.zeros(dims.vocab_size),
    )


def dims_for(vocab: Vocabulary, **overrides) -> ModelDims:
    """ModelDims matching a vocabulary's token and category counts."""
    return ModelDims(
        vocab_size=vocab.size,
        level_sizes=tuple(len(c) for c in vocab.level_categories),
        **overrides,
    )


# ---------------------------------------------------------------------------
# Forward / backward


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class SeqArrays:
    """Column view of an EncodedSequence for vectorized gathers."""

    token_ids: np.ndarray  # (T,) int
    values: np.ndarray  # (T,) float
    tax: np.ndarray  # (T, 3) int, -1 sentinel

    @classmethod
    def from_sequence(cls, seq: EncodedSequence) -> "SeqArrays":
        return cls(
            token_ids=np.array([s.token_id for s in seq.steps], dtype=np.int64),
            values=np.array([s.value_feature for s in seq.steps], dtype=np.float64),
            tax=np.array([s.taxonomy_levels for s in seq.steps], dtype=np.int64),
        )


def _input_matrix(params: LstmParams, arrs: SeqArrays) -> np.ndarray:
    """Gather the (T, d_in) input block for a whole sequence."""
    return np.concatenate(
        [
            params.token_embedding[arrs.token_ids],
            np.outer(arrs.values, params.value_weight) + params.value_bias,
            params.tax_l1[arrs.tax[:, 0] + 1],
            params.tax_l2[arrs.tax[:, 1] + 1],
            params.tax_l3[arrs.tax[:, 2] + 1],
        ],
        axis=1,
    )


def _input_vector(params: LstmParams, step: EncodedStep) -> np.ndarray:
    l1, l2, l3 = step.taxonomy_levels
    return np.concatenate(
        [
            params.token_embedding[step.token_id],
            step.value_feature * params.value_weight + params.value_bias,
            params.tax_l1[l1 + 1],
            params.tax_l2[l2 + 1],
            params.tax_l3[l3 + 1],
        ]
    )


LstmState = tuple[np.ndarray, np.ndarray]


def initial_state(dims: ModelDims) -> LstmState:
    return np.zeros(dims.hidden), np.zeros(dims.hidden)


def forward_step(params: LstmParams, step: EncodedStep, state: LstmState) -> tuple[np.ndarray, LstmState]:
    """Advance one step; returns next-token logits and the new (h, c)."""
    h_prev, c_prev = state
    hd = params.dims.hidden
    if h_prev.shape != (hd,) or c_prev.shape != (hd,):
        raise TrainingError(f"state shape mismatch: expected ({hd},), got {h_prev.shape} / {c_prev.shape}")
    x = _input_vector(params, step)
    z = params.W @ np.concatenate([x, h_prev]) + params.b
    i = _sigmoid(z[:hd])
    f = _sigmoid(z[hd : 2 * hd])
    o = _sigmoid(z[2 * hd : 3 * hd])
    g = np.tanh(z[3 * hd :])
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    logits = params.W_out @ h + params.b_out
    return logits, (h, c)


@dataclass
class _ForwardCache:
    X: np.ndarray  # (T, d_in)
    I: np.ndarray  # (T, h)
    F: np.ndarray
    O: np.ndarray
    G: np.ndarray
    C: np.ndarray
    TanhC: np.ndarray
    H: np.ndarray
    logits: np.ndarray  # (T-1, V)
    log_probs: np.ndarray  # (T-1, V)


def _forward_sequence(params: LstmParams, arrs: SeqArrays) -> _ForwardCache:
    dims = params.dims
    hd = dims.hidden
    T = arrs.token_ids.shape[0]
    X = _input_matrix(params, arrs)
    Zx = X @ params.W[:, : dims.d_in].T + params.b
    W_h = params.W[:, dims.d_in :]

    I = np.empty((T, hd))
    F = np.empty((T, hd))
    O = np.empty((T, hd))
    G = np.empty((T, hd))
    C = np.empty((T, hd))
    TanhC = np.empty((T, hd))
    H = np.empty((T, hd))
    h = np.zeros(hd)
    c = np.zeros(hd)
    for t in range(T):
        z = Zx[t] + W_h @ h
        I[t] = _sigmoid(z[:hd])
        F[t] = _sigmoid(z[hd : 2 * hd])
        O[t] = _sigmoid(z[2 * hd : 3 * hd])
        G[t] = np.tanh(z[3 * hd :])
        c = F[t] * c + I[t] * G[t]
        C[t] = c
        TanhC[t] = np.tanh(c)
        h = O[t] * TanhC[t]
        H[t] = h

    logits = H[: T - 1] @ params.W_out.T + params.b_out
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return _ForwardCache(X=X, I=I, F=F, O=O, G=G, C=C, TanhC=TanhC, H=H, logits=logits, log_probs=log_probs)


def sequence_loss(params: LstmParams, seq: EncodedSequence) -> float:
    """Mean cross-entropy of predicting each next token from its prefix."""
    arrs = SeqArrays.from_sequence(seq)
    return _loss_from_arrays(params, arrs)


def _loss_from_arrays(params: LstmParams, arrs: SeqArrays) -> float:
    T = arrs.token_ids.shape[0]
    if T < 2:
        raise TrainingError(f"sequence too short for next-token loss: length {T}")
    cache = _forward_sequence(params, arrs)
    targets = arrs.token_ids[1:]
    return float(-cache.log_probs[np.arange(T - 1), targets].mean())


def sequence_accuracy(params: LstmParams, seqs: Sequence[EncodedSequence]) -> float:
    """Fraction of next-token argmax predictions that hit the true token."""
    hits = 0
    total = 0
    for seq in seqs:
        arrs = SeqArrays.from_sequence(seq)
        cache = _forward_sequence(params, arrs)
        pred = cache.logits.argmax(axis=1)
        hits += int((pred == arrs.token_ids[1:]).sum())
        total += pred.shape[0]
    return hits / total if total else 0.0


def backward(params: LstmParams, seq: EncodedSequence) -> LstmParams:
    """Exact gradients of sequence_loss with respect to every parameter."""
    arrs = SeqArrays.from_sequence(seq)
    _loss, grads = _loss_and_grads(params, arrs)
    return grads


def _loss_and_grads(params: LstmParams, arrs: SeqArrays) -> tuple[float, LstmParams]:
    dims = params.dims
    hd = dims.hidden
    T = arrs.token_ids.shape[0]
    if T < 2:
        raise TrainingError(f"sequence too short for next-token loss: length {T}")
    cache = _forward_sequence(params, arrs)
    grads = params.zeros_like()

    targets = arrs.token_ids[1:]
    loss = float(-cache.log_probs[np.arange(T - 1), targets].mean())
    dlogits = np.exp(cache.log_probs)
    dlogits[np.arange(T - 1), targets] -= 1.0
    dlogits /= T - 1

    grads.W_out[:] = dlogits.T @ cache.H[: T - 1]
    grads.b_out[:] = dlogits.sum(axis=0)
    dH_head = dlogits @ params.W_out  # (T-1, h)

    W_h = params.W[:, dims.d_in :]
    dZ = np.empty((T, 4 * hd))
    dh_carry = np.zeros(hd)
    dc_carry = np.zeros(hd)
    for t in range(T - 1, -1, -1):
        dh = dh_carry + (dH_head[t] if t < T - 1 else 0.0)
        i, f, o, g = cache.I[t], cache.F[t], cache.O[t], cache.G[t]
        tc = cache.TanhC[t]
        do = dh * tc
        dc = dh * o * (1.0 - tc * tc) + dc_carry
        di = dc * g
        dg = dc * i
        c_prev = cache.C[t - 1] if t > 0 else 0.0
        df = dc * c_prev
        dc_carry = dc * f
        dZ[t, :hd] = di * i * (1.0 - i)
        dZ[t, hd : 2 * hd] = df * f * (1.0 - f)
        dZ[t, 2 * hd : 3 * hd] = do * o * (1.0 - o)
        dZ[t, 3 * hd :] = dg * (1.0 - g * g)
        dh_carry = W_h.T @ dZ[t]

    H_prev = np.vstack([np.zeros(hd), cache.H[:-1]])
    grads.W[:, : dims.d_in] = dZ.T @ cache.X
    grads.W[:, dims.d_in :] = dZ.T @ H_prev
    grads.b[:] = dZ.sum(axis=0)

    dX = dZ @ params.W[:, : dims.d_in]  # (T, d_in)
    off = dims.d_tok
    np.add.at(grads.token_embedding, arrs.token_ids, dX[:, :off])
    dval = dX[:, off : off + dims.d_val]
    grads.value_weight[:] = dval.T @ arrs.values
    grads.value_bias[:] = dval.sum(axis=0)
    off += dims.d_val
    for j, table in enumerate((grads.tax_l1, grads.tax_l2, grads.tax_l3)):
        np.add.at(table, arrs.tax[:, j] + 1, dX[:, off : off + dims.d_tax])
        off += dims.d_tax

    for name, g in grads.arrays():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name}")
    return loss, grads


# ---------------------------------------------------------------------------
# Optimization


def clip_gradients(grads: LstmParams, max_norm: float) -> float:
    """Scale all gradients in place so the global L2 norm is <= max_norm."""
    total = 0.0
    for _name, g in grads.arrays():
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for _name, g in grads.arrays():
            g *= scale
    return norm


@dataclass
class AdamState:
    m: LstmParams
    v: LstmParams
    t: int = 0

    @classmethod
    def for_params(cls, params: LstmParams) -> "AdamState":
        return cls(m=params.zeros_like(), v=params.zeros_like())


def adam_update(params: LstmParams, grads: LstmParams, state: AdamState, config: TrainConfig) -> None:
    """One Adam step with bias correction, in place."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for name, p in params.arrays():
        g = getattr(grads, name)
        m = getattr(state.m, name)
        v = getattr(state.v, name)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: Optional[float]


@dataclass
class TrainResult:
    params: LstmParams
    history: list[EpochStats]
    best_epoch: int
    stopped_early: bool


def train(
    params: LstmParams,
    train_seqs: Sequence[EncodedSequence],
    val_seqs: Sequence[EncodedSequence],
    config: TrainConfig,
) -> TrainResult:
    """Adam training loop with per-epoch shuffling and early stopping.

    The reported train loss for an epoch is the running mean of per-sequence
    losses as they were visited (before each update), the usual convention
    for batch-size-1 training. Early stopping tracks validation loss and
    restores the best parameters on exit; without a validation split the
    final parameters are returned.
    """
    if not train_seqs:
        raise TrainingError("empty training split")
    train_arrs = [SeqArrays.from_sequence(s) for s in train_seqs]
    val_arrs = [SeqArrays.from_sequence(s) for s in val_seqs]

    adam = AdamState.for_params(params)
    history: list[EpochStats] = []
    best_val = np.inf
    best_epoch = -1
    best_params = params.copy()
    stopped_early = False

    for epoch in range(config.epochs):
        order = np.random.default_rng([config.seed, epoch]).permutation(len(train_arrs))
        losses = np.empty(len(order))
        for k, idx in enumerate(order):
            loss, grads = _loss_and_grads(params, train_arrs[idx])
            losses[k] = loss
            clip_gradients(grads, config.grad_clip_norm)
            adam_update(params, grads, adam, config)
        train_loss = float(losses.mean())
        if not np.isfinite(train_loss):
            raise TrainingError(f"training diverged at epoch {epoch}: loss {train_loss}")

        val_loss = None
        if val_arrs:
            val_loss = float(np.mean([_loss_from_arrays(params, a) for a in val_arrs]))
            if val_loss < best_val:
                best_val = val_loss
                best_epoch = epoch
                best_params = params.copy()
        history.append(EpochStats(epoch=epoch, train_loss=train_loss, val_loss=val_loss))

        if val_arrs and epoch - best_epoch >= config.early_stop_patience:
            stopped_early = True
            break

    if val_arrs:
        result_params = best_params
    else:
        result_params = params
        best_epoch = len(history) - 1
    return TrainResult(params=result_params, history=history, best_epoch=best_epoch, stopped_early=stopped_early)


# ---------------------------------------------------------------------------
# Closed-loop rollout


@dataclass(frozen=True)
class RolloutPolicy:
    decoding: str = "greedy"
    max_steps: int = 64
    stop_condition: str = "first-action"

    def __post_init__(self) -> None:
        if self.decoding != "greedy":
            raise TrainingError(f"unsupported decoding: {self.decoding!r}")
        if self.stop_condition not in ("first-action", "until-stop"):
            raise TrainingError(f"unsupported stop condition: {self.stop_condition!r}")
        if self.max_steps < 1:
            raise TrainingError("max_steps must be >= 1")


OUTCOME_RESOLVED = "resolved"
OUTCOME_UNRESOLVED = "unresolved"
OUTCOME_BUDGET = "unresolved, budget exhausted"


@dataclass
class RolloutResult:
    steps: list[EncodedStep]
    outcome: str
    resolved: bool
    actions_taken: int


NextTokenFn = Callable[[Sequence[EncodedStep]], int]


def _drive_rollout(
    next_token: NextTokenFn,
    vocab: Vocabulary,
    config: RobotConfig,
    session: SessionState,
    prefix: EncodedSequence,
    policy: RolloutPolicy,
) -> RolloutResult:
    """Generation loop shared by the model rollout and scripted policies.

    `next_token` sees the full running sequence (prefix plus generated
    steps) and returns the next token id. Reads are answered by the live
    session so the value feature attached to the generated step is real;
    actions are applied to the session. Generation ends on the stop
    condition, on session resolution, or when the step budget runs out.
    """
    if not prefix.steps or prefix.steps[0].token_id != START_ID:
        raise TrainingError("rollout prefix must begin with START")
    running: list[EncodedStep] = list(prefix.steps)
    generated: list[EncodedStep] = []
    actions_taken = 0
    budget_hit = True
    for _ in range(policy.max_steps):
        if session.resolved:
            budget_hit = False
            break
        token_id = next_token(running)
        token = decode_token(vocab, token_id)
        if token.kind == KIND_STOP:
            generated.append(EncodedStep(token_id=token_id))
            budget_hit = False
            break
        if token.kind == KIND_READ:
            value = reveal_sensor(session, token.entity_id)
            step = encode_read(vocab, config, token.entity_id, value)
        elif token.kind == KIND_ACT:
            trigger_action(session, token.entity_id)
            step = encode_act(vocab, config, token.entity_id)
            actions_taken += 1
        else:
            # START or SYMPTOM mid-rollout: structurally invalid but not
            # forbidden (the model is unconstrained); no session interaction.
            step = EncodedStep(token_id=token_id)
        running.append(step)
        generated.append(step)
        if token.kind == KIND_ACT and policy.stop_condition == "first-action":
            budget_hit = False
            break

    if session.resolved:
        outcome = OUTCOME_RESOLVED
    elif budget_hit:
        outcome = OUTCOME_BUDGET
    else:
        outcome = OUTCOME_UNRESOLVED
    return RolloutResult(steps=generated, outcome=outcome, resolved=session.resolved, actions_taken=actions_taken)


def rollout(
    params: LstmParams,
    vocab: Vocabulary,
    config: RobotConfig,
    session: SessionState,
    prefix: EncodedSequence,
    policy: RolloutPolicy,
) -> RolloutResult:
    """Greedy closed-loop generation from a live session.

    The recurrent state is advanced incrementally; each generated token is
    the argmax of the current logits (numpy argmax returns the lowest index
    on ties, which is the documented tie-break).
    """
    state = initial_state(params.dims)
    logits = None
    consumed = 0

    def next_token(running: Sequence[EncodedStep]) -> int:
        nonlocal state, logits, consumed
        for step in running[consumed:]:
            logits, state = forward_step(params, step, state)
            consumed += 1
        return int(np.argmax(logits))

    return _drive_rollout(next_token, vocab, config, session, prefix, policy)


# ---------------------------------------------------------------------------
# Checkpoints
#
# A checkpoint is a single file: magic, a JSON header (dims, train config,
# vocabulary hash, tensor manifest), then raw little-endian float64 tensor
# bytes in manifest order. The encoding has no timestamps or other
# environment-dependent content, so identical parameters produce identical
# files.

_MAGIC = b"TOCLSTM1"


def save_checkpoint(
    path: Union[str, Path],
    params: LstmParams,
    vocab_hash: str,
    train_config: Optional[TrainConfig] = None,
    include_symptom: bool = True,
) -> None:
    header = {
        "dims": {
            "vocab_size": params.dims.vocab_size,
            "level_sizes": list(params.dims.level_sizes),
            "d_tok": params.dims.d_tok,
            "d_val": params.dims.d_val,
            "d_tax": params.dims.d_tax,
            "hidden": params.dims.hidden,
        },
        "vocab_hash": vocab_hash,
        "train_config": asdict(train_config) if train_config is not None else None,
        "include_symptom": include_symptom,
        "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in params.arrays()],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _name, arr in params.arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


@dataclass
class Checkpoint:
    params: LstmParams
    vocab_hash: str
    train_config: Optional[TrainConfig]
    include_symptom: bool = True


def load_checkpoint(path: Union[str, Path], expected_vocab_hash: Optional[str] = None) -> Checkpoint:
    raw = Path(path).read_bytes()
    if raw[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"not a checkpoint file: {path}")
    (hlen,) = struct.unpack("<I", raw[len(_MAGIC) : len(_MAGIC) + 4])
    start = len(_MAGIC) + 4
    try:
        header = json.loads(raw[start : start + hlen])
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc

    if expected_vocab_hash is not None and header["vocab_hash"] != expected_vocab_hash:
        raise CheckpointError(
            f"vocabulary hash mismatch: checkpoint {header['vocab_hash'][:12]}..., "
            f"active config {expected_vocab_hash[:12]}..."
        )

    d = header["dims"]
    dims = ModelDims(
        vocab_size=d["vocab_size"],
        level_sizes=tuple(d["level_sizes"]),
        d_tok=d["d_tok"],
        d_val=d["d_val"],
        d_tax=d["d_tax"],
        hidden=d["hidden"],
    )
    offset = start + hlen
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        if offset + count * 8 > len(raw):
            raise CheckpointError(f"truncated checkpoint: tensor {entry['name']!r} incomplete")
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        tensors[entry["name"]] = arr
        offset += count * 8
    missing = set(PARAM_FIELDS) - set(tensors)
    if missing:
        raise CheckpointError(f"checkpoint missing tensors: {sorted(missing)}")

    tc = header.get("train_config")
    train_config = TrainConfig(**tc) if tc else None
    return Checkpoint(
        params=LstmParams(dims=dims, **tensors),
        vocab_hash=header["vocab_hash"],
        train_config=train_config,
        include_symptom=bool(header.get("include_symptom", True)),
    )


def checkpoint_fingerprint(path: Union[str, Path]) -> str:
    """SHA-256 of the checkpoint file bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
