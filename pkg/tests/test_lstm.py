"""LSTM forward/backward correctness, training loop, rollout, checkpoints.

The gradient tests compare the analytic backward pass against central finite
differences; the single-step forward pass is pinned to a hand-computed scalar
fixture so a vectorization bug cannot hide inside numpy.
"""

import json
import math
import struct

import numpy as np
import pytest

from tocbench.codec import (
    START_ID,
    STOP_ID,
    EncodedSequence,
    EncodedStep,
    KIND_ACT,
    KIND_READ,
    encode_session,
)
from tocbench.lstm import (
    AdamState,
    CheckpointError,
    ModelDims,
    RolloutPolicy,
    SeqArrays,
    TrainConfig,
    TrainingError,
    LstmParams,
    _forward_sequence,
    adam_update,
    backward,
    checkpoint_fingerprint,
    clip_gradients,
    dims_for,
    forward_step,
    init_params,
    initial_state,
    load_checkpoint,
    rollout,
    save_checkpoint,
    sequence_accuracy,
    sequence_loss,
    train,
)
from tocbench.operators import OperatorProfile, simulate_operator
from tocbench.session import start_session
from tests.conftest import (
    GRADCHECK_DIMS,
    finite_difference_gradcheck,
    random_encoded_sequence,
)


def _zero_params(vocab):
    return init_params(dims_for(vocab), seed=0).zeros_like()


def _seq(*token_ids):
    return EncodedSequence(
        steps=tuple(EncodedStep(token_id=t) for t in token_ids), fault_id="synthetic",
    )


# --- forward -----------------------------------------------------------------

def test_zero_params_logits_equal_output_bias(vocab):
    params = _zero_params(vocab)
    params.b_out[:] = np.arange(params.dims.vocab_size, dtype=np.float64)
    logits, (h, c) = forward_step(params, EncodedStep(token_id=3), initial_state(params.dims))
    assert np.array_equal(logits, params.b_out)
    # zero weights keep the cell dead: c = sigmoid(0) * tanh(0) = 0
    assert np.all(h == 0.0) and np.all(c == 0.0)


def test_forward_step_rejects_bad_state_shape(vocab):
    params = _zero_params(vocab)
    bad = (np.zeros(3), np.zeros(3))
    with pytest.raises(TrainingError, match="state shape mismatch"):
        forward_step(params, EncodedStep(token_id=0), bad)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(0)
    for trial in range(20):
        params = init_params(GRADCHECK_DIMS, seed=trial)
        seq = random_encoded_sequence(GRADCHECK_DIMS, int(rng.integers(2, 10)), rng)
        cache = _forward_sequence(params, SeqArrays.from_sequence(seq))
        sums = np.exp(cache.log_probs).sum(axis=1)
        assert np.all(np.abs(sums - 1.0) < 1e-9)


# hand-computed single-step fixture: 2-token vocab, hidden 2, every input
# feature active. The expected logits were produced by the scalar arithmetic
# below (pure math module, no numpy) and are frozen here as literals.
_FIXTURE_EXPECTED = (0.05200783871945332, -0.0734289612446784)
_FIXTURE_B = [0.1, -0.2, 1.0, 1.0, 0.05, -0.05, 0.3, -0.3]
_FIXTURE_W_OUT = [[0.4, -0.3], [-0.2, 0.6]]
_FIXTURE_B_OUT = [0.01, -0.02]


def _fixture_params():
    dims = ModelDims(vocab_size=2, level_sizes=(1, 1, 1), d_tok=1, d_val=1, d_tax=1, hidden=2)
    W = np.array([[((r + 1) - 3 * (c + 1)) / 20 for c in range(7)] for r in range(8)])
    return LstmParams(
        dims=dims,
        token_embedding=np.array([[0.2], [-0.4]]),
        value_weight=np.array([0.5]),
        value_bias=np.array([-0.1]),
        tax_l1=np.array([[0.0], [0.3]]),
        tax_l2=np.array([[0.0], [-0.2]]),
        tax_l3=np.array([[0.0], [0.1]]),
        W=W,
        b=np.array(_FIXTURE_B, dtype=np.float64),
        W_out=np.array(_FIXTURE_W_OUT, dtype=np.float64),
        b_out=np.array(_FIXTURE_B_OUT, dtype=np.float64),
    )


def _fixture_scalar_logits():
    """The same step recomputed with math-module scalars only."""
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    x = [-0.4, 0.5 * 0.7 - 0.1, 0.3, -0.2, 0.1, 0.0, 0.0]  # input ++ zero h
    z = [sum(((r + 1) - 3 * (c + 1)) / 20 * x[c] for c in range(7)) + _FIXTURE_B[r]
         for r in range(8)]
    i = [sig(z[0]), sig(z[1])]
    f = [sig(z[2]), sig(z[3])]
    o = [sig(z[4]), sig(z[5])]
    g = [math.tanh(z[6]), math.tanh(z[7])]
    c = [i[k] * g[k] for k in range(2)]  # c_prev = 0 so f drops out
    h = [o[k] * math.tanh(c[k]) for k in range(2)]
    return tuple(
        _FIXTURE_W_OUT[k][0] * h[0] + _FIXTURE_W_OUT[k][1] * h[1] + _FIXTURE_B_OUT[k]
        for k in range(2)
    )


def test_hand_computed_forward_fixture():
    step = EncodedStep(token_id=1, value_feature=0.7, taxonomy_levels=(0, 0, 0))
    params = _fixture_params()
    logits, _state = forward_step(params, step, initial_state(params.dims))

    oracle = _fixture_scalar_logits()
    assert oracle == pytest.approx(_FIXTURE_EXPECTED, abs=1e-15)
    assert logits[0] == pytest.approx(_FIXTURE_EXPECTED[0], abs=1e-12)
    assert logits[1] == pytest.approx(_FIXTURE_EXPECTED[1], abs=1e-12)


def test_incremental_forward_matches_batched():
    # the rollout path (forward_step chain) and the training path
    # (_forward_sequence) must produce the same logits
    params = init_params(GRADCHECK_DIMS, seed=3)
    seq = random_encoded_sequence(GRADCHECK_DIMS, 8, np.random.default_rng(9))
    cache = _forward_sequence(params, SeqArrays.from_sequence(seq))

    state = initial_state(params.dims)
    for t, step in enumerate(seq.steps[:-1]):
        logits, state = forward_step(params, step, state)
        assert np.allclose(logits, cache.logits[t], atol=1e-12)


# --- loss --------------------------------------------------------------------

def test_uniform_model_loss_is_log_vocab(vocab, encoded_splits):
    params = _zero_params(vocab)
    seq = encoded_splits["train"][0]
    assert sequence_loss(params, seq) == pytest.approx(math.log(68), abs=1e-12)


def test_certain_model_loss_is_zero(vocab):
    params = _zero_params(vocab)
    params.b_out[STOP_ID] = 50.0
    seq = _seq(STOP_ID, STOP_ID, STOP_ID, STOP_ID)
    assert sequence_loss(params, seq) < 1e-12


def test_loss_non_negative_over_random_models():
    rng = np.random.default_rng(7)
    for trial in range(100):
        params = init_params(GRADCHECK_DIMS, seed=trial)
        seq = random_encoded_sequence(GRADCHECK_DIMS, int(rng.integers(2, 12)), rng)
        assert sequence_loss(params, seq) >= 0.0


def test_loss_rejects_degenerate_sequence(vocab):
    with pytest.raises(TrainingError, match="too short"):
        sequence_loss(_zero_params(vocab), _seq(START_ID))


def test_uniform_model_accuracy_is_zero(vocab, encoded_splits):
    # all-equal logits argmax to START, which is never a target
    params = _zero_params(vocab)
    assert sequence_accuracy(params, encoded_splits["train"][:5]) == 0.0


# --- gradients ---------------------------------------------------------------

def test_gradcheck_every_coordinate():
    checked, worst = finite_difference_gradcheck()
    assert checked == 572
    assert worst < 1e-4


def test_unused_token_embedding_row_has_zero_gradient():
    params = init_params(GRADCHECK_DIMS, seed=2)
    seq = EncodedSequence(
        steps=(EncodedStep(token_id=0), EncodedStep(token_id=1), EncodedStep(token_id=2)),
        fault_id="synthetic",
    )
    grads = backward(params, seq)
    assert np.all(grads.token_embedding[5] == 0.0)
    assert np.any(grads.token_embedding[:3] != 0.0)


def test_two_identical_sequences_double_the_gradient():
    params = init_params(GRADCHECK_DIMS, seed=4)
    seq = random_encoded_sequence(GRADCHECK_DIMS, 6, np.random.default_rng(11))
    single = backward(params, seq)
    summed = single.zeros_like()
    for _ in range(2):
        g = backward(params, seq)
        for name, arr in summed.arrays():
            arr += getattr(g, name)
    for name, arr in summed.arrays():
        assert np.allclose(arr, 2.0 * getattr(single, name), atol=1e-12), name


def test_backward_flags_non_finite(vocab, encoded_splits):
    params = init_params(dims_for(vocab), seed=0)
    params.W_out[:] = np.nan
    with pytest.raises(TrainingError, match="non-finite gradient"):
        backward(params, encoded_splits["train"][0])


# --- optimizer pieces --------------------------------------------------------

def test_clip_gradients_scales_large_norms(vocab):
    grads = _zero_params(vocab)
    grads.b_out[0] = 3.0
    grads.b_out[1] = 4.0  # global norm 5 exactly: untouched at max_norm 5
    assert clip_gradients(grads, 5.0) == pytest.approx(5.0)
    assert grads.b_out[0] == 3.0

    grads.b_out[:] = 0.0
    grads.b_out[0] = 12.0
    returned = clip_gradients(grads, 5.0)
    assert returned == pytest.approx(12.0)
    assert grads.b_out[0] == pytest.approx(5.0)


def test_adam_first_step_is_signed_learning_rate(vocab):
    params = _zero_params(vocab)
    grads = _zero_params(vocab)
    grads.b_out[:] = 1.0
    config = TrainConfig(learning_rate=0.01)
    adam_update(params, grads, AdamState.for_params(params), config)
    # bias-corrected m/sqrt(v) is 1 on the first step, so the update is
    # -lr/(1+eps) everywhere the gradient is nonzero
    assert params.b_out == pytest.approx(-0.01, rel=1e-6)
    assert np.all(params.token_embedding == 0.0)


def test_init_params_layout(vocab):
    dims = dims_for(vocab)
    params = init_params(dims, seed=0)
    hd = dims.hidden
    assert params.W.shape == (4 * hd, dims.d_in + hd)
    assert np.all(params.b[hd:2 * hd] == 1.0)  # forget-gate bias
    assert np.all(params.b[:hd] == 0.0)
    assert np.all(params.b_out == 0.0)
    assert params.token_embedding.shape == (68, dims.d_tok)
    assert params.tax_l1.shape[0] == len(vocab.level_categories[0]) + 1


def test_train_config_validation():
    with pytest.raises(TrainingError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(TrainingError):
        TrainConfig(epochs=0)
    with pytest.raises(TrainingError):
        TrainConfig(early_stop_patience=0)


# --- training ----------------------------------------------------------------

def test_training_loss_decreases(trained):
    result, _wall = trained
    history = result.history
    assert history[5].train_loss < history[0].train_loss
    assert history[0].train_loss > history[1].train_loss > history[2].train_loss
    assert all(e.val_loss is not None for e in history)


def test_early_stopping_restored_best_epoch(trained):
    result, _wall = trained
    assert result.stopped_early is True
    val_losses = [e.val_loss for e in result.history]
    assert result.best_epoch == int(np.argmin(val_losses))
    assert len(result.history) < 60


def test_training_is_bitwise_deterministic(vocab, encoded_splits):
    subset = encoded_splits["train"][:60]
    val = encoded_splits["val"][:10]
    config = TrainConfig(epochs=3, seed=5)
    runs = []
    for _ in range(2):
        result = train(init_params(dims_for(vocab), seed=5), subset, val, config)
        runs.append(result)
    assert [e.train_loss for e in runs[0].history] == [e.train_loss for e in runs[1].history]
    assert [e.val_loss for e in runs[0].history] == [e.val_loss for e in runs[1].history]
    for name, arr in runs[0].params.arrays():
        assert np.array_equal(arr, getattr(runs[1].params, name)), name


def test_overfit_ten_identical_pattern_sessions(config, vocab):
    # ten sessions of one single-sensor fault under a fixed-threshold expert
    # profile share one token pattern, so perfect next-token accuracy is
    # attainable; this is the standard capacity sanity check
    profile_args = dict(detour_rate=0.0, confidence_threshold=6, misfire_rate=0.0)
    logs = [
        simulate_operator(config, "lidar_window_dirty",
                          OperatorProfile(**profile_args, seed=2000 + i))
        for i in range(10)
    ]
    seqs = [encode_session(vocab, config, log) for log in logs]
    params = init_params(dims_for(vocab), seed=0)
    result = train(params, seqs, [], TrainConfig(epochs=200, seed=0))
    assert sequence_accuracy(result.params, seqs) > 0.99


def test_train_rejects_empty_split(vocab):
    with pytest.raises(TrainingError, match="empty training split"):
        train(init_params(dims_for(vocab), seed=0), [], [], TrainConfig())


def test_train_aborts_on_non_finite(vocab, encoded_splits):
    params = init_params(dims_for(vocab), seed=0)
    params.W_out[:] = np.nan
    with pytest.raises(TrainingError):
        train(params, encoded_splits["train"][:3], [], TrainConfig(epochs=1))


# --- rollout -----------------------------------------------------------------

def _prefix(vocab, fault_id):
    return EncodedSequence(
        steps=(
            EncodedStep(token_id=START_ID),
            EncodedStep(token_id=vocab.token_id("symptom", fault_id)),
        ),
        fault_id=fault_id,
    )


def test_rollout_first_action_resolves(vocab, config):
    params = _zero_params(vocab)
    params.b_out[vocab.token_id(KIND_ACT, "clean_lidar_window")] = 50.0
    session = start_session(config, "lidar_window_dirty", seed=1)
    result = rollout(params, vocab, config, session, _prefix(vocab, "lidar_window_dirty"),
                     RolloutPolicy())
    assert result.outcome == "resolved"
    assert result.resolved is True
    assert result.actions_taken == 1
    assert len(result.steps) == 1


def test_rollout_immediate_stop_is_unresolved(vocab, config):
    params = _zero_params(vocab)
    params.b_out[STOP_ID] = 50.0
    session = start_session(config, "lidar_window_dirty", seed=1)
    result = rollout(params, vocab, config, session, _prefix(vocab, "lidar_window_dirty"),
                     RolloutPolicy())
    assert result.outcome == "unresolved"
    assert result.actions_taken == 0
    assert [s.token_id for s in result.steps] == [STOP_ID]


def test_rollout_budget_exhaustion(vocab, config):
    params = _zero_params(vocab)
    params.b_out[vocab.token_id(KIND_READ, "fan_rpm")] = 50.0
    session = start_session(config, "fan_stall", seed=1)
    policy = RolloutPolicy(stop_condition="until-stop", max_steps=6)
    result = rollout(params, vocab, config, session, _prefix(vocab, "fan_stall"), policy)
    assert result.outcome == "unresolved, budget exhausted"
    assert len(result.steps) == 6
    # closed loop: each generated READ carries a live value from the session
    assert all(0.0 <= s.value_feature <= 1.0 for s in result.steps)
    assert len(session.steps) == 6


def test_rollout_tie_break_is_lowest_token_id(vocab, config):
    # all-equal logits: argmax must pick token 0 (START), which is treated
    # as a structurally invalid no-op step rather than a session call
    params = _zero_params(vocab)
    session = start_session(config, "fan_stall", seed=1)
    policy = RolloutPolicy(stop_condition="until-stop", max_steps=4)
    result = rollout(params, vocab, config, session, _prefix(vocab, "fan_stall"), policy)
    assert [s.token_id for s in result.steps] == [START_ID] * 4
    assert session.steps == []


def test_rollout_rejects_prefix_without_start(vocab, config):
    params = _zero_params(vocab)
    session = start_session(config, "fan_stall", seed=1)
    bad = EncodedSequence(steps=(EncodedStep(token_id=STOP_ID),), fault_id="fan_stall")
    with pytest.raises(TrainingError, match="must begin with START"):
        rollout(params, vocab, config, session, bad, RolloutPolicy())


def test_rollout_deterministic_for_same_session_seed(trained, vocab, config):
    result, _wall = trained
    outs = []
    for _ in range(2):
        session = start_session(config, "fan_stall", seed=77)
        outs.append(rollout(result.params, vocab, config, session,
                            _prefix(vocab, "fan_stall"), RolloutPolicy(max_steps=32)))
    assert [s.token_id for s in outs[0].steps] == [s.token_id for s in outs[1].steps]
    assert [s.value_feature for s in outs[0].steps] == [s.value_feature for s in outs[1].steps]
    assert outs[0].outcome == outs[1].outcome


def test_rollout_policy_validation():
    with pytest.raises(TrainingError, match="unsupported decoding"):
        RolloutPolicy(decoding="beam")
    with pytest.raises(TrainingError, match="unsupported stop condition"):
        RolloutPolicy(stop_condition="whenever")
    with pytest.raises(TrainingError, match="max_steps"):
        RolloutPolicy(max_steps=0)


# --- checkpoints -------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path, vocab):
    params = init_params(dims_for(vocab), seed=9)
    config = TrainConfig(learning_rate=0.002, epochs=17, seed=9)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, params, vocab.vocab_hash, train_config=config, include_symptom=False)

    ckpt = load_checkpoint(path, expected_vocab_hash=vocab.vocab_hash)
    assert ckpt.vocab_hash == vocab.vocab_hash
    assert ckpt.train_config == config
    assert ckpt.include_symptom is False
    assert ckpt.params.dims == params.dims
    for name, arr in params.arrays():
        assert np.array_equal(arr, getattr(ckpt.params, name)), name


def test_checkpoint_fingerprint_is_content_only(tmp_path, vocab):
    params = init_params(dims_for(vocab), seed=9)
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(a, params, vocab.vocab_hash)
    save_checkpoint(b, params, vocab.vocab_hash)
    assert checkpoint_fingerprint(a) == checkpoint_fingerprint(b)

    params.b_out[0] = 1.0
    save_checkpoint(b, params, vocab.vocab_hash)
    assert checkpoint_fingerprint(a) != checkpoint_fingerprint(b)


def test_checkpoint_vocab_hash_mismatch(tmp_path, vocab):
    params = init_params(dims_for(vocab), seed=0)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, params, vocab.vocab_hash)
    with pytest.raises(CheckpointError, match="hash mismatch"):
        load_checkpoint(path, expected_vocab_hash="0" * 64)
    # without an expectation the stale hash is the caller's problem
    assert load_checkpoint(path).vocab_hash == vocab.vocab_hash


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "noise.bin"
    path.write_bytes(b"PNG\x00 definitely not a checkpoint")
    with pytest.raises(CheckpointError, match="not a checkpoint file"):
        load_checkpoint(path)


def test_checkpoint_rejects_corrupt_header(tmp_path, vocab):
    params = init_params(dims_for(vocab), seed=0)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, params, vocab.vocab_hash)
    raw = bytearray(path.read_bytes())
    raw[14] = 0xFF  # inside the JSON header
    path.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="corrupt checkpoint header"):
        load_checkpoint(path)


def test_checkpoint_rejects_truncation(tmp_path, vocab):
    params = init_params(dims_for(vocab), seed=0)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, params, vocab.vocab_hash)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 100])
    with pytest.raises(CheckpointError, match="truncated checkpoint"):
        load_checkpoint(path)


def test_checkpoint_rejects_missing_tensor(tmp_path, vocab):
    params = init_params(dims_for(vocab), seed=0)
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, params, vocab.vocab_hash)

    raw = path.read_bytes()
    magic, rest = raw[:8], raw[8:]
    (hlen,) = struct.unpack("<I", rest[:4])
    header = json.loads(rest[4:4 + hlen])
    dropped = header["tensors"].pop()  # b_out is last in manifest order
    assert dropped["name"] == "b_out"
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    path.write_bytes(magic + struct.pack("<I", len(blob)) + blob + rest[4 + hlen:])
    with pytest.raises(CheckpointError, match="missing tensors"):
        load_checkpoint(path)
