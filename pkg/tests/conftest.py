"""Shared fixtures: the shipped config, the standard dataset, a trained model.

The expensive fixtures are session-scoped. The canonical trained model (data
seed 7, train seed 1) is shared between the evaluation tests and the
acceptance suite so the suite trains it exactly once; its wall-clock cost is
recorded because the acceptance budget counts it.
"""

import time

import numpy as np
import pytest

from tocbench.codec import EncodedSequence, EncodedStep, build_vocabulary, encode_session
from tocbench.lstm import ModelDims, TrainConfig, backward, dims_for, init_params, sequence_loss, train
from tocbench.operators import generate_dataset
from tocbench.robot import load_default_config, load_robot_config


@pytest.fixture(scope="session")
def config():
    return load_default_config()


@pytest.fixture(scope="session")
def vocab(config):
    return build_vocabulary(config)


@pytest.fixture(scope="session")
def gen_result(config):
    """Standard synthetic dataset: defaults, master seed 7."""
    return generate_dataset(config, sessions_per_fault=30, seed=7)


@pytest.fixture(scope="session")
def encoded_splits(config, vocab, gen_result):
    return {
        name: [encode_session(vocab, config, log) for log in gen_result.dataset.split(name)]
        for name in ("train", "val", "test")
    }


@pytest.fixture(scope="session")
def trained(config, vocab, encoded_splits):
    """Canonical model: default TrainConfig, train seed 1, plus its wall time."""
    params = init_params(dims_for(vocab), seed=1)
    t0 = time.perf_counter()
    result = train(params, encoded_splits["train"], encoded_splits["val"], TrainConfig(seed=1))
    return result, time.perf_counter() - t0


GRADCHECK_DIMS = ModelDims(
    vocab_size=8, level_sizes=(2, 3, 4), d_tok=4, d_val=2, d_tax=2, hidden=6,
)


def random_encoded_sequence(dims, n_steps, rng):
    """A synthetic sequence covering tokens, values, and sentinel taxonomy."""
    steps = []
    for _ in range(n_steps):
        if rng.random() < 0.25:
            levels = (-1, -1, -1)
        else:
            levels = tuple(int(rng.integers(0, n)) for n in dims.level_sizes)
        steps.append(EncodedStep(
            token_id=int(rng.integers(0, dims.vocab_size)),
            value_feature=float(rng.random()),
            taxonomy_levels=levels,
        ))
    return EncodedSequence(steps=tuple(steps), fault_id="synthetic")


def finite_difference_gradcheck(dims=GRADCHECK_DIMS, n_steps=9, param_seed=1,
                                step_seed=42, eps=1e-5):
    """Compare analytic gradients to central differences, coordinate by
    coordinate, over every parameter tensor.

    Returns (coordinates checked, worst relative error). The relative error
    denominator is floored at 1e-6 so near-zero coordinate pairs do not blow
    up the ratio.
    """
    params = init_params(dims, seed=param_seed)
    seq = random_encoded_sequence(dims, n_steps, np.random.default_rng(step_seed))
    grads = backward(params, seq)

    checked = 0
    worst = 0.0
    for name, arr in params.arrays():
        g = getattr(grads, name)
        flat = arr.reshape(-1)
        g_flat = g.reshape(-1)
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + eps
            up = sequence_loss(params, seq)
            flat[i] = orig - eps
            down = sequence_loss(params, seq)
            flat[i] = orig
            fd = (up - down) / (2.0 * eps)
            denom = max(abs(fd), abs(g_flat[i]), 1e-6)
            worst = max(worst, abs(g_flat[i] - fd) / denom)
            checked += 1
    return checked, worst


TINY_DOC = """
{
  "schema_version": "1",
  "taxonomy": [
    {"id": "robot", "label": "Robot", "level": 0, "parent_id": null, "kind": "category"},
    {"id": "sys", "label": "System", "level": 1, "parent_id": "robot", "kind": "category"},
    {"id": "grp", "label": "Group", "level": 2, "parent_id": "sys", "kind": "category"},
    {"id": "s1", "label": "Sensor 1", "level": 3, "parent_id": "grp", "kind": "sensor-leaf"},
    {"id": "a1_leaf", "label": "Action 1", "level": 3, "parent_id": "grp", "kind": "actuator-leaf"}
  ],
  "sensors": [
    {"id": "s1", "unit": "V", "nominal_mean": 5.0, "noise_std": 0.2,
     "min_value": 0.0, "max_value": 10.0, "taxonomy_leaf": "s1"}
  ],
  "actions": [
    {"id": "a1", "label": "Do the thing", "taxonomy_leaf": "a1_leaf"}
  ],
  "faults": [
    {"id": "f1", "symptom_message": "it is broken",
     "sensor_effects": {"s1": {"shifted_mean": 8.0, "shifted_std": 0.2}},
     "resolution": ["a1"], "ideal_reads": ["s1"], "related_sensors": []}
  ]
}
"""


@pytest.fixture()
def tiny_config():
    """Minimal valid config: one sensor, one action, one fault."""
    return load_robot_config(TINY_DOC)
