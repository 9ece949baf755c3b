import json

import numpy as np
import pytest

from lovqa import qubo
from lovqa.qubo import Hamming, QuboInstance


def test_zero_string_costs_nothing():
    assert qubo.classical_cost(QuboInstance(np.ones((3, 3))), (0, 0, 0)) == 0


def test_identity_counts_ones():
    assert qubo.classical_cost(QuboInstance(np.eye(3)), (1, 0, 1)) == 2


def test_penalty_only():
    inst = QuboInstance(np.zeros((4, 4)), Hamming(3, 2.0))
    assert qubo.classical_cost(inst, (0, 1, 0, 0)) == 8


def test_length_mismatch():
    with pytest.raises(ValueError):
        qubo.classical_cost(QuboInstance(np.eye(3)), (1, 0))


def test_symmetrized_and_idempotent():
    inst = QuboInstance(np.array([[1.0, 4.0], [0.0, 2.0]]))
    np.testing.assert_array_equal(inst.q, [[1, 2], [2, 2]])
    np.testing.assert_array_equal(QuboInstance(inst.q).q, inst.q)


def test_penalty_must_be_positive():
    with pytest.raises(ValueError):
        Hamming(2, 0.0)


def test_random_instance_properties():
    inst = qubo.random_instance(8, seed=4, constrained=True)
    assert np.all(inst.q == inst.q.T)
    assert inst.q.min() >= -10 and inst.q.max() <= 10
    assert np.all(inst.q == np.round(inst.q))
    assert inst.hamming.w == 4
    assert inst.hamming.lam == max(1.0, 2 * inst.q.max())
    np.testing.assert_array_equal(qubo.random_instance(8, seed=4).q, inst.q)


def test_penalty_floor():
    assert qubo.penalty_multiplier(-np.ones((2, 2))) == 1.0


def test_brute_force():
    assert qubo.brute_force_min(QuboInstance(np.eye(3))) == ((0, 0, 0), 0)
    assert qubo.brute_force_min(QuboInstance(-np.eye(3))) == ((1, 1, 1), -3)
    assert qubo.brute_force_min(QuboInstance(-np.eye(3)), restrict_weight=1) == ((0, 0, 1), -1)


def test_brute_force_capacity():
    with pytest.raises(ValueError):
        qubo.brute_force_min(QuboInstance(np.zeros((25, 25))))


def test_expected_cost():
    inst = QuboInstance(np.eye(2))
    assert qubo.expected_cost({(1, 1): 1.0}, inst) == 2
    assert qubo.expected_cost({(0, 0): 0.5, (1, 1): 0.5}, inst) == 1
    assert qubo.expected_cost({(1, 0): 0.5, (0, 1): 0.5}, inst) == 1
    assert qubo.expected_cost({(1, 0): 1.0}, lambda b: 7.0) == 7
    with pytest.raises(ValueError):
        qubo.expected_cost({(1, 0): 0.5}, inst)


def test_expected_cost_within_range(rng):
    inst = qubo.random_instance(4, seed=1, constrained=True)
    lo, hi = qubo.cost_range(inst)
    for _ in range(20):
        p = rng.dirichlet(np.ones(16))
        d = dict(zip(qubo.all_bitstrings(4), p))
        assert lo - 1e-9 <= qubo.expected_cost(d, inst) <= hi + 1e-9


def test_penalty_vanishes_at_target_weight():
    inst = qubo.random_instance(6, seed=2, constrained=True)
    plain = QuboInstance(inst.q)
    for bits in qubo.all_bitstrings(6, inst.hamming.w):
        assert inst.cost(bits) == plain.cost(bits)


def test_json_round_trip():
    inst = qubo.random_instance(3, seed=5, constrained=True)
    data = json.loads(inst.to_json())
    assert set(data) == {"n", "q", "hamming"} and set(data["hamming"]) == {"w", "lambda"}
    back = QuboInstance.from_json(inst.to_json())
    np.testing.assert_array_equal(back.q, inst.q)
    assert back.hamming == inst.hamming
    assert QuboInstance.from_dict({"n": 2, "q": [[1, 0], [0, 1]], "hamming": None}).hamming is None
