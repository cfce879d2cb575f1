import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpsim.anfis import (AnfisModel, DegenerateFiringError, anfis_forward,
                         anfis_layers, bell_membership)


def two_input_model():
    # two symmetric bell sets per input, all four conjunctive rules
    premise = np.array([
        [[1.0, 1.0, -1.0], [1.0, 1.0, 1.0]],
        [[1.0, 1.0, -1.0], [1.0, 1.0, 1.0]],
    ])
    rules = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    consequents = np.array([
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
        [0.5, -0.5, 2.0],
    ])
    return AnfisModel(premise, rules, consequents)


class TestMembership:
    def test_unit_at_center(self):
        assert bell_membership(1.0, a=2.0, b=1.5, c=1.0) == 1.0

    def test_half_at_one_halfwidth(self):
        assert bell_membership(3.0, a=2.0, b=1.0, c=1.0) == pytest.approx(0.5)

    def test_symmetric_decay(self):
        lo = bell_membership(-2.0, a=1.0, b=2.0, c=0.0)
        hi = bell_membership(2.0, a=1.0, b=2.0, c=0.0)
        assert lo == pytest.approx(hi)
        assert lo < bell_membership(0.5, a=1.0, b=2.0, c=0.0)


class TestForwardPass:
    def test_membership_layer_at_center(self):
        model = two_input_model()
        memberships, *_ = anfis_layers(model, np.array([-1.0, 1.0]))
        assert memberships[0, 0] == 1.0  # input 0 sits on its first set center
        assert memberships[1, 1] == 1.0

    def test_equal_rules_normalize_to_half(self):
        premise = np.array([
            [[1.0, 1.0, -1.0], [1.0, 1.0, 1.0]],
            [[1.0, 1.0, -1.0], [1.0, 1.0, 1.0]],
        ])
        rules = np.array([[0, 0], [1, 1]])
        consequents = np.zeros((2, 3))
        model = AnfisModel(premise, rules, consequents)
        _, strengths, normalized, _, _ = anfis_layers(model, np.array([0.0, 0.0]))
        assert strengths[0] == pytest.approx(strengths[1])
        np.testing.assert_allclose(normalized, [0.5, 0.5], atol=1e-15)

    def test_single_rule_collapses_to_consequent(self):
        premise = np.array([[[2.0, 1.0, 0.0]], [[2.0, 1.0, 0.0]]])
        model = AnfisModel(premise, np.array([[0, 0]]),
                           np.array([[1.0, 0.0, 2.0]]))  # p=1, q=0, r=2
        assert anfis_forward(model, np.array([3.0, 9.9])) == pytest.approx(5.0)
        # normalization makes the firing strength irrelevant
        assert anfis_forward(model, np.array([3.0, 0.0])) == pytest.approx(5.0)

    def test_degenerate_firing(self):
        model = two_input_model()
        with pytest.raises(DegenerateFiringError):
            anfis_forward(model, np.array([1e300, 1e300]))

    @given(st.integers(0, 2 ** 31 - 1))
    def test_normalization_sums_to_one(self, seed):
        rng = np.random.default_rng(seed)
        n_inputs, n_sets, n_rules = 2, 3, 5
        premise = np.stack([
            np.stack([np.array([rng.uniform(0.5, 2.0), rng.uniform(0.5, 3.0),
                                rng.uniform(-2.0, 2.0)]) for _ in range(n_sets)])
            for _ in range(n_inputs)])
        rules = rng.integers(0, n_sets, size=(n_rules, n_inputs))
        consequents = rng.normal(size=(n_rules, n_inputs + 1))
        model = AnfisModel(premise, rules, consequents)
        _, strengths, normalized, _, _ = anfis_layers(model, rng.uniform(-3, 3, size=2))
        assert (normalized >= 0).all()
        assert normalized.sum() == pytest.approx(1.0, abs=1e-12)
        assert strengths.sum() > 0


class TestValidation:
    def test_zero_halfwidth_rejected(self):
        with pytest.raises(ValueError):
            AnfisModel(np.array([[[0.0, 1.0, 0.0]]]), np.array([[0]]), np.zeros((1, 2)))

    def test_nonpositive_shape_exponent_rejected(self):
        with pytest.raises(ValueError):
            AnfisModel(np.array([[[1.0, 0.0, 0.0]]]), np.array([[0]]), np.zeros((1, 2)))

    def test_rule_index_bounds(self):
        with pytest.raises(ValueError):
            AnfisModel(np.array([[[1.0, 1.0, 0.0]]]), np.array([[1]]), np.zeros((1, 2)))

    def test_consequent_shape(self):
        with pytest.raises(ValueError):
            AnfisModel(np.array([[[1.0, 1.0, 0.0]]]), np.array([[0]]), np.zeros((1, 3)))

    def test_at_least_one_rule(self):
        with pytest.raises(ValueError):
            AnfisModel(np.array([[[1.0, 1.0, 0.0]]]), np.zeros((0, 1), dtype=int),
                       np.zeros((0, 2)))
