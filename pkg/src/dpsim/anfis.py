"""Five-layer Sugeno-type neuro-fuzzy forward pass (inference only).

Layers: (1) generalized-bell memberships, (2) rule firing strengths by the
product t-norm, (3) normalization, (4) first-order linear consequents scaled
by normalized strengths, (5) summation.  Premise/consequent parameter
estimation is out of scope; models are constructed with fixed parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateFiringError(ValueError):
    """All rule firing strengths vanished; the normalization layer is undefined."""


def bell_membership(x, a, b, c):
    """Generalized bell curve, 1 at x = c, decaying with half-width |a|."""
    with np.errstate(over="ignore"):
        ratio_sq = ((x - c) / a) ** 2
        return 1.0 / (1.0 + ratio_sq ** b)


@dataclass(frozen=True)
class AnfisModel:
    """Fixed-parameter Sugeno model.

    premise: (n_inputs, n_sets, 3) of (a, b, c) per membership function.
    rules: (n_rules, n_inputs) membership index chosen per input.
    consequents: (n_rules, n_inputs + 1) linear coefficients plus bias, so a
        two-input model carries the familiar (p, q, r) per rule.
    """

    premise: np.ndarray
    rules: np.ndarray
    consequents: np.ndarray

    def __post_init__(self):
        premise = np.asarray(self.premise, dtype=float)
        rules = np.asarray(self.rules, dtype=int)
        consequents = np.asarray(self.consequents, dtype=float)
        if premise.ndim != 3 or premise.shape[2] != 3:
            raise ValueError("premise must have shape (n_inputs, n_sets, 3)")
        if (premise[:, :, 0] == 0).any():
            raise ValueError("membership parameter a must be nonzero")
        if (premise[:, :, 1] <= 0).any():
            raise ValueError("membership parameter b must be positive")
        if rules.ndim != 2 or rules.shape[0] < 1:
            raise ValueError("at least one rule is required")
        n_inputs, n_sets = premise.shape[0], premise.shape[1]
        if rules.shape[1] != n_inputs:
            raise ValueError("each rule must pick one membership per input")
        if (rules < 0).any() or (rules >= n_sets).any():
            raise ValueError("rule table references an undefined membership index")
        if consequents.shape != (rules.shape[0], n_inputs + 1):
            raise ValueError("consequents must have shape (n_rules, n_inputs + 1)")
        object.__setattr__(self, "premise", premise)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "consequents", consequents)

    @property
    def n_inputs(self) -> int:
        return self.premise.shape[0]

    @property
    def n_rules(self) -> int:
        return self.rules.shape[0]


def anfis_layers(model: AnfisModel, x):
    """All intermediate layer outputs for one input vector.

    Returns (memberships, strengths, normalized, rule_outputs, output).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_inputs,):
        raise ValueError(f"input must have dimension {model.n_inputs}")
    a = model.premise[:, :, 0]
    b = model.premise[:, :, 1]
    c = model.premise[:, :, 2]
    memberships = bell_membership(x[:, None], a, b, c)
    strengths = np.prod(
        memberships[np.arange(model.n_inputs), model.rules], axis=1)
    total = strengths.sum()
    if total <= 0.0:
        raise DegenerateFiringError("no rule fires at this input (sum of strengths is 0)")
    normalized = strengths / total
    linear = model.consequents[:, :-1] @ x + model.consequents[:, -1]
    rule_outputs = normalized * linear
    return memberships, strengths, normalized, rule_outputs, float(rule_outputs.sum())


def anfis_forward(model: AnfisModel, x) -> float:
    """Crisp model output for one input vector."""
    return anfis_layers(model, x)[4]
