"""Combining rules: merge several same-consequent cause mechanisms into one row.

Each mechanism is one conditional distribution over the consequent's value
set, contributed by one rule group.  The shipped ``noisy_max`` rule treats
the value set as totally ordered with the first (distinguished) value as the
inactive state; each mechanism independently draws a value and the consequent
takes the maximum.  On binary value sets this is classical noisy-OR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CombiningRuleError

NORM_TOL = 1e-9


@dataclass(frozen=True)
class CauseMechanism:
    """One rule group's contribution: antecedents plus a distribution over VAL."""

    antecedents: frozenset  # of (Obj, value)
    distribution: tuple  # probabilities aligned with the consequent value order


@dataclass(frozen=True)
class CombiningRule:
    name: str
    apply: object  # (obj, [CauseMechanism], value_order, params) -> tuple of probs


def _check_normalized(mechanisms):
    for m in mechanisms:
        s = sum(m.distribution)
        if abs(s - 1.0) > NORM_TOL:
            raise CombiningRuleError(
                f"mechanism distribution sums to {s!r}, expected 1"
            )


def noisy_max(obj, mechanisms, value_order, params=None):
    """P(v_k) = prod_i Q_i(<= v_k) - prod_i Q_i(<= v_{k-1}).

    ``value_order`` is the declared value order, first value distinguished.
    A ``distinguished`` parameter rotates a different value to the front.
    """
    if not mechanisms:
        raise CombiningRuleError("noisy_max needs at least one mechanism")
    _check_normalized(mechanisms)
    if len(mechanisms) == 1:
        return tuple(mechanisms[0].distribution)
    order = list(range(len(value_order)))
    if params and "distinguished" in params:
        d = value_order.index(params["distinguished"])
        order = [d] + [i for i in order if i != d]
    # cumulative products in combination order
    n = len(value_order)
    cum = [1.0] * n
    for m in mechanisms:
        acc = 0.0
        for rank, i in enumerate(order):
            acc += m.distribution[i]
            cum[rank] *= acc
    out = [0.0] * n
    prev = 0.0
    for rank, i in enumerate(order):
        out[i] = max(cum[rank] - prev, 0.0)
        prev = cum[rank]
    return tuple(out)


def single_only(obj, mechanisms, value_order, params=None):
    """Pass-through rule for predicates that never have multiple influences."""
    if len(mechanisms) != 1:
        raise CombiningRuleError(
            f"single_only: {obj} has {len(mechanisms)} rule groups, expected 1"
        )
    _check_normalized(mechanisms)
    return tuple(mechanisms[0].distribution)


@dataclass
class RuleRegistry:
    rules: dict = field(default_factory=dict)

    def register(self, rule: CombiningRule):
        if rule.name in self.rules:
            raise CombiningRuleError(f"combining rule {rule.name!r} already registered")
        self.rules[rule.name] = rule
        return rule.name

    def resolve(self, name: str) -> CombiningRule:
        try:
            return self.rules[name]
        except KeyError:
            raise CombiningRuleError(f"unknown combining rule {name!r}") from None


def builtin_registry() -> RuleRegistry:
    reg = RuleRegistry()
    reg.register(CombiningRule("noisy_max", noisy_max))
    reg.register(CombiningRule("single_only", single_only))
    return reg
