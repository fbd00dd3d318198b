"""Exact posterior computation on a supporting network via variable elimination.

Factors stay unnormalized until the final division, so a vanishing evidence
probability is detected rather than silently divided through.  The answer to
a complete query is one posterior vector per ground query instance, aligned
with the declared value order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CtxkbError, ImpossibleEvidenceError
from .lang import (
    KnowledgeBase,
    Obj,
    SessionInput,
    ValidatedSession,
    obj_sort_key,
    validate_session,
)
from .netbuild import BayesNet, NetNode, build_net, query_obj

ZERO_EVIDENCE = 1e-300
NORM_TOL = 1e-9


@dataclass
class Factor:
    scope: tuple  # of Obj, in axis order
    values: np.ndarray  # shape = tuple of cardinalities along scope

    def __post_init__(self):
        assert self.values.ndim == len(self.scope)
        assert (self.values >= 0).all(), "negative factor entry"


class FactorBuilder:
    """Builds CPT factors with per-object value index maps."""

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self._vindex: dict = {}

    def vindex(self, obj: Obj) -> dict:
        if obj not in self._vindex:
            self._vindex[obj] = {v: i for i, v in enumerate(self.kb.val(obj[0]))}
        return self._vindex[obj]

    def card(self, obj: Obj) -> int:
        return len(self.kb.val(obj[0]))

    def cpt_factor(self, node: NetNode) -> Factor:
        scope = node.parents + (node.obj,)
        shape = tuple(self.card(o) for o in scope)
        arr = np.zeros(shape)
        for assignment, row in node.cpt.items():
            idx = tuple(
                self.vindex(p)[v] for p, v in zip(node.parents, assignment)
            )
            arr[idx] = np.asarray(row)
        return Factor(scope, arr)

    def reduce(self, factor: Factor, evidence: dict) -> Factor:
        """Slice out observed values for scope objects present in evidence."""
        scope = []
        index = []
        for o in factor.scope:
            if o in evidence:
                index.append(self.vindex(o)[evidence[o]])
            else:
                index.append(slice(None))
                scope.append(o)
        return Factor(tuple(scope), factor.values[tuple(index)])


def multiply(a: Factor, b: Factor) -> Factor:
    scope = list(a.scope)
    for o in b.scope:
        if o not in scope:
            scope.append(o)
    scope = tuple(scope)

    def align(f: Factor) -> np.ndarray:
        src = [f.scope.index(o) if o in f.scope else None for o in scope]
        arr = f.values
        # move existing axes into target order, inserting new axes of length 1
        order = [i for i in src if i is not None]
        arr = np.transpose(arr, order) if order else arr
        shape = []
        k = 0
        for i in src:
            if i is None:
                shape.append(1)
            else:
                shape.append(arr.shape[k])
                k += 1
        return arr.reshape(shape)

    return Factor(scope, align(a) * align(b))


def marginalize(f: Factor, obj: Obj) -> Factor:
    i = f.scope.index(obj)
    return Factor(f.scope[:i] + f.scope[i + 1 :], f.values.sum(axis=i))


def min_fill_order(scopes, keep):
    """Min-fill elimination order with a lexicographic tie-break."""
    neighbors: dict = {}
    for scope in scopes:
        for o in scope:
            neighbors.setdefault(o, set())
            for p in scope:
                if p != o:
                    neighbors[o].add(p)
    to_eliminate = {o for o in neighbors if o not in keep}
    order = []
    while to_eliminate:
        best = None
        for o in sorted(to_eliminate, key=obj_sort_key):
            nb = neighbors[o] & (to_eliminate | set(keep))
            fill = sum(
                1
                for a in nb
                for b in nb
                if obj_sort_key(a) < obj_sort_key(b) and b not in neighbors[a]
            )
            if best is None or fill < best[0]:
                best = (fill, o)
        _, o = best
        order.append(o)
        nb = neighbors.pop(o)
        for a in nb:
            neighbors[a].discard(o)
            neighbors[a].update(b for b in nb if b != a)
        to_eliminate.remove(o)
    return order


def eliminate(
    kb: KnowledgeBase,
    net: BayesNet,
    evidence: dict,
    targets,
    order=None,
):
    """Unnormalized joint factors P(target, evidence), one per target object.

    Only the ancestors of targets and evidence participate (barren nodes are
    answer-preserving to prune).  ``order`` overrides the min-fill heuristic.
    """
    for o in evidence:
        if o not in net.nodes:
            raise CtxkbError(f"evidence object {o} is not in the network")
    fb = FactorBuilder(kb)
    out = {}
    for target in targets:
        relevant = net.ancestors_of(set(evidence) | {target})
        factors = [
            fb.reduce(fb.cpt_factor(net.nodes[o]), evidence)
            for o in sorted(relevant, key=obj_sort_key)
        ]
        keep = [target] if target not in evidence else []
        if order is None:
            elim = min_fill_order([f.scope for f in factors], set(keep))
        else:
            elim = [o for o in order if o in relevant and o not in keep and o not in evidence]
        for o in elim:
            group = [f for f in factors if o in f.scope]
            rest = [f for f in factors if o not in f.scope]
            if not group:
                continue
            prod = group[0]
            for f in group[1:]:
                prod = multiply(prod, f)
            factors = rest + [marginalize(prod, o)]
        result = factors[0]
        for f in factors[1:]:
            result = multiply(result, f)
        if target in evidence:
            # degenerate: expand the observed target back into a vector
            vec = np.zeros(fb.card(target))
            vec[fb.vindex(target)[evidence[target]]] = float(result.values)
            result = Factor((target,), vec)
        out[target] = result
    return out


@dataclass(frozen=True)
class PosteriorVector:
    query_object: Obj
    probabilities: tuple  # aligned with the declared value order

    def __post_init__(self):
        assert all(0.0 <= p <= 1.0 + 1e-12 for p in self.probabilities)
        assert abs(sum(self.probabilities) - 1.0) <= NORM_TOL


@dataclass
class QueryAnswer:
    query: object  # the query Atom
    instances: list  # of (substitution dict, PosteriorVector), deterministic order


def answer_query(kb: KnowledgeBase, session) -> QueryAnswer:
    """Build the supporting network and compute each instance's posterior."""
    if isinstance(session, SessionInput):
        session = validate_session(kb, session)
    net, subs = build_net(kb, session)
    return answer_on_net(kb, session, net, subs)


def answer_on_net(
    kb: KnowledgeBase, session: ValidatedSession, net: BayesNet, subs, order=None
) -> QueryAnswer:
    instances = []
    for theta in subs:
        target = query_obj(kb, session.query, theta)
        factors = eliminate(kb, net, session.evidence, [target], order=order)
        vec = factors[target]
        assert vec.scope == (target,)
        p_e = float(vec.values.sum())
        if p_e <= ZERO_EVIDENCE:
            raise ImpossibleEvidenceError(
                f"evidence has zero probability (P(E) = {p_e!r})"
            )
        post = vec.values / p_e
        post = np.clip(post, 0.0, 1.0)
        instances.append((theta, PosteriorVector(target, tuple(float(p) for p in post))))
    return QueryAnswer(session.query, instances)
