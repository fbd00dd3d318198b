"""Ground-truth reference paths: possible-model enumeration and sampling.

The enumerator materializes the distribution over possible models (one value
per relevant object) as the chain-rule product over the combined relevant
base, pruning zero-probability prefixes.  It is deliberately independent of
the factor machinery in ``infer`` and exists to check it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnumerationGuardError, ImpossibleEvidenceError
from .infer import PosteriorVector
from .lang import KnowledgeBase, Obj, obj_sort_key
from .netbuild import BayesNet
from .relevance import CombinedBase, RelevantAtomSet

DEFAULT_GUARD = 10**7


@dataclass
class JointDistribution:
    objs: tuple  # of Obj, in enumeration order
    values: tuple  # per-object value tuples, aligned with objs
    models: list  # of (assignment tuple, probability); zero-mass models omitted

    def total(self) -> float:
        return sum(p for _, p in self.models)

    def prob(self, partial: dict) -> float:
        """Total mass of models agreeing with a partial object -> value map."""
        pos = {o: i for i, o in enumerate(self.objs)}
        checks = [(pos[o], v) for o, v in partial.items()]
        return sum(p for m, p in self.models if all(m[i] == v for i, v in checks))


def _topo(tables: dict, objs):
    order = []
    seen = set()

    def visit(o, trail):
        if o in seen or o not in tables:
            return
        if o in trail:
            return  # cycles are caught elsewhere; avoid infinite recursion here
        trail.add(o)
        for p in sorted(tables[o].parents, key=obj_sort_key):
            visit(p, trail)
        trail.remove(o)
        seen.add(o)
        order.append(o)

    for o in sorted(objs, key=obj_sort_key):
        visit(o, set())
    return order


def ancestor_closure(base: CombinedBase, seeds):
    seen = set()
    stack = list(seeds)
    while stack:
        o = stack.pop()
        if o in seen:
            continue
        seen.add(o)
        t = base.tables.get(o)
        if t is not None:
            stack.extend(t.parents)
    return seen


def enumerate_joint(
    base: CombinedBase,
    ras: RelevantAtomSet = None,
    kb: KnowledgeBase = None,
    objs=None,
    guard: int = DEFAULT_GUARD,
    evidence: dict = None,
) -> JointDistribution:
    """All possible models with chain-rule probabilities over the combined base.

    ``guard`` bounds the number of expanded (nonzero-prefix) states; a KB whose
    deterministic structure kills most branches enumerates far beyond the naive
    product of value-set sizes.  Passing ``evidence`` restricts enumeration to
    the evidence-consistent slice of the joint (the models dropped all have the
    wrong value at an observed object, so conditionals are unchanged).
    """
    if objs is None:
        objs = ras.objs if ras is not None else base.tables.keys()
    order = _topo(base.tables, objs)
    if set(order) != set(objs):
        missing = sorted(set(objs) - set(order), key=obj_sort_key)
        raise KeyError(f"objects without conditional tables: {missing[:3]}")
    evidence = evidence or {}
    tables = [base.tables[o] for o in order]
    pos = {o: i for i, o in enumerate(order)}
    parent_idx = [tuple(pos[p] for p in t.parents) for t in tables]
    value_lists = [
        tuple(v for v in t.values if o not in evidence or v == evidence[o])
        for o, t in zip(order, tables)
    ]
    value_index = [
        tuple(t.values.index(v) for v in vals)
        for t, vals in zip(tables, value_lists)
    ]

    models = []
    work = 0
    assignment = [None] * len(order)

    def recurse(depth, prob):
        nonlocal work
        if depth == len(order):
            models.append((tuple(assignment), prob))
            return
        t = tables[depth]
        row = t.rows[tuple(assignment[i] for i in parent_idx[depth])]
        for v, vi in zip(value_lists[depth], value_index[depth]):
            p = row[vi]
            work += 1
            if work > guard:
                raise EnumerationGuardError(
                    f"possible-model enumeration exceeded {guard} expansions"
                )
            if p == 0.0:
                continue
            assignment[depth] = v
            recurse(depth + 1, prob * p)
        assignment[depth] = None

    if order:
        recurse(0, 1.0)
    else:
        models.append(((), 1.0))
    return JointDistribution(tuple(order), tuple(value_lists), models)


def conditional(joint: JointDistribution, query_obj: Obj, evidence: dict, kb: KnowledgeBase) -> PosteriorVector:
    """Exact posterior of one object from the enumerated joint."""
    pos = {o: i for i, o in enumerate(joint.objs)}
    ev = [(pos[o], v) for o, v in evidence.items()]
    p_e = sum(p for m, p in joint.models if all(m[i] == v for i, v in ev))
    if p_e <= 0.0:
        raise ImpossibleEvidenceError("evidence has zero probability in the joint")
    qi = pos[query_obj]
    values = kb.val(query_obj[0])
    mass = dict.fromkeys(values, 0.0)
    for m, p in joint.models:
        if all(m[i] == v for i, v in ev):
            mass[m[qi]] += p
    return PosteriorVector(query_obj, tuple(mass[v] / p_e for v in values))


def satisfaction_gap(joint: JointDistribution, base: CombinedBase) -> float:
    """Max violation of P(A0, ante) = alpha * P(ante) over all combined sentences."""
    worst = 0.0
    for s in base.sentences():
        ante = dict(s.ante)
        p_ante = joint.prob(ante)
        both = dict(ante)
        both[s.cons[0]] = s.cons[1]
        p_both = joint.prob(both)
        worst = max(worst, abs(p_both - s.alpha * p_ante))
    return worst


# ---------------------------------------------------------------------------
# Forward (rejection) sampling


def forward_sample(
    kb: KnowledgeBase,
    net: BayesNet,
    n: int,
    seed: int,
    targets,
    evidence: dict = None,
):
    """Ancestral sampling with rejection; returns (per-target empirical vectors,
    number of accepted samples)."""
    evidence = evidence or {}
    rng = np.random.default_rng(seed)
    vindex = {o: {v: i for i, v in enumerate(kb.val(o[0]))} for o in net.nodes}
    samples = {}
    for o in net.order:
        node = net.nodes[o]
        k = len(node.values)
        if not node.parents:
            probs = np.asarray(node.cpt[()])
            samples[o] = rng.choice(k, size=n, p=probs)
        else:
            # build the row matrix indexed by the mixed-radix parent code
            cards = [len(kb.val(p[0])) for p in node.parents]
            n_rows = int(np.prod(cards))
            rows = np.zeros((n_rows, k))
            for assignment, row in node.cpt.items():
                code = 0
                for p, v, c in zip(node.parents, assignment, cards):
                    code = code * c + vindex[p][v]
                rows[code] = row
            code = np.zeros(n, dtype=np.int64)
            for p, c in zip(node.parents, cards):
                code = code * c + samples[p]
            u = rng.random(n)
            cdf = np.cumsum(rows[code], axis=1)
            samples[o] = (u[:, None] > cdf).sum(axis=1)
    mask = np.ones(n, dtype=bool)
    for o, v in evidence.items():
        mask &= samples[o] == vindex[o][v]
    accepted = int(mask.sum())
    if accepted == 0:
        raise ImpossibleEvidenceError("no samples consistent with the evidence")
    out = {}
    for t in targets:
        k = len(kb.val(t[0]))
        counts = np.bincount(samples[t][mask], minlength=k)
        out[t] = PosteriorVector(t, tuple(counts / accepted))
    return out, accepted


# ---------------------------------------------------------------------------
# End-to-end oracle answer (used by tests and the oracle-diff command)


def oracle_answer(kb: KnowledgeBase, session, guard: int = DEFAULT_GUARD):
    """Answer a session's query by possible-model enumeration.

    Returns a list of (substitution, PosteriorVector) in the same deterministic
    order as ``infer.answer_query``.
    """
    from .lang import SessionInput, validate_session
    from .netbuild import query_obj, query_substitutions
    from .relevance import build_combined_base

    if isinstance(session, SessionInput):
        session = validate_session(kb, session)
    base, ras, _ = build_combined_base(kb, session)
    answered = []
    for theta in query_substitutions(kb, session.query, session.lo, session.hi):
        o = query_obj(kb, session.query, theta)
        if o in ras.objs:
            answered.append((theta, o))
    answered.sort(key=lambda pair: sorted(pair[0].items(), key=str))
    results = []
    for theta, target in answered:
        objs = ancestor_closure(base, [target] + list(session.evidence))
        joint = enumerate_joint(base, objs=objs, guard=guard, evidence=session.evidence)
        results.append((theta, conditional(joint, target, session.evidence, kb)))
    return results
