"""Abstract syntax for rule knowledge bases, sessions, and ground atoms.

A knowledge base has four parts: predicate declarations with typed, finite
attribute domains; a probabilistic base of context-guarded conditional
probability sentences; a context base of acyclic normal-logic-program clauses
over deterministic context predicates; and a per-predicate combining rule
assignment.  The last attribute of a probabilistic predicate carries the
random variable's value; the remaining attributes identify the variable
(its "object").
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import Diagnostic, SessionError

TIME_DOMAIN = "time"

ConstValue = Union[str, int]
Obj = tuple  # (predicate, arg1, ..., argk) — ground object identity


# ---------------------------------------------------------------------------
# Terms and atoms


@dataclass(frozen=True)
class Const:
    value: ConstValue

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TimeExpr:
    """A time variable plus an integer offset, e.g. ``t-1``."""

    var: str
    offset: int

    def __str__(self) -> str:
        if self.offset == 0:
            return self.var
        sign = "+" if self.offset > 0 else "-"
        return f"{self.var}{sign}{abs(self.offset)}"


Term = Union[Const, Var, TimeExpr]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({', '.join(str(a) for a in self.args)})"

    def is_ground(self) -> bool:
        return all(isinstance(a, Const) for a in self.args)

    def variables(self) -> Iterator[str]:
        for a in self.args:
            if isinstance(a, Var):
                yield a.name
            elif isinstance(a, TimeExpr):
                yield a.var


Literal = tuple  # (positive: bool, Atom)


def lit_str(lit: Literal) -> str:
    positive, atom = lit
    return str(atom) if positive else f"not {atom}"


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class AttributeDomain:
    name: str
    members: tuple  # ordered constants; empty only for the built-in time domain

    def __contains__(self, v) -> bool:
        if self.name == TIME_DOMAIN:
            return isinstance(v, int)
        return v in self.members


TIME = AttributeDomain(TIME_DOMAIN, ())


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    kind: str  # "p" or "c"
    attribute_domains: tuple  # domain names; for p-predicates, value excluded
    value_domain: Optional[str] = None  # p-predicates only

    @property
    def arity(self) -> int:
        return len(self.attribute_domains) + (1 if self.kind == "p" else 0)

    def time_position(self, kb: "KnowledgeBase") -> Optional[int]:
        for i, d in enumerate(self.attribute_domains):
            if d == TIME_DOMAIN:
                return i
        return None


@dataclass(frozen=True)
class ProbSentence:
    """``prob cons | ante = alpha <- context.``"""

    cons: Atom
    ante: tuple  # of Atom
    alpha: float
    context: tuple = ()  # of Literal

    def atoms(self) -> Iterator[Atom]:
        yield self.cons
        yield from self.ante
        for _, a in self.context:
            yield a

    def variables(self) -> Iterator[str]:
        for a in self.atoms():
            yield from a.variables()

    def __str__(self) -> str:
        s = f"prob {self.cons}"
        if self.ante:
            s += " | " + ", ".join(str(a) for a in self.ante)
        s += f" = {format_prob(self.alpha)}"
        if self.context:
            s += " <- " + ", ".join(lit_str(l) for l in self.context)
        return s + "."


@dataclass(frozen=True)
class ContextClause:
    head: Atom
    body: tuple = ()  # of Literal

    def variables(self) -> Iterator[str]:
        yield from self.head.variables()
        for _, a in self.body:
            yield from a.variables()

    def __str__(self) -> str:
        s = f"ctx {self.head}"
        if self.body:
            s += " <- " + ", ".join(lit_str(l) for l in self.body)
        return s + "."


def format_prob(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


# ---------------------------------------------------------------------------
# The knowledge base


@dataclass(frozen=True)
class KnowledgeBase:
    domains: dict  # name -> AttributeDomain (includes value domains and time)
    preds: dict  # name -> PredicateDecl
    pb: tuple  # of ProbSentence
    cb: tuple  # of ContextClause
    cr: dict = field(default_factory=dict)  # p-pred -> (rule name, params dict)

    DEFAULT_RULE = "noisy_max"

    def decl(self, name: str) -> PredicateDecl:
        return self.preds[name]

    def val(self, pred: str) -> tuple:
        """Declared value set of a p-predicate, in declaration order."""
        return self.domains[self.preds[pred].value_domain].members

    def combining_rule_for(self, pred: str):
        return self.cr.get(pred, (self.DEFAULT_RULE, {}))

    def domain_of_position(self, pred: str, i: int) -> AttributeDomain:
        d = self.preds[pred]
        if d.kind == "p" and i == len(d.attribute_domains):
            return self.domains[d.value_domain]
        return self.domains[d.attribute_domains[i]]

    def pretty(self) -> str:
        out = []
        for dom in self.domains.values():
            if dom.name == TIME_DOMAIN:
                continue
            kw = "value" if self._is_value_domain(dom.name) else "domain"
            out.append(f"{kw} {dom.name} = {{ {', '.join(str(m) for m in dom.members)} }}.")
        for p in self.preds.values():
            kw = "pred" if p.kind == "p" else "cpred"
            out.append(f"{kw} {p.name}({', '.join(p.attribute_domains)}).")
        for name, (rule, params) in sorted(self.cr.items()):
            ps = ""
            if params:
                ps = "(" + ", ".join(f"{k}={v}" for k, v in sorted(params.items())) + ")"
            out.append(f"combine {name} with {rule}{ps}.")
        out.extend(str(c) for c in self.cb)
        out.extend(str(s) for s in self.pb)
        return "\n".join(out) + "\n"

    def _is_value_domain(self, name: str) -> bool:
        return any(p.value_domain == name for p in self.preds.values())


# ---------------------------------------------------------------------------
# Ground-atom helpers


def obj_of(atom: Atom) -> Obj:
    """Random-variable identity of a ground p-atom: predicate plus all but the value."""
    return (atom.pred,) + tuple(a.value for a in atom.args[:-1])


def val_of(atom: Atom) -> ConstValue:
    return atom.args[-1].value


def atom_of(obj: Obj, value: ConstValue) -> Atom:
    return Atom(obj[0], tuple(Const(c) for c in obj[1:]) + (Const(value),))


def ext(kb: KnowledgeBase, atom: Atom) -> tuple:
    """All value-variants of a ground p-atom, in declared value order."""
    o = obj_of(atom)
    return tuple(atom_of(o, v) for v in kb.val(atom.pred))


def obj_time(kb: KnowledgeBase, obj: Obj) -> Optional[int]:
    tp = kb.decl(obj[0]).time_position(kb)
    return None if tp is None else obj[1 + tp]


def atom_time(kb: KnowledgeBase, atom: Atom) -> Optional[int]:
    """Time of a ground atom, or None for untimed predicates."""
    tp = kb.decl(atom.pred).time_position(kb)
    if tp is None:
        return None
    t = atom.args[tp]
    return t.value if isinstance(t, Const) else None


def obj_sort_key(obj: Obj):
    return tuple(str(c) for c in obj)


# ---------------------------------------------------------------------------
# Sessions


@dataclass(frozen=True)
class SessionInput:
    """One inference session: context facts, evidence, bounds, and a query."""

    context: tuple = ()  # ground c-atoms
    evidence: tuple = ()  # p-atoms (usually ground)
    lo: int = 0
    hi: int = 0
    query: Optional[Atom] = None


@dataclass(frozen=True)
class ValidatedSession:
    context: frozenset  # ground c-atom tuples (pred, *args)
    evidence: dict  # Obj -> value, the coherent ground(E)
    lo: int
    hi: int
    query: Optional[Atom]


def ground_instances(kb: KnowledgeBase, atom: Atom, lo: int, hi: int) -> Iterator[Atom]:
    """All type-consistent groundings of an atom with times in [lo, hi]."""
    choices = []
    for i, term in enumerate(atom.args):
        dom = kb.domain_of_position(atom.pred, i)
        if isinstance(term, Const):
            choices.append((term,))
        elif dom.name == TIME_DOMAIN:
            if isinstance(term, TimeExpr):
                rng = range(lo - term.offset, hi - term.offset + 1)
                choices.append(tuple(Const(t + term.offset) for t in rng))
            else:
                choices.append(tuple(Const(t) for t in range(lo, hi + 1)))
        else:
            choices.append(tuple(Const(m) for m in dom.members))
    var_slots = []
    for i, term in enumerate(atom.args):
        if isinstance(term, Var):
            var_slots.append((i, term.name))
    for combo in itertools.product(*choices):
        bind: dict = {}
        ok = True
        for i, name in var_slots:
            if name in bind and bind[name] != combo[i].value:
                ok = False
                break
            bind[name] = combo[i].value
        if ok:
            yield Atom(atom.pred, combo)


def validate_session(kb: KnowledgeBase, s: SessionInput) -> ValidatedSession:
    """Check coherence, bounds confinement, and query shape; normalize to ground form."""
    diags = []
    if s.lo > s.hi:
        diags.append(Diagnostic(f"bounds ({s.lo}, {s.hi}) have lo > hi"))
        raise SessionError(diags)

    ctx = set()
    for a in s.context:
        if a.pred not in kb.preds or kb.decl(a.pred).kind != "c":
            diags.append(Diagnostic(f"context atom {a} is not a declared c-atom"))
            continue
        if not a.is_ground():
            diags.append(Diagnostic(f"context atom {a} is not ground"))
            continue
        t = atom_time(kb, a)
        if t is not None and not (s.lo <= t <= s.hi):
            diags.append(Diagnostic(f"context atom {a} timed outside [{s.lo}, {s.hi}]"))
            continue
        ctx.add((a.pred,) + tuple(c.value for c in a.args))

    evidence: dict = {}
    for a in s.evidence:
        if a.pred not in kb.preds or kb.decl(a.pred).kind != "p":
            diags.append(Diagnostic(f"evidence atom {a} is not a declared p-atom"))
            continue
        for g in ground_instances(kb, a, s.lo, s.hi):
            t = atom_time(kb, g)
            if t is not None and not (s.lo <= t <= s.hi):
                diags.append(Diagnostic(f"evidence atom {g} timed outside [{s.lo}, {s.hi}]"))
                continue
            o, v = obj_of(g), val_of(g)
            if o in evidence and evidence[o] != v:
                diags.append(
                    Diagnostic(
                        f"incoherent evidence: {atom_of(o, evidence[o])} and {g} "
                        "assign two values to one object"
                    )
                )
            evidence[o] = v

    if s.query is not None:
        q = s.query
        if q.pred not in kb.preds or kb.decl(q.pred).kind != "p":
            diags.append(Diagnostic(f"query {q} is not over a declared p-predicate"))
        else:
            if not isinstance(q.args[-1], Var):
                diags.append(Diagnostic(f"query {q}: last argument must be a variable"))
            t_arg = None
            tp = kb.decl(q.pred).time_position(kb)
            if tp is not None:
                t_arg = q.args[tp]
            if isinstance(t_arg, Const) and not (s.lo <= t_arg.value <= s.hi):
                diags.append(Diagnostic(f"query {q} timed outside [{s.lo}, {s.hi}]"))

    if diags:
        raise SessionError(diags)
    return ValidatedSession(
        context=frozenset(ctx),
        evidence=evidence,
        lo=s.lo,
        hi=s.hi,
        query=s.query,
    )
