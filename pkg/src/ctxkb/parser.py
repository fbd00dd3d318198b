"""Concrete syntax for knowledge bases, context/evidence files, and queries.

Statements end with ``.`` and ``#`` starts a comment.  The statement forms:

    domain person = { john, mary }.
    value rhythm = { nsr, vf, vt, af, svt, b, a }.
    pred rhythm(person, time).
    cpred epi(person, time).
    prob rhythm(X, t, nsr) | rhythm(X, t-1, nsr) = 0.05 <- no_inter(X, t-1), epi(X, t-1).
    ctx no_inter(X, t) <- not dfib(X, t), not cpr(X, t).
    combine rhythm with noisy_max.

``value p`` declares the value set of p-predicate ``p`` (declaration order is
significant: it fixes posterior-vector layout and the noisy-max value order).
A ``pred`` statement lists only the object attributes; the value attribute is
implicit and typed by the ``value`` declaration of the same name.  Predicate
and constant identifiers are case-insensitive; a token starting with an
uppercase letter is a variable.  In a ``time`` position any identifier is a
variable, since time constants are integer literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import Diagnostic, ParseError
from .lang import (
    TIME,
    TIME_DOMAIN,
    Atom,
    AttributeDomain,
    Const,
    ContextClause,
    KnowledgeBase,
    PredicateDecl,
    ProbSentence,
    TimeExpr,
    Var,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<float>\d+\.\d+|\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow><-)
  | (?P<punct>[(){}=|,.+\-])
    """,
    re.VERBOSE,
)

KEYWORDS = {"domain", "value", "pred", "cpred", "prob", "ctx", "combine", "with", "not"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "float", or the punctuation itself
    value: object
    line: int
    col: int


def tokenize(text: str, filename: str) -> list:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError([Diagnostic(f"unexpected character {text[pos]!r}", filename, line, col)])
        kind = m.lastgroup
        value = m.group()
        if kind == "ident":
            tokens.append(Token("ident", value, line, col))
        elif kind == "int":
            tokens.append(Token("int", int(value), line, col))
        elif kind == "float":
            tokens.append(Token("float", float(value), line, col))
        elif kind in ("arrow", "punct"):
            tokens.append(Token(value, value, line, col))
        # ws and comments are skipped
        nl = value.count("\n")
        if nl:
            line += nl
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", None, line, col))
    return tokens


# Raw (unresolved) syntax; resolution against declarations happens in a second
# pass so statement order in the file does not matter.

RawTerm = tuple  # ("ident", name) | ("int", n) | ("offset", name, k) — plus location
RawAtom = tuple  # (name, [RawTerm], line, col)


class _Parser:
    def __init__(self, tokens, filename):
        self.toks = tokens
        self.i = 0
        self.filename = filename

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError([Diagnostic(msg, self.filename, tok.line, tok.col)])

    def expect(self, kind) -> Token:
        t = self.peek()
        if t.kind != kind:
            self.error(f"expected {kind!r}, found {t.value!r}")
        return self.next()

    def expect_ident(self, what="identifier") -> Token:
        t = self.peek()
        if t.kind != "ident":
            self.error(f"expected {what}, found {t.value!r}")
        return self.next()

    # -- statement level -----------------------------------------------------

    def statements(self):
        while self.peek().kind != "eof":
            yield self.statement()

    def statement(self):
        t = self.expect_ident("statement keyword")
        kw = t.value.lower()
        if kw in ("domain", "value"):
            name = self.expect_ident("domain name").value.lower()
            self.expect("=")
            self.expect("{")
            members = []
            if self.peek().kind != "}":
                members.append(self.expect_ident("domain member").value.lower())
                while self.peek().kind == ",":
                    self.next()
                    members.append(self.expect_ident("domain member").value.lower())
            self.expect("}")
            self.expect(".")
            return (kw, name, members, t)
        if kw in ("pred", "cpred"):
            name = self.expect_ident("predicate name").value.lower()
            doms = []
            if self.peek().kind == "(":
                self.next()
                if self.peek().kind != ")":
                    doms.append(self.expect_ident("domain name").value.lower())
                    while self.peek().kind == ",":
                        self.next()
                        doms.append(self.expect_ident("domain name").value.lower())
                self.expect(")")
            self.expect(".")
            return (kw, name, doms, t)
        if kw == "prob":
            cons = self.atom()
            ante = []
            if self.peek().kind == "|":
                self.next()
                ante.append(self.atom())
                while self.peek().kind == ",":
                    self.next()
                    ante.append(self.atom())
            self.expect("=")
            alpha_tok = self.peek()
            alpha = self.number()
            context = []
            if self.peek().kind == "<-":
                self.next()
                context = self.literals()
            self.expect(".")
            return ("prob", cons, ante, alpha, context, alpha_tok)
        if kw == "ctx":
            head = self.atom()
            body = []
            if self.peek().kind == "<-":
                self.next()
                body = self.literals()
            self.expect(".")
            return ("ctx", head, body, t)
        if kw == "combine":
            pred = self.expect_ident("predicate name").value.lower()
            w = self.expect_ident()
            if w.value.lower() != "with":
                self.error("expected 'with'", w)
            rule = self.expect_ident("rule name").value.lower()
            params = {}
            if self.peek().kind == "(":
                self.next()
                while True:
                    k = self.expect_ident("parameter name").value.lower()
                    self.expect("=")
                    v = self.peek()
                    if v.kind in ("ident", "int", "float"):
                        self.next()
                        params[k] = v.value.lower() if v.kind == "ident" else v.value
                    else:
                        self.error("expected parameter value")
                    if self.peek().kind == ",":
                        self.next()
                        continue
                    break
                self.expect(")")
            self.expect(".")
            return ("combine", pred, rule, params, t)
        self.error(f"unknown statement keyword {t.value!r}", t)

    # -- atoms and terms -----------------------------------------------------

    def atom(self) -> RawAtom:
        t = self.expect_ident("atom")
        name = t.value
        terms = []
        if self.peek().kind == "(":
            self.next()
            if self.peek().kind != ")":
                terms.append(self.term())
                while self.peek().kind == ",":
                    self.next()
                    terms.append(self.term())
            self.expect(")")
        return (name, terms, t.line, t.col)

    def term(self) -> RawTerm:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return ("int", t.value, t.line, t.col)
        if t.kind == "-":
            self.next()
            n = self.expect("int")
            return ("int", -n.value, t.line, t.col)
        if t.kind == "ident":
            self.next()
            if self.peek().kind in ("+", "-"):
                sign = 1 if self.next().kind == "+" else -1
                k = self.expect("int")
                return ("offset", t.value, sign * k.value, t.line, t.col)
            return ("ident", t.value, t.line, t.col)
        self.error(f"expected term, found {t.value!r}")

    def literals(self):
        lits = [self.literal()]
        while self.peek().kind == ",":
            self.next()
            lits.append(self.literal())
        return lits

    def literal(self):
        t = self.peek()
        if t.kind == "ident" and t.value.lower() == "not":
            self.next()
            return (False, self.atom())
        return (True, self.atom())

    def number(self) -> float:
        t = self.peek()
        if t.kind in ("int", "float"):
            self.next()
            return float(t.value)
        self.error(f"expected number, found {t.value!r}")


class _Resolver:
    """Second pass: build and statically validate the KnowledgeBase."""

    def __init__(self, filename):
        self.filename = filename
        self.domains = {TIME_DOMAIN: TIME}
        self.preds = {}
        self.pb = []
        self.cb = []
        self.cr = {}
        self.diags = []

    def diag(self, msg, line=0, col=0):
        self.diags.append(Diagnostic(msg, self.filename, line, col))

    def run(self, statements) -> KnowledgeBase:
        prob_stmts, ctx_stmts, combine_stmts = [], [], []
        pred_stmts = []
        for st in statements:
            kind = st[0]
            if kind in ("domain", "value"):
                _, name, members, tok = st
                if name == TIME_DOMAIN:
                    self.diag("'time' is a reserved domain name", tok.line, tok.col)
                elif name in self.domains:
                    self.diag(f"duplicate domain declaration {name!r}", tok.line, tok.col)
                elif len(set(members)) != len(members):
                    self.diag(f"duplicate member in domain {name!r}", tok.line, tok.col)
                else:
                    self.domains[name] = AttributeDomain(name, tuple(members))
            elif kind in ("pred", "cpred"):
                pred_stmts.append(st)
            elif kind == "prob":
                prob_stmts.append(st)
            elif kind == "ctx":
                ctx_stmts.append(st)
            elif kind == "combine":
                combine_stmts.append(st)

        for kw, name, doms, tok in pred_stmts:
            if name in self.preds:
                self.diag(f"duplicate predicate declaration {name!r}", tok.line, tok.col)
                continue
            n_time = sum(1 for d in doms if d == TIME_DOMAIN)
            if n_time > 1:
                self.diag(f"predicate {name!r} has more than one time attribute", tok.line, tok.col)
                continue
            bad = [d for d in doms if d != TIME_DOMAIN and d not in self.domains]
            if bad:
                self.diag(f"predicate {name!r} uses undeclared domain {bad[0]!r}", tok.line, tok.col)
                continue
            if kw == "pred":
                if name not in self.domains:
                    self.diag(
                        f"p-predicate {name!r} has no value declaration (expected 'value {name} = ...')",
                        tok.line,
                        tok.col,
                    )
                    continue
                if not self.domains[name].members:
                    self.diag(f"value set of {name!r} is empty", tok.line, tok.col)
                    continue
                self.preds[name] = PredicateDecl(name, "p", tuple(doms), value_domain=name)
            else:
                self.preds[name] = PredicateDecl(name, "c", tuple(doms))

        kb_shell = KnowledgeBase(self.domains, self.preds, (), (), {})

        for st in ctx_stmts:
            _, raw_head, raw_body, tok = st
            head = self.resolve_atom(kb_shell, raw_head, want_kind="c")
            body = self.resolve_literals(kb_shell, raw_body, want_kind="c")
            if head is not None and body is not None:
                clause = ContextClause(head, tuple(body))
                self.check_var_typing(kb_shell, clause.head, [a for _, a in clause.body], str(clause), tok)
                self.cb.append(clause)

        for st in prob_stmts:
            _, raw_cons, raw_ante, alpha, raw_context, tok = st
            cons = self.resolve_atom(kb_shell, raw_cons, want_kind="p")
            ante = [self.resolve_atom(kb_shell, a, want_kind="p") for a in raw_ante]
            context = self.resolve_literals(kb_shell, raw_context, want_kind="c")
            if not (0.0 <= alpha <= 1.0):
                self.diag(f"probability {alpha} outside [0, 1]", tok.line, tok.col)
                continue
            if cons is None or any(a is None for a in ante) or context is None:
                continue
            sent = ProbSentence(cons, tuple(ante), alpha, tuple(context))
            self.check_var_typing(
                kb_shell, cons, list(ante) + [a for _, a in context], str(sent), tok
            )
            self.pb.append(sent)

        for _, pred, rule, params, tok in combine_stmts:
            if pred not in self.preds or self.preds[pred].kind != "p":
                self.diag(f"combine: {pred!r} is not a declared p-predicate", tok.line, tok.col)
                continue
            if pred in self.cr:
                self.diag(f"duplicate combine declaration for {pred!r}", tok.line, tok.col)
                continue
            if "distinguished" in params and params["distinguished"] not in self.domains[pred].members:
                self.diag(
                    f"combine: distinguished value {params['distinguished']!r} "
                    f"not in VAL({pred})",
                    tok.line,
                    tok.col,
                )
                continue
            self.cr[pred] = (rule, params)

        if self.diags:
            raise ParseError(self.diags)
        return KnowledgeBase(self.domains, self.preds, tuple(self.pb), tuple(self.cb), self.cr)

    def resolve_atom(self, kb, raw: RawAtom, want_kind=None):
        name, terms, line, col = raw
        pname = name.lower()
        decl = self.preds.get(pname)
        if decl is None:
            self.diag(f"undeclared predicate {pname!r}", line, col)
            return None
        if want_kind and decl.kind != want_kind:
            kinds = {"p": "p-predicate", "c": "c-predicate"}
            self.diag(f"{pname!r} is not a {kinds[want_kind]} here", line, col)
            return None
        if len(terms) != decl.arity:
            self.diag(
                f"arity mismatch: {pname!r} declared with {decl.arity} arguments, found {len(terms)}",
                line,
                col,
            )
            return None
        args = []
        for i, rt in enumerate(terms):
            dom = kb.domain_of_position(pname, i)
            term = self.resolve_term(rt, dom, pname)
            if term is None:
                return None
            args.append(term)
        return Atom(pname, tuple(args))

    def resolve_term(self, rt: RawTerm, dom: AttributeDomain, pname: str):
        kind = rt[0]
        line, col = rt[-2], rt[-1]
        if dom.name == TIME_DOMAIN:
            if kind == "int":
                return Const(rt[1])
            if kind == "ident":
                return Var(rt[1])
            if kind == "offset":
                return TimeExpr(rt[1], rt[2]) if rt[2] else Var(rt[1])
        if kind == "offset":
            self.diag("time offset used outside a time position", line, col)
            return None
        if kind == "int":
            self.diag(f"integer constant in non-time position of {pname!r}", line, col)
            return None
        name = rt[1]
        if name[0].isupper():
            return Var(name)
        cname = name.lower()
        if cname not in dom:
            self.diag(
                f"constant {cname!r} not in domain {dom.name!r} of {pname!r}", line, col
            )
            return None
        return Const(cname)

    def resolve_literals(self, kb, raws, want_kind):
        out = []
        for positive, raw in raws:
            a = self.resolve_atom(kb, raw, want_kind=want_kind)
            if a is None:
                return None
            out.append((positive, a))
        return out

    def check_var_typing(self, kb, head, other_atoms, where, tok):
        seen = {}
        for atom in [head] + other_atoms:
            for i, term in enumerate(atom.args):
                names = []
                if isinstance(term, Var):
                    names = [term.name]
                elif isinstance(term, TimeExpr):
                    names = [term.var]
                dom = kb.domain_of_position(atom.pred, i).name
                for n in names:
                    if n in seen and seen[n] != dom:
                        self.diag(
                            f"variable {n} used with domains {seen[n]!r} and {dom!r} in {where}",
                            tok.line,
                            tok.col,
                        )
                    seen[n] = dom


def parse_kb(text: str, filename: str = "<input>") -> KnowledgeBase:
    """Parse and statically validate a knowledge base. Raises ParseError."""
    tokens = tokenize(text, filename)
    stmts = list(_Parser(tokens, filename).statements())
    return _Resolver(filename).run(stmts)


def load_kb(path) -> KnowledgeBase:
    with open(path, encoding="utf-8") as f:
        return parse_kb(f.read(), filename=str(path))


def parse_atom(kb: KnowledgeBase, text: str, filename: str = "<query>") -> Atom:
    """Parse a single atom (query syntax) against a knowledge base."""
    atoms = parse_atoms(kb, text, filename)
    if len(atoms) != 1:
        raise ParseError([Diagnostic("expected exactly one atom", filename, 1, 1)])
    return atoms[0]


def parse_atoms(kb: KnowledgeBase, text: str, filename: str = "<input>") -> list:
    """Parse a context/evidence/plan file: atoms separated by ``.`` or newlines."""
    tokens = tokenize(text, filename)
    p = _Parser(tokens, filename)
    res = _Resolver(filename)
    res.domains = dict(kb.domains)
    res.preds = dict(kb.preds)
    raw = []
    while p.peek().kind != "eof":
        raw.append(p.atom())
        if p.peek().kind == ".":
            p.next()
    atoms = [res.resolve_atom(kb, r) for r in raw]
    if res.diags:
        raise ParseError(res.diags)
    return atoms


def load_atoms(kb: KnowledgeBase, path) -> list:
    with open(path, encoding="utf-8") as f:
        return parse_atoms(kb, f.read(), filename=str(path))
