"""Grammar, static validation, and session validation."""

import pytest

from ctxkb import (
    Atom,
    Const,
    ParseError,
    SessionError,
    SessionInput,
    TimeExpr,
    Var,
    parse_atom,
    parse_kb,
    validate_session,
)
from ctxkb.lang import atom_of, ext, ground_instances, obj_of, val_of

BASIC = """
domain person = { john, mary }.
value rhythm = { nsr, vf }.
pred rhythm(person, time).
cpred epi(person, time).
prob rhythm(X, 0, nsr) = 0.3.
prob rhythm(X, 0, vf) = 0.7.
prob rhythm(X, t, nsr) | rhythm(X, t-1, nsr) = 0.9 <- not epi(X, t-1).
prob rhythm(X, t, vf) | rhythm(X, t-1, nsr) = 0.1 <- not epi(X, t-1).
prob rhythm(X, t, nsr) | rhythm(X, t-1, vf) = 0.2 <- not epi(X, t-1).
prob rhythm(X, t, vf) | rhythm(X, t-1, vf) = 0.8 <- not epi(X, t-1).
prob rhythm(X, t, nsr) | rhythm(X, t-1, nsr) = 0.95 <- epi(X, t-1).
prob rhythm(X, t, vf) | rhythm(X, t-1, nsr) = 0.05 <- epi(X, t-1).
prob rhythm(X, t, nsr) | rhythm(X, t-1, vf) = 0.5 <- epi(X, t-1).
prob rhythm(X, t, vf) | rhythm(X, t-1, vf) = 0.5 <- epi(X, t-1).
combine rhythm with noisy_max.
"""


@pytest.fixture(scope="module")
def kb():
    return parse_kb(BASIC)


def test_declarations(kb):
    assert kb.val("rhythm") == ("nsr", "vf")
    assert kb.decl("rhythm").kind == "p"
    assert kb.decl("rhythm").arity == 3
    assert kb.decl("epi").kind == "c"
    assert kb.decl("epi").arity == 2
    assert len(kb.pb) == 10
    assert kb.combining_rule_for("rhythm") == ("noisy_max", {})


def test_value_order_is_declaration_order():
    kb2 = parse_kb(BASIC.replace("{ nsr, vf }", "{ vf, nsr }"))
    assert kb2.val("rhythm") == ("vf", "nsr")


def test_term_shapes(kb):
    a = parse_atom(kb, "rhythm(john, t-1, V)")
    assert a.args == (Const("john"), TimeExpr("t", -1), Var("V"))
    assert parse_atom(kb, "rhythm(X, 2, nsr)").args == (
        Var("X"),
        Const(2),
        Const("nsr"),
    )


def test_time_identifier_is_always_a_variable(kb):
    a = parse_atom(kb, "rhythm(john, t, nsr)")
    assert a.args[1] == Var("t")


def test_obj_and_value_helpers(kb):
    a = parse_atom(kb, "rhythm(john, 2, nsr)")
    assert obj_of(a) == ("rhythm", "john", 2)
    assert val_of(a) == "nsr"
    assert atom_of(("rhythm", "john", 2), "vf") == parse_atom(kb, "rhythm(john, 2, vf)")
    assert ext(kb, a) == (
        parse_atom(kb, "rhythm(john, 2, nsr)"),
        parse_atom(kb, "rhythm(john, 2, vf)"),
    )


def test_ground_instances_enumerates_domain_and_window(kb):
    got = set(map(str, ground_instances(kb, parse_atom(kb, "rhythm(X, T, nsr)"), 0, 1)))
    assert got == {
        "rhythm(john, 0, nsr)",
        "rhythm(john, 1, nsr)",
        "rhythm(mary, 0, nsr)",
        "rhythm(mary, 1, nsr)",
    }


@pytest.mark.parametrize(
    "bad, fragment",
    [
        ("domain person = { a, a }.", "duplicate member"),
        ("domain time = { a }.", "reserved"),
        ("value v = { a }. pred p(time). ", "no value declaration"),
        ("value p = { }. pred p(time).", "empty"),
        ("value p = { a }. pred p(time). prob p(0, b) = 0.5.", "not in domain"),
        ("value p = { a }. pred p(time). prob p(0, a) = 1.5.", "outside [0, 1]"),
        ("value p = { a }. pred p(time). prob p(0, 1, a) = 0.5.", "arity"),
        ("value p = { a }. pred p(time). prob q(0, a) = 0.5.", "undeclared predicate"),
        ("value p = { a }. pred p(time, time).", "more than one time"),
        ("value p = { a }. pred p(nosuch).", "undeclared domain"),
    ],
)
def test_static_errors(bad, fragment):
    with pytest.raises(ParseError) as e:
        parse_kb(bad)
    assert fragment in str(e.value)


def test_parse_error_carries_location():
    with pytest.raises(ParseError) as e:
        parse_kb("value p = { a }.\npred p(time).\nprob p(0 a) = 0.5.\n", "f.ckb")
    d = e.value.diagnostics[0]
    assert d.file == "f.ckb" and d.line == 3 and d.col > 0


def test_variable_domain_consistency_rejected():
    text = """
    domain d1 = { a }.
    domain d2 = { b }.
    value p = { x }.
    value q = { x }.
    pred p(d1).
    pred q(d2).
    prob p(X, x) | q(X, x) = 1.0.
    """
    with pytest.raises(ParseError) as e:
        parse_kb(text)
    assert "domains" in str(e.value)


def test_combine_distinguished_must_be_declared_value():
    with pytest.raises(ParseError) as e:
        parse_kb("value p = { a, b }. pred p(time). combine p with noisy_max(distinguished=c).")
    assert "distinguished" in str(e.value)


def test_case_insensitive_constants_and_predicates(kb):
    assert parse_atom(kb, "RHYTHM(JOHN, 0, NSR)") == Atom(
        "rhythm", (Var("JOHN"), Const(0), Var("NSR"))
    )
    # uppercase-initial tokens are variables; lowercase are constants
    assert parse_atom(kb, "rhythm(john, 0, nsr)").is_ground()


# ---------------------------------------------------------------------------
# Session validation


def test_validate_session_normalizes(kb):
    q = parse_atom(kb, "rhythm(john, 2, V)")
    ev = parse_atom(kb, "rhythm(john, 0, vf)")
    ctx = parse_atom(kb, "epi(john, 1)")
    vs = validate_session(
        kb, SessionInput(context=(ctx,), evidence=(ev,), lo=0, hi=2, query=q)
    )
    assert vs.evidence == {("rhythm", "john", 0): "vf"}
    assert ("epi", "john", 1) in vs.context


def test_session_incoherent_evidence(kb):
    ev = (parse_atom(kb, "rhythm(john, 0, vf)"), parse_atom(kb, "rhythm(john, 0, nsr)"))
    with pytest.raises(SessionError) as e:
        validate_session(kb, SessionInput(evidence=ev, lo=0, hi=1))
    assert "incoherent" in str(e.value)


def test_session_bad_bounds(kb):
    with pytest.raises(SessionError):
        validate_session(kb, SessionInput(lo=3, hi=1))


def test_session_query_value_slot_must_be_variable(kb):
    q = parse_atom(kb, "rhythm(john, 1, nsr)")
    with pytest.raises(SessionError) as e:
        validate_session(kb, SessionInput(lo=0, hi=1, query=q))
    assert "last argument" in str(e.value)


@pytest.mark.parametrize(
    "field, atom_text",
    [
        ("evidence", "rhythm(john, 5, vf)"),
        ("context", "epi(john, 5)"),
    ],
)
def test_session_out_of_window_atoms_rejected(kb, field, atom_text):
    a = parse_atom(kb, atom_text)
    kwargs = {field: (a,), "lo": 0, "hi": 2}
    with pytest.raises(SessionError) as e:
        validate_session(kb, SessionInput(**kwargs))
    assert "outside" in str(e.value)


def test_session_query_out_of_window(kb):
    q = parse_atom(kb, "rhythm(john, 9, V)")
    with pytest.raises(SessionError):
        validate_session(kb, SessionInput(lo=0, hi=2, query=q))


def test_session_context_must_be_ground_c_atom(kb):
    with pytest.raises(SessionError):
        validate_session(
            kb, SessionInput(context=(parse_atom(kb, "epi(X, 1)"),), lo=0, hi=1)
        )
    with pytest.raises(SessionError):
        validate_session(
            kb,
            SessionInput(context=(parse_atom(kb, "rhythm(john, 1, vf)"),), lo=0, hi=1),
        )


def test_pretty_round_trips(cardiac_kb, paint_kb):
    for kb in (cardiac_kb, paint_kb):
        assert parse_kb(kb.pretty()) == kb
