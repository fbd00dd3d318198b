"""Command-line surface: validate, query, project plans, export, oracle-diff.

Exit codes:
    0  success
    1  parse / input error
    2  dependency cycle
    3  allowedness failure
    4  quantification/consistency failure or impossible evidence
    5  enumeration guard exceeded
"""

from __future__ import annotations

import json
import sys

import click

from .bench import metrics_csv, paint_pair, compare_encodings
from .errors import (
    ConsistencyError,
    CtxkbError,
    CycleError,
    EnumerationGuardError,
    ImpossibleEvidenceError,
    NotAllowedError,
    OutOfBoundsSupportError,
    ParseError,
    QuantificationError,
    SessionError,
)
from .infer import answer_query
from .lang import SessionInput, atom_time, validate_session
from .logic import check_acyclic_cb, check_acyclic_pb, check_allowed
from .netbuild import build_net, export_dot, node_label
from .oracle import DEFAULT_GUARD, forward_sample, oracle_answer
from .parser import load_atoms, load_kb, parse_atom
from .relevance import build_combined_base, check_consistency


def _fail(code: int, *messages):
    for m in messages:
        click.echo(str(m), err=True)
    sys.exit(code)


def _load(kb_path):
    try:
        return load_kb(kb_path)
    except ParseError as e:
        _fail(1, *e.diagnostics)
    except OSError as e:
        _fail(1, e)


def _atoms(kb, path):
    if path is None:
        return []
    try:
        return load_atoms(kb, path)
    except ParseError as e:
        _fail(1, *e.diagnostics)
    except OSError as e:
        _fail(1, e)


def _query_atom(kb, text):
    if text is None:
        return None
    try:
        return parse_atom(kb, text)
    except ParseError as e:
        _fail(1, *e.diagnostics)


def _default_bounds(kb, frm, to, atoms):
    if to is None:
        times = [0]
        for a in atoms:
            if a is None:
                continue
            t = atom_time(kb, a)
            if t is not None:
                times.append(t)
        to = max(times)
    if frm is None:
        frm = 0
    return frm, to


def _session(kb, context_path, evidence_path, query_text, frm, to):
    ctx = _atoms(kb, context_path)
    ev = _atoms(kb, evidence_path)
    query = _query_atom(kb, query_text)
    frm, to = _default_bounds(kb, frm, to, ctx + ev + ([query] if query else []))
    s = SessionInput(context=tuple(ctx), evidence=tuple(ev), lo=frm, hi=to, query=query)
    try:
        return validate_session(kb, s)
    except SessionError as e:
        _fail(1, *e.diagnostics)


def _bindings_str(theta):
    return ", ".join(f"{k}={v}" for k, v in sorted(theta.items())) or "-"


def _emit_instances(kb, query, lo, hi, instances, fmt):
    if fmt == "json":
        payload = {
            "query": str(query),
            "bounds": [lo, hi],
            "instances": [
                {
                    "bindings": {k: v for k, v in sorted(theta.items())},
                    "values": list(kb.val(vec.query_object[0])),
                    "posterior": list(vec.probabilities),
                }
                for theta, vec in instances
            ],
        }
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        return
    if not instances:
        click.echo(f"no answerable instances of {query} in [{lo}, {hi}]")
        return
    values = kb.val(query.pred)
    header = ["bindings"] + list(values)
    rows = [
        [_bindings_str(theta)] + [f"{p:.9f}" for p in vec.probabilities]
        for theta, vec in instances
    ]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        click.echo("  ".join(c.ljust(w) for c, w in zip(r, widths)))


_common = [
    click.option("--context", "context_path", type=click.Path(), default=None,
                 help="File of ground context atoms."),
    click.option("--evidence", "evidence_path", type=click.Path(), default=None,
                 help="File of ground evidence atoms."),
    click.option("--query", "query_text", default=None, help="Query atom text."),
    click.option("--from", "frm", type=int, default=None, help="Lower time bound."),
    click.option("--to", "to", type=int, default=None, help="Upper time bound."),
    click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table"),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Context-sensitive temporal probabilistic knowledge bases."""


@main.command()
@click.argument("kb_path", type=click.Path())
@click.option("--from", "frm", type=int, default=0)
@click.option("--to", "to", type=int, default=0)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
def check(kb_path, frm, to, fmt):
    """Validate a knowledge base: parse, acyclicity, allowedness, consistency."""
    kb = _load(kb_path)
    findings = []
    try:
        check_acyclic_cb(kb, frm, to)
        check_acyclic_pb(kb, frm, to)
    except CycleError as e:
        _fail(2, e)
    try:
        check_allowed(kb)
    except NotAllowedError as e:
        _fail(3, *e.diagnostics)
    # combined-base consistency under the empty session (all contexts open)
    empty = validate_session(kb, SessionInput(lo=frm, hi=to))
    try:
        base, _, _ = build_combined_base(kb, empty)
        check_consistency(base)
    except ConsistencyError as e:
        _fail(4, *e.violations)
    except CtxkbError as e:
        _fail(4, e)
    if fmt == "json":
        click.echo(json.dumps({"ok": True, "file": str(kb_path), "bounds": [frm, to]}))
    else:
        click.echo(f"ok: {kb_path} ({len(kb.pb)} sentences, {len(kb.cb)} clauses)")


@main.command()
@click.argument("kb_path", type=click.Path())
@_with_common
def query(kb_path, context_path, evidence_path, query_text, frm, to, fmt):
    """Answer a complete query: one posterior row per ground instance."""
    kb = _load(kb_path)
    if query_text is None:
        _fail(1, "query: --query is required")
    session = _session(kb, context_path, evidence_path, query_text, frm, to)
    try:
        ans = answer_query(kb, session)
    except ImpossibleEvidenceError as e:
        _fail(4, e)
    except (QuantificationError, ConsistencyError) as e:
        _fail(4, e)
    except CycleError as e:
        _fail(2, e)
    except OutOfBoundsSupportError as e:
        _fail(1, e)
    _emit_instances(kb, session.query, session.lo, session.hi, ans.instances, fmt)


@main.command()
@click.argument("kb_path", type=click.Path())
@click.option("--plan", "plan_path", type=click.Path(), required=True,
              help="File of timed context atoms (the actions).")
@_with_common
def project(kb_path, context_path, evidence_path, query_text, frm, to, fmt, plan_path):
    """Project a plan: answer the query at every timestep in the bounds."""
    kb = _load(kb_path)
    if query_text is None:
        _fail(1, "project: --query is required")
    plan = _atoms(kb, plan_path)
    ctx = _atoms(kb, context_path) + plan
    ev = _atoms(kb, evidence_path)
    base_query = _query_atom(kb, query_text)
    frm, to = _default_bounds(kb, frm, to, ctx + ev + [base_query])

    tp = kb.decl(base_query.pred).time_position(kb)
    if tp is None:
        _fail(1, f"project: query predicate {base_query.pred!r} has no time attribute")

    from .lang import Atom, Const, Var

    rows = []
    for t in range(frm, to + 1):
        args = list(base_query.args)
        args[tp] = Const(t)
        q_t = Atom(base_query.pred, tuple(args))
        s = SessionInput(context=tuple(ctx), evidence=tuple(ev), lo=frm, hi=to, query=q_t)
        try:
            vs = validate_session(kb, s)
            ans = answer_query(kb, vs)
        except SessionError as e:
            _fail(1, *e.diagnostics)
        except ImpossibleEvidenceError as e:
            _fail(4, e)
        except (QuantificationError, ConsistencyError) as e:
            _fail(4, e)
        rows.append((t, ans.instances))

    if fmt == "json":
        payload = {
            "query": str(base_query),
            "bounds": [frm, to],
            "timesteps": [
                {
                    "t": t,
                    "instances": [
                        {
                            "bindings": {k: v for k, v in sorted(theta.items())},
                            "values": list(kb.val(vec.query_object[0])),
                            "posterior": list(vec.probabilities),
                        }
                        for theta, vec in instances
                    ],
                }
                for t, instances in rows
            ],
        }
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        return
    values = kb.val(base_query.pred)
    header = ["t", "bindings"] + list(values)
    flat = []
    for t, instances in rows:
        if not instances:
            flat.append([str(t), "-"] + ["-"] * len(values))
        for theta, vec in instances:
            flat.append([str(t), _bindings_str(theta)] + [f"{p:.9f}" for p in vec.probabilities])
    widths = [max(len(r[i]) for r in [header] + flat) for i in range(len(header))]
    for r in [header] + flat:
        click.echo("  ".join(c.ljust(w) for c, w in zip(r, widths)))


@main.command("export-dot")
@click.argument("kb_path", type=click.Path())
@click.option("--out", "out_path", type=click.Path(), default=None, help="Output file (default stdout).")
@_with_common
def export_dot_cmd(kb_path, context_path, evidence_path, query_text, frm, to, fmt, out_path):
    """Export the supporting network as a DOT graph."""
    kb = _load(kb_path)
    session = _session(kb, context_path, evidence_path, query_text, frm, to)
    try:
        net, _ = build_net(kb, session)
    except (QuantificationError, ConsistencyError) as e:
        _fail(4, e)
    except CycleError as e:
        _fail(2, e)
    except OutOfBoundsSupportError as e:
        _fail(1, e)
    text = export_dot(net, kb)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text)
        click.echo(f"wrote {out_path} ({len(net.nodes)} nodes)")
    else:
        click.echo(text, nl=False)


@main.command("oracle-diff")
@click.argument("kb_path", type=click.Path())
@click.option("--guard", type=int, default=DEFAULT_GUARD, help="Enumeration work bound.")
@click.option("--seed", type=int, default=None,
              help="Also cross-check with forward sampling at this seed.")
@_with_common
def oracle_diff(kb_path, context_path, evidence_path, query_text, frm, to, fmt, guard, seed):
    """Compare variable elimination against possible-model enumeration."""
    kb = _load(kb_path)
    if query_text is None:
        _fail(1, "oracle-diff: --query is required")
    session = _session(kb, context_path, evidence_path, query_text, frm, to)
    try:
        ans = answer_query(kb, session)
        ref = oracle_answer(kb, session, guard=guard)
    except EnumerationGuardError as e:
        _fail(5, e)
    except ImpossibleEvidenceError as e:
        _fail(4, e)
    except (QuantificationError, ConsistencyError) as e:
        _fail(4, e)
    worst = 0.0
    pairs = list(zip(ans.instances, ref))
    if len(ans.instances) != len(ref):
        _fail(4, "instance sets differ between the two answer paths")
    for (theta_a, vec_a), (theta_b, vec_b) in pairs:
        if theta_a != theta_b or vec_a.query_object != vec_b.query_object:
            _fail(4, "instance ordering differs between the two answer paths")
        worst = max(
            worst,
            max(abs(x - y) for x, y in zip(vec_a.probabilities, vec_b.probabilities)),
        )
    sample_note = None
    if seed is not None:
        net, subs = build_net(kb, session)
        targets = []
        from .netbuild import query_obj

        for theta in subs:
            targets.append(query_obj(kb, session.query, theta))
        vecs, accepted = forward_sample(kb, net, 20000, seed, targets, session.evidence)
        sample_note = f"sampling cross-check: {accepted} accepted samples at seed {seed}"
    if fmt == "json":
        click.echo(json.dumps({"max_abs_diff": worst, "instances": len(pairs)}))
    else:
        click.echo(f"max |delta| = {worst:.3e} over {len(pairs)} instance(s)")
        if sample_note:
            click.echo(sample_note)
    sys.exit(0 if worst <= 1e-9 else 4)


@main.command()
@click.option("--horizon", type=int, default=3, help="Projection horizon (timesteps).")
@click.option("--plan-times", "plan_times", default="0",
              help="Comma-separated action timesteps.")
def bench(horizon, plan_times):
    """Compare context-indexed actions against the action-as-node encoding (CSV)."""
    times = [int(t) for t in plan_times.split(",") if t.strip() != ""]
    bad = [t for t in times if not (0 <= t < horizon)]
    if bad:
        _fail(1, f"bench: plan times {bad} outside [0, {horizon - 1}]")
    pair = paint_pair(horizon, times)
    m_ctx, m_act = compare_encodings(pair, times)
    click.echo(metrics_csv([m_ctx, m_act]), nl=False)


if __name__ == "__main__":
    main()
