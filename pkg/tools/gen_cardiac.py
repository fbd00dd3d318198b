#!/usr/bin/env python3
"""Generate the shipped cardiac-arrest knowledge base (data/cardiac.ckb).

The KB models rhythm evolution under interventions (defibrillation, CPR) and
medications (epinephrine, lidocaine, atropine), cerebral blood flow as a
deterministic function of rhythm, anoxia accumulation, and cerebral damage
progression.  A handful of cells are fixed domain reference points; the rest
of each row is filled from qualitative tendencies and normalized.
"""

import os

RHYTHMS = ["nsr", "vf", "vt", "af", "svt", "b", "a"]
POA = ["none", "min1", "min2", "min3", "min4", "min5", "sustained"]
CD = ["none", "mild", "moderate", "severe"]
INTERVENTIONS = ["no_inter", "dfib", "cpr"]
MEDS = ["no_med", "epi", "lido", "atro"]

PERFUSING = {"nsr": True, "vf": False, "vt": False, "af": True, "svt": True, "b": True, "a": False}

# Reference cells that must appear verbatim: (inter, med, from, to) -> alpha
PINNED = {
    ("no_inter", "epi", "nsr", "nsr"): 0.05,
    ("no_inter", "epi", "vf", "nsr"): 0.01,
    ("no_inter", "epi", "vt", "nsr"): 0.01,
    ("no_inter", "no_med", "vf", "a"): 0.15,
    ("no_inter", "atro", "af", "vf"): 0.20,
    ("dfib", "atro", "af", "vf"): 0.35,
}

# Qualitative weight bumps: how strongly each context pushes toward a rhythm.
# Baseline is persistence plus slow decay toward asystole.


def rhythm_row(inter, med, frm):
    w = {r: 0.02 for r in RHYTHMS}
    w[frm] += 3.0  # persistence
    # untreated dysrhythmias decay toward asystole
    if inter == "no_inter" and med == "no_med":
        if frm in ("vf", "vt"):
            w["a"] += 0.8
            w["vf"] += 0.4
        if frm in ("b", "af", "svt"):
            w["a"] += 0.3
    if inter == "dfib":
        # defibrillation can reset fibrillation/tachycardia toward nsr
        if frm in ("vf", "vt", "af", "svt"):
            w["nsr"] += 2.0
            w["b"] += 0.3
        if frm == "nsr":
            w["vf"] += 0.4  # shocking a working heart is risky
        if frm == "a":
            w["a"] += 1.0
    if inter == "cpr":
        # compressions hold the line rather than convert
        w[frm] += 1.0
        if frm == "a":
            w["b"] += 0.4
    if med == "epi":
        if frm in ("a", "b"):
            w["nsr"] += 0.8
            w["b"] += 0.5
        if frm in ("vf", "vt"):
            w["vf"] += 0.5  # epinephrine can sustain fibrillation
    if med == "lido":
        if frm in ("vf", "vt"):
            w["nsr"] += 0.8
            w[frm] -= 1.0
    if med == "atro":
        if frm in ("b", "a"):
            w["nsr"] += 0.6
            w["svt"] += 0.3
        if frm == "af":
            w["vf"] += 0.3
    total = sum(max(v, 0.01) for v in w.values())
    row = {r: max(w[r], 0.01) / total for r in RHYTHMS}
    # apply pins, renormalizing the unpinned remainder
    pins = {to: a for (i, m, f, to), a in PINNED.items() if (i, m, f) == (inter, med, frm)}
    if pins:
        rest = 1.0 - sum(pins.values())
        free = [r for r in RHYTHMS if r not in pins]
        free_total = sum(row[r] for r in free)
        for r in free:
            row[r] = row[r] * rest / free_total
        row.update(pins)
    return row


def poa_row(cbf, frm):
    nxt = POA[min(POA.index(frm) + 1, len(POA) - 1)]
    target = frm if cbf == "present" else nxt
    return {q: (1.0 if q == target else 0.0) for q in POA}


CD_ROWS = {
    # poa -> {cd_prev -> row over CD}; severe always absorbs
    "none": {"none": (1, 0, 0, 0), "mild": (0, 1, 0, 0), "moderate": (0, 0, 1, 0)},
    "min1": {"none": (0.95, 0.05, 0, 0), "mild": (0, 0.95, 0.05, 0), "moderate": (0, 0, 0.97, 0.03)},
    "min2": {"none": (0.9, 0.09, 0.01, 0), "mild": (0, 0.9, 0.09, 0.01), "moderate": (0, 0, 0.95, 0.05)},
    "min3": {"none": (0.7, 0.25, 0.04, 0.01), "mild": (0, 0, 0.9, 0.1), "moderate": (0, 0, 0.9, 0.1)},
    "min4": {"none": (0.5, 0.4, 0.08, 0.02), "mild": (0, 0.3, 0.6, 0.1), "moderate": (0, 0, 0.8, 0.2)},
    "min5": {"none": (0.3, 0.5, 0.15, 0.05), "mild": (0, 0.2, 0.65, 0.15), "moderate": (0, 0, 0.7, 0.3)},
    "sustained": {"none": (0.1, 0.6, 0.25, 0.05), "mild": (0, 0.98, 0.02, 0), "moderate": (0, 0, 0.6, 0.4)},
}

MARGINALS = {
    "rhythm": {"nsr": 0.001, "vf": 0.74, "vt": 0.1, "af": 0.05, "svt": 0.02, "b": 0.02, "a": 0.069},
    "poa": {"none": 0.99, "min1": 0.005, "min2": 0.001, "min3": 0.001, "min4": 0.001, "min5": 0.001, "sustained": 0.001},
    "cd": {"none": 0.99, "mild": 0.005, "moderate": 0.003, "severe": 0.002},
}


def fmt(x):
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def main():
    out = []
    w = out.append
    w("# Cardiac arrest knowledge base: rhythm evolution under interventions,")
    w("# cerebral blood flow, period of anoxia, and cerebral damage.")
    w("")
    w("domain person = { john, mary }.")
    w(f"value rhythm = {{ {', '.join(RHYTHMS)} }}.")
    w("value cbf = { present, absent }.")
    w(f"value poa = {{ {', '.join(POA)} }}.")
    w(f"value cd = {{ {', '.join(CD)} }}.")
    w("")
    for p in ("rhythm", "cbf", "poa", "cd"):
        w(f"pred {p}(person, time).")
    for c in ("dfib", "cpr", "lido", "atro", "epi", "no_inter", "no_med"):
        w(f"cpred {c}(person, time).")
    w("")
    w("ctx no_inter(X, t) <- not dfib(X, t), not cpr(X, t).")
    w("ctx no_med(X, t) <- not lido(X, t), not atro(X, t), not epi(X, t).")
    w("")
    for p in ("rhythm", "cbf", "poa", "cd"):
        w(f"combine {p} with noisy_max.")
    w("")
    w("# Initial state (time 0).")
    for pred, row in MARGINALS.items():
        for v, a in row.items():
            w(f"prob {pred}(X, 0, {v}) = {fmt(a)}.")
    w("")
    w("# Cerebral blood flow follows the current rhythm.")
    for r in RHYTHMS:
        p = 1.0 if PERFUSING[r] else 0.0
        w(f"prob cbf(X, t, present) | rhythm(X, t, {r}) = {fmt(p)}.")
        w(f"prob cbf(X, t, absent) | rhythm(X, t, {r}) = {fmt(1.0 - p)}.")
    w("")
    w("# Anoxia accumulates while blood flow is absent.")
    for cbf in ("present", "absent"):
        for frm in POA:
            row = poa_row(cbf, frm)
            for to in POA:
                w(
                    f"prob poa(X, t, {to}) | cbf(X, t-1, {cbf}), poa(X, t-1, {frm}) = {fmt(row[to])}."
                )
    w("")
    w("# Cerebral damage progresses with the current period of anoxia.")
    for q in POA:
        for frm in CD:
            row = (0, 0, 0, 1) if frm == "severe" else CD_ROWS[q][frm]
            for to, a in zip(CD, row):
                w(f"prob cd(X, t, {to}) | poa(X, t, {q}), cd(X, t-1, {frm}) = {fmt(a)}.")
    w("")
    w("# Rhythm transitions, one matrix per intervention/medication context.")
    for inter in INTERVENTIONS:
        for med in MEDS:
            w(f"# context: {inter}, {med}")
            for frm in RHYTHMS:
                row = rhythm_row(inter, med, frm)
                for to in RHYTHMS:
                    w(
                        f"prob rhythm(X, t, {to}) | rhythm(X, t-1, {frm}) = {fmt(row[to])}"
                        f" <- {inter}(X, t-1), {med}(X, t-1)."
                    )
    text = "\n".join(out) + "\n"
    dest = os.path.join(os.path.dirname(__file__), "..", "src", "ctxkb", "data", "cardiac.ckb")
    with open(os.path.normpath(dest), "w", encoding="utf-8") as f:
        f.write(text)
    print(f"wrote {os.path.normpath(dest)} ({len(out)} lines)")


if __name__ == "__main__":
    main()
