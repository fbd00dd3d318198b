"""Diagnostics and error types shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    """One problem found in an input file or knowledge base."""

    message: str
    file: str = "<input>"
    line: int = 0
    col: int = 0
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"


class CtxkbError(Exception):
    """Base class for all engine errors."""


class ParseError(CtxkbError):
    """Syntax or static-validation failure; carries one or more diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class SessionError(CtxkbError):
    """Invalid context/evidence/query/bounds combination."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class DepthBoundError(CtxkbError):
    """Goal evaluation exceeded the depth bound (suspected non-termination)."""


class CycleError(CtxkbError):
    """A dependency cycle was found; ``witness`` lists the atoms/objects on it."""

    def __init__(self, witness, where=""):
        self.witness = list(witness)
        msg = "cycle: " + " -> ".join(str(w) for w in self.witness)
        if where:
            msg = f"{where}: {msg}"
        super().__init__(msg)


class NotAllowedError(CtxkbError):
    """A variable cannot be finitely grounded."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class ConflictingSentencesError(CtxkbError):
    """Two ground sentences share consequent and antecedents but differ in alpha."""


class CombiningRuleError(CtxkbError):
    """A combining rule rejected its input."""


class QuantificationError(CtxkbError):
    """The combined relevant base is not completely quantified."""

    def __init__(self, missing):
        # missing: list of (obj, detail-string)
        self.missing = list(missing)
        super().__init__(
            "incompletely quantified: "
            + "; ".join(f"{o}: {d}" for o, d in self.missing[:5])
        )


class ConsistencyError(CtxkbError):
    """Row-sum or self-influence violation in the combined relevant base."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class OutOfBoundsSupportError(CtxkbError):
    """A node's support would require a time point outside the session bounds."""

    def __init__(self, obj):
        self.obj = obj
        super().__init__(f"support for {obj} requires a time outside the session bounds")


class ImpossibleEvidenceError(CtxkbError):
    """The evidence set has zero probability under the constructed network."""


class EnumerationGuardError(CtxkbError):
    """Possible-model enumeration exceeded the work guard."""
