"""Checker diagnostics and their text/JSON renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from ..calculus.syntax import Span

# Rule names used in diagnostics. Figure-numbered names refer to the typing
# rule (or definition) whose premise failed.
RULES = {
    "Fig9.split": "a linear binding can be supplied to only one subexpression",
    "Fig9.unconsumed": "a linear binding was never consumed",
    "Fig9.body-context": "function body context side condition",
    "Fig9.nonspec-modes": "nonspec function mode side condition",
    "Fig9.lax": "lax typing of a dead-end function body",
    "Fig10.var": "variable use",
    "Fig10.add": "integer addition",
    "Fig10.crash_never": "crash_never",
    "Fig10.default": "default value",
    "Fig10.hdata": "hdata",
    "Fig10.hread": "hread",
    "Fig10.hwrite": "hwrite",
    "Fig10.permission": "permission literal",
    "Fig10.pdata": "pdata",
    "Fig10.pread": "pread",
    "Fig10.pwrite": "pwrite",
    "Fig10.drop": "drop",
    "Fig10.copy": "copy",
    "Fig10.seq": "sequencing",
    "Fig10.let": "let",
    "Fig10.option": "None/Some",
    "Fig10.iflet": "if-let-Some",
    "Fig11.struct": "datatype construction",
    "Fig11.letstruct": "datatype destructuring",
    "Fig11.lambda": "function literal",
    "Fig11.app": "application",
    "Fig11.config": "configuration",
    "Fig11.wf-type": "well-formed type",
    "Fig11.wf-decl": "well-formed datatype declarations",
    "expect": "expected result typing",
}


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    span: Optional[Span]
    message: str
    severity: str = "error"

    def to_text(self, path: str = "") -> str:
        where = f"{self.span.line}:{self.span.col}" if self.span else "0:0"
        prefix = f"{path}:" if path else ""
        return f"{prefix}{where}: {self.severity}: [{self.rule}] {self.message}"

    def to_json(self) -> dict:
        span = {"line": self.span.line, "col": self.span.col} if self.span else {"line": 0, "col": 0}
        return {"rule": self.rule, "span": span, "message": self.message, "severity": self.severity}


def diagnostics_to_json(diags) -> str:
    return json.dumps([d.to_json() for d in diags], indent=2, sort_keys=True)


class CheckFailure(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag
        super().__init__(diag.to_text())
