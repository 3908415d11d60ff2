"""Ghost erasure: strip everything that exists only for verification."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from . import ast as A
from .check import ProgramInfo, analyze


def _erase_block(stmts: list, prog: A.SurfaceProgram, ghost_vars: set) -> list:
    out = []
    for s in stmts:
        if isinstance(s, (A.Assert, A.Reveal)):
            continue
        if isinstance(s, A.Let) and s.ghost is not None:
            continue
        if isinstance(s, A.Assign) and s.name in ghost_vars:
            continue
        if isinstance(s, A.ExprStmt) and isinstance(s.expr, A.Call):
            callee = prog.lookup(s.expr.fn)
            if callee is not None and callee.mode != "exec":
                continue
        if isinstance(s, A.While):
            s = replace(s, invariants=[], body=_erase_block(s.body, prog, ghost_vars))
        elif isinstance(s, A.If):
            s = replace(s, then=_erase_block(s.then, prog, ghost_vars),
                        orelse=_erase_block(s.orelse, prog, ghost_vars))
        out.append(s)
    return out


def erase_ghost(prog: A.SurfaceProgram, info: Optional[ProgramInfo] = None) -> A.SurfaceProgram:
    """Drop spec/proof functions, contracts, ghost statements and loop invariants.

    Exec code never reads ghost bindings (the mode check guarantees it), so the
    result runs exactly like the original.
    """
    if info is None:
        info = analyze(prog)[1]
    functions = []
    for fn in prog.functions:
        if fn.mode != "exec":
            continue
        ghost_vars = info.functions[fn.name].ghost if fn.name in info.functions else set()
        functions.append(replace(fn, requires=[], ensures=[], ret_name=None, decreases=None,
                                 body=_erase_block(fn.body, prog, ghost_vars)))
    return A.SurfaceProgram(functions)
