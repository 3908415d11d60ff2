"""Canonical pretty-printer for surface programs.

``parse_surface(render(p))`` reproduces ``p`` up to spans, and rendering is
deterministic, so printed programs double as the byte-stable output of
``erase_ghost``.
"""

from __future__ import annotations

from . import ast as A

INDENT = "    "

# binding strength; larger binds tighter
_PREC = {
    "==>": 1, "||": 2, "&&": 3,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_CAST_PREC = 7
_UNARY_PREC = 8
_ATOM_PREC = 9


def _prec(e) -> int:
    if isinstance(e, A.Binary):
        return _PREC[e.op]
    if isinstance(e, A.Cast):
        return _CAST_PREC
    if isinstance(e, A.Unary):
        return _UNARY_PREC
    if isinstance(e, A.IntLit) and e.value < 0:
        return _UNARY_PREC
    if isinstance(e, A.IfExpr):
        return 0
    return _ATOM_PREC


def _wrap(e, need: int) -> str:
    text = render_expr(e)
    return f"({text})" if _prec(e) < need else text


def render_expr(e) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Name):
        return ("*" if e.deref else "") + e.name
    if isinstance(e, A.Old):
        return ("*" if e.deref else "") + f"old({e.name})"
    if isinstance(e, A.TypeMax):
        return f"{e.ty}::MAX"
    if isinstance(e, A.Unary):
        return e.op + _wrap(e.arg, _UNARY_PREC)
    if isinstance(e, A.Cast):
        return f"{_wrap(e.arg, _CAST_PREC)} as {e.ty}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        if e.op == "==>":
            # right associative
            return f"{_wrap(e.left, p + 1)} ==> {_wrap(e.right, p)}"
        if p == 4:
            return f"{_wrap(e.left, p + 1)} {e.op} {_wrap(e.right, p + 1)}"
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    if isinstance(e, A.Call):
        return f"{e.fn}({', '.join(_render_arg(a) for a in e.args)})"
    if isinstance(e, A.IfExpr):
        orelse = render_expr(e.orelse) if isinstance(e.orelse, A.IfExpr) else f"{{ {render_expr(e.orelse)} }}"
        return f"if {render_expr(e.cond)} {{ {render_expr(e.then)} }} else {orelse}"
    raise TypeError(f"not a surface expression: {e!r}")


def _render_arg(a: A.Arg) -> str:
    marker = {"value": "", "ref": "&", "mut": "&mut "}[a.passing]
    return marker + render_expr(a.expr)


def _render_list(keyword: str, exprs: list, prefix: str = "") -> str:
    if len(exprs) == 1:
        return f"{keyword}({prefix}{render_expr(exprs[0])});"
    return f"{keyword}({prefix}[{', '.join(render_expr(e) for e in exprs)}]);"


def _block(stmts: list, depth: int) -> list:
    lines = []
    for s in stmts:
        lines.extend(_stmt(s, depth))
    return lines


def _stmt(s, depth: int) -> list:
    pad = INDENT * depth
    if isinstance(s, A.Let):
        marker = f"#[{s.ghost}] " if s.ghost else ""
        mut = "mut " if s.mutable else ""
        ty = f": {s.ty}" if s.ty else ""
        return [f"{pad}{marker}let {mut}{s.name}{ty} = {render_expr(s.init)};"]
    if isinstance(s, A.Assign):
        star = "*" if s.deref else ""
        return [f"{pad}{star}{s.name} = {render_expr(s.value)};"]
    if isinstance(s, A.Assert):
        return [f"{pad}assert({render_expr(s.cond)});"]
    if isinstance(s, A.Return):
        return [f"{pad}return;" if s.value is None else f"{pad}return {render_expr(s.value)};"]
    if isinstance(s, A.Reveal):
        return [f"{pad}reveal_with_fuel({s.fn}, {s.fuel});"]
    if isinstance(s, A.ExprStmt):
        return [f"{pad}{render_expr(s.expr)};"]
    if isinstance(s, A.Tail):
        return [f"{pad}{render_expr(s.expr)}"]
    if isinstance(s, A.While):
        lines = [f"{pad}while {render_expr(s.cond)} {{"]
        if s.invariants:
            lines.append(pad + INDENT + _render_list("invariant", s.invariants))
        lines.extend(_block(s.body, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(s, A.If):
        return _if(s, depth, pad)
    raise TypeError(f"not a surface statement: {s!r}")


def _if(s: A.If, depth: int, lead: str) -> list:
    pad = INDENT * depth
    lines = [f"{lead}if {render_expr(s.cond)} {{"]
    lines.extend(_block(s.then, depth + 1))
    if not s.orelse:
        lines.append(pad + "}")
    elif len(s.orelse) == 1 and isinstance(s.orelse[0], A.If):
        nested = _if(s.orelse[0], depth, "")
        lines.append(f"{pad}}} else {nested[0]}")
        lines.extend(nested[1:])
    else:
        lines.append(pad + "} else {")
        lines.extend(_block(s.orelse, depth + 1))
        lines.append(pad + "}")
    return lines


def render_function(f: A.Function) -> str:
    params = ", ".join(
        f"{p.name}: {({'value': '', 'ref': '&', 'mut': '&mut '})[p.passing]}{p.ty}" for p in f.params
    )
    ret = f" -> {f.ret}" if f.ret else ""
    lines = [f"#[{f.mode}] fn {f.name}({params}){ret} {{"]
    if f.requires:
        lines.append(INDENT + _render_list("requires", f.requires))
    if f.ensures:
        prefix = f"|{f.ret_name}: {f.ret}| " if f.ret_name else ""
        lines.append(INDENT + _render_list("ensures", f.ensures, prefix))
    if f.decreases is not None:
        lines.append(f"{INDENT}decreases({render_expr(f.decreases)});")
    lines.extend(_block(f.body, 1))
    lines.append("}")
    return "\n".join(lines)


def render(p: A.SurfaceProgram) -> str:
    return "\n\n".join(render_function(f) for f in p.functions) + ("\n" if p.functions else "")
