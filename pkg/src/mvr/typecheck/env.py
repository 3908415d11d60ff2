"""Variable and permission environments with the splitting algebra.

Environments are plain dicts: ``VarEnv`` maps a name to ``(ModeUsage, Type)``
and ``PermEnv`` maps a location index to a ``Usage``. Every operation returns
a fresh dict.
"""

from __future__ import annotations

from itertools import product
from typing import Dict, Tuple

from ..calculus.syntax import ModeUsage, Type, Usage

VarEnv = Dict[str, Tuple[ModeUsage, Type]]
PermEnv = Dict[int, Usage]

SELECTORS = ("linear", "nonlinear", "as_shared", "as_linear", "as_spec")


def _is_linear_entry(entry) -> bool:
    if isinstance(entry, Usage):
        return entry is Usage.LINEAR
    return entry[0].is_linear


def env_project(env: dict, selector: str) -> dict:
    """The five projections: linear-only, nonlinear-only, retarget to shared,
    retarget to linear, and retype at spec (variable environments only)."""
    if selector == "linear":
        return {k: v for k, v in env.items() if _is_linear_entry(v)}
    if selector == "nonlinear":
        return {k: v for k, v in env.items() if not _is_linear_entry(v)}
    is_perm = any(isinstance(v, Usage) for v in env.values())
    if selector in ("as_shared", "as_linear"):
        u = Usage.SHARED if selector == "as_shared" else Usage.LINEAR
        if is_perm:
            return {k: u for k in env}
        # spec bindings carry no usage and are dropped by the retargeting
        return {k: (mu.with_usage(u), t) for k, (mu, t) in env.items() if mu is not ModeUsage.SPEC}
    if selector == "as_spec":
        if is_perm:
            raise ValueError("as_spec applies only to variable environments")
        return {k: (ModeUsage.SPEC, t) for k, (_, t) in env.items()}
    raise ValueError(f"unknown selector {selector!r}")


def linear_part(env: dict) -> dict:
    return env_project(env, "linear")


def nonlinear_part(env: dict) -> dict:
    return env_project(env, "nonlinear")


def spec_env(env: VarEnv) -> VarEnv:
    return env_project(env, "as_spec")


def is_all_nonlinear(env: dict) -> bool:
    return not any(_is_linear_entry(v) for v in env.values())


def env_split_enumerate(g: VarEnv) -> list:
    """Every (g1, g2) with g = g1 # g2."""
    lin = sorted(k for k, v in g.items() if v[0].is_linear)
    out = []
    for sides in product((0, 1), repeat=len(lin)):
        g1, g2 = dict(g), dict(g)
        for x, side in zip(lin, sides):
            spec_copy = (ModeUsage.SPEC, g[x][1])
            (g2 if side == 0 else g1)[x] = spec_copy
        out.append((g1, g2))
    return out


def perm_split_enumerate(p: PermEnv) -> list:
    lin = sorted(i for i, u in p.items() if u is Usage.LINEAR)
    out = []
    for sides in product((0, 1), repeat=len(lin)):
        p1, p2 = dict(p), dict(p)
        for i, side in zip(lin, sides):
            del (p2 if side == 0 else p1)[i]
        out.append((p1, p2))
    return out


def env_merge(g1: VarEnv, g2: VarEnv):
    """Inverse of splitting: the ``g`` with ``g = g1 # g2``, or None."""
    lin1, lin2 = linear_part(g1), linear_part(g2)
    if set(lin1) & set(lin2):
        return None
    view1 = {**nonlinear_part(g1), **spec_env(lin1)}
    view2 = {**nonlinear_part(g2), **spec_env(lin2)}
    if view1 != view2:
        return None
    merged = {k: v for k, v in view1.items() if k not in lin1 and k not in lin2}
    merged.update(lin1)
    merged.update(lin2)
    return merged


def perm_merge(p1: PermEnv, p2: PermEnv):
    lin1, lin2 = linear_part(p1), linear_part(p2)
    if set(lin1) & set(lin2) or nonlinear_part(p1) != nonlinear_part(p2):
        return None
    return {**nonlinear_part(p1), **lin1, **lin2}


def env_key(env: dict) -> tuple:
    return tuple(sorted(env.items(), key=lambda kv: kv[0]))
