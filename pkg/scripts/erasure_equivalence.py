"""Run every erasure-corpus entry before and after ghost erasure on all 8-bit inputs."""

import itertools
from pathlib import Path

from mvr.surface.ast import type_range
from mvr.surface.erase import erase_ghost
from mvr.surface.interp import interpret
from mvr.surface.parser import parse_surface

ROOT = Path(__file__).resolve().parent.parent


def grid(fn):
    axes = []
    for p in fn.params:
        if p.ty == "bool":
            axes.append([False, True])
        else:
            lo, hi = type_range(p.ty)
            axes.append(range(lo, min(hi, 255) + 1))
    return itertools.product(*axes)


def main():
    differing = 0
    for path in sorted((ROOT / "programs" / "erasure").glob("*.mvr")):
        text = path.read_text()
        entry = text.splitlines()[0].split("entry:")[1].strip()
        prog = parse_surface(text)
        erased = erase_ghost(prog)
        runs = diffs = 0
        kinds = set()
        for inputs in grid(prog.lookup(entry)):
            a = interpret(prog, entry, list(inputs))
            b = interpret(erased, entry, list(inputs))
            runs += 1
            kinds.add(a.kind)
            diffs += a.observable() != b.observable()
        differing += diffs
        print(f"{path.name:<28} {entry:<20} {runs:>4} inputs  {diffs} differ  outcomes {sorted(kinds)}")
    raise SystemExit(1 if differing else 0)


if __name__ == "__main__":
    main()
