"""Verify every program under programs/surface and print a per-obligation table."""

import argparse
from pathlib import Path

from mvr.surface.check import check_surface
from mvr.surface.parser import parse_surface
from mvr.surface.smt import configured_solver
from mvr.surface.verify import VerifyConfig, summary_line, verify_program

ROOT = Path(__file__).resolve().parent.parent
WIDTHS = {"fig1_fibo.mvr": 16}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--width", type=int, help="oracle width for every program (default: 6, 16 for the fibo program)")
    ap.add_argument("--no-solver", action="store_true")
    args = ap.parse_args()

    solver = [] if args.no_solver else (configured_solver() or [])
    for path in sorted((ROOT / "programs" / "surface").glob("*.mvr")):
        prog = parse_surface(path.read_text())
        diags = check_surface(prog)
        if diags:
            print(f"{path.name}: rejected")
            for d in diags:
                print("  " + d.to_text(path.name))
            continue
        width = args.width or WIDTHS.get(path.name, 6)
        obs = verify_program(prog, VerifyConfig(width=width), solver=solver)
        valid = sum(ob.status == "valid" for ob in obs)
        print(f"{path.name}: {valid}/{len(obs)} valid at width {width}")
        for ob in obs:
            if ob.status != "valid":
                print("  " + summary_line(ob))


if __name__ == "__main__":
    main()
