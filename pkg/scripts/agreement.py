"""Cross-check the declarative and algorithmic checkers over an enumerated corpus."""

import argparse
import json

from mvr.metatheory.enumerate import EnumerationSpec
from mvr.metatheory.properties import agreement_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=6)
    ap.add_argument("--with-permissions", action="store_true",
                    help="also enumerate permission literals and permission environments")
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args()

    rep = agreement_sweep(EnumerationSpec(max_size=args.size, permission_free=not args.with_permissions))
    print(f"{rep.examined} examined, {rep.agreed} agree, {len(rep.known_incompleteness)} known incompleteness "
          f"({rep.incompleteness_rate():.4%}), {len(rep.violations)} violations")
    for entry in rep.violations[:20]:
        print(f"  {entry.kind}: {entry.expr} at {entry.access}: {entry.detail}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rep.to_json(), fh, indent=2)
    raise SystemExit(0 if rep.ok() else 1)


if __name__ == "__main__":
    main()
