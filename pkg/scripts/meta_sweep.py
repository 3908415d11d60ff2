"""Exhaustive metatheory sweep, with preservation counterexamples grouped by redex."""

import argparse
import collections
import json

from mvr.calculus.ops import is_value
from mvr.calculus.sexpr import print_expr
from mvr.eval import DEFAULT_BUDGET, Configuration, step
from mvr.metatheory.enumerate import EnumerationSpec
from mvr.metatheory.properties import sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=6)
    ap.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args()

    spec = EnumerationSpec(max_size=args.size)
    groups = collections.Counter()
    examples = {}

    rep = sweep(spec, args.budget)
    for line in rep.summary_lines():
        print(line)
    if rep.preservation.failures:
        # second pass only over the failing cases, to group them
        from mvr.metatheory.enumerate import Enumerator
        from mvr.metatheory.properties import Properties

        en = Enumerator(spec)
        props = Properties(spec.decls, spec.heap_type, en.checker)
        for case in en.cases():
            if not is_value(case.expr) and props.preservation(case) is not None:
                r = step(Configuration(case.heap, case.expr, spec.decls))
                key = (r.rule, type(r.redex).__name__)
                groups[key] += 1
                examples.setdefault(key, print_expr(case.expr))
        print("preservation counterexamples by (rule, redex):")
        for key, count in groups.most_common():
            print(f"  {key[0]:<10} {key[1]:<10} {count:>8}  e.g. {examples[key]}")
    if args.json:
        out = rep.to_json()
        out["preservation_groups"] = [{"rule": k[0], "redex": k[1], "count": c} for k, c in groups.most_common()]
        with open(args.json, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
