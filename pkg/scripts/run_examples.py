"""Run the example suite: kernel limit, closed form vs quadrature, Monte Carlo check."""

import argparse
import json

from cevm.cli import run_example
from cevm.registry import SUITE, example_registry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--filter", default="", help="substring of the example name")
    ap.add_argument("--json", help="write rows to this file")
    args = ap.parse_args()
    rows = []
    for name, params in SUITE:
        if args.filter not in name:
            continue
        ex = example_registry(name, **params)
        row = run_example(ex, args.n, args.seed)
        rows.append(row)
        extra = (f"verdict={row['verdict']} |z|<3: {row['frac_within']:.3f} "
                 f"med|z|={row['median_abs_z']:.2f}" if "verdict" in row else "")
        print(f"{'ok  ' if row['ok'] else 'FAIL'} {ex.name:18s} {json.dumps(ex.params)[:60]:60s} "
              f"status={row['status']:13s} {extra} ({row['seconds']:.1f}s)")
    print(f"{sum(r['ok'] for r in rows)}/{len(rows)} examples ok")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, default=float)


if __name__ == "__main__":
    main()
