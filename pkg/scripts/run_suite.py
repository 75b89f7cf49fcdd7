"""Run the benchmark suite and write a CSV (and optionally the optimized programs)."""

import argparse
import sys

from fhevec.corpus import BenchSpec, default_suite
from fhevec.report import rows_to_csv, run_suite
from fhevec.search import SearchConfig


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--strategies", default="none,greedy,beam")
    ap.add_argument("--kernels", help="comma list such as dot-product:8,gx:3")
    ap.add_argument("--beam-width", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--programs-dir")
    ap.add_argument("-o", "--out", default="suite.csv")
    args = ap.parse_args()
    specs = ([BenchSpec.parse(k) for k in args.kernels.split(",")] if args.kernels
             else default_suite())
    cfg = SearchConfig(beam_width=args.beam_width, seed=args.seed)
    rows = run_suite(specs, args.strategies.split(","), cfg, out_dir=args.programs_dir)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
    for r in rows:
        flag = f"  ERROR {r.error}" if r.error else ""
        print(f"{r.kernel:24s} {r.strategy:7s} {r.cost_initial:9.0f} -> {r.cost_final:8.0f}"
              f"  mul={r.ct_ct_mul + r.ct_pt_mul} rot={r.rotations} add={r.vec_add}{flag}")
    print(f"wrote {args.out}")
    return 2 if any(r.error for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
