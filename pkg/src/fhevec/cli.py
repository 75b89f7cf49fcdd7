"""Command-line front end: ``fhevec <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .canonical import canon_key
from .cost import CostReport, CostTable, Weights, metrics
from .env import MAX_STEPS
from .ir import ParseError, IRTypeError, Program, parse, to_text
from .search import STRATEGIES, SearchConfig

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2

log = logging.getLogger("fhevec")


class CliError(Exception):
    pass


def read_programs(path: str) -> list[Program]:
    """A file holds either one (possibly multi-line) program or one program per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    try:
        return [parse(text)]
    except (ParseError, IRTypeError):
        pass
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith(";")]
    return [parse(ln) for ln in lines]


def _cfg(args) -> SearchConfig:
    return SearchConfig(table=CostTable.parse(args.table), weights=Weights.parse(args.weights),
                        max_steps=args.max_steps, beam_width=args.beam_width,
                        samples=args.samples, seed=args.seed)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_optimize(args) -> int:
    from .report import optimize
    from .semantics import equiv_prefix
    cfg = _cfg(args)
    progs = read_programs(args.file)
    out, failed = [], 0
    for i, p in enumerate(progs):
        try:
            res = optimize(p, args.strategy, cfg, args.policy, args.beam_width)
            if not equiv_prefix(p, res.program, trials=20, seed=args.seed):
                raise RuntimeError("optimized program is not equivalent")
        except (ValueError, RuntimeError) as exc:
            log.error("program %d: %s", i + 1, exc)
            failed += 1
            continue
        out.append(to_text(res.program))
        if args.trace:
            for t in res.trace:
                sys.stderr.write(t.line() + "\n")
        log.info("program %d: cost %s -> %s in %d step(s)", i + 1, res.initial_cost,
                 res.final_cost, res.steps)
    _emit("".join(s + "\n" for s in out), args.out)
    if failed == len(progs):
        return EXIT_FATAL
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_cost(args) -> int:
    table, weights = CostTable.parse(args.table), Weights.parse(args.weights)
    if args.header:
        print(",".join(CostReport.CSV_FIELDS))
    for p in read_programs(args.file):
        print(metrics(p, table, weights).csv_row())
    return EXIT_OK


def cmd_canon(args) -> int:
    for p in read_programs(args.file):
        print(canon_key(p))
    return EXIT_OK


def cmd_eval(args) -> int:
    from .semantics import Binding, BindingsFile, evaluate
    try:
        values = BindingsFile.parse(Path(args.inputs).read_text(encoding="utf-8")).values
    except OSError as exc:
        raise CliError(f"cannot read {args.inputs}: {exc}") from exc
    for p in read_programs(args.file):
        slots = evaluate(p, Binding(values, args.modulus))
        print(" ".join(str(x) for x in slots[:p.output_width]))
    return EXIT_OK


def cmd_rules(args) -> int:
    from .rewrite import catalog, check_rule
    cat = catalog()
    if args.action == "list":
        for r in cat:
            print(f"{r.index}\t{r.name}\t{r.contract}\t{r.category}")
        return EXIT_OK
    bad = 0
    for r in cat:
        if args.only and r.name not in args.only.split(","):
            continue
        res = check_rule(r, instances=args.instances, trials=args.trials, seed=args.seed)
        status = "ok" if res.ok else "FAIL"
        print(f"{r.name}\t{res.instances}\t{res.failures}\t{status}")
        if not res.ok:
            bad += 1
            if res.first_failure:
                print(f"  {res.first_failure}")
    return EXIT_PARTIAL if bad else EXIT_OK


def cmd_keys(args) -> int:
    from .keys import plan_from_omega, plan_keys
    steps = [int(s) for s in args.steps.split(",") if s.strip()]
    if args.omega:
        omega = [int(s) for s in args.omega.split(",") if s.strip()]
        plan = plan_from_omega(steps, args.slots, omega, args.beta)
    else:
        plan = plan_keys(steps, args.slots, args.beta)
    print("\n".join(plan.lines()))
    return EXIT_OK


def _range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("-")
    return int(lo), int(hi or lo)


def cmd_gen(args) -> int:
    from .corpus import BenchSpec, GenParams, gen_bench, gen_random
    if args.kind == "random":
        progs = gen_random(GenParams(count=args.count, depth=_range(args.depth),
                                     width=_range(args.width), seed=args.seed))
        text = "".join(to_text(p) + "\n" for p in progs)
    else:
        if args.name == "tree":
            spec = BenchSpec("tree", tree=tuple(int(x) for x in args.tree.split("-")),
                             seed=args.seed)
        else:
            spec = BenchSpec(args.name, args.n, seed=args.seed)
        text = to_text(gen_bench(spec)) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    from .corpus import load_dataset
    from .env import EnvConfig
    from .policy import TrainConfig, TrainLog, train
    corpus = load_dataset(args.dataset)
    cfg = _cfg(args)
    tlog = TrainLog()
    pol = train(corpus, TrainConfig(lr=args.lr, episodes=args.episodes, seed=args.seed,
                                    mode=args.mode),
                EnvConfig(cfg.table, cfg.weights, cfg.max_steps), trainlog=tlog)
    pol.save(args.out)
    if args.log:
        Path(args.log).write_text("".join(f"{i},{r!r}\n" for i, r in
                                          enumerate(tlog.terminal_rewards, 1)))
    tr = tlog.terminal_rewards
    k = min(100, len(tr))
    print(f"episodes={len(tr)} first{k}_mean={sum(tr[:k]) / k:.4f} "
          f"last{k}_mean={sum(tr[-k:]) / k:.4f}")
    return EXIT_OK


def cmd_suite(args) -> int:
    from .corpus import BenchSpec, default_suite
    from .report import rows_to_csv, run_suite
    specs = ([BenchSpec.parse(s) for s in args.kernels.split(",")] if args.kernels
             else default_suite())
    strategies = args.strategies.split(",")
    for s in strategies:
        if s not in STRATEGIES:
            raise CliError(f"unknown strategy {s!r}")
    rows = run_suite(specs, strategies, _cfg(args), args.policy, args.programs_dir)
    _emit(rows_to_csv(rows), args.out)
    bad = [r for r in rows if r.error]
    for r in bad:
        log.error("%s/%s: %s", r.kernel, r.strategy, r.error)
    return EXIT_PARTIAL if bad else EXIT_OK


def cmd_compare(args) -> int:
    from .report import compare_files
    print(compare_files(args.a, args.b).text())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--weights", default="1,1,1", help="w_ops,w_depth,w_mult")
    common.add_argument("--table", default="default",
                        help="toy, default, or class=price,... overrides")
    common.add_argument("--max-steps", type=int, default=MAX_STEPS)
    common.add_argument("--beam-width", type=int, default=8)
    common.add_argument("--policy", help="policy weight file")
    common.add_argument("--samples", type=int, default=1,
                        help="rollouts for random/policy strategies")
    common.add_argument("--trace", action="store_true", help="print the rewrite trace to stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="fhevec", description="Vectorizing rewriter for FHE programs")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common])
    p.add_argument("file")
    p.add_argument("--strategy", choices=STRATEGIES, default="greedy")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("cost", parents=[common])
    p.add_argument("file")
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("canon", parents=[common])
    p.add_argument("file")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("eval", parents=[common])
    p.add_argument("file")
    p.add_argument("--inputs", required=True, help="bindings file of name=value lines")
    p.add_argument("--modulus", type=int, default=65537)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rules", parents=[common])
    p.add_argument("action", choices=("list", "check"))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--only", help="comma-separated rule names")
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("keys", parents=[common])
    p.add_argument("--steps", required=True)
    p.add_argument("--slots", type=int, required=True)
    p.add_argument("--beta", type=int)
    p.add_argument("--omega", help="decompose exactly these steps instead of planning")
    p.set_defaults(func=cmd_keys)

    p = sub.add_parser("gen", parents=[common])
    gsub = p.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("random", parents=[common])
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--depth", default="1-15")
    g.add_argument("--width", default="1-32")
    g.add_argument("-o", "--out")
    g = gsub.add_parser("bench", parents=[common])
    g.add_argument("name")
    g.add_argument("--n", type=int, default=4)
    g.add_argument("--tree", default="100-100-5", help="X-Y-Z for the tree kernel")
    g.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", parents=[common])
    p.add_argument("--dataset", required=True)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--mode", choices=("reinforce", "ppo"), default="reinforce")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="write per-episode terminal rewards here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("suite", parents=[common])
    p.add_argument("--kernels", help="e.g. dot-product:4,gx:3,tree:100-50-5")
    p.add_argument("--strategies", default="greedy,beam")
    p.add_argument("--programs-dir", help="write optimized programs here")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("compare", parents=[common])
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError, OSError) as exc:
        print(f"fhevec: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
