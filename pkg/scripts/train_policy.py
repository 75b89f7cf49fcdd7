"""Train the linear policy on a random corpus and compare it with greedy search."""

import argparse
import logging

from fhevec.corpus import GenParams, gen_random
from fhevec.policy import TrainConfig, TrainLog, policy_optimize, train
from fhevec.search import greedy


def mean(xs):
    return sum(xs) / len(xs) if xs else float("nan")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--programs", type=int, default=200)
    ap.add_argument("--episodes", type=int, default=2000)
    ap.add_argument("--lr", type=float, default=0.01)
    ap.add_argument("--depth", default="1-4")
    ap.add_argument("--width", default="1-4")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="policy.wts")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rng = lambda s: tuple(int(x) for x in s.split("-"))  # noqa: E731
    params = GenParams(count=args.programs, depth=rng(args.depth), width=rng(args.width),
                       seed=args.seed)
    corpus = gen_random(params)
    held = gen_random(GenParams(count=50, depth=params.depth, width=params.width,
                                seed=args.seed + 1))
    tlog = TrainLog()
    pol = train(corpus, TrainConfig(lr=args.lr, episodes=args.episodes, seed=args.seed),
                trainlog=tlog)
    pol.save(args.out)
    tr = tlog.terminal_rewards
    print(f"terminal reward: first 100 {mean(tr[:100]):.2f}, last 100 {mean(tr[-100:]):.2f}")

    def pct(r):
        return 100 * (r.initial_cost - r.final_cost) / r.initial_cost if r.initial_cost else 0.0
    print(f"held-out reduction: policy {mean([pct(policy_optimize(p, pol)) for p in held]):.1f}%"
          f", greedy {mean([pct(greedy(p)) for p in held]):.1f}%")
    print(f"saved {args.out}")


if __name__ == "__main__":
    main()
