"""Randomized soundness checking of catalog rules against the slot interpreter."""

from __future__ import annotations

import random
from dataclasses import dataclass

from ..ir import Add, Expr, Mul, Program, RotL, Sub, Vec, VecAdd, VecMul, VecNeg, VecSub, infer
from ..randexpr import RandomExprs
from ..semantics import DEFAULT_MODULUS, equiv_prefix
from .core import FULL, Catalog, Rule, apply, match_sites


@dataclass
class RuleCheck:
    name: str
    instances: int
    failures: int
    first_failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failures == 0 and self.instances > 0


def embed(rule: Rule, inst: Expr, rng: random.Random) -> Expr:
    """Place a sampled instance inside a random vector context (half the time)."""
    g = RandomExprs(rng, n_vars=6, p_const=0.2, p_leaf=0.5, prefix="y")
    e = inst
    if e.width is None:
        if rng.random() < 0.5:
            other = g.scalar(1)
            op = rng.choice((Add, Sub, Mul))
            e = op(e, other) if rng.random() < 0.5 else op(other, e)
        kids = [g.scalar(1) for _ in range(rng.randint(0, 2))]
        kids.insert(rng.randint(0, len(kids)), e)
        return Vec(*kids)
    if rng.random() < 0.5:
        w = e.width
        choice = rng.random()
        if choice < 0.2 and rule.contract == FULL and w > 1:
            e = RotL(e, rng.randrange(1, w))
        elif choice < 0.3:
            e = VecNeg(e)
        else:
            op = rng.choice((VecAdd, VecSub, VecMul))
            other = g.vector(w, 1)
            e = op(e, other) if rng.random() < 0.5 else op(other, e)
    return e


def check_rule(rule: Rule, instances: int = 200, trials: int = 10, seed: int = 0,
               t: int = DEFAULT_MODULUS) -> RuleCheck:
    rng = random.Random(f"{seed}:{rule.name}")
    done = failures = 0
    first = None
    attempts = 0
    while done < instances and attempts < instances * 20:
        attempts += 1
        body = embed(rule, rule.sample(rng), rng)
        sites = match_sites(rule, body)
        if not sites:
            continue
        p = Program.of(body)
        site = rng.choice(sites)
        q = apply(rule, p, site)
        infer(q.body)
        res = equiv_prefix(p, q, k=p.output_width, trials=trials, seed=rng.randrange(2**31), t=t)
        done += 1
        if not res:
            failures += 1
            if first is None:
                first = f"{p.body} -> {q.body} at {list(site.path)}: {res.counterexample}"
    return RuleCheck(rule.name, done, failures, first)


def check_catalog(cat: Catalog, instances: int = 200, trials: int = 10, seed: int = 0,
                  t: int = DEFAULT_MODULUS) -> list[RuleCheck]:
    return [check_rule(r, instances, trials, seed, t) for r in cat]
