"""Search strategies over the rewrite MDP: greedy, beam and random rollouts."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .cost import (DEFAULT_TABLE, DEFAULT_WEIGHTS, CostTable, Weights, op_cost_after,
                   total_cost)
from .env import MAX_STEPS, TraceEntry, r_step
from .ir import Expr, Program, subtree_at
from .rewrite import FULL, Catalog, all_sites, apply_path, catalog as default_catalog


@dataclass(frozen=True)
class SearchConfig:
    table: CostTable = DEFAULT_TABLE
    weights: Weights = DEFAULT_WEIGHTS
    max_steps: int = MAX_STEPS
    beam_width: int = 8
    expansion_cap: int = 64
    patience: int = 8
    samples: int = 16
    seed: int = 0

    def cost(self, e: Expr | Program) -> float:
        return total_cost(e, self.table, self.weights)

    def cost_after(self, parent: Expr, child: Expr) -> float:
        """Cost of ``child``, reusing the DAG bookkeeping of ``parent``."""
        w = self.weights
        c = op_cost_after(parent, child, self.table)
        return w.ops * c + w.depth * child.depth + w.mult * child.mult_depth


@dataclass
class SearchResult:
    program: Program
    trace: list[TraceEntry]
    initial_cost: float
    final_cost: float
    wall_ms: float = 0.0
    expanded: int = field(default=0, repr=False)

    @property
    def steps(self) -> int:
        return sum(1 for t in self.trace if t.rule != "END")


def _successors(cat: Catalog, body: Expr, cost_t: float, cfg: SearchConfig):
    """All one-step rewrites as (reward, rule index, ordinal, child, child cost)."""
    out = []
    for ri, sites in enumerate(all_sites(cat, body)):
        if not sites:
            continue
        rule = cat[ri]
        # a full-contract rewrite replaces every occurrence of the matched node,
        # so sites on the same shared node yield the same child
        done: dict[int, tuple[Expr, float]] = {}
        for site in sites:
            node = subtree_at(body, site.path) if rule.contract == FULL else None
            hit = done.get(id(node)) if node is not None else None
            if hit is None:
                child = apply_path(rule, body, site.path)
                hit = (child, cfg.cost_after(body, child))
                if node is not None:
                    done[id(node)] = hit
            child, cc = hit
            out.append((r_step(cost_t, cc), ri, site.ordinal, child, cc))
    return out


def greedy(p: Program, cfg: SearchConfig = SearchConfig(), cat: Catalog | None = None) -> SearchResult:
    """Repeatedly take the most improving rewrite; stop when nothing improves."""
    cat = cat or default_catalog()
    t0 = time.perf_counter()
    body = p.body
    c0 = c = cfg.cost(body)
    trace: list[TraceEntry] = []
    for step in range(1, cfg.max_steps + 1):
        best = None
        for cand in _successors(cat, body, c, cfg):
            # strict > keeps the first candidate in (rule index, ordinal) order
            if best is None or cand[0] > best[0]:
                best = cand
        if best is None or best[0] <= 0:
            break
        r, ri, ordinal, body, c = best
        trace.append(TraceEntry(step, cat[ri].name, ordinal, r, c))
    return SearchResult(p.replace_body(body), trace, c0, c,
                        (time.perf_counter() - t0) * 1000.0)


def _beam_lane(start: Expr, c0: float, width: int, cfg: SearchConfig, cat: Catalog,
               cache: dict) -> tuple[float, Expr, tuple, int]:
    frontier: list[tuple[float, int, Expr, tuple]] = [(c0, 0, start, ())]
    visited = {start}
    best_cost, best_body, best_trace = c0, start, ()
    stale = seq = expanded = 0
    for level in range(1, cfg.max_steps + 1):
        cands = []
        for cost_s, _, body, trace in frontier:
            kids = cache.get(body)
            if kids is None:
                kids = _successors(cat, body, cost_s, cfg)
                kids.sort(key=lambda k: (-k[0], k[1], k[2]))
                cache[body] = kids
                expanded += len(kids)
            taken = 0
            for r, ri, ordinal, child, cc in kids:
                if taken >= cfg.expansion_cap:
                    break
                if child in visited:
                    continue
                visited.add(child)
                taken += 1
                seq += 1
                entry = TraceEntry(level, cat[ri].name, ordinal, r, cc)
                cands.append((cc, seq, child, trace + (entry,)))
        if not cands:
            break
        cands.sort(key=lambda c: (c[0], c[1]))
        frontier = cands[:width]
        if frontier[0][0] < best_cost:
            best_cost, _, best_body, best_trace = frontier[0]
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return best_cost, best_body, best_trace, expanded


def beam(p: Program, width: int | None = None, cfg: SearchConfig = SearchConfig(),
         cat: Catalog | None = None) -> SearchResult:
    """Beam search keeping the ``width`` cheapest distinct states per level.

    Cost-increasing steps are allowed; the cheapest state ever seen is
    returned. Lanes of width ``width // 2``, ``width // 4``, ..., 1 and the
    greedy trajectory run as well (sharing expansions) and win if cheaper,
    so doubling the width never hurts and beam never does worse than greedy.
    """
    cat = cat or default_catalog()
    width = cfg.beam_width if width is None else width
    if width < 1:
        raise ValueError("beam width must be >= 1")
    t0 = time.perf_counter()
    start = p.body
    c0 = cfg.cost(start)
    cache: dict[Expr, list] = {}
    best_cost, best_body, best_trace = c0, start, ()
    expanded = 0
    w = width
    while w >= 1:
        c, body, trace, n = _beam_lane(start, c0, w, cfg, cat, cache)
        expanded += n
        if c < best_cost:
            best_cost, best_body, best_trace = c, body, trace
        w //= 2
    g = greedy(p, cfg, cat)
    if g.final_cost < best_cost:
        best_cost, best_body, best_trace = g.final_cost, g.program.body, tuple(g.trace)
    return SearchResult(p.replace_body(best_body), list(best_trace), c0, best_cost,
                        (time.perf_counter() - t0) * 1000.0, expanded)


def random_search(p: Program, cfg: SearchConfig = SearchConfig(), cat: Catalog | None = None,
                  samples: int | None = None) -> SearchResult:
    """Uniformly random rollouts (END is one more legal action); best state wins."""
    cat = cat or default_catalog()
    samples = cfg.samples if samples is None else samples
    rng = random.Random(cfg.seed)
    t0 = time.perf_counter()
    c0 = cfg.cost(p.body)
    best_cost, best_body, best_trace = c0, p.body, []
    for _ in range(samples):
        body, c, trace = p.body, c0, []
        for step in range(1, cfg.max_steps + 1):
            moves = [(ri, s) for ri, sites in enumerate(all_sites(cat, body)) for s in sites]
            pick = rng.randrange(len(moves) + 1)
            if pick == len(moves):
                break
            ri, site = moves[pick]
            child = apply_path(cat[ri], body, site.path)
            cc = cfg.cost(child)
            trace.append(TraceEntry(step, cat[ri].name, site.ordinal, r_step(c, cc), cc))
            body, c = child, cc
            if c < best_cost:
                best_cost, best_body, best_trace = c, body, list(trace)
    return SearchResult(p.replace_body(best_body), best_trace, c0, best_cost,
                        (time.perf_counter() - t0) * 1000.0)


STRATEGIES = ("none", "greedy", "beam", "random", "policy")


def no_search(p: Program, cfg: SearchConfig = SearchConfig()) -> SearchResult:
    c = cfg.cost(p.body)
    return SearchResult(p, [], c, c)
