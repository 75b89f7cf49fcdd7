"""Rewriting as a sequential decision process.

A state is the current program plus bookkeeping; an action is either a
(rule, site ordinal) rewrite or END. Rewards are relative cost improvements,
with a terminal bonus equal to the total percentage reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .cost import DEFAULT_TABLE, DEFAULT_WEIGHTS, CostTable, Weights, total_cost
from .ir import Program
from .rewrite import Catalog, Site, all_sites, apply_path, catalog as default_catalog

MAX_STEPS = 75


class EpisodeDone(RuntimeError):
    pass


class IllegalAction(ValueError):
    pass


def r_step(c_t: float, c_next: float) -> float:
    """Relative improvement; 0 when the current cost is already 0."""
    if c_t == 0:
        return 0.0
    return (c_t - c_next) / c_t


def r_final(c_init: float, c_final: float) -> float:
    """Total percentage reduction over the episode; 0 for a zero-cost start."""
    if c_init == 0:
        return 0.0
    return 100.0 * (c_init - c_final) / c_init


@dataclass(frozen=True)
class EnvConfig:
    table: CostTable = DEFAULT_TABLE
    weights: Weights = DEFAULT_WEIGHTS
    max_steps: int = MAX_STEPS

    def cost(self, p) -> float:
        return total_cost(p, self.table, self.weights)


@dataclass(frozen=True)
class Action:
    rule: int | None = None
    site: int = 0

    @property
    def is_end(self) -> bool:
        return self.rule is None


END = Action()


@dataclass(frozen=True)
class TraceEntry:
    step: int
    rule: str
    site: int | None
    reward: float
    cost_after: float

    def line(self) -> str:
        site = "-" if self.site is None else str(self.site)
        return f"{self.step},{self.rule},{site},{self.reward!r},{self.cost_after!r}"


@dataclass(frozen=True)
class EnvState:
    program: Program
    step_count: int
    initial_cost: float
    last_cost: float
    done: bool = False
    trace: tuple[TraceEntry, ...] = field(default=(), repr=False)


class Env:
    def __init__(self, cfg: EnvConfig = EnvConfig(), cat: Catalog | None = None):
        self.cfg = cfg
        self.catalog = cat or default_catalog()

    def reset(self, p: Program) -> EnvState:
        c = self.cfg.cost(p)
        return EnvState(p, 0, c, c)

    def sites(self, s: EnvState) -> list[list[Site]]:
        return all_sites(self.catalog, s.program.body)

    def action_mask(self, s: EnvState) -> list[int]:
        """Match counts per rule; END (not listed) is always legal."""
        if s.done:
            raise EpisodeDone("episode already finished")
        return [len(x) for x in self.sites(s)]

    def successor(self, s: EnvState, a: Action) -> Program:
        """The program a rewrite action would produce (no state change)."""
        sites = self._legal_sites(s, a)
        rule = self.catalog[a.rule]
        return s.program.replace_body(apply_path(rule, s.program.body, sites[a.site].path))

    def _legal_sites(self, s: EnvState, a: Action) -> list[Site]:
        if a.rule is None or not 0 <= a.rule < len(self.catalog):
            raise IllegalAction(f"unknown rule index {a.rule}")
        sites = self.sites(s)[a.rule]
        if not 0 <= a.site < len(sites):
            raise IllegalAction(f"rule {self.catalog[a.rule].name} has {len(sites)} site(s), "
                                f"ordinal {a.site} requested")
        return sites

    def step(self, s: EnvState, a: Action) -> tuple[EnvState, float, bool]:
        if s.done:
            raise EpisodeDone("episode already finished")
        if a.is_end:
            reward = r_final(s.initial_cost, s.last_cost)
            entry = TraceEntry(s.step_count + 1, "END", None, reward, s.last_cost)
            return replace(s, done=True, trace=s.trace + (entry,)), reward, True
        new_p = self.successor(s, a)
        c_next = self.cfg.cost(new_p)
        reward = r_step(s.last_cost, c_next)
        n = s.step_count + 1
        done = n >= self.cfg.max_steps
        if done:
            reward += r_final(s.initial_cost, c_next)
        entry = TraceEntry(n, self.catalog[a.rule].name, a.site, reward, c_next)
        return EnvState(new_p, n, s.initial_cost, c_next, done, s.trace + (entry,)), reward, done
