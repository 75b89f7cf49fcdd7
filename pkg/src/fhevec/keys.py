"""Rotation-key budget planning with non-adjacent-form decompositions.

Each rotation step either gets its own key or is realized as a short chain of
rotations by signed powers of two. Negative components are right rotations
and need their own keys.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field


EXHAUSTIVE_LIMIT = 10


class NonPositiveStep(ValueError):
    pass


class BudgetInfeasible(ValueError):
    pass


class UnknownStep(KeyError):
    pass


def naf_digits(s: int) -> list[int]:
    """Little-endian NAF digits of ``s`` (each in {-1, 0, 1})."""
    if s < 1:
        raise NonPositiveStep(f"NAF needs a positive step, got {s}")
    out = []
    while s:
        if s & 1:
            d = 2 - (s & 3)        # +1 if s = 1 mod 4, -1 if s = 3 mod 4
            s -= d
        else:
            d = 0
        out.append(d)
        s >>= 1
    return out


def naf(s: int) -> tuple[int, ...]:
    """Signed powers of two summing to ``s``, ordered by magnitude."""
    return tuple(d << k for k, d in enumerate(naf_digits(s)) if d)


def default_beta(n: int) -> int:
    return max(1, 2 * int(math.log2(n))) if n > 1 else 1


def _reduce(c: int, n: int) -> int:
    """Component taken modulo n, keeping its sign (right rotations stay negative)."""
    r = abs(c) % n
    return r if c > 0 else -r


def components(s: int, n: int) -> tuple[int, ...]:
    """NAF components reduced modulo ``n``; zero rotations are dropped."""
    return tuple(c for c in (_reduce(c, n) for c in naf(s)) if c)


def _shortest(target: int, keys: set[int], n: int, limit: int) -> tuple[int, ...] | None:
    """Shortest sequence of keys summing to target (mod n), at most ``limit`` long."""
    target %= n
    if target == 0:
        return ()
    prev: dict[int, tuple[int, int]] = {0: (0, 0)}
    frontier = deque([(0, 0)])
    ordered = sorted(keys, key=lambda k: (abs(k), k))
    while frontier:
        pos, dist = frontier.popleft()
        if dist == limit:
            continue
        for k in ordered:
            nxt = (pos + k) % n
            if nxt in prev:
                continue
            prev[nxt] = (pos, k)
            if nxt == target:
                path = []
                while nxt != 0:
                    nxt, k2 = prev[nxt]
                    path.append(k2)
                return tuple(sorted(path, key=lambda c: (abs(c), c)))
            frontier.append((nxt, dist + 1))
    return None


@dataclass(frozen=True)
class KeyPlan:
    chi: frozenset[int]
    n: int
    beta: int
    omega: frozenset[int]
    chi_f: frozenset[int]
    gamma: dict[int, tuple[int, ...]]
    gamma_tot: frozenset[int]
    keys: frozenset[int]
    realization: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def check(self) -> None:
        """Raise AssertionError if any plan invariant is broken."""
        assert self.omega | self.chi_f == self.chi and not (self.omega & self.chi_f)
        assert len(self.keys) <= self.beta, "over budget"
        assert self.keys == self.chi_f | self.gamma_tot
        for s in self.chi:
            parts = self.realization[s]
            assert sum(parts) % self.n == s % self.n, f"step {s} does not recompose"
            assert set(parts) <= self.keys
            if s in self.omega:
                assert len(parts) <= len(self.gamma[s])

    def lines(self) -> list[str]:
        def fmt(xs):
            return ",".join(str(x) for x in sorted(xs, key=lambda c: (abs(c), c)))
        out = [f"slots: {self.n}", f"beta: {self.beta}", f"chi: {fmt(self.chi)}",
               f"chi_f: {fmt(self.chi_f)}", f"omega: {fmt(self.omega)}",
               f"gamma_tot: {fmt(self.gamma_tot)}", f"keys: {fmt(self.keys)}",
               f"key_count: {len(self.keys)}"]
        for s in sorted(self.chi):
            out.append(f"step {s}: {' + '.join(str(c) for c in self.realization[s])} "
                       f"(cost {realization_cost(self, s)})")
        return out


def _validate(chi, n: int, beta: int) -> frozenset[int]:
    if n < 2:
        raise ValueError("need at least two slots")
    if beta < 1:
        raise ValueError("beta must be >= 1")
    chi = frozenset(chi)
    for s in chi:
        if s < 1:
            raise NonPositiveStep(f"rotation step {s} must be positive")
        if s >= n:
            raise ValueError(f"rotation step {s} outside [1, {n - 1}]")
    return chi


def plan_from_omega(chi, n: int, omega, beta: int | None = None) -> KeyPlan:
    """Build the plan for a given decomposed set.

    Steps in omega are processed smallest first. A step that the keys chosen
    so far already reach in no more rotations than its own NAF needs reuses
    that chain; otherwise its NAF components become keys.
    """
    beta = default_beta(n) if beta is None else beta
    chi = _validate(chi, n, max(beta, 1))
    omega = frozenset(omega)
    if not omega <= chi:
        raise UnknownStep(sorted(omega - chi))
    chi_f = chi - omega
    keys = set(chi_f)
    gamma: dict[int, tuple[int, ...]] = {}
    real: dict[int, tuple[int, ...]] = {s: (s,) for s in chi_f}
    added: set[int] = set()
    for s in sorted(omega):
        gamma[s] = components(s, n)
        path = _shortest(s, keys, n, len(gamma[s])) if keys else None
        if path is None:
            path = gamma[s]
            keys.update(path)
            added.update(path)
        real[s] = path
    return KeyPlan(chi, n, beta, omega, chi_f, gamma, frozenset(added),
                   frozenset(keys), real)


def plan_keys(chi, n: int, beta: int | None = None) -> KeyPlan:
    """Smallest-effort plan whose key count fits the budget.

    Steps are moved into the decomposed set one at a time, each time picking
    the move that leaves the fewest keys (larger step on ties). If the greedy
    walk stalls above budget, small instances fall back to exhaustive search.
    """
    beta = default_beta(n) if beta is None else beta
    chi = _validate(chi, n, beta)
    omega: frozenset[int] = frozenset()
    plan = plan_from_omega(chi, n, omega, beta)
    seen = {omega}
    while len(plan.keys) > beta:
        best = None
        for s in sorted(chi - omega, reverse=True):
            cand = plan_from_omega(chi, n, omega | {s}, beta)
            if best is None or len(cand.keys) < len(best.keys):
                best = cand
        if best is None or best.omega in seen:
            break
        omega = best.omega
        seen.add(omega)
        plan = best
    if len(plan.keys) <= beta:
        return plan
    if len(chi) <= EXHAUSTIVE_LIMIT:
        for size in range(1, len(chi) + 1):
            for om in itertools.combinations(sorted(chi), size):
                cand = plan_from_omega(chi, n, om, beta)
                if len(cand.keys) <= beta:
                    return cand
    raise BudgetInfeasible(f"no plan for {len(chi)} steps fits {beta} keys "
                           f"(best found: {len(plan.keys)})")


def realization_cost(plan: KeyPlan, s: int) -> int:
    """Number of rotations needed to perform step ``s`` under ``plan``."""
    if s not in plan.chi:
        raise UnknownStep(s)
    if s in plan.keys:
        return 1
    return len(plan.realization[s])


def total_realization_cost(plan: KeyPlan) -> int:
    return sum(realization_cost(plan, s) for s in plan.chi)
