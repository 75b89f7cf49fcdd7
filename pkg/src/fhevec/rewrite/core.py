"""Rules, match sites, application and width-changing rewrites.

A rule's contract is either ``full`` (the replacement equals the matched
subterm in every slot) or ``prefix`` (only the leading slots survive and the
replacement is wider). A prefix rule may only fire where every ancestor is an
elementwise vector operator; the siblings along that path are then *tiled*
(their slots repeated) to the new width, which keeps rotations inside them
exact and leaves the leading slots of the program unchanged.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..ir import (Expr, Program, RotL, Vec, VecAdd, VecMul, VecNeg, VecSub, parent_map,
                  unique_nodes)

FULL = "full"
PREFIX = "prefix"
ELEMENTWISE = (VecAdd, VecSub, VecMul, VecNeg)


class InvalidSite(ValueError):
    pass


@dataclass(frozen=True)
class Site:
    path: tuple[int, ...]
    ordinal: int


@dataclass(eq=False)
class Rule:
    name: str
    roots: tuple[type, ...]
    matcher: Callable[[Expr], bool]
    builder: Callable[[Expr], Expr]
    contract: str = FULL
    category: str = ""
    doc: str = ""
    sampler: Callable[[random.Random], Expr] | None = field(default=None, repr=False)
    index: int = -1

    def matches(self, node: Expr) -> bool:
        """Memoized on the (hash-consed) node."""
        key = ("m", self.name)
        hit = node.memo.get(key)
        if hit is None:
            hit = node.memo[key] = bool(self.matcher(node))
        return hit

    def build(self, node: Expr) -> Expr:
        return self.builder(node)

    def sample(self, rng: random.Random) -> Expr:
        if self.sampler is None:
            raise NotImplementedError(f"rule {self.name} has no sampler")
        return self.sampler(rng)


@dataclass(frozen=True)
class Catalog:
    rules: tuple[Rule, ...]

    def __post_init__(self):
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValueError("duplicate rule names in catalog")
        for i, r in enumerate(self.rules):
            if r.index != i:
                raise ValueError(f"rule {r.name} has index {r.index}, expected {i}")
        roots: dict[type, list[Rule]] = {}
        for r in self.rules:
            for t in r.roots:
                roots.setdefault(t, []).append(r)
        object.__setattr__(self, "_roots", roots)

    @property
    def version(self) -> str:
        digest = hashlib.sha1("\n".join(f"{r.name}:{r.contract}" for r in self.rules).encode())
        return f"{len(self.rules)}-{digest.hexdigest()[:10]}"

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, i: int) -> Rule:
        return self.rules[i]

    def by_name(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def by_root(self) -> dict[type, list[Rule]]:
        return self._roots


def _body(e: Expr | Program) -> Expr:
    return e.body if isinstance(e, Program) else e


def _walk(e: Expr):
    """Pre-order (path, node, widenable) triples.

    ``widenable`` is true when every proper ancestor is an elementwise vector op.
    """
    out = []
    stack: list[tuple[tuple[int, ...], Expr, bool]] = [((), e, True)]
    while stack:
        path, n, ok = stack.pop()
        out.append((path, n, ok))
        kid_ok = ok and isinstance(n, ELEMENTWISE)
        for i in range(len(n.kids) - 1, -1, -1):
            stack.append((path + (i,), n.kids[i], kid_ok))
    return out


def match_sites(rule: Rule, e: Expr | Program) -> list[Site]:
    e = _body(e)
    sites: list[Site] = []
    for path, n, ok in _walk(e):
        if isinstance(n, rule.roots) and (rule.contract == FULL or ok) and rule.matches(n):
            sites.append(Site(path, len(sites)))
    return sites


_NO_SITES: dict[int, list[tuple[int, ...]]] = {}


def _local_sites(n: Expr, ok: bool, table: dict, tag: int) -> dict[int, list[tuple[int, ...]]]:
    """Rule index -> pre-order relative paths of matches inside ``n`` (cached on ``n``)."""
    key = ("lsites", tag, ok)
    hit = n.memo.get(key)
    if hit is not None:
        return hit
    out: dict[int, list[tuple[int, ...]]] = {}
    for r in table.get(type(n), ()):
        if (r.contract == FULL or ok) and r.matches(n):
            out[r.index] = [()]
    kid_ok = ok and isinstance(n, ELEMENTWISE)
    for i, k in enumerate(n.kids):
        sub = _local_sites(k, kid_ok, table, tag) if k.kids or type(k) in table else _NO_SITES
        for ri, paths in sub.items():
            out.setdefault(ri, []).extend([(i,) + p for p in paths])
    hit = n.memo[key] = out or _NO_SITES
    return hit


def all_sites(catalog: Catalog, e: Expr | Program) -> list[list[Site]]:
    """Sites of every catalog rule, indexed like the catalog; cached on the root node."""
    e = _body(e)
    key = ("sites", id(catalog))
    hit = e.memo.get(key)
    if hit is not None:
        return hit
    local = _local_sites(e, True, catalog.by_root(), id(catalog))
    out: list[list[Site]] = [[] for _ in catalog.rules]
    for ri, paths in local.items():
        out[ri] = [Site(p, j) for j, p in enumerate(paths)]
    e.memo[key] = out
    return out


def tile(e: Expr, factor: int) -> Expr:
    """Repeat the slots of vector expression ``e`` ``factor`` times."""
    if factor == 1:
        return e
    key = ("tile", factor)
    hit = e.memo.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Vec):
        out = Vec(*(e.kids * factor))
    elif isinstance(e, RotL):
        out = RotL(tile(e.child, factor), e.step)
    elif isinstance(e, ELEMENTWISE):
        out = type(e)(*[tile(k, factor) for k in e.kids])
    else:  # pragma: no cover - scalar nodes never reach here
        raise TypeError(f"cannot tile {type(e).__name__}")
    e.memo[key] = out
    return out


def _splice(e: Expr, path: Sequence[int], new: Expr) -> Expr:
    if not path:
        return new
    i = path[0]
    child = _splice(e.kids[i], path[1:], new)
    if child.width == e.kids[i].width:
        kids = list(e.kids)
        kids[i] = child
        return e.with_kids(kids)
    if not isinstance(e, ELEMENTWISE):
        raise InvalidSite(f"cannot widen through {e.op}")
    old = e.width
    if child.width % old:
        raise InvalidSite(f"new width {child.width} is not a multiple of {old}")
    kids = [child if j == i else tile(k, child.width // old) for j, k in enumerate(e.kids)]
    return type(e)(*kids)


def apply(rule: Rule, e: Expr | Program, site: Site) -> Expr | Program:
    """Rewrite the subterm at ``site``; returns the same type it was given."""
    body = _body(e)
    sites = match_sites(rule, body)
    if not 0 <= site.ordinal < len(sites) or sites[site.ordinal].path != tuple(site.path):
        raise InvalidSite(f"{rule.name}: no match at {site}")
    out = apply_path(rule, body, site.path)
    if isinstance(e, Program):
        return e.replace_body(out)
    return out


def substitute(e: Expr, old: Expr, new: Expr) -> Expr:
    """Replace every occurrence of ``old`` in ``e`` (sharing-preserving).

    Only ancestors of ``old`` are rebuilt.
    """
    if e is old:
        return new
    parents = parent_map(e)
    if id(old) not in parents:
        return e
    anc: set[int] = set()
    stack = [old]
    while stack:
        for p in parents.get(id(stack.pop()), ()):
            if id(p) not in anc:
                anc.add(id(p))
                stack.append(p)
    memo: dict[int, Expr] = {}

    def go(n: Expr) -> Expr:
        if n is old:
            return new
        if id(n) not in anc:
            return n
        hit = memo.get(id(n))
        if hit is None:
            hit = memo[id(n)] = n.with_kids([go(k) for k in n.kids])
        return hit

    return go(e)


def occurrences(e: Expr) -> dict[int, int]:
    """Number of tree occurrences of each distinct subterm, keyed by id."""
    hit = e.memo.get("occ")
    if hit is None:
        order = unique_nodes(e)
        hit = {id(n): 0 for n in order}
        hit[id(e)] = 1
        for n in reversed(order):       # parents before children
            c = hit[id(n)]
            for k in n.kids:
                hit[id(k)] += c
        e.memo["occ"] = hit
    return hit


def apply_path(rule: Rule, e: Expr, path: Sequence[int]) -> Expr:
    """Apply at a known matching path without re-enumerating sites.

    A full-contract rewrite is equal in every slot, so it replaces every
    occurrence of the matched subterm and shared subterms stay shared. A
    prefix rewrite only touches the addressed occurrence.
    """
    node = e
    for i in path:
        node = node.kids[i]
    new = rule.build(node)
    if rule.contract == FULL:
        if new.width != node.width:  # pragma: no cover
            raise AssertionError(f"{rule.name} changed width under a full contract")
        if occurrences(e)[id(node)] > 1:
            return substitute(e, node, new)
    return _splice(e, path, new)


__all__ = ["FULL", "PREFIX", "InvalidSite", "Site", "Rule", "Catalog", "match_sites",
           "all_sites", "apply", "apply_path", "substitute", "tile"]
