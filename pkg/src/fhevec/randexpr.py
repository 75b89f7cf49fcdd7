"""Random well-typed expressions, shared by the corpus generator and rule samplers."""

from __future__ import annotations

import random

from .ir import (Add, Const, Expr, Mul, Neg, RotL, Sub, Var, VarKind, Vec, VecAdd,
                 VecMul, VecNeg, VecSub)


class RandomExprs:
    def __init__(self, rng: random.Random, n_vars: int = 8, p_const: float = 0.15,
                 p_plain: float = 0.0, const_range: tuple[int, int] = (2, 9),
                 p_leaf: float = 0.25, prefix: str = "x",
                 op_weights: tuple[float, float, float, float] = (4, 2, 4, 1)):
        self.rng = rng
        self.n_vars = n_vars
        self.p_const = p_const
        self.p_plain = p_plain
        self.const_range = const_range
        self.p_leaf = p_leaf
        self.prefix = prefix
        self.op_weights = op_weights
        self._kinds: dict[str, VarKind] = {}

    def var(self, plain: bool | None = None) -> Var:
        name = f"{self.prefix}{self.rng.randrange(self.n_vars)}"
        kind = self._kinds.get(name)
        if kind is None:
            if plain is None:
                plain = self.rng.random() < self.p_plain
            kind = self._kinds[name] = VarKind.PLAIN if plain else VarKind.CIPHER
        return Var(name, kind)

    def const(self) -> Const:
        lo, hi = self.const_range
        if self.rng.random() < 0.2:
            return Const(self.rng.choice((0, 1)))
        return Const(self.rng.randint(lo, hi))

    def leaf(self) -> Expr:
        return self.const() if self.rng.random() < self.p_const else self.var()

    def scalar(self, depth: int, exact: bool = False) -> Expr:
        """Scalar expression of depth <= ``depth`` (== ``depth`` if ``exact``)."""
        if depth <= 0 or (not exact and self.rng.random() < self.p_leaf):
            return self.leaf()
        op = self.rng.choices((Add, Sub, Mul, Neg), weights=self.op_weights)[0]
        if op is Neg:
            return Neg(self.scalar(depth - 1, exact))
        if exact:
            sides = [self.scalar(depth - 1, True), self.scalar(depth - 1 - self.rng.randrange(depth), False)]
            self.rng.shuffle(sides)
            return op(*sides)
        return op(self.scalar(depth - 1), self.scalar(depth - 1))

    def vector(self, width: int, depth: int, exact: bool = False) -> Expr:
        """Vector expression of the given width and depth <= ``depth``."""
        r = self.rng.random()
        if depth <= 0 or r < 0.35 or (not exact and r < 0.45):
            if exact and depth > 0:
                # Vec adds no depth: one element carries the full depth
                kids = [self.scalar(depth, True)] + [self.scalar(self.rng.randrange(depth + 1))
                                                     for _ in range(width - 1)]
                self.rng.shuffle(kids)
                return Vec(*kids)
            return Vec(*[self.scalar(max(depth, 0)) for _ in range(width)])
        choice = self.rng.random()
        if choice < 0.15 and width > 1:
            return RotL(self.vector(width, depth - 1, exact), self.rng.randrange(1, width))
        if choice < 0.22:
            return VecNeg(self.vector(width, depth - 1, exact))
        op = self.rng.choices((VecAdd, VecSub, VecMul), weights=(4, 2, 4))[0]
        sides = [self.vector(width, depth - 1, exact), self.vector(width, depth - 1)]
        self.rng.shuffle(sides)
        return op(*sides)
