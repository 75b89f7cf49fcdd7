"""Reference interpreter over integer slots modulo a plaintext prime.

Evaluation is batched: every variable may be bound to a numpy array of trial
values, and a scalar node evaluates to shape ``(T,)`` while a vector node of
width ``w`` evaluates to shape ``(w, T)``. Shared subterms are evaluated once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ir import (Add, Const, Expr, Mul, Neg, Program, RotL, Sub, Var, Vec, VecAdd,
                 VecMul, VecNeg, VecSub, unique_nodes)

DEFAULT_MODULUS = 65537


class UnboundVariable(KeyError):
    pass


class IncompatibleInputs(ValueError):
    pass


@dataclass(frozen=True)
class Binding:
    values: dict[str, int]
    modulus: int = DEFAULT_MODULUS


@dataclass
class Counterexample:
    binding: dict[str, int]
    left: list[int]
    right: list[int]


@dataclass
class EquivResult:
    equivalent: bool
    counterexample: Counterexample | None = None
    trials: int = 0

    def __bool__(self) -> bool:
        return self.equivalent


def eval_batch(e: Expr, env: dict[str, np.ndarray], t: int = DEFAULT_MODULUS,
               trials: int | None = None) -> np.ndarray:
    """Evaluate ``e`` with every variable bound to an int64 array of residues."""
    if t >= 2**31:
        raise ValueError("modulus must stay below 2**31 so products fit in int64")
    if trials is None:
        trials = len(next(iter(env.values()))) if env else 1
    vals: dict[int, np.ndarray] = {}
    for n in unique_nodes(e):
        k = [vals[id(c)] for c in n.kids]
        if isinstance(n, Var):
            try:
                v = np.asarray(env[n.name], dtype=np.int64) % t
            except KeyError:
                raise UnboundVariable(n.name) from None
        elif isinstance(n, Const):
            v = np.full(trials, n.value % t, dtype=np.int64)
        elif isinstance(n, (Add, VecAdd)):
            v = (k[0] + k[1]) % t
        elif isinstance(n, (Sub, VecSub)):
            v = (k[0] - k[1]) % t
        elif isinstance(n, (Mul, VecMul)):
            v = (k[0] * k[1]) % t
        elif isinstance(n, (Neg, VecNeg)):
            v = (-k[0]) % t
        elif isinstance(n, Vec):
            v = np.stack(k)
        elif isinstance(n, RotL):
            v = np.roll(k[0], -(n.step % n.width), axis=0)
        else:  # pragma: no cover
            raise TypeError(f"cannot evaluate {type(n).__name__}")
        vals[id(n)] = v
    return vals[id(e)]


def eval_expr(e: Expr, values: dict[str, int], t: int = DEFAULT_MODULUS) -> int | list[int]:
    env = {k: np.array([v]) for k, v in values.items()}
    out = eval_batch(e, env, t)
    if e.width is None:
        return int(out[0])
    return [int(x) for x in out[:, 0]]


def evaluate(p: Program, b: Binding) -> list[int]:
    """Slot values of the program body under one binding."""
    missing = [v.name for v in p.inputs if v.name not in b.values]
    if missing:
        raise UnboundVariable(missing[0])
    return eval_expr(p.body, b.values, b.modulus)


def random_env(names, trials: int, rng: np.random.Generator,
               t: int = DEFAULT_MODULUS) -> dict[str, np.ndarray]:
    return {n: rng.integers(0, t, size=trials, dtype=np.int64) for n in names}


def equiv_prefix(p1: Program, p2: Program, k: int | None = None, trials: int = 20,
                 seed: int = 0, t: int = DEFAULT_MODULUS) -> EquivResult:
    """Do the first ``k`` slots agree on ``trials`` random bindings?

    Rewrites here are polynomial identities, so random testing over a large
    prime field rarely accepts a wrong rewrite (Schwartz-Zippel).
    """
    if {(v.name, v.vkind) for v in p1.inputs} != {(v.name, v.vkind) for v in p2.inputs}:
        raise IncompatibleInputs("programs declare different inputs")
    if k is None:
        k = min(p1.output_width, p2.output_width)
    if k > min(p1.width, p2.width):
        raise ValueError(f"prefix {k} exceeds a program width")
    rng = np.random.default_rng(seed)
    names = [v.name for v in p1.inputs]
    env = random_env(names, trials, rng, t)
    # fixed corner bindings first: all zeros and all ones
    if trials >= 3:
        for n in names:
            env[n][0] = 0
            env[n][1] = 1
    a = eval_batch(p1.body, env, t, trials)[:k]
    b = eval_batch(p2.body, env, t, trials)[:k]
    bad = np.nonzero(np.any(a != b, axis=0))[0]
    if len(bad):
        i = int(bad[0])
        return EquivResult(False, Counterexample(
            {n: int(env[n][i]) for n in names},
            [int(x) for x in a[:, i]], [int(x) for x in b[:, i]]), trials)
    return EquivResult(True, None, trials)


@dataclass
class BindingsFile:
    values: dict[str, int] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> BindingsFile:
        values = {}
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"line {ln}: expected name=value")
            values[name.strip()] = int(value.strip())
        return cls(values)
