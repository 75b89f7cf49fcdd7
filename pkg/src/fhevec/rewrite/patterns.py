"""Tiny pattern language for algebraic rules.

Patterns use the IR surface syntax with ``?name`` metavariables, e.g.
``(+ (* ?a ?b) (* ?a ?c))``. A repeated metavariable must bind the same
subterm (identity, since nodes are hash-consed). Integer literals match only
that constant.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ir import (Add, Const, Expr, Mul, Neg, ParseError, Sub, VecAdd, VecMul, VecNeg,
                  VecSub, _read, _tokenize)

_BINARY = {"+": Add, "*": Mul, "-": Sub, "VecAdd": VecAdd, "VecSub": VecSub, "VecMul": VecMul}
_UNARY = {"-": Neg, "VecNeg": VecNeg}


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PConst:
    value: int


@dataclass(frozen=True)
class POp:
    cls: type
    kids: tuple


Pattern = PVar | PConst | POp


def compile_pattern(text: str) -> Pattern:
    return _compile(_read(_tokenize(text)))


def _compile(form) -> Pattern:
    if isinstance(form, str):
        if form.startswith("?"):
            return PVar(form[1:])
        try:
            return PConst(int(form))
        except ValueError:
            raise ParseError(f"bad pattern atom {form!r}") from None
    head, args = form[0], form[1:]
    if len(args) == 1 and head in _UNARY:
        return POp(_UNARY[head], (_compile(args[0]),))
    if len(args) == 2 and head in _BINARY:
        return POp(_BINARY[head], tuple(_compile(a) for a in args))
    raise ParseError(f"unsupported pattern head {head!r}/{len(args)}")


def match(p: Pattern, e: Expr, env: dict | None = None) -> dict | None:
    env = {} if env is None else env
    return env if _match(p, e, env) else None


def _match(p: Pattern, e: Expr, env: dict) -> bool:
    if isinstance(p, PVar):
        bound = env.get(p.name)
        if bound is None:
            env[p.name] = e
            return True
        return bound is e or bound == e
    if isinstance(p, PConst):
        return isinstance(e, Const) and e.value == p.value
    if type(e) is not p.cls:
        return False
    return all(_match(pk, ek, env) for pk, ek in zip(p.kids, e.kids))


def instantiate(p: Pattern, env: dict) -> Expr:
    if isinstance(p, PVar):
        return env[p.name]
    if isinstance(p, PConst):
        return Const(p.value)
    return p.cls(*[instantiate(k, env) for k in p.kids])


def metavar_kinds(p: Pattern, vector: bool = False, out: dict | None = None) -> dict[str, bool]:
    """Map each metavariable to True if it must be vector-kinded."""
    out = {} if out is None else out
    if isinstance(p, PVar):
        out.setdefault(p.name, vector)
    elif isinstance(p, POp):
        for k in p.kids:
            metavar_kinds(k, getattr(p.cls, "vector", False), out)
    return out
