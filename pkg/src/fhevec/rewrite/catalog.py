"""The fixed rule catalog.

Order matters: it is the tie-break for greedy search and indexes the policy's
rule head, so new rules go at the end of their group and the version tag
changes whenever membership does.
"""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Callable

from ..ir import (INT64_MAX, INT64_MIN, Add, Const, Expr, Mul, Neg, RotL, Sub, Var,
                  VarKind, Vec, VecAdd, VecMul, VecNeg, VecSub)
from ..randexpr import RandomExprs
from .core import ELEMENTWISE, FULL, PREFIX, Catalog, Rule
from .patterns import compile_pattern, instantiate, match, metavar_kinds

ISO_WIDTHS = range(1, 9)
REDUCE_TERMS = (2, 4, 8, 16)
MAX_PACKED_WIDTH = 256

_SCALAR_OPS = {"add": Add, "sub": Sub, "mul": Mul, "neg": Neg}
_VECTOR_OPS = {"add": VecAdd, "sub": VecSub, "mul": VecMul, "neg": VecNeg}
_IDENTITY = {"add": 0, "sub": 0, "mul": 1}


# ---------------------------------------------------------------------------
# sampling helpers


def _gen(rng: random.Random) -> RandomExprs:
    return RandomExprs(rng, n_vars=6, p_const=0.2, p_leaf=0.4)


def _plain_scalar(rng: random.Random, depth: int = 1) -> Expr:
    if depth <= 0 or rng.random() < 0.5:
        if rng.random() < 0.5:
            return Const(rng.randint(2, 9))
        return Var(f"p{rng.randrange(3)}", VarKind.PLAIN)
    return rng.choice((Add, Mul))(_plain_scalar(rng, depth - 1), _plain_scalar(rng, depth - 1))


def _cipher_scalar(g: RandomExprs, depth: int = 1) -> Expr:
    while True:
        e = g.scalar(depth)
        if e.has_cipher:
            return e


def _hinted(g: RandomExprs, hint: str | None, vector: bool, width: int) -> Expr:
    rng = g.rng
    if hint == "zeros":
        return Vec(*[Const(0)] * width) if vector else Const(0)
    if hint == "ones":
        return Vec(*[Const(1)] * width) if vector else Const(1)
    if hint == "plain":
        if vector:
            return Vec(*[_plain_scalar(rng) for _ in range(width)])
        return _plain_scalar(rng)
    if hint == "cipher":
        if vector:
            return Vec(*[_cipher_scalar(g) for _ in range(width)])
        return _cipher_scalar(g)
    if vector:
        return g.vector(width, rng.randint(0, 2))
    return g.scalar(rng.randint(0, 2))


def _is_const_vec(e: Expr, value: int) -> bool:
    return isinstance(e, Vec) and all(isinstance(k, Const) and k.value == value for k in e.kids)


def _plain_only(e: Expr) -> bool:
    return not e.has_cipher


# ---------------------------------------------------------------------------
# rule builders


def pattern_rule(name: str, lhs: str, rhs: str | Callable[[dict, Expr], Expr], *,
                 category: str, doc: str = "", guard: Callable[[dict], bool] | None = None,
                 hints: dict[str, str] | None = None) -> Rule:
    lp = compile_pattern(lhs)
    rp = compile_pattern(rhs) if isinstance(rhs, str) else None
    hints = hints or {}

    def matcher(n: Expr) -> bool:
        env = match(lp, n)
        return env is not None and (guard is None or guard(env))

    def builder(n: Expr) -> Expr:
        env = match(lp, n)
        assert env is not None
        return instantiate(rp, env) if rp is not None else rhs(env, n)

    kinds = metavar_kinds(lp)

    def sampler(rng: random.Random) -> Expr:
        g = _gen(rng)
        width = rng.randint(1, 4)
        for _ in range(200):
            env = {k: _hinted(g, hints.get(k), vec, width) for k, vec in kinds.items()}
            if guard is None or guard(env):
                return instantiate(lp, env)
        raise RuntimeError(f"sampler for {name} could not satisfy its guard")

    rhs_text = rhs if isinstance(rhs, str) else "<computed>"
    return Rule(name, (lp.cls,), matcher, builder, FULL, category,
                doc or f"{lhs} => {rhs_text}", sampler)


def _iso_rule(opname: str, width: int | None) -> Rule:
    sop, vop = _SCALAR_OPS[opname], _VECTOR_OPS[opname]
    label = "wide" if width is None else str(width)

    def matcher(n: Expr) -> bool:
        if width is None and n.width <= max(ISO_WIDTHS):
            return False
        if width is not None and n.width != width:
            return False
        return all(type(k) is sop for k in n.kids)

    def builder(n: Expr) -> Expr:
        if sop is Neg:
            return VecNeg(Vec(*[k.kids[0] for k in n.kids]))
        return vop(Vec(*[k.kids[0] for k in n.kids]), Vec(*[k.kids[1] for k in n.kids]))

    def sampler(rng: random.Random) -> Expr:
        g = _gen(rng)
        w = width if width is not None else rng.randint(max(ISO_WIDTHS) + 1, 16)
        if sop is Neg:
            return Vec(*[Neg(g.scalar(1)) for _ in range(w)])
        return Vec(*[sop(g.scalar(1), g.scalar(1)) for _ in range(w)])

    what = "a Vec of width > 8" if width is None else f"a width-{width} Vec"
    if sop is Neg:
        doc = f"{what} whose elements are all scalar negations => VecNeg of one packed Vec"
    else:
        doc = (f"{what} whose elements are all scalar {sop.op} "
               f"=> one {vop.op} of two packed Vecs")
    return Rule(f"iso-vectorize-{opname}-{label}", (Vec,), matcher, builder, FULL,
                "vectorize", doc, sampler)


def _noniso_rule(opname: str) -> Rule:
    sop, vop, ident = _SCALAR_OPS[opname], _VECTOR_OPS[opname], _IDENTITY[opname]

    def matcher(n: Expr) -> bool:
        hits = sum(type(k) is sop for k in n.kids)
        return 2 <= hits < n.width

    def builder(n: Expr) -> Expr:
        left = [k.kids[0] if type(k) is sop else k for k in n.kids]
        right = [k.kids[1] if type(k) is sop else Const(ident) for k in n.kids]
        return vop(Vec(*left), Vec(*right))

    def sampler(rng: random.Random) -> Expr:
        g = _gen(rng)
        hits = rng.randint(2, 4)
        others = []
        while len(others) < rng.randint(1, 3):
            e = g.scalar(1)
            if type(e) is not sop:
                others.append(e)
        kids = [sop(g.scalar(1), g.scalar(1)) for _ in range(hits)] + others
        rng.shuffle(kids)
        return Vec(*kids)

    return Rule(f"non-iso-vectorize-{opname}", (Vec,), matcher, builder, FULL, "vectorize",
                f"Vec with >= 2 (not all) scalar {sop.op} elements => {vop.op}; other "
                f"elements go to operand 1 and operand 2 is padded with {ident}", sampler)


def _fits(v: int) -> bool:
    return INT64_MIN <= v <= INT64_MAX


def _fold(cls: type, vals: list[int]) -> int:
    if cls in (Add, VecAdd):
        return vals[0] + vals[1]
    if cls in (Sub, VecSub):
        return vals[0] - vals[1]
    if cls in (Mul, VecMul):
        return vals[0] * vals[1]
    return -vals[0]


def _const_fold_rule() -> Rule:
    def matcher(n: Expr) -> bool:
        if not all(isinstance(k, Const) for k in n.kids):
            return False
        return _fits(_fold(type(n), [k.value for k in n.kids]))

    def builder(n: Expr) -> Expr:
        return Const(_fold(type(n), [k.value for k in n.kids]))

    def sampler(rng: random.Random) -> Expr:
        cls = rng.choice((Add, Sub, Mul, Neg))
        c = lambda: Const(rng.randint(-50, 50))  # noqa: E731
        return Neg(c()) if cls is Neg else cls(c(), c())

    return Rule("const-fold", (Add, Sub, Mul, Neg), matcher, builder, FULL, "algebra",
                "scalar op over integer constants => the folded constant (64-bit results only)",
                sampler)


def _vec_literal_fold_rule() -> Rule:
    def consts(e: Expr) -> bool:
        return isinstance(e, Vec) and all(isinstance(k, Const) for k in e.kids)

    def matcher(n: Expr) -> bool:
        if not all(consts(k) for k in n.kids):
            return False
        cols = zip(*[[c.value for c in k.kids] for k in n.kids])
        return all(_fits(_fold(type(n), list(col))) for col in cols)

    def builder(n: Expr) -> Expr:
        cols = zip(*[[c.value for c in k.kids] for k in n.kids])
        return Vec(*[Const(_fold(type(n), list(col))) for col in cols])

    def sampler(rng: random.Random) -> Expr:
        w = rng.randint(1, 4)
        lit = lambda: Vec(*[Const(rng.randint(-9, 9)) for _ in range(w)])  # noqa: E731
        cls = rng.choice(ELEMENTWISE)
        return cls(lit()) if cls is VecNeg else cls(lit(), lit())

    return Rule("vec-literal-fold", ELEMENTWISE, matcher, builder, FULL, "vector-algebra",
                "elementwise op over constant Vec literals => one constant Vec", sampler)


def _pt_consolidate(vector: bool) -> Rule:
    mul = VecMul if vector else Mul
    lhs = "(VecMul ?a (VecMul ?b ?c))" if vector else "(* ?a (* ?b ?c))"

    def rhs(env: dict, n: Expr) -> Expr:
        a, b, c = env["a"], env["b"], env["c"]
        if not vector and isinstance(a, Const) and isinstance(b, Const) and _fits(a.value * b.value):
            return Mul(Const(a.value * b.value), c)
        return mul(mul(a, b), c)

    name = "vec-pt-consolidate" if vector else "pt-consolidate"
    return pattern_rule(
        name, lhs, rhs, category="vector-algebra" if vector else "algebra",
        guard=lambda env: _plain_only(env["a"]) and _plain_only(env["b"]) and env["c"].has_cipher,
        hints={"a": "plain", "b": "plain", "c": "cipher"},
        doc=f"{lhs} with a, b plaintext-only and c ciphertext => plaintext product first "
            "(constants folded)")


def _sum_terms(e: Expr) -> list[Expr]:
    out: list[Expr] = []
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Add):
            stack.append(n.kids[1])
            stack.append(n.kids[0])
        else:
            out.append(n)
    return out


def _next_pow2(k: int) -> int:
    p = 1
    while p < k:
        p *= 2
    return p


def _reduce_terms(n: Expr, m: int, products: bool) -> list[list[Expr]] | None:
    key = ("sum-terms",)
    terms = n.memo.get(key)
    if terms is None:
        terms = n.memo[key] = [_sum_terms(k) for k in n.kids]
    top = max(len(t) for t in terms)
    if top < 2 or _next_pow2(top) != m or n.width * m > MAX_PACKED_WIDTH:
        return None
    if products and not all(type(t) is Mul for ts in terms for t in ts):
        return None
    return terms


def _rotate_and_add(s: Expr, width: int) -> Expr:
    shift = s.width // 2
    while shift >= width:
        s = VecAdd(s, RotL(s, shift))
        shift //= 2
    return s


def _sum_sampler(m: int, products: bool):
    def sampler(rng: random.Random) -> Expr:
        g = _gen(rng)
        w = rng.randint(1, 3)
        lo = m // 2 + 1 if m > 2 else 2
        counts = [rng.randint(1, m) for _ in range(w)]
        counts[rng.randrange(w)] = rng.randint(lo, m)
        elems = []
        for c in counts:
            terms = [Mul(g.scalar(1), g.scalar(1)) if products else g.scalar(1) for _ in range(c)]
            if not products:
                # a top-level Add would split into more terms than intended
                terms = [Neg(t) if isinstance(t, Add) else t for t in terms]
            elems.append(_random_sum_tree(rng, terms))
        return Vec(*elems)
    return sampler


def _random_sum_tree(rng: random.Random, terms: list[Expr]) -> Expr:
    if len(terms) == 1:
        return terms[0]
    cut = rng.randint(1, len(terms) - 1)
    return Add(_random_sum_tree(rng, terms[:cut]), _random_sum_tree(rng, terms[cut:]))


def _rotation_reduce_rule(m: int) -> Rule:
    def matcher(n: Expr) -> bool:
        return _reduce_terms(n, m, True) is not None

    def builder(n: Expr) -> Expr:
        terms = _reduce_terms(n, m, True)
        w = n.width
        lefts = [Const(0)] * (w * m)
        rights = [Const(0)] * (w * m)
        for i, ts in enumerate(terms):
            for j, t in enumerate(ts):
                lefts[j * w + i] = t.kids[0]
                rights[j * w + i] = t.kids[1]
        return _rotate_and_add(VecMul(Vec(*lefts), Vec(*rights)), w)

    return Rule(f"rotation-reduce-{m}", (Vec,), matcher, builder, PREFIX, "rotation",
                f"Vec of w sums of products (longest sum has {m // 2 + 1 if m > 2 else 2}.."
                f"{m} terms) => one VecMul of width w*{m} followed by log2({m}) "
                "rotate-and-add stages; leading w slots hold the sums", _sum_sampler(m, True))


def _rotation_sum_rule(m: int) -> Rule:
    def matcher(n: Expr) -> bool:
        return _reduce_terms(n, m, False) is not None

    def builder(n: Expr) -> Expr:
        terms = _reduce_terms(n, m, False)
        w = n.width
        slots = [Const(0)] * (w * m)
        for i, ts in enumerate(terms):
            for j, t in enumerate(ts):
                slots[j * w + i] = t
        return _rotate_and_add(Vec(*slots), w)

    return Rule(f"rotation-sum-{m}", (Vec,), matcher, builder, PREFIX, "rotation",
                f"Vec of w sums (longest has {m // 2 + 1 if m > 2 else 2}..{m} terms) => "
                f"the terms packed into one width w*{m} Vec followed by log2({m}) "
                "rotate-and-add stages", _sum_sampler(m, False))


def _pack(x: Expr, y: Expr) -> Expr | None:
    if type(x) is not type(y):
        return None
    if isinstance(x, Vec):
        return Vec(*(x.kids + y.kids))
    if isinstance(x, ELEMENTWISE):
        kids = []
        for a, b in zip(x.kids, y.kids):
            k = _pack(a, b)
            if k is None:
                return None
            kids.append(k)
        return type(x)(*kids)
    return None


def _pack_rule(opname: str) -> Rule:
    vop = _VECTOR_OPS[opname]

    def matcher(n: Expr) -> bool:
        x, y = n.kids
        return x is not y and 2 * n.width <= MAX_PACKED_WIDTH and _pack(x, y) is not None

    def builder(n: Expr) -> Expr:
        z = _pack(*n.kids)
        return vop(z, RotL(z, n.width))

    def sampler(rng: random.Random) -> Expr:
        g = _gen(rng)
        w = rng.randint(1, 3)
        shape = g.vector(w, rng.randint(0, 2))
        shape = _strip_rotations(shape, g)

        def refill(e: Expr) -> Expr:
            if isinstance(e, Vec):
                return Vec(*[g.scalar(1) for _ in e.kids])
            return type(e)(*[refill(k) for k in e.kids])
        return vop(refill(shape), refill(shape))

    return Rule(f"pack-{opname}", (vop,), matcher, builder, PREFIX, "rotation",
                f"{vop.op}(X, Y) with X and Y same-shaped elementwise trees over Vec literals "
                f"=> Z = X and Y concatenated slot-wise, then {vop.op}(Z, Z << w)", sampler)


def _strip_rotations(e: Expr, g: RandomExprs) -> Expr:
    if isinstance(e, RotL):
        return _strip_rotations(e.child, g)
    if isinstance(e, Vec):
        return e
    return type(e)(*[_strip_rotations(k, g) for k in e.kids])


# --- rotations


def _rot_sampler(build: Callable[[RandomExprs, int], Expr]):
    def sampler(rng: random.Random) -> Expr:
        g = _gen(rng)
        return build(g, rng.randint(1, 5))
    return sampler


def _rot_doc(template: str, vop: type) -> str:
    unary = vop is VecNeg
    return template.format(op=vop.op, args="x" if unary else "x y",
                           rargs="(<< x s)" if unary else "(<< x s) (<< y s)")


def _rotation_rules() -> list[Rule]:
    rules: list[Rule] = []

    def fuse_m(n: Expr) -> bool:
        return isinstance(n.child, RotL)

    def fuse_b(n: Expr) -> Expr:
        step = (n.step + n.child.step) % n.width
        inner = n.child.child
        return inner if step == 0 else RotL(inner, step)

    rules.append(Rule("rot-fuse", (RotL,), fuse_m, fuse_b, FULL, "rotation",
                      "(<< (<< v a) b) => (<< v (a+b) mod width); plain v when that is 0",
                      _rot_sampler(lambda g, w: RotL(RotL(g.vector(w, 1), g.rng.randrange(w)),
                                                     g.rng.randrange(w)))))
    rules.append(Rule("rot-zero", (RotL,), lambda n: n.step % n.width == 0, lambda n: n.child,
                      FULL, "rotation", "(<< v s) with s = 0 mod width => v",
                      _rot_sampler(lambda g, w: RotL(g.vector(w, 1), w * g.rng.randint(0, 2)))))

    def lit_b(n: Expr) -> Expr:
        s = n.step % n.width
        kids = n.child.kids
        return Vec(*(kids[s:] + kids[:s]))

    rules.append(Rule("rot-vec-literal", (RotL,), lambda n: isinstance(n.child, Vec), lit_b,
                      FULL, "rotation", "(<< (Vec x0 .. xn) s) => the Vec with elements rotated",
                      _rot_sampler(lambda g, w: RotL(Vec(*[g.scalar(1) for _ in range(w)]),
                                                     g.rng.randrange(w)))))
    for opname in ("add", "sub", "mul", "neg"):
        vop = _VECTOR_OPS[opname]

        def dist_b(n: Expr, vop=vop) -> Expr:
            return vop(*[RotL(k, n.step) for k in n.child.kids])

        def dist_s(g: RandomExprs, w: int, vop=vop) -> Expr:
            kids = [g.vector(w, 1) for _ in range(1 if vop is VecNeg else 2)]
            return RotL(vop(*kids), g.rng.randrange(w))

        rules.append(Rule(f"rot-distribute-{opname}", (RotL,),
                          lambda n, vop=vop: type(n.child) is vop, dist_b, FULL, "rotation",
                          _rot_doc("(<< ({op} {args}) s) => ({op} {rargs})", vop),
                          _rot_sampler(dist_s)))
    for opname in ("add", "sub", "mul", "neg"):
        vop = _VECTOR_OPS[opname]

        def fac_m(n: Expr) -> bool:
            return (all(isinstance(k, RotL) for k in n.kids)
                    and len({k.step for k in n.kids}) == 1)

        def fac_b(n: Expr, vop=vop) -> Expr:
            return RotL(vop(*[k.child for k in n.kids]), n.kids[0].step)

        def fac_s(g: RandomExprs, w: int, vop=vop) -> Expr:
            s = g.rng.randrange(w)
            kids = [RotL(g.vector(w, 1), s) for _ in range(1 if vop is VecNeg else 2)]
            return vop(*kids)

        rules.append(Rule(f"rot-factor-{opname}", (vop,), fac_m, fac_b, FULL, "rotation",
                          _rot_doc("({op} {rargs}) => (<< ({op} {args}) s)", vop),
                          _rot_sampler(fac_s)))
    return rules


# ---------------------------------------------------------------------------


def _scalar_algebra() -> list[Rule]:
    P = pattern_rule
    c = "algebra"
    return [
        P("add-commutativity", "(+ ?a ?b)", "(+ ?b ?a)", category=c),
        P("mul-commutativity", "(* ?a ?b)", "(* ?b ?a)", category=c),
        P("add-assoc-left", "(+ ?a (+ ?b ?c))", "(+ (+ ?a ?b) ?c)", category=c),
        P("add-assoc-right", "(+ (+ ?a ?b) ?c)", "(+ ?a (+ ?b ?c))", category=c),
        P("mul-assoc-left", "(* ?a (* ?b ?c))", "(* (* ?a ?b) ?c)", category=c),
        P("mul-assoc-right", "(* (* ?a ?b) ?c)", "(* ?a (* ?b ?c))", category=c),
        P("distribute", "(* ?a (+ ?b ?c))", "(+ (* ?a ?b) (* ?a ?c))", category=c),
        P("comm-factor", "(+ (* ?a ?b) (* ?a ?c))", "(* ?a (+ ?b ?c))", category=c),
        P("distribute-sub", "(* ?a (- ?b ?c))", "(- (* ?a ?b) (* ?a ?c))", category=c),
        P("factor-sub", "(- (* ?a ?b) (* ?a ?c))", "(* ?a (- ?b ?c))", category=c),
        P("add-zero", "(+ ?a 0)", "?a", category=c),
        P("zero-add", "(+ 0 ?a)", "?a", category=c),
        P("sub-zero", "(- ?a 0)", "?a", category=c),
        P("sub-self", "(- ?a ?a)", "0", category=c),
        P("zero-sub", "(- 0 ?a)", "(- ?a)", category=c),
        P("mul-one", "(* ?a 1)", "?a", category=c),
        P("one-mul", "(* 1 ?a)", "?a", category=c),
        P("mul-zero", "(* ?a 0)", "0", category=c),
        P("zero-mul", "(* 0 ?a)", "0", category=c),
        P("neg-neg", "(- (- ?a))", "?a", category=c),
        P("add-neg", "(+ ?a (- ?b))", "(- ?a ?b)", category=c),
        P("neg-mul", "(* (- ?a) ?b)", "(- (* ?a ?b))", category=c),
        _const_fold_rule(),
        _pt_consolidate(False),
    ]


def _zero_vec(env: dict, n: Expr) -> Expr:
    return Vec(*[Const(0)] * n.width)


def _vector_algebra() -> list[Rule]:
    P = pattern_rule
    c = "vector-algebra"
    zero = {"z": "zeros"}
    one = {"z": "ones"}
    is_zero = lambda env: _is_const_vec(env["z"], 0)  # noqa: E731
    is_one = lambda env: _is_const_vec(env["z"], 1)  # noqa: E731
    return [
        P("vec-add-commutativity", "(VecAdd ?a ?b)", "(VecAdd ?b ?a)", category=c),
        P("vec-mul-commutativity", "(VecMul ?a ?b)", "(VecMul ?b ?a)", category=c),
        P("vec-add-assoc-left", "(VecAdd ?a (VecAdd ?b ?c))", "(VecAdd (VecAdd ?a ?b) ?c)", category=c),
        P("vec-add-assoc-right", "(VecAdd (VecAdd ?a ?b) ?c)", "(VecAdd ?a (VecAdd ?b ?c))", category=c),
        P("vec-mul-assoc-left", "(VecMul ?a (VecMul ?b ?c))", "(VecMul (VecMul ?a ?b) ?c)", category=c),
        P("vec-mul-assoc-right", "(VecMul (VecMul ?a ?b) ?c)", "(VecMul ?a (VecMul ?b ?c))", category=c),
        P("vec-distribute", "(VecMul ?a (VecAdd ?b ?c))", "(VecAdd (VecMul ?a ?b) (VecMul ?a ?c))", category=c),
        P("vec-comm-factor", "(VecAdd (VecMul ?a ?b) (VecMul ?a ?c))", "(VecMul ?a (VecAdd ?b ?c))", category=c),
        P("vec-distribute-sub", "(VecMul ?a (VecSub ?b ?c))", "(VecSub (VecMul ?a ?b) (VecMul ?a ?c))", category=c),
        P("vec-factor-sub", "(VecSub (VecMul ?a ?b) (VecMul ?a ?c))", "(VecMul ?a (VecSub ?b ?c))", category=c),
        P("vec-add-zero", "(VecAdd ?a ?z)", "?a", category=c, guard=is_zero, hints=zero,
          doc="(VecAdd a z) with z a Vec of 0s => a"),
        P("vec-zero-add", "(VecAdd ?z ?a)", "?a", category=c, guard=is_zero, hints=zero,
          doc="(VecAdd z a) with z a Vec of 0s => a"),
        P("vec-sub-zero", "(VecSub ?a ?z)", "?a", category=c, guard=is_zero, hints=zero,
          doc="(VecSub a z) with z a Vec of 0s => a"),
        P("vec-sub-self", "(VecSub ?a ?a)", _zero_vec, category=c,
          doc="(VecSub a a) => Vec of 0s"),
        P("vec-mul-one", "(VecMul ?a ?z)", "?a", category=c, guard=is_one, hints=one,
          doc="(VecMul a z) with z a Vec of 1s => a"),
        P("vec-one-mul", "(VecMul ?z ?a)", "?a", category=c, guard=is_one, hints=one,
          doc="(VecMul z a) with z a Vec of 1s => a"),
        P("vec-mul-zero", "(VecMul ?a ?z)", "?z", category=c, guard=is_zero, hints=zero,
          doc="(VecMul a z) with z a Vec of 0s => z"),
        P("vec-zero-mul", "(VecMul ?z ?a)", "?z", category=c, guard=is_zero, hints=zero,
          doc="(VecMul z a) with z a Vec of 0s => z"),
        P("vec-neg-neg", "(VecNeg (VecNeg ?a))", "?a", category=c),
        P("vec-add-neg", "(VecAdd ?a (VecNeg ?b))", "(VecSub ?a ?b)", category=c),
        P("vec-neg-mul", "(VecMul (VecNeg ?a) ?b)", "(VecNeg (VecMul ?a ?b))", category=c),
        _vec_literal_fold_rule(),
        _pt_consolidate(True),
    ]


def _balancing() -> list[Rule]:
    P = pattern_rule
    c = "balance"
    out = []
    for name, op in (("mul", "*"), ("add", "+"), ("vec-mul", "VecMul"), ("vec-add", "VecAdd")):
        out.append(P(f"{name}-balance-left", f"({op} ({op} ({op} ?x ?y) ?z) ?t)",
                     f"({op} ({op} ?x ?y) ({op} ?z ?t))", category=c))
        out.append(P(f"{name}-balance-right", f"({op} ?x ({op} ?y ({op} ?z ?t)))",
                     f"({op} ({op} ?x ?y) ({op} ?z ?t))", category=c))
    return out


@lru_cache(maxsize=1)
def catalog() -> Catalog:
    rules: list[Rule] = []
    for opname in ("add", "sub", "mul", "neg"):
        for w in ISO_WIDTHS:
            rules.append(_iso_rule(opname, w))
        rules.append(_iso_rule(opname, None))
    rules += [_noniso_rule(op) for op in ("add", "sub", "mul")]
    rules += [_rotation_reduce_rule(m) for m in REDUCE_TERMS]
    rules += [_rotation_sum_rule(m) for m in REDUCE_TERMS]
    rules += [_pack_rule(op) for op in ("add", "sub", "mul")]
    rules += _scalar_algebra()
    rules += _vector_algebra()
    rules += _balancing()
    rules += _rotation_rules()
    for i, r in enumerate(rules):
        r.index = i
    return Catalog(tuple(rules))
