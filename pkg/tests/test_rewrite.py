import random

import pytest
from hypothesis import given, settings, strategies as st

from fhevec.ir import Program, infer, parse, parse_expr, to_sexpr
from fhevec.rewrite import (FULL, PREFIX, InvalidSite, Site, all_sites, apply, catalog,
                            check_rule, match_sites, substitute, tile)
from fhevec.rewrite.check import embed
from fhevec.semantics import equiv_prefix

from conftest import programs

CAT = catalog()


def rule(name):
    return CAT.by_name(name)


def paths(name, text):
    return [s.path for s in match_sites(rule(name), parse_expr(text))]


def rewrite(name, text, ordinal=0):
    e = parse_expr(text)
    return to_sexpr(apply(rule(name), e, match_sites(rule(name), e)[ordinal]))


def test_catalog_shape():
    names = [r.name for r in CAT]
    assert len(names) == len(set(names)) >= 60
    assert [r.index for r in CAT] == list(range(len(CAT.rules)))
    assert catalog().version == CAT.version
    for n in ("mul-commutativity", "comm-factor", "rotation-reduce-4", "rot-fuse", "rot-zero",
              "const-fold", "pt-consolidate", "neg-neg", "mul-zero"):
        assert n in names
    for op in ("add", "sub", "mul", "neg"):
        for w in range(2, 9):
            assert f"iso-vectorize-{op}-{w}" in names
    for op in ("add", "sub", "mul"):
        assert f"non-iso-vectorize-{op}" in names


def test_contracts():
    assert rule("rotation-reduce-4").contract == PREFIX
    assert rule("mul-commutativity").contract == FULL
    assert {r.contract for r in CAT} == {FULL, PREFIX}


def test_preorder_sites():
    assert paths("mul-commutativity", "(* (* a b) c)") == [(), (0,)]
    assert paths("iso-vectorize-add-2", "(Vec (+ a b) (+ c d))") == [()]
    assert paths("comm-factor", "(+ a b)") == []


def test_listed_rewrites():
    assert rewrite("iso-vectorize-add-2", "(Vec (+ a b) (+ c d))") == "(VecAdd (Vec a c) (Vec b d))"
    assert (rewrite("non-iso-vectorize-mul", "(Vec (* a b) (* c d) (- f g))")
            == "(VecMul (Vec a c (- f g)) (Vec b d 1))")
    assert rewrite("comm-factor", "(+ (* x y) (* x z))") == "(* x (+ y z))"
    assert rewrite("mul-commutativity", "(* a b)") == "(* b a)"
    assert rewrite("pt-consolidate", "(* 2 (* 3 x))") == "(* 6 x)"
    assert rewrite("rot-fuse", "(<< (<< (Vec a b c) 2) 2)") == "(<< (Vec a b c) 1)"
    assert rewrite("rot-zero", "(VecAdd (<< (Vec a b) 0) (Vec c d))") == "(VecAdd (Vec a b) (Vec c d))"
    assert rewrite("mul-balance-left", "(* (* (* x y) z) t)") == "(* (* x y) (* z t))"


def test_identity_rules():
    assert rewrite("add-zero", "(+ a 0)") == "a"
    assert rewrite("mul-one", "(* a 1)") == "a"
    assert rewrite("mul-zero", "(* a 0)") == "0"
    assert rewrite("neg-neg", "(- (- a))") == "a"
    assert rewrite("const-fold", "(+ 2 3)") == "5"


def test_rotation_reduce_layout():
    naive = parse("(Vec (+ (* a b) (* c d)) (+ (* e f) (* g h)))")
    out = apply(rule("rotation-reduce-2"), naive, match_sites(rule("rotation-reduce-2"), naive)[0])
    V = "(VecMul (Vec a e c g) (Vec b f d h))"
    assert to_sexpr(out.body) == f"(VecAdd {V} (<< {V} 2))"
    assert equiv_prefix(naive, out, k=2)
    # the interleaving (Vec a c e g)/(Vec b d f h) sums the wrong pairs
    wrong = naive.replace_body(parse_expr(
        "(VecAdd (VecMul (Vec a c e g) (Vec b d f h)) (<< (VecMul (Vec a c e g) (Vec b d f h)) 2))"))
    assert not equiv_prefix(naive, wrong, k=2)


def test_rotation_reduce_4_single_slot():
    e = parse("(Vec (+ (+ (* a b) (* c d)) (+ (* e f) (* g h))))")
    r = rule("rotation-reduce-4")
    out = apply(r, e, match_sites(r, e)[0])
    assert out.body.width == 4 and out.output_width == 1
    assert equiv_prefix(e, out, k=1)
    m = {type(n).__name__ for n in _nodes(out.body)}
    assert {"VecMul", "VecAdd", "RotL"} <= m


def _nodes(e):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.kids)


def test_invalid_site():
    e = parse_expr("(* a b)")
    with pytest.raises(InvalidSite):
        apply(rule("mul-commutativity"), e, Site((0,), 0))
    with pytest.raises(InvalidSite):
        apply(rule("mul-commutativity"), e, Site((), 3))


def test_prefix_rules_only_in_slot_preserving_context():
    # a rotation would move garbage slots into the prefix
    e = parse_expr("(<< (Vec (+ (* a b) (* c d)) (+ (* e f) (* g h))) 1)")
    assert match_sites(rule("rotation-reduce-2"), e) == []
    e = parse_expr("(VecAdd (Vec (+ (* a b) (* c d)) (+ (* e f) (* g h))) (Vec x y))")
    assert [s.path for s in match_sites(rule("rotation-reduce-2"), e)] == [(0,)]


def test_widening_tiles_siblings():
    p = parse("(VecAdd (Vec (+ (* a b) (* c d)) (+ (* e f) (* g h))) (Vec x y))")
    r = rule("rotation-reduce-2")
    q = apply(r, p, match_sites(r, p)[0])
    infer(q.body)
    assert q.body.width == 4 and q.output_width == 2
    assert equiv_prefix(p, q, k=2)
    assert tile(parse_expr("(Vec x y)"), 2) == parse_expr("(Vec x y x y)")


def test_full_rule_rewrites_shared_occurrences():
    e = parse_expr("(Vec (+ (* a b) (* (* a b) c)))")
    r = rule("mul-commutativity")
    sites = match_sites(r, e)
    shared = [s for s in sites if s.path == (0, 0)][0]
    out = apply(r, e, shared)
    assert to_sexpr(out) == "(Vec (+ (* b a) (* (* b a) c)))"
    assert substitute(e, parse_expr("(* a b)"), parse_expr("(* b a)")) == out


def _random_instance(r, seed):
    rng = random.Random(seed)
    for _ in range(50):
        body = embed(r, r.sample(rng), rng)
        sites = match_sites(r, body)
        if sites:
            return body, sites, rng
    return None


@settings(max_examples=300, deadline=None)
@given(st.integers(0, len(CAT.rules) - 1), st.integers(0, 10**6))
def test_locality_and_typing(ri, seed):
    r = CAT.rules[ri]
    got = _random_instance(r, seed)
    if got is None:
        return
    body, sites, rng = got
    site = rng.choice(sites)
    out = apply(r, body, site)
    infer(out)
    # walk the path: every sibling off the path is untouched (up to tiling)
    a, b = body, out
    for i in site.path:
        for j, (ka, kb) in enumerate(zip(a.kids, b.kids)):
            if j != i:
                assert kb == ka or kb == tile(ka, kb.width // ka.width)
        a, b = a.kids[i], b.kids[i]


@settings(max_examples=100, deadline=None)
@given(programs)
def test_site_enumeration_deterministic(p: Program):
    s1 = [[x.path for x in r] for r in all_sites(CAT, p)]
    s2 = [[x.path for x in match_sites(r, p)] for r in CAT]
    assert s1 == s2


@settings(max_examples=60, deadline=None)
@given(programs, st.integers(0, 10**6))
def test_random_application_sound(p: Program, seed):
    rng = random.Random(seed)
    q = p
    for _ in range(6):
        choices = [(r, s) for r, sites in zip(CAT.rules, all_sites(CAT, q)) for s in sites]
        if not choices:
            break
        r, s = rng.choice(choices)
        q = apply(r, q, s)
        infer(q.body)
    assert equiv_prefix(p, q, k=p.output_width, trials=10, seed=seed)


def test_every_rule_sound_smoke():
    for r in CAT:
        res = check_rule(r, instances=20, trials=5, seed=11)
        assert res.ok, (r.name, res.first_failure)
