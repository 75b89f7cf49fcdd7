import pytest
from hypothesis import given, settings

from fhevec.corpus import dot_product
from fhevec.cost import (DEFAULT_TABLE, OPS_ONLY, TOY_TABLE, CostTable, Weights, depth,
                         metrics, mult_depth, op_cost, op_cost_after, total_cost)
from fhevec.ir import parse, parse_expr
from fhevec.motivating import programs as motivating
from fhevec.rewrite import catalog
from fhevec.rewrite.core import all_sites, apply_path

from conftest import programs, random_program


def test_depth_examples():
    assert depth(parse_expr("a")) == 0
    assert depth(parse_expr("(* a (* b c))")) == 2
    assert depth(motivating()["eq1"]) == 4


def test_mult_depth_examples():
    assert mult_depth(parse_expr("(+ a (+ b c))")) == 0
    assert mult_depth(parse_expr("(* a (* b c))")) == 2
    x, y, z, t = "(Vec x)", "(Vec y)", "(Vec z)", "(Vec t)"
    bal = parse_expr(f"(VecMul (VecMul {x} {y}) (VecMul {z} {t}))")
    chain = parse_expr(f"(VecMul (VecMul (VecMul {x} {y}) {z}) {t})")
    assert mult_depth(bal) == 2 and mult_depth(chain) == 3


def test_toy_golden():
    m = motivating()
    for name, want in (("eq1", 9.1), ("fig_a", 8.1), ("fig_b", 10.1)):
        assert total_cost(m[name], TOY_TABLE, OPS_ONLY) == pytest.approx(want, abs=1e-9)


def test_weights():
    e = parse_expr("(* a (* b c))")
    assert total_cost(e, DEFAULT_TABLE, Weights(1, 0, 0)) == op_cost(e)
    assert total_cost(e, DEFAULT_TABLE, Weights(0, 1, 0)) == 2
    assert total_cost(parse_expr("(VecMul (Vec a b) (Vec c d))")) == 102


def test_metrics_dot_product():
    m = metrics(dot_product(4))
    assert m.scalar_ops == 7 and m.mult_depth == 1


def test_ct_pt_classification():
    m = metrics(parse("(VecMul (Vec a b) (Vec 1 1))"))
    assert (m.ct_pt_mul, m.ct_ct_mul) == (1, 0)
    m = metrics(parse("(program (inputs (ct a) (pt w)) (output-width 1) (Vec (* a w) (* w w)))"))
    assert (m.ct_pt_mul, m.ct_ct_mul) == (1, 0)
    m = metrics(parse("(VecMul (Vec a b) (Vec c d))"))
    assert (m.ct_pt_mul, m.ct_ct_mul) == (0, 1)


def test_shared_nodes_counted_once():
    e = parse_expr("(+ (* a b) (* a b))")
    assert op_cost(e) == 500


def test_table_parse():
    assert CostTable.parse("toy") is TOY_TABLE
    t = CostTable.parse("rotation=7,scalar_op=3")
    assert (t.rotation, t.scalar_add_sub, t.scalar_mul, t.vec_mul) == (7, 3, 3, 100)
    with pytest.raises(ValueError):
        CostTable.parse("bogus=1")
    with pytest.raises(ValueError):
        CostTable(rotation=-1)
    assert Weights.parse("1,2,3") == Weights(1, 2, 3)
    with pytest.raises(ValueError):
        Weights.parse("1,2")


@settings(max_examples=200, deadline=None)
@given(programs)
def test_report_identity(p):
    m = metrics(p)
    assert m.mult_depth <= m.depth
    assert m.total == pytest.approx(m.c_ops + m.depth + m.mult_depth, abs=1e-9)
    assert m.total == pytest.approx(total_cost(p), abs=1e-9)


def _op_nodes(e):
    return {id(n) for n in _walk(e) if n.kids}


def _walk(e):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.kids)


def test_additive_over_disjoint_subtrees():
    checked = 0
    for s in range(400):
        e = random_program(s).body
        if len(e.kids) != 2 or not e.kids[0].kids:
            continue
        a, b = e.kids
        if _op_nodes(a) & _op_nodes(b):
            continue
        assert op_cost(e) == pytest.approx(DEFAULT_TABLE.price(e) + op_cost(a) + op_cost(b))
        checked += 1
    assert checked > 20


def test_vectorizing_strictly_cheaper():
    for k in range(2, 9):
        scalar = parse("(Vec " + " ".join(f"(+ a{i} b{i})" for i in range(k)) + ")")
        vec = parse("(VecAdd (Vec " + " ".join(f"a{i}" for i in range(k)) + ") (Vec "
                    + " ".join(f"b{i}" for i in range(k)) + "))")
        assert op_cost(vec) < op_cost(scalar)
        scalar = parse("(Vec " + " ".join(f"(* a{i} b{i})" for i in range(k)) + ")")
        vec = parse("(VecMul (Vec " + " ".join(f"a{i}" for i in range(k)) + ") (Vec "
                    + " ".join(f"b{i}" for i in range(k)) + "))")
        assert op_cost(vec) < op_cost(scalar)


def test_incremental_cost_matches_full_walk():
    cat = catalog()
    n = 0
    for s in range(150):
        body = random_program(s, width=4).body
        for rule, sites in zip(cat.rules, all_sites(cat, body)):
            for site in sites[:2]:
                child = apply_path(rule, body, site.path)
                # fresh table instance so memoised totals do not short-circuit
                t = CostTable(vec_add_sub=1.0 + 1e-3 * s)
                want = round(sum(t.price(x) for x in _unique(child)), 9)
                assert op_cost_after(body, child, t) == pytest.approx(want, abs=1e-6)
                n += 1
    assert n > 100


def _unique(e):
    from fhevec.ir import unique_nodes
    return unique_nodes(e)
