import pytest
from hypothesis import given, settings

from fhevec.corpus import dot_product
from fhevec.cost import OPS_ONLY, TOY_TABLE, metrics
from fhevec.ir import parse, to_text
from fhevec.motivating import programs as motivating
from fhevec.report import optimize
from fhevec.search import SearchConfig, beam, greedy, no_search, random_search
from fhevec.semantics import equiv_prefix

from conftest import programs, random_program

OPS = SearchConfig(weights=OPS_ONLY)
TOY = SearchConfig(table=TOY_TABLE, weights=OPS_ONLY)


def test_greedy_identity():
    r = greedy(parse("(Vec (* a 1))"), OPS)
    assert to_text(r.program) == "(Vec a)"
    assert (r.initial_cost, r.final_cost) == (250, 0)
    assert [t.rule for t in r.trace] == ["mul-one"]


def test_greedy_already_minimal():
    p = parse("(Vec a)")
    r = greedy(p)
    assert r.program == p and r.trace == [] and r.steps == 0


def test_greedy_trapped_beam_escapes():
    eq1 = motivating()["eq1"]
    g = greedy(eq1, TOY)
    assert g.final_cost == pytest.approx(9.1)
    b = beam(eq1, 4, TOY)
    assert b.final_cost <= 8.1 + 1e-9
    rules = [t.rule for t in b.trace]
    # the factoring step only becomes available after a commutation
    assert rules.index("mul-commutativity") < rules.index("comm-factor")
    assert equiv_prefix(eq1, b.program)


def test_beam_width_one_close_to_greedy():
    for s in range(30):
        p = random_program(s)
        assert beam(p, 1).final_cost <= greedy(p).final_cost


def test_beam_rejects_zero_width():
    with pytest.raises(ValueError):
        beam(parse("(Vec a)"), 0)


def test_beam_dot_product_8():
    r = beam(dot_product(8), 16, SearchConfig(beam_width=16))
    m = metrics(r.program)
    assert m.ct_ct_mul + m.ct_pt_mul == 1 and m.rotations <= 4 and m.vec_add <= 4


def test_width_monotone_along_doubling():
    for s in range(40):
        p = random_program(s, depth=min(3, s % 4))
        costs = [beam(p, w).final_cost for w in (1, 2, 4, 8)]
        assert costs == sorted(costs, reverse=True), (s, costs)


def test_deterministic():
    p = random_program(7, width=4, depth=3)
    a, b = beam(p, 4), beam(p, 4)
    assert a.program == b.program and [t.line() for t in a.trace] == [t.line() for t in b.trace]
    r1, r2 = random_search(p, SearchConfig(seed=3)), random_search(p, SearchConfig(seed=3))
    assert r1.program == r2.program


def test_trace_reproduces_costs():
    p = motivating()["eq1"]
    r = greedy(p)
    assert r.trace[-1].cost_after == r.final_cost
    assert all(t.reward > 0 for t in r.trace)


def test_no_search():
    p = random_program(1)
    r = no_search(p)
    assert r.program is p and r.initial_cost == r.final_cost


def test_optimize_dispatch():
    p = parse("(Vec (* a 1))")
    for s in ("none", "greedy", "beam", "random"):
        assert optimize(p, s).final_cost <= optimize(p, "none").final_cost
    with pytest.raises(ValueError):
        optimize(p, "policy")
    with pytest.raises(ValueError):
        optimize(p, "simulated-annealing")


@settings(max_examples=40, deadline=None)
@given(programs)
def test_strategies_safe_and_never_worse(p):
    cfg = SearchConfig(samples=4)
    g = greedy(p, cfg)
    b = beam(p, 4, cfg)
    r = random_search(p, cfg)
    for res in (g, b, r):
        assert res.final_cost <= res.initial_cost
        assert equiv_prefix(p, res.program, k=p.output_width, trials=10)
        assert res.final_cost == pytest.approx(cfg.cost(res.program))
    assert b.final_cost <= g.final_cost
