"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import math
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from fhevec.canonical import canon_key
from fhevec.corpus import BenchSpec, GenParams, gen_bench, gen_random, load_dataset
from fhevec.cost import OPS_ONLY, TOY_TABLE, metrics, total_cost
from fhevec.env import Action, Env, EnvConfig, r_final, r_step
from fhevec.ir import Const, Mul, Program, Var, Vec, to_sexpr
from fhevec.keys import naf, plan_from_omega, plan_keys
from fhevec.motivating import programs as motivating
from fhevec.policy import (Policy, TrainConfig, TrainLog, policy_optimize, run_episode,
                           surrogate, surrogate_grad, train)
from fhevec.rewrite import catalog, check_rule
from fhevec.search import SearchConfig, beam, greedy
from fhevec.semantics import equiv_prefix

from conftest import random_program


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, started):
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\nacceptance {n:2d}: {status}  {detail}  ({time.perf_counter() - started:.1f}s)")
        assert ok, detail
    return emit


def test_criterion_01_toy_costs(report):
    t0 = time.perf_counter()
    m = motivating()
    got = {k: total_cost(m[k], TOY_TABLE, OPS_ONLY) for k in ("eq1", "fig_a", "fig_b")}
    want = {"eq1": 9.1, "fig_a": 8.1, "fig_b": 10.1}
    ok = all(abs(got[k] - want[k]) <= 1e-9 for k in want) and time.perf_counter() - t0 < 1
    report(1, ok, f"toy costs {got}", t0)


def test_criterion_02_rule_soundness(report):
    t0 = time.perf_counter()
    bad, short = [], []
    for r in catalog():
        res = check_rule(r, instances=200, trials=10, seed=0, t=65537)
        if res.failures:
            bad.append((r.name, res.first_failure))
        if res.instances < 200:
            short.append(r.name)
    dt = time.perf_counter() - t0
    ok = not bad and not short and dt < 120
    report(2, ok, f"{len(catalog().rules)} rules, failing={bad[:2]}, under 200 instances={short}",
           t0)


def _criterion3_specs():
    specs = [BenchSpec(k, n) for k in ("dot-product", "hamming-distance", "l2-distance")
             for n in (4, 8, 16)]
    specs += [BenchSpec(k, 3) for k in ("box-blur", "gx", "gy", "roberts-cross", "matmul")]
    specs += [BenchSpec("max", 3)]
    specs += [BenchSpec("tree", tree=t) for t in ((100, 100, 5), (100, 50, 5), (50, 50, 5))]
    return specs


def test_criterion_03_end_to_end_safety(report):
    t0 = time.perf_counter()
    failures = []
    cfg = SearchConfig()
    for spec in _criterion3_specs():
        naive = gen_bench(spec)
        for name, res in (("greedy", greedy(naive, cfg)), ("beam", beam(naive, 8, cfg))):
            if not equiv_prefix(naive, res.program, trials=50, seed=1):
                failures.append(f"{spec.name}/{name}")
    ok = not failures and time.perf_counter() - t0 < 300
    report(3, ok, f"{len(_criterion3_specs())} kernels x 2 strategies, failures={failures}", t0)


def test_criterion_04_dot_product_shape(report):
    t0 = time.perf_counter()
    cfg = SearchConfig(beam_width=16, max_steps=75)
    rows, ok = [], True
    for n in (4, 8, 16):
        r = beam(gen_bench(BenchSpec("dot-product", n)), 16, cfg)
        m = metrics(r.program)
        lim = math.log2(n) + 1
        good = (m.ct_ct_mul + m.ct_pt_mul == 1 and m.rotations <= lim
                and m.vec_add + m.vec_sub <= lim and m.mult_depth == 1)
        ok &= good
        rows.append(f"n={n}: mul={m.ct_ct_mul + m.ct_pt_mul} rot={m.rotations} "
                    f"add={m.vec_add + m.vec_sub} md={m.mult_depth}")
    ok &= time.perf_counter() - t0 < 120
    report(4, ok, "; ".join(rows), t0)


def test_criterion_05_cost_monotonicity(report):
    t0 = time.perf_counter()
    progs = gen_random(GenParams(count=500, depth=(1, 5), width=(1, 6), seed=2024))
    cfg = SearchConfig()
    greedy_worse = beam_ok = beam_worse = 0
    for p in progs:
        g = greedy(p, cfg)
        b = beam(p, 8, cfg)
        greedy_worse += g.final_cost > g.initial_cost
        beam_ok += b.final_cost <= g.final_cost
        beam_worse += b.final_cost > b.initial_cost
    frac = beam_ok / len(progs)
    ok = (greedy_worse == 0 and beam_worse == 0 and frac >= 0.95
          and time.perf_counter() - t0 < 300)
    report(5, ok, f"500 programs: greedy worse={greedy_worse}, beam<=greedy {frac:.1%}", t0)


def test_criterion_06_naf_planner(report):
    t0 = time.perf_counter()
    listed = {1: {1}, 2: {2}, 3: {-1, 4}, 4: {4}, 5: {1, 4}, 6: {-2, 8}, 7: {-1, 8},
              9: {1, 8}, 10: {2, 8}, 12: {-4, 16}, 11: {-1, -4, 16}, 13: {1, -4, 16},
              15: {-1, 16}}
    naf_ok = all(set(naf(s)) == v and len(naf(s)) == len(v) for s, v in listed.items())
    chi = [1, 2, 3, 4, 5, 6, 7, 9, 10, 12, 11, 13, 15]
    plan = plan_keys(chi, 16, 9)
    plan.check()
    fixed = plan_from_omega(chi, 16, [1, 2, 3, 4, 5, 6, 7, 9, 12, 15], 9)
    fixed.check()
    keys_ok = fixed.keys == {10, 11, 13, 1, 2, 4, -1, -4, 8}
    ok = naf_ok and len(plan.keys) <= 9 and keys_ok and time.perf_counter() - t0 < 1
    report(6, ok, f"13 NAFs ok={naf_ok}, planner keys={sorted(plan.keys)}, "
                  f"listed-omega keys={sorted(fixed.keys)}", t0)


def test_criterion_07_rewards(report):
    t0 = time.perf_counter()
    checks = [abs(r_step(100, 90) - 0.1) <= 1e-9, abs(r_final(200, 100) - 50) <= 1e-9,
              r_step(0, 0) == 0, r_step(0, 7) == 0, r_final(0, 0) == 0, r_final(0, 3) == 0]
    env = Env(EnvConfig(max_steps=10**6))
    rng = random.Random(0)
    worst = 0.0
    for s in range(40):
        p = random_program(s)
        st = env.reset(p)
        prod = 1.0
        for _ in range(10):
            legal = [(i, j) for i, c in enumerate(env.action_mask(st)) for j in range(c)]
            if not legal:
                break
            st, r, _ = env.step(st, Action(*rng.choice(legal)))
            prod *= 1 - r
        if st.initial_cost:
            worst = max(worst, abs(prod - st.last_cost / st.initial_cost))
    checks.append(worst <= 1e-9)
    ok = all(checks) and time.perf_counter() - t0 < 1
    report(7, ok, f"formula checks={checks[:6]}, telescoping max error={worst:.2e}", t0)


def _variant(e, rng):
    names, consts = {}, {}

    def go(n):
        if isinstance(n, Var):
            if n.name not in names:
                names[n.name] = f"z{len(names)}_{rng.randrange(10**6)}"
            return Var(names[n.name], n.vkind)
        if isinstance(n, Const):
            if n.value in (0, 1):
                return n
            if n.value not in consts:
                consts[n.value] = 2 + len(consts) * 1000 + rng.randrange(999)
            return Const(consts[n.value])
        return n.with_kids([go(k) for k in n.kids])
    return go(e)


def test_criterion_08_canonical_properties(report, tmp_path):
    t0 = time.perf_counter()
    rng = random.Random(8)
    mismatches = 0
    for s in range(10_000):
        p = random_program(s)
        if canon_key(p.body) != canon_key(_variant(p.body, rng)):
            mismatches += 1
    base = gen_random(GenParams(count=60, depth=(1, 4), width=(1, 4), seed=8))
    distinct = list({canon_key(p): p for p in base}.values())
    lines = [to_sexpr(_variant(p.body, rng)) for p in distinct for _ in range(4)]
    rng.shuffle(lines)
    f = tmp_path / "copies.txt"
    f.write_text("\n".join(lines))
    survivors = len(load_dataset(f))
    ok = mismatches == 0 and survivors == len(distinct) and time.perf_counter() - t0 < 30
    report(8, ok, f"10000 variant pairs, mismatches={mismatches}; 4 copies of {len(distinct)} "
                  f"programs -> {survivors} survivors", t0)


def _grad_check():
    rng = np.random.default_rng(3)
    u = Policy.uniform()
    pol = Policy(rng.normal(0, 0.3, u.W.shape), rng.normal(0, 0.3, u.theta.shape),
                 u.catalog_version)
    batch = []
    for s in range(6):
        ep = run_episode(random_program(300 + s, width=3, depth=2), pol,
                         Env(EnvConfig(max_steps=6)), rng)
        batch += [(rec, float(rng.normal())) for rec in ep.steps]
    gW, gT = surrogate_grad(pol, batch, 0.01)
    worst, h = 0.0, 1e-6
    for arr, g in ((pol.W, gW), (pol.theta, gT)):
        for flat in np.argsort(-np.abs(g).ravel())[:25]:
            ix = np.unravel_index(flat, arr.shape)
            old = arr[ix]
            arr[ix] = old + h
            up = surrogate(pol, batch, 0.01)
            arr[ix] = old - h
            down = surrogate(pol, batch, 0.01)
            arr[ix] = old
            fd = (up - down) / (2 * h)
            worst = max(worst, abs(fd - g[ix]) / max(abs(fd) + abs(g[ix]), 1e-12))
    return worst


def test_criterion_09_policy_learning(report):
    t0 = time.perf_counter()
    corpus = gen_random(GenParams(count=200, depth=(1, 4), width=(1, 4), seed=9))
    tlog = TrainLog()
    train(corpus, TrainConfig(lr=0.01, episodes=1000, seed=9), trainlog=tlog)
    tr = tlog.terminal_rewards
    first, last = float(np.mean(tr[:100])), float(np.mean(tr[-100:]))

    single = [Var(f"x{i}") for i in range(20)]
    train_set = [Program.of(Vec(Mul(v, Const(1)))) for v in single]
    held = [Program.of(Vec(Mul(Var(f"h{i}"), Const(1)))) for i in range(20)]
    pol = train(train_set, TrainConfig(lr=0.05, episodes=400, seed=9))
    solved = sum(1 for p in held
                 if (r := policy_optimize(p, pol)).steps == 1 and r.final_cost == 0)
    worst = _grad_check()
    ok = last > first and solved == len(held) and worst <= 1e-4 and \
        time.perf_counter() - t0 < 600
    report(9, ok, f"terminal reward first100={first:.2f} last100={last:.2f}; "
                  f"held-out solved {solved}/{len(held)}; grad rel err={worst:.1e}", t0)


def _suite_csv(tmp_path, tag):
    out = tmp_path / f"{tag}.csv"
    subprocess.run([sys.executable, "-m", "fhevec.cli", "suite", "--strategies", "greedy,beam",
                    "--seed", "5", "-o", str(out)], check=True)
    lines = out.read_text().splitlines()
    col = lines[0].split(",").index("wall_time_ms")
    return [",".join(c for i, c in enumerate(ln.split(",")) if i != col) for ln in lines]


def test_criterion_10_determinism(report, tmp_path):
    t0 = time.perf_counter()
    a, b = _suite_csv(tmp_path, "a"), _suite_csv(tmp_path, "b")
    ok = a == b and len(a) > 1 and time.perf_counter() - t0 < 300
    report(10, ok, f"two suite runs, {len(a) - 1} rows each, identical={a == b}", t0)
