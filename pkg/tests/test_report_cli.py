import csv
import io
import math

import pytest

from fhevec.cli import main
from fhevec.corpus import BenchSpec, gen_bench
from fhevec.cost import metrics
from fhevec.ir import parse
from fhevec.report import (KeyMismatch, ReportRow, compare, geomean, read_csv, rows_to_csv,
                           run_suite)
from fhevec.search import SearchConfig
from fhevec.semantics import equiv_prefix


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_header_order():
    assert ReportRow.header()[:9] == ["kernel", "strategy", "depth", "mult_depth", "ct_ct_mul",
                                      "ct_pt_mul", "rotations", "vec_add", "scalar_ops"]


def test_suite_rows_consistent(tmp_path):
    specs = [BenchSpec("dot-product", n) for n in (4, 8, 16)]
    rows = run_suite(specs, ["none", "beam"], SearchConfig(), out_dir=tmp_path)
    assert len(rows) == 6 and not any(r.error for r in rows)
    for r, spec in zip(rows[0::2], specs):
        assert r.strategy == "none" and r.cost_final == r.cost_initial
    for r, spec in zip(rows[1::2], specs):
        assert r.ct_ct_mul == 1
        prog = parse((tmp_path / f"{spec.name}.beam.fhe").read_text())
        m = metrics(prog)
        assert (r.depth, r.mult_depth, r.ct_ct_mul, r.ct_pt_mul, r.rotations, r.scalar_ops) == \
            (m.depth, m.mult_depth, m.ct_ct_mul, m.ct_pt_mul, m.rotations, m.scalar_ops)
        assert r.vec_add == m.vec_add + m.vec_sub
        assert equiv_prefix(gen_bench(spec), prog, trials=50)


def test_failing_row_is_recorded():
    rows = run_suite([BenchSpec("matmul", 100), BenchSpec("dot-product", 2)], ["greedy"])
    assert rows[0].error and not rows[1].error


def test_geomean():
    assert geomean([2, 8]) == pytest.approx(4.0)
    assert math.isnan(geomean([]))


def test_compare():
    rows = [ReportRow("k1", "beam", cost_initial=10, cost_final=8, depth=2),
            ReportRow("k2", "beam", cost_initial=20, cost_final=4, depth=3)]
    a = _rows(rows_to_csv(rows))
    same = compare(a, a)
    assert all(v == pytest.approx(1.0) for k, v in same.ratios.items() if same.used[k])
    b = _rows(rows_to_csv([ReportRow(r.kernel, r.strategy, cost_initial=r.cost_initial,
                                     cost_final=r.cost_final / 2, depth=r.depth) for r in rows]))
    c = compare(a, b)
    assert c.ratios["cost_final"] == pytest.approx(0.5)
    assert c.skipped["rotations"] == 2 and "zero" in c.text()
    with pytest.raises(KeyMismatch):
        compare(a, a[:1])


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_cost_canon_eval(tmp_path, capsys):
    f = tmp_path / "p.fhe"
    f.write_text("(Vec (+ a (* b c)))\n(Vec (+ x (* y z)))\n")
    code, out, _ = run(capsys, "cost", str(f), "--header")
    assert code == 0 and out.splitlines()[0].startswith("c_ops,depth")
    assert len(out.splitlines()) == 3
    code, out, _ = run(capsys, "canon", str(f))
    assert out.splitlines() == ["(Vec (+ v0 (* v1 v2)))"] * 2
    single = tmp_path / "s.fhe"
    single.write_text("(Vec (+ a b) (* a b))")
    inputs = tmp_path / "in.txt"
    inputs.write_text("a=3\nb=5\n")
    code, out, _ = run(capsys, "eval", str(single), "--inputs", str(inputs))
    assert (code, out.strip()) == (0, "8 15")
    code, out, _ = run(capsys, "cost", str(single), "--table", "toy", "--weights", "1,0,0")
    assert out.split(",")[0] == "1.1"


def test_cli_optimize(tmp_path, capsys):
    f = tmp_path / "p.fhe"
    f.write_text("(Vec (+ a b) (+ c d))\n")
    code, out, err = run(capsys, "optimize", str(f), "--strategy", "greedy", "--trace")
    assert code == 0 and "VecAdd" in out
    assert err.splitlines()[0].startswith("1,iso-vectorize-add-2,0,")


def test_cli_fatal_and_partial(tmp_path, capsys):
    code, _, err = run(capsys, "cost", str(tmp_path / "missing.fhe"))
    assert code == 1 and "error" in err
    bad = tmp_path / "bad.fhe"
    bad.write_text("(Vec (+ a\n")
    assert run(capsys, "cost", str(bad))[0] == 1
    code, out, _ = run(capsys, "suite", "--kernels", "dot-product:4,matmul:100",
                       "--strategies", "greedy")
    assert code == 2 and len(_rows(out)) == 2


def test_cli_rules_and_keys(capsys):
    code, out, _ = run(capsys, "rules", "list")
    assert code == 0 and len(out.splitlines()) >= 60
    code, out, _ = run(capsys, "rules", "check", "--instances", "10", "--trials", "3",
                       "--only", "comm-factor,rotation-reduce-4")
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = run(capsys, "keys", "--steps", "1,2,3,4,5,6,7,9,10,12,11,13,15", "--slots",
                       "16", "--beta", "9", "--omega", "1,2,3,4,5,6,7,9,12,15")
    assert "key_count: 9" in out


def test_cli_gen_train_compare(tmp_path, capsys):
    data = tmp_path / "d.txt"
    assert run(capsys, "gen", "random", "--count", "12", "--depth", "1-2", "--width", "1-2",
               "-o", str(data))[0] == 0
    assert len(data.read_text().splitlines()) == 12
    code, out, _ = run(capsys, "gen", "bench", "dot-product", "--n", "4")
    assert code == 0 and parse(out) == gen_bench(BenchSpec("dot-product", 4))
    pol = tmp_path / "p.wts"
    code, out, _ = run(capsys, "train", "--dataset", str(data), "--episodes", "16",
                       "--out", str(pol))
    assert code == 0 and pol.exists() and "episodes=16" in out
    code, out, _ = run(capsys, "optimize", str(data), "--strategy", "policy", "--policy",
                       str(pol))
    assert code == 0 and len(out.splitlines()) == 12
    a = tmp_path / "a.csv"
    run(capsys, "suite", "--kernels", "dot-product:4", "--strategies", "none,greedy", "-o", str(a))
    assert len(read_csv(a)) == 2
    code, out, _ = run(capsys, "compare", str(a), str(a))
    assert code == 0 and "cost_final,1," in out
