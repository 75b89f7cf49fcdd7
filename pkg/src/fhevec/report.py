"""Benchmark suite runner, CSV rows and cross-run comparison."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .corpus import BenchSpec, gen_bench
from .cost import metrics
from .env import EnvConfig
from .ir import Program, to_text
from .search import SearchConfig, SearchResult, beam, greedy, no_search, random_search
from .semantics import equiv_prefix


class KeyMismatch(ValueError):
    pass


@dataclass
class ReportRow:
    kernel: str
    strategy: str
    depth: int = 0
    mult_depth: int = 0
    ct_ct_mul: int = 0
    ct_pt_mul: int = 0
    rotations: int = 0
    vec_add: int = 0
    scalar_ops: int = 0
    cost_initial: float = 0.0
    cost_final: float = 0.0
    wall_time_ms: float = 0.0
    steps_taken: int = 0
    error: str = ""

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def cells(self) -> list[str]:
        out = []
        for k, v in asdict(self).items():
            if k == "wall_time_ms":
                out.append(f"{v:.3f}")
            elif isinstance(v, float):
                out.append(repr(round(v, 9)))
            else:
                out.append(str(v))
        return out


def fill_metrics(row: ReportRow, p: Program, cfg: SearchConfig) -> ReportRow:
    m = metrics(p, cfg.table, cfg.weights)
    row.depth, row.mult_depth = m.depth, m.mult_depth
    row.ct_ct_mul, row.ct_pt_mul, row.rotations = m.ct_ct_mul, m.ct_pt_mul, m.rotations
    # ciphertext additions include subtractions; both cost the same
    row.vec_add = m.vec_add + m.vec_sub
    row.scalar_ops = m.scalar_ops
    return row


def optimize(p: Program, strategy: str, cfg: SearchConfig = SearchConfig(),
             policy=None, beam_width: int | None = None) -> SearchResult:
    if strategy == "none":
        return no_search(p, cfg)
    if strategy == "greedy":
        return greedy(p, cfg)
    if strategy == "beam":
        return beam(p, beam_width, cfg)
    if strategy == "random":
        return random_search(p, cfg)
    if strategy == "policy":
        from .policy import Policy, policy_optimize
        if policy is None:
            raise ValueError("strategy 'policy' needs a policy file")
        if not isinstance(policy, Policy):
            policy = Policy.load(policy)
        t0 = time.perf_counter()
        env_cfg = EnvConfig(cfg.table, cfg.weights, cfg.max_steps)
        mode = "sample" if cfg.samples > 1 else "greedy"
        res = policy_optimize(p, policy, mode, cfg.samples, cfg.seed, env_cfg)
        res.wall_ms = (time.perf_counter() - t0) * 1000.0
        return res
    raise ValueError(f"unknown strategy {strategy!r}")


def run_row(spec: BenchSpec, strategy: str, cfg: SearchConfig, policy=None,
            out_dir: Path | None = None, check_trials: int = 50) -> ReportRow:
    row = ReportRow(spec.name, strategy)
    try:
        naive = gen_bench(spec)
        res = optimize(naive, strategy, cfg, policy)
        fill_metrics(row, res.program, cfg)
        row.cost_initial, row.cost_final = res.initial_cost, res.final_cost
        row.wall_time_ms, row.steps_taken = res.wall_ms, res.steps
        ok = equiv_prefix(naive, res.program, trials=check_trials, seed=cfg.seed)
        if not ok:
            row.error = "optimized program disagrees with naive source"
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / f"{spec.name}.{strategy}.fhe").write_text(to_text(res.program) + "\n")
    except Exception as exc:    # one bad row must not stop the suite
        row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def run_suite(specs: list[BenchSpec], strategies=("greedy",), cfg: SearchConfig = SearchConfig(),
              policy=None, out_dir: str | Path | None = None) -> list[ReportRow]:
    out = Path(out_dir) if out_dir is not None else None
    return [run_row(s, st, cfg, policy, out) for s in specs for st in strategies]


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ReportRow.header())
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


NUMERIC = ("depth", "mult_depth", "ct_ct_mul", "ct_pt_mul", "rotations", "vec_add",
           "scalar_ops", "cost_initial", "cost_final", "wall_time_ms", "steps_taken")


def geomean(xs) -> float:
    xs = list(xs)
    if not xs:
        return float("nan")
    return math.exp(sum(math.log(x) for x in xs) / len(xs))


@dataclass
class Comparison:
    ratios: dict[str, float]
    used: dict[str, int]
    skipped: dict[str, int]

    def text(self) -> str:
        lines = ["metric,geomean_ratio_b_over_a,rows_used,rows_skipped_zero"]
        for k in NUMERIC:
            r = self.ratios[k]
            lines.append(f"{k},{'nan' if math.isnan(r) else f'{r:.6g}'},"
                         f"{self.used[k]},{self.skipped[k]}")
        if any(self.skipped.values()):
            lines.append("note: rows with a zero in either file are left out of that metric")
        return "\n".join(lines)


def compare(rows_a: list[dict[str, str]], rows_b: list[dict[str, str]]) -> Comparison:
    """Per-metric geometric mean of b/a over rows present in both runs."""
    def keyed(rows):
        return {(r["kernel"], r["strategy"]): r for r in rows if not r.get("error")}
    a, b = keyed(rows_a), keyed(rows_b)
    if set(a) != set(b):
        only = sorted(set(a) ^ set(b))
        raise KeyMismatch(f"rows differ between files: {only[:5]}")
    ratios, used, skipped = {}, {}, {}
    for k in NUMERIC:
        vals, zero = [], 0
        for key in a:
            x, y = float(a[key][k]), float(b[key][k])
            if x == 0 or y == 0:
                zero += 1
            else:
                vals.append(y / x)
        ratios[k], used[k], skipped[k] = geomean(vals), len(vals), zero
    return Comparison(ratios, used, skipped)


def compare_files(path_a: str | Path, path_b: str | Path) -> Comparison:
    return compare(read_csv(path_a), read_csv(path_b))
