"""Costs of the worked example and what each search strategy makes of it."""

from fhevec.cost import OPS_ONLY, TOY_TABLE, metrics, total_cost
from fhevec.ir import to_text
from fhevec.motivating import programs
from fhevec.search import SearchConfig, beam, greedy


def main() -> None:
    progs = programs()
    print("toy table, ops only:")
    for name, p in progs.items():
        print(f"  {name:6s} {total_cost(p, TOY_TABLE, OPS_ONLY):6.1f}")
    toy = SearchConfig(table=TOY_TABLE, weights=OPS_ONLY)
    default = SearchConfig()
    for label, cfg in (("toy", toy), ("default", default)):
        for strategy, run in (("greedy", lambda p, c: greedy(p, c)),
                              ("beam-8", lambda p, c: beam(p, 8, c))):
            r = run(progs["eq1"], cfg)
            m = metrics(r.program, cfg.table, cfg.weights)
            print(f"\n[{label} / {strategy}] {r.initial_cost} -> {r.final_cost} "
                  f"({r.steps} steps; mul {m.ct_ct_mul + m.ct_pt_mul}, rot {m.rotations})")
            print("  rules:", " ".join(t.rule for t in r.trace) or "-")
            print(" ", to_text(r.program))


if __name__ == "__main__":
    main()
