import random

from hypothesis import strategies as st

from fhevec.ir import Program
from fhevec.randexpr import RandomExprs


def random_program(seed: int, width: int | None = None, depth: int | None = None,
                   p_plain: float = 0.2) -> Program:
    rng = random.Random(seed)
    g = RandomExprs(rng, n_vars=6, p_const=0.2, p_plain=p_plain)
    w = width or rng.randint(1, 6)
    d = rng.randint(0, 4) if depth is None else depth
    return Program.of(g.vector(w, d))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
programs = seeds.map(random_program)
