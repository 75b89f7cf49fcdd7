"""Program sources: random generation, dataset files and benchmark kernels."""

from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .canonical import canon_key
from .ir import (Add, Const, Expr, IRTypeError, Mul, Neg, ParseError, Program, Sub, Var, Vec,
                 parse)
from .randexpr import RandomExprs

log = logging.getLogger(__name__)


class FileUnreadable(OSError):
    pass


class UnsupportedSpec(ValueError):
    pass


@dataclass(frozen=True)
class GenParams:
    count: int = 100
    depth: tuple[int, int] = (1, 15)
    width: tuple[int, int] = (1, 32)
    seed: int = 0
    n_vars: int = 12
    p_const: float = 0.1
    p_plain: float = 0.1
    op_weights: tuple[float, float, float, float] = (4, 2, 4, 1)   # + - * neg

    def __post_init__(self):
        for lo, hi in (self.depth, self.width):
            if lo > hi:
                raise ValueError("empty range")
        if self.depth[0] < 0 or self.width[0] < 1 or self.count < 0:
            raise ValueError("depth must be >= 0, width >= 1, count >= 0")


def gen_random(params: GenParams) -> list[Program]:
    """Scalar programs ``(Vec e1 .. ew)`` cycling through every (depth, width) pair.

    One element of each program has exactly the target depth; the others are
    shallower. Samples without any ciphertext input are redrawn.
    """
    rng = random.Random(params.seed)
    combos = list(itertools.product(range(params.depth[0], params.depth[1] + 1),
                                    range(params.width[0], params.width[1] + 1)))
    rng.shuffle(combos)
    out: list[Program] = []
    for i in range(params.count):
        d, w = combos[i % len(combos)]
        for _ in range(100):
            g = RandomExprs(rng, n_vars=params.n_vars, p_const=params.p_const,
                            p_plain=params.p_plain, op_weights=params.op_weights)
            elems = [g.scalar(d, True)] + [g.scalar(rng.randint(min(d, params.depth[0]), d), True)
                                           for _ in range(w - 1)]
            rng.shuffle(elems)
            body = Vec(*elems)
            if body.has_cipher:
                break
        out.append(Program.of(body))
    return out


def load_dataset(path: str | Path, exclusion: list[Program] = (),
                 stats: dict | None = None) -> list[Program]:
    """One program per line; bad lines, duplicates and excluded programs are dropped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    banned = {canon_key(p) for p in exclusion}
    seen: set[str] = set()
    out: list[Program] = []
    counts = dict(lines=0, unparsable=0, duplicate=0, excluded=0)
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        counts["lines"] += 1
        try:
            p = parse(line)
        except (ParseError, IRTypeError, RecursionError):
            counts["unparsable"] += 1
            continue
        key = canon_key(p)
        if key in banned:
            counts["excluded"] += 1
        elif key in seen:
            counts["duplicate"] += 1
        else:
            seen.add(key)
            out.append(p)
    if counts["unparsable"]:
        log.warning("%s: dropped %d unparsable line(s)", path, counts["unparsable"])
    if stats is not None:
        stats.update(counts)
    return out


# ---------------------------------------------------------------------------
# benchmark kernels (naive scalar formulations)

KERNELS = ("dot-product", "hamming-distance", "l2-distance", "linear-regression",
           "polynomial-regression", "box-blur", "gx", "gy", "roberts-cross", "matmul", "max",
           "sort", "tree")


@dataclass(frozen=True)
class BenchSpec:
    kernel: str
    n: int = 4
    tree: tuple[int, int, int] = (100, 100, 5)    # fullness %, majority-op %, depth
    seed: int = 0

    @property
    def name(self) -> str:
        if self.kernel == "tree":
            x, y, z = self.tree
            return f"tree-{x}-{y}-{z}"
        if self.kernel in ("box-blur", "gx", "gy", "roberts-cross", "matmul"):
            return f"{self.kernel}-{self.n}x{self.n}"
        return f"{self.kernel}-{self.n}"

    @classmethod
    def parse(cls, text: str) -> BenchSpec:
        """``dot-product:8``, ``gx:3``, ``tree:100-50-5``."""
        kernel, _, arg = text.partition(":")
        if kernel == "tree":
            parts = tuple(int(x) for x in arg.split("-")) if arg else (100, 100, 5)
            if len(parts) != 3:
                raise UnsupportedSpec("tree takes X-Y-Z")
            return cls("tree", tree=parts)
        return cls(kernel, int(arg) if arg else 4)


def _vars(prefix: str, n: int) -> list[Var]:
    return [Var(f"{prefix}{i}") for i in range(n)]


def _sum(terms: list[Expr]) -> Expr:
    acc = terms[0]
    for t in terms[1:]:
        acc = Add(acc, t)
    return acc


def _program(outputs: list[Expr]) -> Program:
    return Program.of(Vec(*outputs))


def dot_product(n: int) -> Program:
    a, b = _vars("a", n), _vars("b", n)
    return _program([_sum([Mul(x, y) for x, y in zip(a, b)])])


def hamming_distance(n: int) -> Program:
    a, b = _vars("a", n), _vars("b", n)
    return _program([_sum([Sub(Add(x, y), Mul(Const(2), Mul(x, y))) for x, y in zip(a, b)])])


def l2_distance(n: int) -> Program:
    a, b = _vars("a", n), _vars("b", n)
    terms = []
    for x, y in zip(a, b):
        d = Sub(x, y)
        terms.append(Mul(d, d))
    return _program([_sum(terms)])


def linear_regression(n: int) -> Program:
    """Residuals y_i - (w * x_i + b)."""
    x, y = _vars("x", n), _vars("y", n)
    w, b = Var("w"), Var("b")
    return _program([Sub(yi, Add(Mul(w, xi), b)) for xi, yi in zip(x, y)])


def polynomial_regression(n: int) -> Program:
    """Residuals y_i - (a * x_i * x_i + b * x_i + c)."""
    x, y = _vars("x", n), _vars("y", n)
    a, b, c = Var("a"), Var("b"), Var("c")
    return _program([Sub(yi, Add(Add(Mul(Mul(a, xi), xi), Mul(b, xi)), c))
                     for xi, yi in zip(x, y)])


def _grid(n: int) -> list[list[Var]]:
    return [[Var(f"p{i}_{j}") for j in range(n)] for i in range(n)]


def _weighted(terms: list[tuple[int, Expr]]) -> Expr:
    """Signed sum; coefficients of magnitude > 1 become constant multiplies."""
    def mag(c: int, e: Expr) -> Expr:
        return e if abs(c) == 1 else Mul(Const(abs(c)), e)
    terms = [t for t in terms if t[0] != 0]
    if not terms:
        return Const(0)
    terms.sort(key=lambda t: t[0] < 0)          # start from a positive term when possible
    c0, e0 = terms[0]
    acc = mag(c0, e0) if c0 > 0 else Neg(mag(c0, e0))
    for c, e in terms[1:]:
        acc = Add(acc, mag(c, e)) if c > 0 else Sub(acc, mag(c, e))
    return acc


def _stencil(n: int, kernel: list[list[int]]) -> Program:
    p = _grid(n)
    outs = []
    for i in range(n):
        for j in range(n):
            terms = []
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < n and 0 <= jj < n:
                        terms.append((kernel[di + 1][dj + 1], p[ii][jj]))
            outs.append(_weighted(terms))
    return _program(outs)


BLUR = [[1, 1, 1], [1, 1, 1], [1, 1, 1]]
GX = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]
GY = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]]


def roberts_cross(n: int) -> Program:
    p = _grid(n)
    outs = []
    for i in range(n - 1):
        for j in range(n - 1):
            d1 = Sub(p[i][j], p[i + 1][j + 1])
            d2 = Sub(p[i + 1][j], p[i][j + 1])
            outs.append(Add(Mul(d1, d1), Mul(d2, d2)))
    return _program(outs)


def matmul(n: int) -> Program:
    a = [[Var(f"a{i}_{k}") for k in range(n)] for i in range(n)]
    b = [[Var(f"b{k}_{j}") for j in range(n)] for k in range(n)]
    return _program([_sum([Mul(a[i][k], b[k][j]) for k in range(n)])
                     for i in range(n) for j in range(n)])


def _select(s: Expr, x: Expr, y: Expr) -> Expr:
    """``x if s == 1 else y`` for a 0/1 selector: y + s * (x - y)."""
    return Add(y, Mul(s, Sub(x, y)))


def max_kernel(n: int) -> Program:
    """Running maximum; selector s_k is the (encrypted) comparison bit x_k > m_{k-1}."""
    x, s = _vars("x", n), _vars("s", n)
    m: Expr = x[0]
    for k in range(1, n):
        m = _select(s[k], x[k], m)
    return _program([m])


def sort_kernel(n: int) -> Program:
    """Bubble-sort network; selector c_k is the comparison bit of comparator k."""
    vals: list[Expr] = list(_vars("x", n))
    k = 0
    for i in range(n - 1):
        for j in range(n - 1 - i):
            c = Var(f"c{k}")
            k += 1
            a, b = vals[j], vals[j + 1]
            lo = _select(c, a, b)                 # c = 1 iff a < b
            vals[j], vals[j + 1] = lo, Sub(Add(a, b), lo)
    return _program(vals)


def tree_kernel(fullness: int, homogeneity: int, depth: int, seed: int = 0) -> Program:
    """Random tree of the given depth.

    ``fullness``% of internal nodes get two internal children (100 gives a full,
    complete tree); ``homogeneity``% of nodes use the majority operator (*).
    """
    rng = random.Random(f"tree-{fullness}-{homogeneity}-{depth}-{seed}")
    counter = itertools.count()

    def leaf() -> Expr:
        return Var(f"t{next(counter)}")

    def node(d: int) -> Expr:
        if d == 0:
            return leaf()
        op = Mul if rng.random() * 100 < homogeneity else Add
        if rng.random() * 100 < fullness:
            return op(node(d - 1), node(d - 1))
        deep, shallow = node(d - 1), leaf()
        return op(deep, shallow) if rng.random() < 0.5 else op(shallow, deep)

    return _program([node(depth)])


_SIZE = {"dot-product": (1, 1024), "hamming-distance": (1, 1024), "l2-distance": (1, 1024),
         "linear-regression": (1, 256), "polynomial-regression": (1, 256), "box-blur": (1, 16),
         "gx": (1, 16), "gy": (1, 16), "roberts-cross": (2, 16), "matmul": (1, 8),
         "max": (1, 64), "sort": (2, 8)}


def gen_bench(b: BenchSpec) -> Program:
    if b.kernel not in KERNELS:
        raise UnsupportedSpec(f"unknown kernel {b.kernel!r}")
    if b.kernel == "tree":
        x, y, z = b.tree
        if not (0 <= x <= 100 and 0 <= y <= 100 and 0 <= z <= 10):
            raise UnsupportedSpec("tree needs X, Y in [0, 100] and depth in [0, 10]")
        return tree_kernel(x, y, z, b.seed)
    lo, hi = _SIZE[b.kernel]
    if not lo <= b.n <= hi:
        raise UnsupportedSpec(f"{b.kernel} supports n in [{lo}, {hi}]")
    build = {"dot-product": dot_product, "hamming-distance": hamming_distance,
             "l2-distance": l2_distance, "linear-regression": linear_regression,
             "polynomial-regression": polynomial_regression,
             "box-blur": lambda n: _stencil(n, BLUR), "gx": lambda n: _stencil(n, GX),
             "gy": lambda n: _stencil(n, GY), "roberts-cross": roberts_cross,
             "matmul": matmul, "max": max_kernel, "sort": sort_kernel}[b.kernel]
    return build(b.n)


def default_suite() -> list[BenchSpec]:
    specs = [BenchSpec(k, n) for k in ("dot-product", "hamming-distance", "l2-distance")
             for n in (4, 8, 16)]
    specs += [BenchSpec(k, 3) for k in ("box-blur", "gx", "gy", "roberts-cross", "matmul")]
    specs += [BenchSpec("linear-regression", 4), BenchSpec("polynomial-regression", 4),
              BenchSpec("max", 3), BenchSpec("sort", 3)]
    specs += [BenchSpec("tree", tree=t) for t in ((100, 100, 5), (100, 50, 5), (50, 50, 5))]
    return specs


__all__ = ["GenParams", "BenchSpec", "FileUnreadable", "UnsupportedSpec", "gen_random",
           "load_dataset", "gen_bench", "default_suite", "KERNELS"]
