"""FHE-aware cost model: operation cost, circuit depth, multiplicative depth.

Operation cost is summed over *distinct* subterms, i.e. over the dataflow DAG:
a subexpression used twice is computed once. This is what makes
``V + (V << 2)`` cheaper than two separate products.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .ir import (Add, Expr, Mul, Neg, Program, RotL, Sub, VecAdd, VecMul, VecNeg,
                 VecSub, distinct_kids, parent_map, unique_nodes)


@dataclass(frozen=True)
class CostTable:
    vec_add_sub: float = 1.0
    vec_mul: float = 100.0
    rotation: float = 50.0
    scalar_add_sub: float = 250.0
    scalar_mul: float = 250.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"cost {f.name} must be >= 0")

    def price(self, n: Expr) -> float:
        t = type(n)
        if t is VecAdd or t is VecSub or t is VecNeg:
            return self.vec_add_sub
        if t is VecMul:
            return self.vec_mul
        if t is RotL:
            return self.rotation
        if t is Add or t is Sub or t is Neg:
            return self.scalar_add_sub
        if t is Mul:
            return self.scalar_mul
        return 0.0

    @classmethod
    def parse(cls, spec: str) -> CostTable:
        """``default``, ``toy`` or ``key=value,...`` (``scalar_op`` sets both scalar prices)."""
        spec = spec.strip()
        if spec in TABLES:
            return TABLES[spec]
        values = asdict(DEFAULT_TABLE)
        for item in filter(None, (s.strip() for s in spec.split(","))):
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"bad cost table entry {item!r}")
            key = key.strip()
            if key == "scalar_op":
                values["scalar_add_sub"] = values["scalar_mul"] = float(val)
            elif key in values:
                values[key] = float(val)
            else:
                raise ValueError(f"unknown cost class {key!r}")
        return cls(**values)


DEFAULT_TABLE = CostTable()
# toy latencies used to compare hand vectorizations: mul/rot 1, add 0.1
TOY_TABLE = CostTable(vec_add_sub=0.1, vec_mul=1.0, rotation=1.0,
                      scalar_add_sub=0.1, scalar_mul=1.0)
TABLES = {"default": DEFAULT_TABLE, "toy": TOY_TABLE}


@dataclass(frozen=True)
class Weights:
    ops: float = 1.0
    depth: float = 1.0
    mult: float = 1.0

    def __post_init__(self):
        if min(self.ops, self.depth, self.mult) < 0:
            raise ValueError("weights must be >= 0")

    @classmethod
    def parse(cls, spec: str) -> Weights:
        parts = [float(x) for x in spec.split(",")]
        if len(parts) != 3:
            raise ValueError("weights are three comma-separated numbers: ops,depth,mult")
        return cls(*parts)


DEFAULT_WEIGHTS = Weights()
OPS_ONLY = Weights(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class CostReport:
    c_ops: float
    depth: int
    mult_depth: int
    total: float
    vec_add: int
    ct_ct_mul: int
    ct_pt_mul: int
    rotations: int
    scalar_ops: int
    vec_sub: int
    vec_neg: int

    CSV_FIELDS = ("c_ops", "depth", "mult_depth", "total", "vec_add", "ct_ct_mul",
                  "ct_pt_mul", "rotations", "scalar_ops", "vec_sub", "vec_neg")

    def csv_row(self) -> str:
        return ",".join(_fmt(getattr(self, f)) for f in self.CSV_FIELDS)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(round(x, 9))
    return str(x)


def _body(e: Expr | Program) -> Expr:
    return e.body if isinstance(e, Program) else e


def depth(e: Expr | Program) -> int:
    """Longest count of operator nodes on a path to an input (Vec/leaves add 0)."""
    return _body(e).depth


def mult_depth(e: Expr | Program) -> int:
    """As :func:`depth`, counting only multiplications."""
    return _body(e).mult_depth


def op_cost(e: Expr | Program, table: CostTable = DEFAULT_TABLE) -> float:
    e = _body(e)
    key = ("op_cost", table)
    hit = e.memo.get(key)
    if hit is None:
        hit = e.memo[key] = round(sum(table.price(n) for n in unique_nodes(e)), 9)
    return hit


def op_cost_after(parent: Expr, child: Expr, table: CostTable = DEFAULT_TABLE) -> float:
    """``op_cost(child)`` derived from ``op_cost(parent)`` by reference counting.

    Only nodes that appear in or disappear from the DAG are visited, which is
    much cheaper than a full walk when ``child`` is a local rewrite of ``parent``.
    """
    key = ("op_cost", table)
    hit = child.memo.get(key)
    if hit is not None:
        return hit
    parents = parent_map(parent)
    total = op_cost(parent, table)
    delta: dict[int, int] = {}
    seen: set[int] = set()
    stack = [child]
    while stack:
        n = stack.pop()
        if id(n) in parents:
            delta[id(n)] = delta.get(id(n), 0) + 1
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        total += table.price(n)
        stack.extend(distinct_kids(n))
    # child's root replaces parent's root as the external reference
    work = [parent]
    delta[id(parent)] = delta.get(id(parent), 0) - 1
    dropped: set[int] = set()
    while work:
        n = work.pop()
        base = len(parents[id(n)]) + (n is parent)
        if base + delta[id(n)] > 0 or id(n) in dropped:
            continue
        dropped.add(id(n))
        total -= table.price(n)
        for k in distinct_kids(n):
            delta[id(k)] = delta.get(id(k), 0) - 1
            work.append(k)
    total = child.memo[key] = round(total, 9)
    return total


def total_cost(e: Expr | Program, table: CostTable = DEFAULT_TABLE,
               weights: Weights = DEFAULT_WEIGHTS) -> float:
    e = _body(e)
    return weights.ops * op_cost(e, table) + weights.depth * e.depth + weights.mult * e.mult_depth


def mul_class(n: Expr) -> str | None:
    """``ct_ct``, ``ct_pt`` or None (plaintext-only) for a multiplication node."""
    a, b = n.kids[0].has_cipher, n.kids[1].has_cipher
    if a and b:
        return "ct_ct"
    if a or b:
        return "ct_pt"
    return None


def metrics(p: Expr | Program, table: CostTable = DEFAULT_TABLE,
            weights: Weights = DEFAULT_WEIGHTS) -> CostReport:
    e = _body(p)
    counts = dict(vec_add=0, ct_ct_mul=0, ct_pt_mul=0, rotations=0, scalar_ops=0,
                  vec_sub=0, vec_neg=0)
    for n in unique_nodes(e):
        t = type(n)
        if t is Mul or t is VecMul:
            cls = mul_class(n)
            if cls:
                counts[cls + "_mul"] += 1
        if t in (Add, Sub, Mul, Neg):
            counts["scalar_ops"] += 1
        elif t is VecAdd:
            counts["vec_add"] += 1
        elif t is VecSub:
            counts["vec_sub"] += 1
        elif t is VecNeg:
            counts["vec_neg"] += 1
        elif t is RotL:
            counts["rotations"] += 1
    c = op_cost(e, table)
    return CostReport(c_ops=c, depth=e.depth, mult_depth=e.mult_depth,
                      total=weights.ops * c + weights.depth * e.depth + weights.mult * e.mult_depth,
                      **counts)
