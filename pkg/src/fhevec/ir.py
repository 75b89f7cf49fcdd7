"""Expression IR for slot-vectorized arithmetic circuits.

Nodes are immutable and hash-consed: building the same tree twice returns the
same object, so structural equality is (almost always) identity and shared
subterms of a rewritten program are shared in memory as well.
"""

from __future__ import annotations

import enum
import re
import threading
import weakref
from dataclasses import dataclass
from functools import lru_cache
from typing import ClassVar, Iterator, Sequence

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class ParseError(ValueError):
    """Malformed S-expression source (unbalanced parens, unknown operator...)."""


class ArityError(ParseError):
    """An operator received the wrong number of operands."""


class IRTypeError(TypeError):
    """A kind or width violation. ``path`` locates the offending node."""

    def __init__(self, message: str, path: tuple[int, ...] = ()):
        super().__init__(message if not path else f"{message} (at path {list(path)})")
        self.path = path


class VarKind(enum.Enum):
    CIPHER = "ct"
    PLAIN = "pt"


@dataclass(frozen=True)
class Kind:
    """Scalar (``width is None``) or a vector of ``width`` slots."""

    width: int | None = None

    @property
    def is_scalar(self) -> bool:
        return self.width is None

    def __str__(self) -> str:
        return "Scalar" if self.width is None else f"Vector({self.width})"


SCALAR = Kind()


def Vector(width: int) -> Kind:  # noqa: N802 - reads like a type constructor
    return Kind(width)


# ---------------------------------------------------------------------------
# nodes

_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_INTERN_LOCK = threading.Lock()


class Expr:
    """Base class of all IR nodes.

    Cached per node (all derived bottom-up at construction):
    ``width`` (None for scalars), ``depth``, ``mult_depth``, ``size`` (tree
    node count) and ``has_cipher`` (some leaf below is a ciphertext variable).
    """

    __slots__ = ("kids", "width", "depth", "mult_depth", "size", "has_cipher",
                 "_hash", "memo", "__weakref__")

    op: ClassVar[str] = ""
    is_operator: ClassVar[bool] = True
    is_mul: ClassVar[bool] = False

    kids: tuple[Expr, ...]
    width: int | None

    @staticmethod
    def _interned(key: tuple, build) -> Expr:
        node = _INTERN.get(key)
        if node is not None:
            return node
        node = build()
        with _INTERN_LOCK:
            return _INTERN.setdefault(key, node)

    def _finish(self, kids: tuple[Expr, ...], width: int | None, payload: tuple) -> None:
        self.kids = kids
        self.width = width
        own = 1 if self.is_operator else 0
        if kids:
            self.depth = own + max(k.depth for k in kids)
            self.mult_depth = (1 if self.is_mul else 0) + max(k.mult_depth for k in kids)
            self.size = 1 + sum(k.size for k in kids)
            self.has_cipher = any(k.has_cipher for k in kids)
        else:
            self.depth = 0
            self.mult_depth = 0
            self.size = 1
            self.has_cipher = False
        self._hash = hash((type(self).__name__, payload, tuple(k._hash for k in kids)))
        self.memo = {}

    # payload distinguishes nodes of one class beyond their children
    def payload(self) -> tuple:
        return ()

    @property
    def kind(self) -> Kind:
        return Kind(self.width)

    @property
    def is_scalar(self) -> bool:
        return self.width is None

    def with_kids(self, kids: Sequence[Expr]) -> Expr:
        return type(self)(*kids)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return (type(self) is type(other) and self.payload() == other.payload()
                and self.kids == other.kids)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {to_sexpr(self)}>"

    def __str__(self) -> str:
        return to_sexpr(self)

    def __reduce__(self):
        return (from_sexpr, (to_sexpr(self), _var_kinds(self)))


def _var_kinds(e: Expr) -> dict[str, VarKind]:
    return {v.name: v.vkind for v in free_vars(e)}


class Var(Expr):
    __slots__ = ("name", "vkind")
    is_operator = False

    def __new__(cls, name: str, vkind: VarKind = VarKind.CIPHER):
        def build():
            self = object.__new__(cls)
            self.name = name
            self.vkind = vkind
            self._finish((), None, (name, vkind.value))
            self.has_cipher = vkind is VarKind.CIPHER
            return self
        return Expr._interned((cls, name, vkind), build)

    def payload(self) -> tuple:
        return (self.name, self.vkind)

    def with_kids(self, kids):
        return self


class Const(Expr):
    __slots__ = ("value",)
    is_operator = False

    def __new__(cls, value: int):
        if type(value) is not int:
            raise IRTypeError(f"constant must be an int, got {value!r}")
        if not INT64_MIN <= value <= INT64_MAX:
            raise IRTypeError(f"constant {value} does not fit in 64 bits")

        def build():
            self = object.__new__(cls)
            self.value = value
            self._finish((), None, (value,))
            return self
        return Expr._interned((cls, value), build)

    def payload(self) -> tuple:
        return (self.value,)

    def with_kids(self, kids):
        return self


def _need_scalar(op: str, kid: Expr, index: int) -> None:
    if kid.width is not None:
        raise IRTypeError(f"{op} expects scalar operands, operand {index} is {kid.kind}", (index,))


def _need_vector(op: str, kid: Expr, index: int) -> int:
    if kid.width is None:
        raise IRTypeError(f"{op} expects vector operands, operand {index} is Scalar", (index,))
    return kid.width


class _Unary(Expr):
    __slots__ = ()
    vector: ClassVar[bool] = False

    def __new__(cls, child: Expr):
        if cls.vector:
            width = _need_vector(cls.op, child, 0)
        else:
            _need_scalar(cls.op, child, 0)
            width = None

        def build():
            self = object.__new__(cls)
            self._finish((child,), width, ())
            return self
        return Expr._interned((cls, id(child)), build)

    @property
    def child(self) -> Expr:
        return self.kids[0]


class _Binary(Expr):
    __slots__ = ()
    vector: ClassVar[bool] = False

    def __new__(cls, left: Expr, right: Expr):
        if cls.vector:
            wl = _need_vector(cls.op, left, 0)
            wr = _need_vector(cls.op, right, 1)
            if wl != wr:
                raise IRTypeError(f"{cls.op} width mismatch: {wl} vs {wr}")
            width = wl
        else:
            _need_scalar(cls.op, left, 0)
            _need_scalar(cls.op, right, 1)
            width = None

        def build():
            self = object.__new__(cls)
            self._finish((left, right), width, ())
            return self
        return Expr._interned((cls, id(left), id(right)), build)

    @property
    def left(self) -> Expr:
        return self.kids[0]

    @property
    def right(self) -> Expr:
        return self.kids[1]


class Neg(_Unary):
    __slots__ = ()
    op = "-"


class Add(_Binary):
    __slots__ = ()
    op = "+"


class Sub(_Binary):
    __slots__ = ()
    op = "-"


class Mul(_Binary):
    __slots__ = ()
    op = "*"
    is_mul = True


class VecNeg(_Unary):
    __slots__ = ()
    op = "VecNeg"
    vector = True


class VecAdd(_Binary):
    __slots__ = ()
    op = "VecAdd"
    vector = True


class VecSub(_Binary):
    __slots__ = ()
    op = "VecSub"
    vector = True


class VecMul(_Binary):
    __slots__ = ()
    op = "VecMul"
    vector = True
    is_mul = True


class Vec(Expr):
    """Slot packing of scalar expressions. Adds no depth and costs nothing."""

    __slots__ = ()
    op = "Vec"
    is_operator = False

    def __new__(cls, *children: Expr):
        if len(children) == 1 and isinstance(children[0], (list, tuple)):
            children = tuple(children[0])
        if not children:
            raise IRTypeError("Vec needs at least one element")
        for i, c in enumerate(children):
            if c.width is not None:
                raise IRTypeError("Vec elements must be scalar (no nested Vec)", (i,))

        def build():
            self = object.__new__(cls)
            self._finish(tuple(children), len(children), ())
            return self
        return Expr._interned((cls, tuple(id(c) for c in children)), build)

    def with_kids(self, kids):
        return Vec(*kids)


class RotL(Expr):
    """Cyclic left rotation of slots: ``[1,2,3] << 1 == [2,3,1]``."""

    __slots__ = ("step",)
    op = "<<"

    def __new__(cls, child: Expr, step: int):
        width = _need_vector("<<", child, 0)
        if type(step) is not int or step < 0:
            raise IRTypeError(f"rotation step must be a non-negative int, got {step!r}")

        def build():
            self = object.__new__(cls)
            self.step = step
            self._finish((child,), width, (step,))
            return self
        return Expr._interned((cls, id(child), step), build)

    @property
    def child(self) -> Expr:
        return self.kids[0]

    def payload(self) -> tuple:
        return (self.step,)

    def with_kids(self, kids):
        return RotL(kids[0], self.step)


SCALAR_BINARY = (Add, Sub, Mul)
VECTOR_BINARY = (VecAdd, VecSub, VecMul)
VECTOR_OF = {Add: VecAdd, Sub: VecSub, Mul: VecMul, Neg: VecNeg}
SCALAR_OF = {v: k for k, v in VECTOR_OF.items()}


def RotR(child: Expr, step: int) -> Expr:  # noqa: N802
    """Right rotation, normalized to the equivalent left rotation."""
    width = _need_vector(">>", child, 0)
    return RotL(child, (-step) % width)


# ---------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class Program:
    inputs: tuple[Var, ...]
    body: Expr
    output_width: int

    def __post_init__(self):
        if self.body.width is None:
            raise IRTypeError("program body must be vector-kinded")
        if not 1 <= self.output_width <= self.body.width:
            raise IRTypeError(
                f"output width {self.output_width} exceeds body width {self.body.width}")
        declared = {v.name: v for v in self.inputs}
        if len(declared) != len(self.inputs):
            raise IRTypeError("duplicate input declaration")
        for v in free_vars(self.body):
            d = declared.get(v.name)
            if d is None:
                raise IRTypeError(f"undeclared variable {v.name!r}")
            if d.vkind is not v.vkind:
                raise IRTypeError(f"variable {v.name!r} used with kind {v.vkind.value}, "
                                  f"declared {d.vkind.value}")

    @classmethod
    def of(cls, body: Expr, output_width: int | None = None) -> Program:
        """Program whose inputs are the free variables of ``body``."""
        if body.width is None:
            body = Vec(body)
        return cls(tuple(free_vars(body)), body,
                   body.width if output_width is None else output_width)

    def replace_body(self, body: Expr) -> Program:
        return Program(self.inputs, body, self.output_width)

    @property
    def width(self) -> int:
        return self.body.width

    def __str__(self) -> str:
        return to_text(self)


# ---------------------------------------------------------------------------
# traversal helpers


def free_vars(e: Expr) -> list[Var]:
    """Distinct variables in first-occurrence (left-to-right) order."""
    seen: dict[Var, None] = {}
    stack = [e]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            seen.setdefault(n, None)
        else:
            stack.extend(reversed(n.kids))
    return list(seen)


@lru_cache(maxsize=8192)
def preorder(e: Expr) -> tuple[tuple[tuple[int, ...], Expr], ...]:
    """All (path, node) pairs, root first then children left to right."""
    out = []
    stack: list[tuple[tuple[int, ...], Expr]] = [((), e)]
    while stack:
        path, n = stack.pop()
        out.append((path, n))
        for i in range(len(n.kids) - 1, -1, -1):
            stack.append((path + (i,), n.kids[i]))
    return tuple(out)


def unique_nodes(e: Expr) -> list[Expr]:
    """Distinct subterms (the DAG), children before parents."""
    seen: set[int] = set()
    out: list[Expr] = []
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        n, expanded = stack.pop()
        if expanded:
            out.append(n)
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.append((n, True))
        for k in reversed(n.kids):
            if id(k) not in seen:
                stack.append((k, False))
    return out


def distinct_kids(n: Expr) -> tuple[Expr, ...]:
    """Children of ``n`` without repeats (identity-based, so no structural hashing)."""
    k = n.kids
    if len(k) < 2:
        return k
    if len(k) == 2:
        return k if k[0] is not k[1] else k[:1]
    hit = n.memo.get("distinct")
    if hit is None:
        hit = n.memo["distinct"] = tuple({id(x): x for x in k}.values())
    return hit


def parent_map(e: Expr) -> dict[int, list[Expr]]:
    """Distinct parents of every subterm of ``e``, keyed by id (cached on ``e``).

    The root maps to an empty list, so the keys are exactly the DAG's nodes.
    """
    hit = e.memo.get("parents")
    if hit is None:
        hit = {id(e): []}
        for n in unique_nodes(e):
            for k in distinct_kids(n):
                hit.setdefault(id(k), []).append(n)
        e.memo["parents"] = hit
    return hit


def subtree_at(e: Expr, path: Sequence[int]) -> Expr:
    for i in path:
        e = e.kids[i]
    return e


def replace_at(e: Expr, path: Sequence[int], new: Expr) -> Expr:
    if not path:
        return new
    i = path[0]
    kids = list(e.kids)
    kids[i] = replace_at(kids[i], path[1:], new)
    return e.with_kids(kids)


def infer(e: Expr, _path: tuple[int, ...] = ()) -> Kind:
    """Re-derive the kind of ``e`` bottom-up, checking it against the cache."""
    kid_kinds = [infer(k, _path + (i,)) for i, k in enumerate(e.kids)]
    if isinstance(e, (Var, Const)):
        kind = SCALAR
    elif isinstance(e, Vec):
        for i, kk in enumerate(kid_kinds):
            if not kk.is_scalar:
                raise IRTypeError("nested Vec", _path + (i,))
        kind = Kind(len(kid_kinds))
    elif isinstance(e, (_Unary, _Binary, RotL)):
        vector = isinstance(e, RotL) or e.vector
        widths = {kk.width for kk in kid_kinds}
        if vector and None in widths:
            raise IRTypeError(f"{e.op} expects vector operands", _path)
        if not vector and widths != {None}:
            raise IRTypeError(f"{e.op} expects scalar operands", _path)
        if len(widths) != 1:
            raise IRTypeError(f"{e.op} width mismatch", _path)
        kind = kid_kinds[0]
    else:  # pragma: no cover
        raise IRTypeError(f"unknown node {type(e).__name__}", _path)
    if kind.width != e.width:
        raise IRTypeError("cached width disagrees with inferred kind", _path)
    return kind


# ---------------------------------------------------------------------------
# printing

def to_sexpr(e: Expr) -> str:
    parts: list[str] = []

    def emit(n: Expr) -> None:
        if isinstance(n, Var):
            parts.append(n.name)
        elif isinstance(n, Const):
            parts.append(str(n.value))
        elif isinstance(n, RotL):
            parts.append("(<< ")
            emit(n.child)
            parts.append(f" {n.step})")
        else:
            parts.append("(" + n.op)
            for k in n.kids:
                parts.append(" ")
                emit(k)
            parts.append(")")

    emit(e)
    return "".join(parts)


def is_bare(p: Program) -> bool:
    """True when the header carries no information beyond the body itself."""
    return (p.output_width == p.body.width
            and all(v.vkind is VarKind.CIPHER for v in p.inputs)
            and list(p.inputs) == free_vars(p.body))


def to_text(p: Program) -> str:
    """Single-line rendering; bare ``(Vec ...)`` form when lossless."""
    body = to_sexpr(p.body)
    if is_bare(p):
        return body
    decls = " ".join(f"({v.vkind.value} {v.name})" for v in p.inputs)
    return f"(program (inputs {decls}) (output-width {p.output_width}) {body})"


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:;[^\n]*\n?\s*)*(\(|\)|[^\s();]+)")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT = re.compile(r"[+-]?\d+\Z")

_SCALAR_OPS = {"+": Add, "*": Mul}
_VECTOR_OPS = {"VecAdd": VecAdd, "VecSub": VecSub, "VecMul": VecMul}
RESERVED = {"+", "-", "*", "Vec", "VecAdd", "VecSub", "VecMul", "VecNeg", "<<", ">>",
            "program", "inputs", "output-width", "ct", "pt"}


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            # only whitespace / a trailing comment remains
            if re.fullmatch(r"\s*(;[^\n]*\n?\s*)*", text[pos:]):
                break
            raise ParseError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def _read(tokens: list[str]) -> list | str:
    """Nest tokens into lists; raises on unbalanced parentheses."""
    if not tokens:
        raise ParseError("empty input")
    stack: list[list] = [[]]
    for t in tokens:
        if t == "(":
            stack.append([])
        elif t == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(t)
    if len(stack) != 1:
        raise ParseError("unbalanced '(' (missing ')')")
    if len(stack[0]) != 1:
        raise ParseError("expected exactly one top-level form")
    return stack[0][0]


def _build(form, kinds: dict[str, VarKind] | None, path: tuple[int, ...]) -> Expr:
    if isinstance(form, str):
        if _INT.match(form):
            try:
                return Const(int(form))
            except IRTypeError as exc:
                raise ParseError(str(exc)) from None
        if not _IDENT.match(form) or form in RESERVED:
            raise ParseError(f"bad atom {form!r}")
        if kinds is None:
            return Var(form, VarKind.CIPHER)
        if form not in kinds:
            raise IRTypeError(f"undeclared variable {form!r}", path)
        return Var(form, kinds[form])
    if not form:
        raise ParseError("empty form ()")
    head, args = form[0], form[1:]
    if not isinstance(head, str):
        raise ParseError("operator position holds a list")

    def kid(i: int) -> Expr:
        return _build(args[i], kinds, path + (i,))

    def arity(n: int) -> None:
        if len(args) != n:
            raise ArityError(f"{head} takes {n} operand(s), got {len(args)}")

    try:
        if head in _SCALAR_OPS or head in _VECTOR_OPS:
            arity(2)
            cls = _SCALAR_OPS.get(head) or _VECTOR_OPS[head]
            return cls(kid(0), kid(1))
        if head == "-":
            if len(args) == 1:
                c = kid(0)
                return Neg(c) if c.width is None else VecNeg(c)
            arity(2)
            return Sub(kid(0), kid(1))
        if head == "VecNeg":
            arity(1)
            return VecNeg(kid(0))
        if head == "Vec":
            if not args:
                raise ArityError("Vec takes at least one element")
            return Vec(*[kid(i) for i in range(len(args))])
        if head in ("<<", ">>"):
            arity(2)
            if not isinstance(args[1], str) or not _INT.match(args[1]):
                raise ParseError(f"rotation step must be an integer literal, got {args[1]!r}")
            step = int(args[1])
            c = kid(0)
            if head == ">>":
                step = -step
            if c.width is None:
                raise IRTypeError("rotation expects a vector operand", path)
            return RotL(c, step % c.width)
    except IRTypeError as exc:
        if exc.path and len(exc.path) > len(path):
            raise
        raise IRTypeError(str(exc).split(" (at path")[0], path + exc.path) from None
    raise ParseError(f"unknown operator {head!r}")


def parse_expr(text: str, kinds: dict[str, VarKind] | None = None) -> Expr:
    """Parse one expression; free variables default to ciphertexts."""
    return _build(_read(_tokenize(text)), kinds, ())


def from_sexpr(text: str, kinds: dict[str, VarKind] | None = None) -> Expr:
    return parse_expr(text, kinds)


def parse(text: str) -> Program:
    """Parse a program: either a header form or a bare vector expression."""
    form = _read(_tokenize(text))
    if isinstance(form, list) and form and form[0] == "program":
        return _parse_program(form)
    body = _build(form, None, ())
    if body.width is None:
        raise IRTypeError("a bare program must be a vector expression, e.g. (Vec ...)")
    return Program.of(body)


def _parse_program(form: list) -> Program:
    if len(form) != 4:
        raise ParseError("expected (program (inputs ...) (output-width K) <expr>)")
    _, inputs, ow, body_form = form
    if not (isinstance(inputs, list) and inputs and inputs[0] == "inputs"):
        raise ParseError("missing (inputs ...) clause")
    decls: list[Var] = []
    for d in inputs[1:]:
        if (not isinstance(d, list) or len(d) != 2 or d[0] not in ("ct", "pt")
                or not isinstance(d[1], str) or not _IDENT.match(d[1]) or d[1] in RESERVED):
            raise ParseError(f"bad input declaration {d!r}")
        decls.append(Var(d[1], VarKind(d[0])))
    if not (isinstance(ow, list) and len(ow) == 2 and ow[0] == "output-width"
            and isinstance(ow[1], str) and ow[1].isdigit()):
        raise ParseError("missing (output-width K) clause")
    kinds = {v.name: v.vkind for v in decls}
    if len(kinds) != len(decls):
        raise ParseError("duplicate input declaration")
    body = _build(body_form, kinds, ())
    return Program(tuple(decls), body, int(ow[1]))


def iter_vars(e: Expr) -> Iterator[Var]:
    for _, n in preorder(e):
        if isinstance(n, Var):
            yield n
