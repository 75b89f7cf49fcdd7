"""Identifier/constant canonicalizing tokenizer.

Variables become ``v0, v1, ...`` and constants ``c0, c1, ...`` in order of first
appearance; 0 and 1 stay literal because identity rules key on them. The same
constant value always maps to the same ``c`` token within one program.
"""

from __future__ import annotations

from .ir import Const, Expr, Program, RotL, Var


def canon_tokens(p: Program | Expr, stats: dict | None = None) -> list[str]:
    """Canonical token sequence of a program body (header excluded).

    ``stats`` (optional) receives ``visits``: the number of nodes touched.
    """
    e = p.body if isinstance(p, Program) else p
    var_ids: dict[str, str] = {}
    const_ids: dict[int, str] = {}
    tokens: list[str] = []
    visits = 0
    # explicit stack: one left-to-right pass over the tree
    stack: list[Expr | str] = [e]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            tokens.append(item)
            continue
        visits += 1
        if isinstance(item, Var):
            tok = var_ids.get(item.name)
            if tok is None:
                tok = var_ids[item.name] = f"v{len(var_ids)}"
            tokens.append(tok)
        elif isinstance(item, Const):
            if item.value in (0, 1):
                tokens.append(str(item.value))
            else:
                tok = const_ids.get(item.value)
                if tok is None:
                    tok = const_ids[item.value] = f"c{len(const_ids)}"
                tokens.append(tok)
        else:
            tokens.append("(")
            tokens.append(item.op)
            stack.append(")")
            if isinstance(item, RotL):
                stack.append(str(item.step))
            stack.extend(reversed(item.kids))
    if stats is not None:
        stats["visits"] = visits
    return tokens


def render(tokens: list[str]) -> str:
    out: list[str] = []
    for t in tokens:
        if t == ")" or (out and out[-1].endswith("(")):
            out.append(t)
        elif out:
            out.append(" " + t)
        else:
            out.append(t)
    return "".join(out)


def canon_key(p: Program | Expr) -> str:
    """Stable string form of :func:`canon_tokens`, e.g. ``(+ v0 (+ v1 v2))``."""
    return render(canon_tokens(p))
