"""Real-arithmetic term trees serializable to SMT-LIB v2."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Union

Term = Union["Num", "Var", "App", "Quant"]

ARITH_OPS = {"+", "-", "*", "/"}
EXTRA_REAL_OPS = {"min", "max"}  # not SMT-LIB builtins; serialized with a define-fun
COMPARE_OPS = {"=", "<", "<=", ">", ">="}
BOOL_OPS = {"and", "or", "not", "=>"}


@dataclass(frozen=True)
class Num:
    """Numeric literal, kept as its source text (e.g. "0.0042", "5")."""

    text: str

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    op: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return "(" + " ".join([self.op] + [str(a) for a in self.args]) + ")"


@dataclass(frozen=True)
class Quant:
    kind: str  # "exists" | "forall"; bound variables are Real-sorted
    bound: tuple[str, ...]
    body: Term

    def __str__(self) -> str:
        binders = " ".join(f"({v} Real)" for v in self.bound)
        return f"({self.kind} ({binders}) {self.body})"


class SortError(ValueError):
    pass


def sort_of(t: Term) -> str:
    """Return "Real" or "Bool"; raise SortError on ill-sorted trees."""
    if isinstance(t, Num):
        return "Real"
    if isinstance(t, Var):
        return "Real"
    if isinstance(t, Quant):
        if t.kind not in ("exists", "forall"):
            raise SortError(f"unknown quantifier {t.kind!r}")
        if sort_of(t.body) != "Bool":
            raise SortError("quantifier body must be boolean")
        return "Bool"
    if isinstance(t, App):
        arg_sorts = [sort_of(a) for a in t.args]
        if t.op in ARITH_OPS or t.op in EXTRA_REAL_OPS:
            if not t.args or any(s != "Real" for s in arg_sorts):
                raise SortError(f"operator {t.op!r} needs real arguments")
            return "Real"
        if t.op in COMPARE_OPS:
            if len(t.args) < 2 or any(s != "Real" for s in arg_sorts):
                raise SortError(f"comparison {t.op!r} needs >=2 real arguments")
            return "Bool"
        if t.op in ("and", "or"):
            if any(s != "Bool" for s in arg_sorts):
                raise SortError(f"connective {t.op!r} needs boolean arguments")
            return "Bool"
        if t.op == "not":
            if len(t.args) != 1 or arg_sorts[0] != "Bool":
                raise SortError("not needs one boolean argument")
            return "Bool"
        if t.op == "=>":
            if len(t.args) < 2 or any(s != "Bool" for s in arg_sorts):
                raise SortError("=> needs >=2 boolean arguments")
            return "Bool"
        # Unknown symbols are assumed to be solver-accepted binary real
        # operators (aggregation operators are user-declared).
        if any(s != "Real" for s in arg_sorts):
            raise SortError(f"application of {t.op!r} needs real arguments")
        return "Real"
    raise SortError(f"not a term: {t!r}")


def is_boolean(t: Term) -> bool:
    return sort_of(t) == "Bool"


def free_vars(t: Term) -> set[str]:
    out: set[str] = set()

    def walk(node: Term, bound: frozenset[str]) -> None:
        if isinstance(node, Var):
            if node.name not in bound:
                out.add(node.name)
        elif isinstance(node, App):
            for a in node.args:
                walk(a, bound)
        elif isinstance(node, Quant):
            walk(node.body, bound | frozenset(node.bound))

    walk(t, frozenset())
    return out


def rename(t: Term, mapping: Mapping[str, str]) -> Term:
    """Rename free variables; capture is not checked (copy names are fresh)."""
    if isinstance(t, Num):
        return t
    if isinstance(t, Var):
        return Var(mapping.get(t.name, t.name))
    if isinstance(t, App):
        return App(t.op, tuple(rename(a, mapping) for a in t.args))
    if isinstance(t, Quant):
        inner = {k: v for k, v in mapping.items() if k not in t.bound}
        return Quant(t.kind, t.bound, rename(t.body, inner))
    raise TypeError(f"not a term: {t!r}")


def used_ops(t: Term) -> Iterator[str]:
    if isinstance(t, App):
        yield t.op
        for a in t.args:
            yield from used_ops(a)
    elif isinstance(t, Quant):
        yield from used_ops(t.body)

