"""State slices: Boolean expressions denoting subsets of the state space.

Slices are immutable trees over track/value atoms.  They compare
structurally, print back to description syntax, and compile to a single
Python predicate over state tuples (one value symbol per track).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol

from .errors import DescriptionError, EvaluationError

NAME_RE = re.compile(r"(-?[0-9][A-Za-z0-9_']*|[A-Za-z_][A-Za-z0-9_']*)\Z")
RESERVED = frozenset(
    "ALL EMPTY for in if when otherwise identity v players decisions actions "
    "outcomes tracks".split()
)


def format_name(name: str) -> str:
    """Render a symbol so the lexer reads it back unchanged."""
    if name == "-" or (NAME_RE.match(name) and name not in RESERVED):
        return name
    if name.startswith("(") and name.endswith(")"):
        # tuple names are produced by the parser in canonical "(a,b)" form
        return name
    return '"' + name.replace('"', "'") + '"'


# -- bracket expressions -----------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class ValueOf:
    track: str


@dataclass(frozen=True)
class Neg:
    item: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # + - *
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Member:
    """``v(T) in (tags)`` -- the value of T carries every listed value tag."""

    item: ValueOf
    tags: tuple[str, ...]


Expr = Num | Sym | ValueOf | Neg | BinOp | Cmp | Member


def expr_is_constant(e: Expr) -> bool:
    if isinstance(e, ValueOf | Member):
        return False
    if isinstance(e, Neg):
        return expr_is_constant(e.item)
    if isinstance(e, BinOp | Cmp):
        return expr_is_constant(e.left) and expr_is_constant(e.right)
    return True


def format_expr(e: Expr, nested: bool = False) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Sym):
        return format_name(e.name)
    if isinstance(e, ValueOf):
        return f"v({format_name(e.track)})"
    if isinstance(e, Neg):
        return f"-({format_expr(e.item)})"
    if isinstance(e, BinOp):
        text = f"{format_expr(e.left, True)} {e.op} {format_expr(e.right, True)}"
        return f"({text})" if nested else text
    if isinstance(e, Cmp):
        return f"{format_expr(e.left, True)} {e.op} {format_expr(e.right, True)}"
    if isinstance(e, Member):
        tags = ", ".join(format_name(t) for t in e.tags)
        return f"{format_expr(e.item)} in ({tags})^v"
    raise TypeError(e)


# -- slices ------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: bool

    def __repr__(self) -> str:
        return "ALL" if self.value else "EMPTY"


ALL = Const(True)
EMPTY = Const(False)


@dataclass(frozen=True)
class Atom:
    track: str
    value: str


@dataclass(frozen=True)
class ValueTagAtom:
    track: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class Bracket:
    expr: Expr
    coord: int = 1


@dataclass(frozen=True)
class And:
    items: tuple["StateSlice", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["StateSlice", ...]


@dataclass(frozen=True)
class Not:
    item: "StateSlice"


StateSlice = Const | Atom | ValueTagAtom | Bracket | And | Or | Not


def conj(items: Iterable[StateSlice]) -> StateSlice:
    flat: list[StateSlice] = []
    for it in items:
        flat.extend(it.items if isinstance(it, And) else (it,))
    if not flat:
        return ALL
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(items: Iterable[StateSlice]) -> StateSlice:
    flat: list[StateSlice] = []
    for it in items:
        flat.extend(it.items if isinstance(it, Or) else (it,))
    if not flat:
        return EMPTY
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def format_slice(sl: StateSlice) -> str:
    if isinstance(sl, Const):
        return repr(sl)
    if isinstance(sl, Atom):
        return f"({format_name(sl.value)})@{format_name(sl.track)}"
    if isinstance(sl, ValueTagAtom):
        tags = " ".join("^" + format_name(t) for t in sl.tags)
        return f"({tags})@{format_name(sl.track)}"
    if isinstance(sl, Bracket):
        suffix = f"_{sl.coord}" if sl.coord != 1 else ""
        return f"[{format_expr(sl.expr)}]{suffix}"
    if isinstance(sl, Not):
        inner = format_slice(sl.item)
        if isinstance(sl.item, And | Or):
            inner = f"({inner})"
        return "!" + inner
    if isinstance(sl, And):
        parts = []
        for it in sl.items:
            text = format_slice(it)
            parts.append(f"({text})" if isinstance(it, Or) else text)
        return " ".join(parts)
    if isinstance(sl, Or):
        return " | ".join(format_slice(it) for it in sl.items)
    raise TypeError(sl)


def tracks_of(sl: StateSlice) -> set[str]:
    """Tracks a slice reads."""
    out: set[str] = set()
    stack: list = [sl]
    while stack:
        x = stack.pop()
        if isinstance(x, Atom | ValueTagAtom | ValueOf):
            out.add(x.track)
        elif isinstance(x, And | Or):
            stack.extend(x.items)
        elif isinstance(x, Not | Neg):
            stack.append(x.item)
        elif isinstance(x, Bracket):
            stack.append(x.expr)
        elif isinstance(x, BinOp | Cmp):
            stack.extend((x.left, x.right))
        elif isinstance(x, Member):
            stack.append(x.item)
    return out


# -- compilation -------------------------------------------------------------


class SliceContext(Protocol):
    def track_index(self, track: str) -> int: ...

    def has_value(self, track: str, value: str) -> bool: ...

    def values_with_tags(self, track: str, tags: tuple[str, ...]) -> frozenset[str]: ...

    def value_coordinates(self, track: str, index: int) -> tuple[object, dict[str, object]]:
        """(space, value -> coordinate) for the index-th value coordinate."""
        ...


class _Codegen:
    def __init__(self, ctx: SliceContext):
        self.ctx = ctx
        self.ns: dict[str, object] = {}

    def const(self, obj) -> str:
        key = f"_k{len(self.ns)}"
        self.ns[key] = obj
        return key

    def slice(self, sl: StateSlice) -> str:
        ctx = self.ctx
        if isinstance(sl, Const):
            return "True" if sl.value else "False"
        if isinstance(sl, Atom):
            i = ctx.track_index(sl.track)
            if not ctx.has_value(sl.track, sl.value):
                raise DescriptionError(f"track {sl.track!r} has no value {sl.value!r}")
            return f"(s[{i}] == {sl.value!r})"
        if isinstance(sl, ValueTagAtom):
            i = ctx.track_index(sl.track)
            vals = ctx.values_with_tags(sl.track, sl.tags)
            return f"(s[{i}] in {self.const(vals)})"
        if isinstance(sl, And):
            return "(" + " and ".join(self.slice(x) for x in sl.items) + ")"
        if isinstance(sl, Or):
            return "(" + " or ".join(self.slice(x) for x in sl.items) + ")"
        if isinstance(sl, Not):
            return f"(not {self.slice(sl.item)})"
        if isinstance(sl, Bracket):
            return self.bracket(sl)
        raise TypeError(sl)

    def bracket(self, br: Bracket) -> str:
        modulus = self._governing_modulus(br.expr, br.coord)
        return "(" + self.expr(br.expr, br.coord, modulus) + ")"

    def _governing_modulus(self, e: Expr, coord: int):
        stack = [e]
        while stack:
            x = stack.pop()
            if isinstance(x, ValueOf):
                space, _ = self.ctx.value_coordinates(x.track, coord)
                return getattr(space, "modulus", None)
            if isinstance(x, BinOp | Cmp):
                stack.extend((x.right, x.left))
            elif isinstance(x, Neg):
                stack.append(x.item)
        return None

    def _is_symbolic(self, e: Expr) -> bool:
        return isinstance(e, ValueOf) or (isinstance(e, Sym) and _as_int(e.name) is None)

    def expr(self, e: Expr, coord: int, modulus) -> str:
        if isinstance(e, Cmp):
            op = {"=": "==", "!=": "!="}.get(e.op, e.op)
            if e.op in ("=", "!=") and (self._is_symbolic(e.left) and self._is_symbolic(e.right)):
                return f"({self.symbolic(e.left)} {op} {self.symbolic(e.right)})"
            left = self.arith(e.left, coord, modulus)
            right = self.arith(e.right, coord, modulus)
            return f"({left} {op} {right})"
        if isinstance(e, Member):
            i = self.ctx.track_index(e.item.track)
            vals = self.ctx.values_with_tags(e.item.track, e.tags)
            return f"(s[{i}] in {self.const(vals)})"
        raise EvaluationError(f"bracket must hold a comparison, got {format_expr(e)}")

    def symbolic(self, e: Expr) -> str:
        if isinstance(e, ValueOf):
            return f"s[{self.ctx.track_index(e.track)}]"
        return repr(e.name)

    def arith(self, e: Expr, coord: int, modulus) -> str:
        def wrap(text: str) -> str:
            return f"(({text}) % {modulus})" if modulus else text

        if isinstance(e, Num):
            return wrap(str(e.value))
        if isinstance(e, Sym):
            n = _as_int(e.name)
            if n is None:
                raise EvaluationError(f"symbol {e.name!r} has no integer meaning here")
            return wrap(str(n))
        if isinstance(e, ValueOf):
            i = self.ctx.track_index(e.track)
            _, table = self.ctx.value_coordinates(e.track, coord)
            return f"{self.const(table)}[s[{i}]]"
        if isinstance(e, Neg):
            return wrap(f"-{self.arith(e.item, coord, modulus)}")
        if isinstance(e, BinOp):
            left = self.arith(e.left, coord, modulus)
            right = self.arith(e.right, coord, modulus)
            return wrap(f"({left} {e.op} {right})")
        raise EvaluationError(f"not an arithmetic expression: {format_expr(e)}")


def _as_int(text: str) -> int | None:
    try:
        return int(text)
    except ValueError:
        return None


def compile_slice(sl: StateSlice, ctx: SliceContext) -> Callable[[tuple], bool]:
    gen = _Codegen(ctx)
    body = gen.slice(sl)
    return eval(f"lambda s: {body}", gen.ns)  # noqa: S307 - generated from a validated AST


def compile_expr(e: Expr, coord: int, ctx: SliceContext, modulus=None) -> Callable[[tuple], int]:
    """Compile an arithmetic expression over coordinates of the pre-state."""
    gen = _Codegen(ctx)
    body = gen.arith(e, coord, modulus)
    return eval(f"lambda s: {body}", gen.ns)  # noqa: S307


def fold_constant(e: Expr) -> bool | int | str:
    """Evaluate a state-free expression at expansion time."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Sym):
        n = _as_int(e.name)
        return e.name if n is None else n
    if isinstance(e, Neg):
        return -_need_int(fold_constant(e.item))
    if isinstance(e, BinOp):
        a, b = _need_int(fold_constant(e.left)), _need_int(fold_constant(e.right))
        return {"+": a + b, "-": a - b, "*": a * b}[e.op]
    if isinstance(e, Cmp):
        a, b = fold_constant(e.left), fold_constant(e.right)
        if e.op == "=":
            return a == b
        if e.op == "!=":
            return a != b
        a, b = _need_int(a), _need_int(b)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[e.op]
    raise EvaluationError(f"expression depends on the state: {format_expr(e)}")


def _need_int(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise EvaluationError(f"expected an integer, got {x!r}")
    return x
