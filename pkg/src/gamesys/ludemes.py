"""Catalog of ludemic functions callable from game descriptions.

Ludemes are evaluated while a description is expanded, so the resulting
system only holds concrete slices and action names.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Protocol, Sequence

from .errors import EvaluationError, GameSystemError
from .model import Decision, Track
from .slices import EMPTY, And, Atom, StateSlice, disj

# argument kinds understood by the description parser
DECISION_TUPLE = "decision_tuple"
ACTION = "action"
TRACKS = "tracks"
VALUE = "value"
INTEGER = "integer"


class LudemeContext(Protocol):
    def track(self, name: str) -> Track: ...

    def decision(self, name: str) -> Decision: ...


@dataclass(frozen=True)
class LudemicFunction:
    name: str
    signature: tuple[str, ...]
    returns: str  # "slice" or "consequence"
    evaluator: Callable
    doc: str = ""

    def __call__(self, ctx: LudemeContext, *args):
        if len(args) != len(self.signature):
            raise EvaluationError(
                f"{self.name} takes {len(self.signature)} arguments, got {len(args)}"
            )
        return self.evaluator(ctx, *args)


class CatalogError(GameSystemError):
    pass


class Catalog:
    def __init__(self, entries: Sequence[LudemicFunction] = ()):
        self._entries: dict[str, LudemicFunction] = {}
        for e in entries:
            self.register(e)

    def register(self, fn: LudemicFunction) -> LudemicFunction:
        if fn.name in self._entries:
            raise CatalogError(f"ludeme {fn.name!r} is already registered")
        self._entries[fn.name] = fn
        return fn

    def lookup(self, name: str) -> LudemicFunction:
        try:
            return self._entries[name]
        except KeyError:
            raise CatalogError(f"unknown ludeme {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def names(self) -> list[str]:
        return sorted(self._entries)

    def copy(self) -> "Catalog":
        return Catalog(list(self._entries.values()))


# -- built-ins ---------------------------------------------------------------


def _first_coordinate(coords, kind: str, what: str):
    for c in coords:
        if c.space.kind == kind:
            return c
    raise EvaluationError(f"{what} has no {kind} coordinate")


def rps_select(d1: Decision | None, d2: Decision | None, a0: str, a1: str, a2: str) -> str:
    """Pick a_i where i = phi(d1) - phi(d2) mod 3."""
    phis = []
    for d in (d1, d2):
        if d is None:
            raise EvaluationError("RPS is undefined on the null decision")
        found = None
        for c in d.coords:
            if c.space.kind == "modular" and c.space.modulus == 3:
                found = c.table[d.name]
                break
        if found is None:
            raise EvaluationError(f"decision {d.name!r} has no Z3 coordinate")
        phis.append(found)
    return (a0, a1, a2)[(phis[0] - phis[1]) % 3]


def _rps(ctx: LudemeContext, dtuple, a0, a1, a2):
    if len(dtuple) != 2:
        raise EvaluationError("RPS takes a pair of decisions")
    ds = [None if d in (None, "0") else ctx.decision(d) for d in dtuple]
    return ((Fraction(1), (rps_select(ds[0], ds[1], a0, a1, a2),)),)


def triple_sums_to_zero(tracks: Sequence[Track], v: str) -> StateSlice:
    """Union of (v)_t1 (v)_t2 (v)_t3 over track triples whose integer coordinates sum to 0."""
    phi = []
    for t in tracks:
        c = _first_coordinate(t.coords, "integer", f"track {t.name!r}")
        if v not in t.values:
            raise EvaluationError(f"track {t.name!r} has no value {v!r}")
        phi.append((t.name, c.table[t.name]))
    parts = [
        And(tuple(Atom(name, v) for name, _ in trio))
        for trio in itertools.combinations(phi, 3)
        if sum(x for _, x in trio) == 0
    ]
    return disj(parts) if parts else EMPTY


def _direction_classes(d: int) -> list[tuple[int, ...]]:
    out = []
    for vec in itertools.product((-1, 0, 1), repeat=d):
        nonzero = [x for x in vec if x]
        if nonzero and nonzero[0] > 0:
            out.append(vec)
    return out


def n_in_a_row(tracks: Sequence[Track], v: str, n: int) -> StateSlice:
    """Union of slices claiming v along every unit-step line of n lattice points."""
    if n < 1:
        raise EvaluationError("n must be at least 1")
    at: dict[tuple, str] = {}
    dim = None
    for t in tracks:
        c = _first_coordinate(t.coords, "lattice", f"track {t.name!r}")
        if dim is None:
            dim = c.space.dimension
        elif c.space.dimension != dim:
            raise EvaluationError("tracks mix lattice dimensions")
        if v not in t.values:
            raise EvaluationError(f"track {t.name!r} has no value {v!r}")
        at[tuple(c.table[t.name])] = t.name
    if dim is None:
        return EMPTY
    seen = set()
    parts = []
    for start, _ in at.items():
        for step in _direction_classes(dim):
            cells = [tuple(x + k * dx for x, dx in zip(start, step)) for k in range(n)]
            if not all(c in at for c in cells):
                continue
            key = frozenset(cells)
            if key in seen:
                continue
            seen.add(key)
            names = [at[c] for c in cells]
            parts.append(Atom(names[0], v) if n == 1 else And(tuple(Atom(x, v) for x in names)))
    return disj(parts) if parts else EMPTY


def _tss(ctx: LudemeContext, tracks, v):
    return triple_sums_to_zero([ctx.track(t) for t in tracks], v)


def _nia(ctx: LudemeContext, tracks, v, n):
    return n_in_a_row([ctx.track(t) for t in tracks], v, n)


BUILTINS = (
    LudemicFunction("RPS", (DECISION_TUPLE, ACTION, ACTION, ACTION), "consequence", _rps,
                    "RPS((d1,d2), a0, a1, a2): a_i with i = phi(d1) - phi(d2) mod 3"),
    LudemicFunction("TripleSumsToZero", (TRACKS, VALUE), "slice", _tss,
                    "TripleSumsToZero((tags), v): v holds three tracks whose coordinates sum to 0"),
    LudemicFunction("NInARow", (TRACKS, VALUE, INTEGER), "slice", _nia,
                    "NInARow((tags), v, n): v holds n lattice tracks in a line"),
)

CATALOG = Catalog(BUILTINS)


def register_ludeme(fn: LudemicFunction, catalog: Catalog | None = None) -> LudemicFunction:
    return (catalog or CATALOG).register(fn)


def lookup(name: str, catalog: Catalog | None = None) -> LudemicFunction:
    return (catalog or CATALOG).lookup(name)
