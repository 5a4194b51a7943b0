"""Game system data model and its evaluation semantics.

A system is an immutable bundle of players, tracks, initial conditions,
decisions, actions, consequence rules, legality rules, ending states and
outcome rules.  States are tuples holding one value symbol per track, in
track order.  The null decision is ``None``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    ActionRangeError,
    DescriptionError,
    IncompleteSystemError,
    ResourceLimitError,
)
from .slices import (
    ALL,
    EMPTY,
    And,
    Atom,
    Const,
    Expr,
    Not,
    Or,
    StateSlice,
    compile_expr,
    compile_slice,
    conj,
    disj,
)

NULL = None
WILDCARD = "*"
NULL_PATTERN = "0"

State = tuple
DecisionTuple = tuple


# -- coordinates -------------------------------------------------------------


@dataclass(frozen=True)
class CoordinateSpace:
    """A mathematical object elements can be placed in.

    ``kind`` is one of integer, modular, lattice, graph.
    """

    kind: str
    modulus: int | None = None
    dimension: int | None = None
    edges: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.kind not in ("integer", "modular", "lattice", "graph"):
            raise ValueError(f"unknown coordinate space kind {self.kind!r}")
        if self.kind == "modular" and (self.modulus is None or self.modulus < 1):
            raise ValueError("modular space needs a modulus >= 1")
        if self.kind == "lattice" and (self.dimension is None or self.dimension < 1):
            raise ValueError("lattice space needs a dimension >= 1")

    def normalize(self, x):
        if self.kind == "modular":
            return x % self.modulus
        return x

    def adjacent(self, a, b) -> bool:
        if self.kind == "graph":
            return (a, b) in self.edges or (b, a) in self.edges
        if self.kind == "lattice":
            return sum(abs(i - j) for i, j in zip(a, b)) == 1
        if self.kind == "modular":
            return (a - b) % self.modulus in (1, self.modulus - 1)
        return abs(a - b) == 1


INTEGERS = CoordinateSpace("integer")


def modular(m: int) -> CoordinateSpace:
    return CoordinateSpace("modular", modulus=m)


def lattice(d: int) -> CoordinateSpace:
    return CoordinateSpace("lattice", dimension=d)


@dataclass(frozen=True)
class Coordinates:
    """One coordinate assignment: every listed element gets a point of ``space``."""

    space: CoordinateSpace
    mapping: tuple[tuple[str, object], ...]

    @cached_property
    def table(self) -> dict[str, object]:
        return dict(self.mapping)

    @cached_property
    def inverse(self) -> dict[object, str]:
        return {c: name for name, c in self.mapping}


# -- elements ----------------------------------------------------------------


@dataclass(frozen=True)
class Player:
    id: int
    name: str
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Track:
    name: str
    values: tuple[str, ...]
    tags: frozenset[str] = frozenset()
    coords: tuple[Coordinates, ...] = ()
    value_coords: tuple[Coordinates, ...] = ()
    value_tags: tuple[tuple[str, frozenset[str]], ...] = ()

    def __post_init__(self):
        if not self.values:
            raise DescriptionError(f"track {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise DescriptionError(f"track {self.name!r} repeats a value")
        for c in self.value_coords:
            if set(c.table) != set(self.values):
                raise DescriptionError(
                    f"track {self.name!r}: value coordinates must cover every value"
                )

    def tags_of_value(self, value: str) -> frozenset[str]:
        for v, tags in self.value_tags:
            if v == value:
                return tags
        return frozenset()


@dataclass(frozen=True)
class Decision:
    name: str
    tags: frozenset[str] = frozenset()
    coords: tuple[Coordinates, ...] = ()


@dataclass(frozen=True)
class Outcome:
    name: str
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Write:
    """Set ``track`` to a literal value, or to the value whose ``coord``-th
    coordinate equals ``expr`` evaluated on the pre-state."""

    track: str
    value: str | None = None
    expr: Expr | None = None
    coord: int = 1


@dataclass(frozen=True)
class Clause:
    guard: StateSlice
    writes: tuple[Write, ...]


@dataclass(frozen=True)
class Action:
    name: str
    clauses: tuple[Clause, ...] = ()
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class ConsequenceRule:
    pattern: tuple[str, ...]  # decision name, "*" or "0" per player
    consequences: tuple[tuple[Fraction, tuple[str, ...]], ...]
    guard: StateSlice = ALL

    def __post_init__(self):
        if not self.consequences:
            raise DescriptionError("a consequence rule needs at least one consequence")
        total = sum((p for p, _ in self.consequences), Fraction(0))
        if total != 1:
            raise DescriptionError(f"consequence probabilities sum to {total}, not 1")
        for p, acts in self.consequences:
            if not 0 < p <= 1:
                raise DescriptionError(f"probability {p} outside (0, 1]")
            if not acts:
                raise DescriptionError("empty action composition")


@dataclass(frozen=True)
class LegalityRule:
    player: str  # player name or "*"
    decision: str  # decision name or "*"
    slice: StateSlice


@dataclass(frozen=True)
class OutcomeRule:
    outcome: str
    slice: StateSlice


@dataclass(frozen=True)
class GameSystem:
    players: tuple[Player, ...]
    tracks: tuple[Track, ...]
    initial: tuple[StateSlice, ...]
    decisions: tuple[Decision, ...]
    actions: tuple[Action, ...]
    consequences: tuple[ConsequenceRule, ...] = ()
    legality: tuple[LegalityRule, ...] = ()
    outcomes: tuple[Outcome, ...] = ()
    omega: tuple[OutcomeRule, ...] = ()
    ending: StateSlice = EMPTY
    legal_default: StateSlice | None = None
    omega_default: str | None = None
    trivial_consequences: bool = False
    uses: tuple[str, ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.players]
        if len(set(names)) != len(names):
            raise DescriptionError("duplicate player name")
        if [p.id for p in self.players] != list(range(1, len(self.players) + 1)):
            raise DescriptionError("player ids must be 1..n in order")
        for kind, items in (
            ("track", self.tracks),
            ("decision", self.decisions),
            ("action", self.actions),
            ("outcome", self.outcomes),
        ):
            seen = [x.name for x in items]
            if len(set(seen)) != len(seen):
                raise DescriptionError(f"duplicate {kind} name")
        for d in self.decisions:
            if d.name in (WILDCARD, NULL_PATTERN):
                raise DescriptionError(f"decision name {d.name!r} is reserved")
        for rule in self.consequences:
            if len(rule.pattern) != len(self.players):
                raise DescriptionError(
                    f"consequence pattern {rule.pattern} does not have one entry per player"
                )

    # lookups

    @property
    def n(self) -> int:
        return len(self.players)

    @cached_property
    def player_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.players)

    @cached_property
    def track_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tracks)

    @cached_property
    def decision_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.decisions)

    @cached_property
    def outcome_names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.outcomes)

    def track(self, name: str) -> Track:
        try:
            return self._tracks[name]
        except KeyError:
            raise DescriptionError(f"unknown track {name!r}") from None

    def action(self, name: str) -> Action:
        try:
            return self._actions[name]
        except KeyError:
            raise DescriptionError(f"unknown action {name!r}") from None

    def decision(self, name: str) -> Decision:
        try:
            return self._decisions[name]
        except KeyError:
            raise DescriptionError(f"unknown decision {name!r}") from None

    def player_index(self, player: str | int | Player) -> int:
        """0-based position of a player given by name, 1-based id or object."""
        if isinstance(player, Player):
            return player.id - 1
        if isinstance(player, int):
            if not 1 <= player <= self.n:
                raise DescriptionError(f"no player with id {player}")
            return player - 1
        try:
            return self.player_names.index(player)
        except ValueError:
            raise DescriptionError(f"unknown player {player!r}") from None

    @cached_property
    def _tracks(self) -> dict[str, Track]:
        return {t.name: t for t in self.tracks}

    @cached_property
    def _actions(self) -> dict[str, Action]:
        return {a.name: a for a in self.actions}

    @cached_property
    def _decisions(self) -> dict[str, Decision]:
        return {d.name: d for d in self.decisions}

    # states

    def state(self, assignment: Mapping[str, str] | Sequence[str]) -> State:
        """Normalize a track->value mapping (or a value sequence) to a state tuple."""
        if isinstance(assignment, Mapping):
            missing = set(self.track_names) - set(assignment)
            extra = set(assignment) - set(self.track_names)
            if missing or extra:
                raise DescriptionError(
                    f"state must assign every track exactly once (missing {sorted(missing)}, "
                    f"unknown {sorted(extra)})"
                )
            values = tuple(assignment[t] for t in self.track_names)
        else:
            values = tuple(assignment)
            if len(values) != len(self.tracks):
                raise DescriptionError("state has the wrong number of tracks")
        for t, v in zip(self.tracks, values):
            if v not in t.values:
                raise DescriptionError(f"track {t.name!r} has no value {v!r}")
        return values

    def state_dict(self, s: State) -> dict[str, str]:
        return dict(zip(self.track_names, s))

    @property
    def state_space_size(self) -> int:
        size = 1
        for t in self.tracks:
            size *= len(t.values)
        return size

    def all_states(self) -> Iterator[State]:
        return itertools.product(*(t.values for t in self.tracks))

    @cached_property
    def evaluator(self) -> "Evaluator":
        return Evaluator(self)


# -- evaluation --------------------------------------------------------------


def simplify(sl: StateSlice) -> StateSlice:
    """Fold ALL/EMPTY constants out of a slice."""
    if isinstance(sl, And):
        items = [simplify(x) for x in sl.items]
        if any(x == EMPTY for x in items):
            return EMPTY
        return conj(x for x in items if x != ALL)
    if isinstance(sl, Or):
        items = [simplify(x) for x in sl.items]
        if any(x == ALL for x in items):
            return ALL
        return disj(x for x in items if x != EMPTY)
    if isinstance(sl, Not):
        inner = simplify(sl.item)
        if isinstance(inner, Const):
            return Const(not inner.value)
        return Not(inner)
    return sl


class Evaluator:
    """Compiled, memoizing view of a system.  Safe to share; caches only grow."""

    def __init__(self, system: GameSystem):
        self.system = system
        self._pos = {t.name: i for i, t in enumerate(system.tracks)}
        self._slice_cache: dict[StateSlice, object] = {}
        self._legal_cache: dict[State, tuple[tuple[str, ...], ...]] = {}
        self._trans_cache: dict[State, tuple] = {}
        self._ending = self.predicate(system.ending)
        self._legal_rules = self._compile_legality()
        self._actions = {a.name: self._compile_action(a) for a in system.actions}
        self._omega = [(r.outcome, self.predicate(r.slice)) for r in system.omega]
        self._rules = [(r, self.predicate(r.guard)) for r in system.consequences]

    # SliceContext protocol

    def track_index(self, track: str) -> int:
        try:
            return self._pos[track]
        except KeyError:
            raise DescriptionError(f"unknown track {track!r}") from None

    def has_value(self, track: str, value: str) -> bool:
        return value in self.system.track(track).values

    def values_with_tags(self, track: str, tags: tuple[str, ...]) -> frozenset[str]:
        t = self.system.track(track)
        want = set(tags)
        return frozenset(v for v in t.values if want <= t.tags_of_value(v))

    def value_coordinates(self, track: str, index: int):
        t = self.system.track(track)
        if not 1 <= index <= len(t.value_coords):
            raise DescriptionError(f"track {track!r} has no value coordinate {index}")
        c = t.value_coords[index - 1]
        return c.space, c.table

    # slices

    def predicate(self, sl: StateSlice):
        fn = self._slice_cache.get(sl)
        if fn is None:
            fn = compile_slice(simplify(sl), self)
            self._slice_cache[sl] = fn
        return fn

    def contains(self, sl: StateSlice, s: State) -> bool:
        return bool(self.predicate(sl)(s))

    def states_in(self, sl: StateSlice, cap: int = 10**6) -> list[State]:
        """Enumerate the states of a slice, pinning tracks fixed by top-level atoms."""
        sl = simplify(sl)
        pinned: dict[int, set[str]] = {}
        items = sl.items if isinstance(sl, And) else (sl,)
        for it in items:
            if isinstance(it, Atom):
                i = self.track_index(it.track)
                pinned[i] = pinned.get(i, {it.value}) & {it.value}
        domains = [
            [v for v in t.values if v in pinned[i]] if i in pinned else list(t.values)
            for i, t in enumerate(self.system.tracks)
        ]
        size = 1
        for d in domains:
            size *= len(d)
        if size > cap:
            raise ResourceLimitError(f"slice spans {size} candidate states (cap {cap})")
        pred = self.predicate(sl)
        return [s for s in itertools.product(*domains) if pred(s)]

    @cached_property
    def initial_states(self) -> tuple[State, ...]:
        seen: dict[State, None] = {}
        for sl in self.system.initial:
            for s in self.states_in(sl):
                seen.setdefault(s)
        return tuple(seen)

    def in_ending(self, s: State) -> bool:
        return bool(self._ending(s))

    # legality

    def _compile_legality(self):
        sysm = self.system
        not_end = Not(sysm.ending)
        table = []
        self.legality_gaps: list[tuple[str, str]] = []
        for p in sysm.players:
            row = []
            for d in sysm.decisions:
                parts = [
                    r.slice
                    for r in sysm.legality
                    if r.player in (WILDCARD, p.name) and r.decision in (WILDCARD, d.name)
                ]
                if not parts:
                    if sysm.legal_default is None:
                        self.legality_gaps.append((p.name, d.name))
                        continue
                    parts = [sysm.legal_default]
                sl = simplify(conj(parts + [not_end]))
                if sl == EMPTY:
                    continue
                row.append((d.name, self.predicate(sl)))
            table.append(row)
        return table

    def legal_sets(self, s: State) -> tuple[tuple[str, ...], ...]:
        got = self._legal_cache.get(s)
        if got is None:
            got = tuple(tuple(d for d, pred in row if pred(s)) for row in self._legal_rules)
            self._legal_cache[s] = got
        return got

    def is_terminal(self, s: State) -> bool:
        return not any(self.legal_sets(s))

    def decision_tuples(self, s: State) -> list[DecisionTuple]:
        """All legal decision tuples with forced nulls, in declaration order."""
        return list(itertools.product(*(ls if ls else (NULL,) for ls in self.legal_sets(s))))

    # consequences

    def consequences(self, dtuple: DecisionTuple, s: State):
        """First matching consequence set, or None where C is undefined."""
        sysm = self.system
        if sysm.trivial_consequences:
            chosen = [d for d in dtuple if d is not NULL]
            if len(chosen) == 1:
                return ((Fraction(1), (chosen[0],)),)
            return None
        for rule, guard in self._rules:
            if pattern_matches(rule.pattern, dtuple) and guard(s):
                return rule.consequences
        return None

    def matching_rule_count(self, dtuple: DecisionTuple) -> int:
        if self.system.trivial_consequences:
            return int(sum(d is not NULL for d in dtuple) == 1)
        return sum(pattern_matches(r.pattern, dtuple) for r in self.system.consequences)

    # actions

    def _compile_action(self, action: Action):
        clauses = []
        for cl in action.clauses:
            writes = []
            for w in cl.writes:
                i = self.track_index(w.track)
                t = self.system.track(w.track)
                if w.expr is None:
                    if w.value not in t.values:
                        raise DescriptionError(
                            f"action {action.name!r} writes undeclared value {w.value!r} "
                            f"to track {w.track!r}"
                        )
                    writes.append((i, w.value, None, None))
                else:
                    space, _ = self.value_coordinates(w.track, w.coord)
                    modulus = space.modulus if space.kind == "modular" else None
                    fn = compile_expr(w.expr, w.coord, self, modulus)
                    inverse = t.value_coords[w.coord - 1].inverse
                    writes.append((i, None, fn, inverse))
            clauses.append((self.predicate(cl.guard), tuple(writes)))
        return action.name, tuple(clauses)

    def apply(self, action: str, s: State) -> State:
        try:
            name, clauses = self._actions[action]
        except KeyError:
            raise DescriptionError(f"unknown action {action!r}") from None
        for guard, writes in clauses:
            if not guard(s):
                continue
            out = list(s)
            for i, value, fn, inverse in writes:
                if fn is None:
                    out[i] = value
                    continue
                coord = fn(s)
                try:
                    out[i] = inverse[coord]
                except KeyError:
                    track = self.system.tracks[i].name
                    raise ActionRangeError(
                        f"action {name!r} sends track {track!r} to coordinate {coord}, "
                        "which names no declared value"
                    ) from None
            return tuple(out)
        return s

    def apply_all(self, actions: Iterable[str], s: State) -> State:
        for a in actions:
            s = self.apply(a, s)
        return s

    # outcomes

    def matching_outcomes(self, s: State) -> list[str]:
        """Distinct outcomes of every Omega rule containing s (default if none)."""
        found: list[str] = []
        for outcome, pred in self._omega:
            if pred(s) and outcome not in found:
                found.append(outcome)
        if not found and self.system.omega_default is not None:
            found.append(self.system.omega_default)
        return found

    def outcome(self, s: State) -> str | None:
        for outcome, pred in self._omega:
            if pred(s):
                return outcome
        return self.system.omega_default

    # transitions

    def transitions(self, s: State):
        """``((dtuple, ((p, next_state), ...)), ...)`` for every legal tuple at s."""
        got = self._trans_cache.get(s)
        if got is not None:
            return got
        out = []
        if not self.is_terminal(s):
            for dt in self.decision_tuples(s):
                cons = self.consequences(dt, s)
                if cons is None:
                    raise IncompleteSystemError(
                        f"no consequence defined for {format_tuple(dt)} at state "
                        f"{format_state(self.system, s)}"
                    )
                out.append((dt, tuple((p, self.apply_all(acts, s)) for p, acts in cons)))
        got = tuple(out)
        self._trans_cache[s] = got
        return got


def pattern_matches(pattern: Sequence[str], dtuple: DecisionTuple) -> bool:
    for pat, d in zip(pattern, dtuple):
        if pat == WILDCARD:
            continue
        if pat == NULL_PATTERN:
            if d is not NULL:
                return False
        elif pat != d:
            return False
    return True


def format_tuple(dtuple: Iterable) -> str:
    return "(" + ",".join("0" if d is NULL else str(d) for d in dtuple) + ")"


def format_state(system: GameSystem, s: State) -> str:
    return " ".join(f"({v})@{t}" for t, v in zip(system.track_names, s))


# -- public operations -------------------------------------------------------


def _as_state(system: GameSystem, s) -> State:
    if isinstance(s, Mapping):
        return system.state(s)
    return tuple(s)


def eval_slice(system: GameSystem, sl: StateSlice, s) -> bool:
    return system.evaluator.contains(sl, _as_state(system, s))


def apply_action(system: GameSystem, action: str | Action, s) -> State:
    name = action.name if isinstance(action, Action) else action
    return system.evaluator.apply(name, _as_state(system, s))


def legal_set(system: GameSystem, player, s) -> frozenset[str]:
    i = system.player_index(player)
    return frozenset(system.evaluator.legal_sets(_as_state(system, s))[i])


def is_terminal(system: GameSystem, s) -> bool:
    return system.evaluator.is_terminal(_as_state(system, s))


def resolve_consequence(system: GameSystem, dtuple: Sequence, s):
    """Consequence set of a decision tuple at a state, as (probability, actions) pairs."""
    dt = tuple(None if d in (None, 0, NULL_PATTERN) else d for d in dtuple)
    if len(dt) != system.n:
        raise DescriptionError("decision tuple needs one entry per player")
    got = system.evaluator.consequences(dt, _as_state(system, s))
    if got is None:
        raise IncompleteSystemError(f"no consequence defined for {format_tuple(dt)}")
    return got


def outcome_of(system: GameSystem, s) -> str | None:
    return system.evaluator.outcome(_as_state(system, s))
