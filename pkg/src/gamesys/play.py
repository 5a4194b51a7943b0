"""Running the gameplay algorithm and checking recorded trajectories."""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Mapping, Protocol, Sequence

from .errors import IllegalDecisionError, IncompleteSystemError, PreconditionError
from .model import NULL, GameSystem, format_tuple

DEFAULT_STEP_CAP = 10_000


class Decider(Protocol):
    def decide(self, player: str, legal: Sequence[str], state: tuple,
               rng: random.Random) -> str: ...


class UniformRandom:
    """Pick uniformly among legal decisions using the game's generator."""

    def decide(self, player, legal, state, rng):
        return legal[rng.randrange(len(legal))]


class Scripted:
    def __init__(self, moves: Sequence[str]):
        self.moves = list(moves)
        self.pos = 0

    def decide(self, player, legal, state, rng):
        if self.pos >= len(self.moves):
            raise PreconditionError(f"script for {player} ran out of moves")
        move = self.moves[self.pos]
        self.pos += 1
        return move

    @classmethod
    def from_json(cls, text: str) -> dict[str, "Scripted"]:
        """``{"P1": ["(P1,3)"], "P2": [...]}`` -> one Scripted per player."""
        data = json.loads(text)
        return {p: cls(moves) for p, moves in data.items()}


class Interactive:
    """Hot-seat prompt: clears the screen between players so simultaneous
    picks stay hidden until the consequence is resolved."""

    def __init__(self, read: Callable[[str], str] = input, write: Callable[[str], None] = print,
                 clear: bool = True):
        self.read = read
        self.write = write
        self.clear = clear

    def decide(self, player, legal, state, rng):
        if self.clear:
            self.write("\033[2J\033[H")
        self.write(f"{player}, choose a decision:")
        for i, d in enumerate(legal, start=1):
            self.write(f"  {i}. {d}")
        while True:
            raw = self.read(f"{player}> ").strip()
            if raw in legal:
                return raw
            if raw.isdigit() and 1 <= int(raw) <= len(legal):
                return legal[int(raw) - 1]
            self.write("not a legal decision; try again")


@dataclass(frozen=True)
class Step:
    decisions: tuple
    consequence: int
    state: tuple


@dataclass
class Trajectory:
    initial: tuple
    steps: list[Step] = field(default_factory=list)
    outcome: str | None = None
    status: str = "terminal"  # or "truncated"
    seed: int | None = None

    @property
    def final(self) -> tuple:
        return self.steps[-1].state if self.steps else self.initial

    def to_dict(self, system: GameSystem) -> dict:
        names = system.track_names
        return {
            "seed": self.seed,
            "initial": dict(zip(names, self.initial)),
            "steps": [
                {"decisions": list(st.decisions), "consequence": st.consequence,
                 "state": dict(zip(names, st.state))}
                for st in self.steps
            ],
            "outcome": self.outcome,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, system: GameSystem, data: Mapping) -> "Trajectory":
        steps = [
            Step(tuple(s["decisions"]), s["consequence"], system.state(s["state"]))
            for s in data["steps"]
        ]
        return cls(system.state(data["initial"]), steps, data.get("outcome"),
                   data.get("status", "terminal"), data.get("seed"))


def sample_index(weights: Sequence[Fraction], rng: random.Random) -> int:
    """Exact sampling from rational weights: draw over the common denominator."""
    den = lcm(*(w.denominator for w in weights))
    r = rng.randrange(den)
    acc = 0
    for i, w in enumerate(weights):
        acc += w.numerator * (den // w.denominator)
        if r < acc:
            return i
    raise ValueError("weights do not sum to 1")


def _deciders_for(system: GameSystem, deciders) -> list:
    if deciders is None:
        return [UniformRandom() for _ in system.players]
    if isinstance(deciders, Mapping):
        return [deciders.get(p, UniformRandom()) for p in system.player_names]
    deciders = list(deciders)
    if len(deciders) != system.n:
        raise PreconditionError("need one decider per player")
    return deciders


def play(system: GameSystem, s0=None, deciders=None, seed: int | None = 0,
         step_cap: int = DEFAULT_STEP_CAP) -> Trajectory:
    """Run the gameplay algorithm from s0 until all decisions are null."""
    if step_cap < 0:
        raise PreconditionError("step_cap must be >= 0")
    ev = system.evaluator
    if s0 is None:
        if len(ev.initial_states) != 1:
            raise PreconditionError("system has several initial states; pass s0")
        s = ev.initial_states[0]
    else:
        s = system.state(s0) if isinstance(s0, Mapping) else tuple(s0)
        if s not in ev.initial_states:
            raise PreconditionError("s0 is not an initial condition")
    rng = random.Random(seed)
    ds = _deciders_for(system, deciders)
    traj = Trajectory(s, seed=seed)
    while True:
        legal = ev.legal_sets(s)
        if not any(legal):
            traj.outcome = ev.outcome(s)
            traj.status = "terminal"
            return traj
        if len(traj.steps) >= step_cap:
            traj.status = "truncated"
            return traj
        # every player decides before anything is resolved
        dt = []
        for name, options, decider in zip(system.player_names, legal, ds):
            if not options:
                dt.append(NULL)
                continue
            d = decider.decide(name, list(options), s, rng)
            if d not in options:
                raise IllegalDecisionError(f"{name} chose {d!r}, which is not legal here")
            dt.append(d)
        dt = tuple(dt)
        cons = ev.consequences(dt, s)
        if cons is None:
            raise IncompleteSystemError(f"no consequence defined for {format_tuple(dt)}")
        i = sample_index([p for p, _ in cons], rng) if len(cons) > 1 else 0
        s = ev.apply_all(cons[i][1], s)
        traj.steps.append(Step(dt, i, s))


@dataclass(frozen=True)
class Verdict:
    legal: bool
    step: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.legal

    def __str__(self) -> str:
        return "legal" if self.legal else f"illegal(step {self.step}, {self.reason!r})"


def validate_trajectory(system: GameSystem, traj: Trajectory) -> Verdict:
    """Step 0 is the starting state; steps are numbered from 1."""
    ev = system.evaluator
    if traj.initial not in ev.initial_states:
        return Verdict(False, 0, "not an initial condition")
    s = traj.initial
    for k, step in enumerate(traj.steps, start=1):
        legal = ev.legal_sets(s)
        if not any(legal):
            return Verdict(False, k, "play continued past a terminal state")
        dt = tuple(None if d in (None, "0") else d for d in step.decisions)
        if len(dt) != system.n:
            return Verdict(False, k, "decision tuple has the wrong length")
        for d, options in zip(dt, legal):
            if options and d is None:
                return Verdict(False, k, "null decision while legal decisions exist")
            if d is not None and d not in options:
                return Verdict(False, k, "decision not in legal set")
        cons = ev.consequences(dt, s)
        if cons is None:
            return Verdict(False, k, "no consequence defined")
        if not 0 <= step.consequence < len(cons):
            return Verdict(False, k, "consequence index out of range")
        if ev.apply_all(cons[step.consequence][1], s) != tuple(step.state):
            return Verdict(False, k, "state does not follow from the consequence")
        s = tuple(step.state)
    if traj.status == "terminal":
        if not ev.is_terminal(s):
            return Verdict(False, len(traj.steps), "trajectory ends at a non-terminal state")
        if traj.outcome != ev.outcome(s):
            return Verdict(False, len(traj.steps), "outcome does not match")
    return Verdict(True)


def random_playouts(system: GameSystem, n: int, seed: int = 0, s0=None,
                    deciders_factory: Callable[[], object] | None = None,
                    step_cap: int = DEFAULT_STEP_CAP) -> Counter:
    """Outcome histogram of n games seeded seed, seed+1, ...; "truncated" counts cut-off games."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    hist: Counter = Counter()
    for i in range(n):
        ds = deciders_factory() if deciders_factory else None
        t = play(system, s0, ds, seed=seed + i, step_cap=step_cap)
        hist["truncated" if t.status == "truncated" else t.outcome] += 1
    return hist
