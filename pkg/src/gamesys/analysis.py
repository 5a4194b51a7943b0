"""Completeness and overcompleteness checks."""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .errors import ActionRangeError, ResourceLimitError
from .model import NULL, GameSystem, format_state, format_tuple

DEFAULT_STATE_CAP = 200_000


@dataclass(frozen=True)
class Gap:
    kind: str  # component | legality | consequence | outcome | ambiguous-outcome | action
    detail: str
    dtuple: tuple | None = None
    state: tuple | None = None

    def __str__(self) -> str:
        return self.detail


@dataclass
class CompletenessReport:
    complete: bool
    gaps: list[Gap] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    reachable_states: int = 0
    reachability_complete: bool = True

    def of_kind(self, kind: str) -> list[Gap]:
        return [g for g in self.gaps if g.kind == kind]

    def __str__(self) -> str:
        lines = [f"complete: {'yes' if self.complete else 'no'}"]
        if not self.reachability_complete:
            lines.append("reachability incomplete (state cap reached)")
        lines += [f"gap: {g}" for g in self.gaps]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


@dataclass
class OvercompleteReport:
    overcomplete: bool
    gaps: list[Gap] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.overcomplete

    def __str__(self) -> str:
        lines = [f"overcomplete: {'yes' if self.overcomplete else 'no'}"]
        lines += [f"gap: {g}" for g in self.gaps]
        return "\n".join(lines)


def _component_gaps(system: GameSystem, need_outcomes: bool) -> list[Gap]:
    gaps = []
    ev = system.evaluator
    for name, empty in (
        ("players", not system.players),
        ("tracks", not system.tracks),
        ("initial conditions", not ev.initial_states),
        ("decisions", not system.decisions),
        ("actions", not system.actions),
        ("outcomes", need_outcomes and not system.outcomes),
    ):
        if empty:
            gaps.append(Gap("component", f"{name} empty"))
    return gaps


def _legality_gaps(system: GameSystem) -> list[Gap]:
    return [
        Gap("legality", f"no legality rule for ({p}, {d})")
        for p, d in system.evaluator.legality_gaps
    ]


def _omega_gap(system: GameSystem, s, where: str) -> Gap | None:
    found = system.evaluator.matching_outcomes(s)
    if not found:
        return Gap("outcome", f"no outcome for {where}terminal state {format_state(system, s)}",
                   state=s)
    if len(found) > 1:
        return Gap(
            "ambiguous-outcome",
            f"outcome ambiguous ({', '.join(found)}) at {where}terminal state "
            f"{format_state(system, s)}",
            state=s,
        )
    return None


def check_complete(system: GameSystem, state_cap: int = DEFAULT_STATE_CAP) -> CompletenessReport:
    """Search the legally accessible states for places where play would break."""
    ev = system.evaluator
    report = CompletenessReport(complete=True)
    report.gaps += _legality_gaps(system)
    seen = set(ev.initial_states)
    queue = deque(ev.initial_states)
    any_terminal = False
    while queue:
        s = queue.popleft()
        if ev.is_terminal(s):
            any_terminal = True
            gap = _omega_gap(system, s, "")
            if gap:
                report.gaps.append(gap)
            continue
        for dt in ev.decision_tuples(s):
            cons = ev.consequences(dt, s)
            if cons is None:
                report.gaps.append(
                    Gap("consequence",
                        f"no consequence for {format_tuple(dt)} at {format_state(system, s)}",
                        dtuple=dt, state=s)
                )
                continue
            for _, acts in cons:
                try:
                    nxt = ev.apply_all(acts, s)
                except ActionRangeError as exc:
                    report.gaps.append(Gap("action", str(exc), dtuple=dt, state=s))
                    continue
                if nxt not in seen:
                    if len(seen) >= state_cap:
                        report.reachability_complete = False
                        continue
                    seen.add(nxt)
                    queue.append(nxt)
    report.reachable_states = len(seen)
    report.gaps[:0] = _component_gaps(system, any_terminal)

    # ambiguity at terminal states nobody can reach is harmless; say so
    if system.state_space_size <= state_cap:
        for s in system.all_states():
            if s in seen or not ev.is_terminal(s):
                continue
            if len(ev.matching_outcomes(s)) > 1:
                report.notes.append(
                    f"outcome ambiguous at {format_state(system, s)}, "
                    "which is not legally accessible"
                )
    else:
        report.notes.append("state space too large to scan inaccessible terminal states")
    if not report.reachability_complete:
        report.notes.append("reachability incomplete")
    report.complete = not report.gaps and report.reachability_complete
    return report


def _d0_order(system: GameSystem) -> list:
    return list(system.decision_names) + [NULL]


def check_overcomplete(system: GameSystem, max_gaps: int = 20,
                       state_cap: int = DEFAULT_STATE_CAP) -> OvercompleteReport:
    """Check C, L and Omega for totality over the whole state space."""
    ev = system.evaluator
    gaps = _component_gaps(system, True) + _legality_gaps(system)

    def full() -> bool:
        return len(gaps) >= max_gaps

    d0 = _d0_order(system)
    tuples = [dt for dt in itertools.product(d0, repeat=system.n) if any(d is not NULL for d in dt)]
    pattern_gaps = set()
    for dt in tuples:
        if full():
            break
        if ev.matching_rule_count(dt) == 0:
            pattern_gaps.add(dt)
            gaps.append(Gap("consequence", format_tuple(dt), dtuple=dt))
    if not full():
        if system.state_space_size > state_cap:
            raise ResourceLimitError(
                f"state space of {system.state_space_size} exceeds cap {state_cap}"
            )
        for s in system.all_states():
            if full():
                break
            for dt in tuples:
                if dt in pattern_gaps:
                    continue
                if ev.consequences(dt, s) is None:
                    gaps.append(Gap("consequence",
                                    f"{format_tuple(dt)} at {format_state(system, s)}",
                                    dtuple=dt, state=s))
                    if full():
                        break
            if not full() and ev.is_terminal(s):
                gap = _omega_gap(system, s, "")
                if gap:
                    gaps.append(gap)
    return OvercompleteReport(overcomplete=not gaps, gaps=gaps)


def validation_summary(complete: CompletenessReport, over: OvercompleteReport) -> str:
    """One-line verdict, e.g. ``complete: yes, overcomplete: no (gap: (flip,0))``."""
    line = f"complete: {'yes' if complete.complete else 'no'}, "
    line += f"overcomplete: {'yes' if over.overcomplete else 'no'}"
    if over.gaps:
        line += f" (gap: {over.gaps[0]})"
    return line
