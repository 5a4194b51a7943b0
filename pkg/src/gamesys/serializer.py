"""Write systems back out as canonical description text or JSON."""
from __future__ import annotations

import itertools
import json
from fractions import Fraction

from .model import NULL_PATTERN, WILDCARD, Coordinates, GameSystem, Track
from .slices import ALL, EMPTY, format_expr, format_name, format_slice


def _tags(tags) -> str:
    return "".join(f" ^{format_name(t)}" for t in sorted(tags))


def _coord_value(space, c) -> str:
    if space.kind == "lattice":
        return "(" + ", ".join(str(x) for x in c) + ")"
    if space.kind == "graph":
        return format_name(c)
    return str(c)


def _space_head(space) -> str:
    if space.kind == "integer":
        return "Z"
    if space.kind == "modular":
        return f"Z{space.modulus}"
    if space.kind == "lattice":
        return f"Z^{space.dimension}"
    edges = ", ".join(f"{format_name(u)}-{format_name(v)}" for u, v in space.edges)
    return f"graph({edges})"


def _compact(coords: Coordinates) -> str | None:
    """Short form that the parser maps back to exactly this assignment."""
    space = coords.space
    names = [n for n, _ in coords.mapping]
    points = [c for _, c in coords.mapping]
    if not points:
        return None
    if space.kind == "integer" and all(isinstance(p, int) for p in points):
        lo = points[0]
        if points == list(range(lo, lo + len(points))):
            return f"[{lo},{lo + len(points) - 1}]"
    if space.kind == "modular" and points == list(range(len(points))):
        return f"Z{space.modulus}"
    if space.kind == "lattice":
        d = space.dimension
        lo, hi = min(min(p) for p in points), max(max(p) for p in points)
        box = list(itertools.product(range(lo, hi + 1), repeat=d))
        if points == box:
            return f"[{lo},{hi}]^{d}"
    if space.kind == "graph":
        nodes = []
        for u, v in space.edges:
            for x in (u, v):
                if x not in nodes:
                    nodes.append(x)
        if points == nodes[: len(points)] and names:
            return _space_head(space)
    return None


def format_coordinates(coords: Coordinates, single: bool = False) -> str:
    if not single:
        short = _compact(coords)
        if short is not None:
            return short
    body = ", ".join(
        f"{format_name(n)}: {_coord_value(coords.space, c)}" for n, c in coords.mapping
    )
    return f"{_space_head(coords.space)}{{{body}}}"


def format_track(t: Track) -> str:
    head = format_name(t.name) + _tags(t.tags)
    if t.coords:
        head += " ~ " + ", ".join(format_coordinates(c, single=True) for c in t.coords)
    vtags = dict(t.value_tags)
    values = ", ".join(format_name(v) + _tags(vtags.get(v, ())) for v in t.values)
    line = f"{head} = {{{values}}}"
    if t.value_coords:
        line += " ~ " + ", ".join(format_coordinates(c) for c in t.value_coords)
    return line


def _fraction(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _names(items) -> str:
    return ", ".join(format_name(x) for x in items)


def format_system(system: GameSystem) -> str:
    """Expanded canonical text; parsing it yields an equal system."""
    out: list[str] = ["players:"]
    out += [f"    {format_name(p.name)}{_tags(p.tags)}" for p in system.players]
    if system.outcomes:
        out.append("outcomes:")
        out += [f"    {format_name(o.name)}{_tags(o.tags)}" for o in system.outcomes]
    if system.uses:
        out += ["uses:", f"    {_names(system.uses)}"]
    out.append("tracks:")
    out += [f"    {format_track(t)}" for t in system.tracks]
    out.append("init:")
    out += [f"    {format_slice(sl)}" for sl in system.initial]
    if system.trivial_consequences:
        out.append("decisions ~ actions:")
    else:
        out.append("decisions:")
        for d in system.decisions:
            line = f"    {format_name(d.name)}{_tags(d.tags)}"
            if d.coords:
                line += " ~ " + ", ".join(format_coordinates(c, single=True) for c in d.coords)
            out.append(line)
    out.append("actions:")
    for a in system.actions:
        head = f"    {format_name(a.name)}{_tags(a.tags)}: "
        if not a.clauses:
            out.append(head + "identity")
            continue
        clauses = []
        for cl in a.clauses:
            writes = " ".join(_format_write(w) for w in cl.writes)
            clauses.append(f"{format_slice(cl.guard)} -> {writes}")
        out.append(head + "; ".join(clauses))
    if system.consequences:
        out.append("consequences:")
        for rule in system.consequences:
            pattern = "(" + ", ".join(x if x in (WILDCARD, NULL_PATTERN) else format_name(x)
                                      for x in rule.pattern) + ")"
            when = "" if rule.guard == ALL else f" when {format_slice(rule.guard)}"
            if len(rule.consequences) == 1 and rule.consequences[0][0] == 1:
                body = " ".join(format_name(a) for a in rule.consequences[0][1])
            else:
                body = "; ".join(
                    f"{_fraction(p)} " + " ".join(format_name(a) for a in acts)
                    for p, acts in rule.consequences
                )
            out.append(f"    {pattern}{when}: {body}")
    if system.legality or system.legal_default is not None:
        out.append("legal:")
        for r in system.legality:
            out.append(f"    {format_name(r.player)} {format_name(r.decision)}: "
                       f"{format_slice(r.slice)}")
        if system.legal_default is not None:
            out.append(f"    otherwise: {format_slice(system.legal_default)}")
    if system.ending != EMPTY:
        out += ["ending:", f"    {format_slice(system.ending)}"]
    if system.omega or system.omega_default is not None:
        out.append("omega:")
        for r in system.omega:
            out.append(f"    {format_name(r.outcome)}: {format_slice(r.slice)}")
        if system.omega_default is not None:
            out.append(f"    {format_name(system.omega_default)}: otherwise")
    return "\n".join(out) + "\n"


def _format_write(w) -> str:
    if w.expr is None:
        return f"({format_name(w.value)})@{format_name(w.track)}"
    return f"({format_expr(w.expr)})_{w.coord}@{format_name(w.track)}"


# -- JSON --------------------------------------------------------------------


def _coords_json(cs):
    return [
        {
            "space": {
                "kind": c.space.kind,
                "modulus": c.space.modulus,
                "dimension": c.space.dimension,
                "edges": [list(e) for e in c.space.edges],
            },
            "mapping": [[n, list(p) if isinstance(p, tuple) else p] for n, p in c.mapping],
        }
        for c in cs
    ]


def system_to_dict(system: GameSystem) -> dict:
    """Stable, JSON-ready view; slices appear in description syntax."""
    return {
        "players": [{"id": p.id, "name": p.name, "tags": sorted(p.tags)} for p in system.players],
        "outcomes": [{"name": o.name, "tags": sorted(o.tags)} for o in system.outcomes],
        "tracks": [
            {
                "name": t.name,
                "tags": sorted(t.tags),
                "values": list(t.values),
                "coords": _coords_json(t.coords),
                "value_coords": _coords_json(t.value_coords),
                "value_tags": {v: sorted(tags) for v, tags in t.value_tags},
            }
            for t in system.tracks
        ],
        "initial": [format_slice(sl) for sl in system.initial],
        "decisions": [
            {"name": d.name, "tags": sorted(d.tags), "coords": _coords_json(d.coords)}
            for d in system.decisions
        ],
        "actions": [
            {
                "name": a.name,
                "tags": sorted(a.tags),
                "clauses": [
                    {"guard": format_slice(cl.guard),
                     "writes": [_format_write(w) for w in cl.writes]}
                    for cl in a.clauses
                ],
            }
            for a in system.actions
        ],
        "trivial_consequences": system.trivial_consequences,
        "consequences": [
            {
                "pattern": list(r.pattern),
                "guard": format_slice(r.guard),
                "consequences": [[_fraction(p), list(acts)] for p, acts in r.consequences],
            }
            for r in system.consequences
        ],
        "legality": [
            {"player": r.player, "decision": r.decision, "slice": format_slice(r.slice)}
            for r in system.legality
        ],
        "legal_default": None if system.legal_default is None
        else format_slice(system.legal_default),
        "ending": format_slice(system.ending),
        "omega": [{"outcome": r.outcome, "slice": format_slice(r.slice)} for r in system.omega],
        "omega_default": system.omega_default,
        "uses": list(system.uses),
    }


def dump_json(system: GameSystem, indent: int | None = 2) -> str:
    return json.dumps(system_to_dict(system), indent=indent)
