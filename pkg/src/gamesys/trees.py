"""Game trees, decision matrices and game automata.

A tree node is a state node, a chance node or a terminal node.  Decision
edges carry a label: a frozenset of choice tuples, one entry per player
(``None`` for a player with no choice).  Reductions may replace a single
decision with a composite choice, but labels keep that shape, so the
decision matrix of a node can always be read off its edge labels.
"""
from __future__ import annotations

import json
import math
import os
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction

from .errors import PreconditionError, ResourceLimitError
from .model import GameSystem, format_tuple

DEFAULT_NODE_CAP = 2_000_000
STATE = "state"
CHANCE = "chance"
TERMINAL = "terminal"
DECISION = "decision"


def default_node_cap() -> int:
    raw = os.environ.get("GAMESYS_NODE_CAP")
    return int(raw) if raw else DEFAULT_NODE_CAP


class Node:
    __slots__ = ("id", "kind", "state", "outcome", "truncated", "parent", "children")

    def __init__(self, id, kind, state=None, outcome=None, truncated=False, parent=None):
        self.id = id
        self.kind = kind
        self.state = state
        self.outcome = outcome
        self.truncated = truncated
        self.parent = parent  # incoming edge id
        self.children: list[int] = []

    def __repr__(self):
        return f"Node({self.id}, {self.kind})"


class Edge:
    __slots__ = ("id", "kind", "src", "dst", "label", "prob")

    def __init__(self, id, kind, src, dst, label=None, prob=None):
        self.id = id
        self.kind = kind
        self.src = src
        self.dst = dst
        self.label = label  # frozenset of choice tuples (decision edges)
        self.prob = prob  # Fraction (chance edges)

    def __repr__(self):
        return f"Edge({self.src}->{self.dst}, {self.kind})"


def canon(x) -> str:
    """Deterministic text for labels and choices (independent of hash order)."""
    if x is None:
        return "0"
    if isinstance(x, str):
        return x
    if isinstance(x, tuple):
        return "(" + ",".join(canon(y) for y in x) + ")"
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(canon(y) for y in x)) + "}"
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return str(x)


class GameTree:
    """Mutable container; ids are never reused, so reductions can delete freely."""

    def __init__(self, n_players: int, players: tuple[str, ...] = (), tracks: tuple[str, ...] = ()):
        self.n = n_players
        self.players = tuple(players) or tuple(f"P{i + 1}" for i in range(n_players))
        self.tracks = tuple(tracks)
        self.nodes: dict[int, Node] = {}
        self.edges: dict[int, Edge] = {}
        self.root: int | None = None
        self.matrices: dict[int, "DecisionMatrix"] = {}  # set by matrix reductions
        self._next_node = 0
        self._next_edge = 0

    def add_node(self, kind, state=None, outcome=None, truncated=False) -> Node:
        node = Node(self._next_node, kind, state, outcome, truncated)
        self.nodes[node.id] = node
        self._next_node += 1
        return node

    def add_edge(self, src: int, dst: int, kind, label=None, prob=None) -> Edge:
        e = Edge(self._next_edge, kind, src, dst, label, prob)
        self.edges[e.id] = e
        self._next_edge += 1
        self.nodes[src].children.append(e.id)
        self.nodes[dst].parent = e.id
        return e

    def remove_subtree_nodes(self, node_ids):
        for nid in node_ids:
            node = self.nodes.pop(nid)
            self.matrices.pop(nid, None)
            for eid in node.children:
                self.edges.pop(eid, None)

    # queries

    def child_edges(self, nid: int) -> list[Edge]:
        return [self.edges[e] for e in self.nodes[nid].children]

    def children(self, nid: int) -> list[Node]:
        return [self.nodes[self.edges[e].dst] for e in self.nodes[nid].children]

    def parent_node(self, nid: int) -> Node | None:
        pe = self.nodes[nid].parent
        return None if pe is None else self.nodes[self.edges[pe].src]

    def postorder(self) -> list[int]:
        order: list[int] = []
        stack = [self.root]
        while stack:
            nid = stack.pop()
            order.append(nid)
            for e in self.nodes[nid].children:
                stack.append(self.edges[e].dst)
        order.reverse()
        return order

    def subtree(self, nid: int) -> list[int]:
        out = []
        stack = [nid]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(self.edges[e].dst for e in self.nodes[x].children)
        return out

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes.values() if not n.children]

    def copy(self) -> "GameTree":
        t = GameTree(self.n, self.players, self.tracks)
        for nid, n in self.nodes.items():
            m = Node(n.id, n.kind, n.state, n.outcome, n.truncated, n.parent)
            m.children = list(n.children)
            t.nodes[nid] = m
        for eid, e in self.edges.items():
            t.edges[eid] = Edge(e.id, e.kind, e.src, e.dst, e.label, e.prob)
        t.root = self.root
        t.matrices = dict(self.matrices)
        t._next_node, t._next_edge = self._next_node, self._next_edge
        return t

    def stats(self) -> dict:
        kinds = Counter(n.kind for n in self.nodes.values())
        ekinds = Counter(e.kind for e in self.edges.values())
        leaves = [n for n in self.nodes.values() if not n.children]
        internal = [n for n in self.nodes.values() if n.children]
        depth = 0
        if self.root is not None:
            frontier = [(self.root, 0)]
            while frontier:
                nid, d = frontier.pop()
                depth = max(depth, d)
                for e in self.nodes[nid].children:
                    frontier.append((self.edges[e].dst, d + 1))
        return {
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "state_nodes": kinds[STATE],
            "chance_nodes": kinds[CHANCE],
            "terminal_nodes": kinds[TERMINAL],
            "truncated_nodes": sum(n.truncated for n in self.nodes.values()),
            "decision_edges": ekinds[DECISION],
            "chance_edges": ekinds[CHANCE],
            "leaves": len(leaves),
            "depth": depth,
            "mean_branching": (len(self.edges) / len(internal)) if internal else 0.0,
            "outcomes": dict(sorted(Counter(n.outcome for n in leaves
                                            if n.kind == TERMINAL).items(), key=str)),
        }


# -- building ----------------------------------------------------------------


def _grow(tree: GameTree, s0, transitions, is_terminal, outcome, depth_cap: int, node_cap: int):
    labels: dict[tuple, frozenset] = {}

    def label_of(dt):
        got = labels.get(dt)
        if got is None:
            got = labels[dt] = frozenset((dt,))
        return got

    def make_state(s, depth):
        if is_terminal(s):
            return tree.add_node(TERMINAL, s, outcome(s)), False
        if depth_cap and depth >= depth_cap:
            return tree.add_node(STATE, s, truncated=True), False
        return tree.add_node(STATE, s), True

    root, expand = make_state(s0, 0)
    tree.root = root.id
    stack = [(root.id, s0, 0)] if expand else []
    while stack:
        nid, s, depth = stack.pop()
        for dt, outs in transitions(s):
            if len(outs) == 1:
                child, more = make_state(outs[0][1], depth + 1)
                tree.add_edge(nid, child.id, DECISION, label=label_of(dt))
                if more:
                    stack.append((child.id, child.state, depth + 1))
            else:
                c = tree.add_node(CHANCE)
                tree.add_edge(nid, c.id, DECISION, label=label_of(dt))
                for p, s2 in outs:
                    child, more = make_state(s2, depth + 1)
                    tree.add_edge(c.id, child.id, CHANCE, prob=p)
                    if more:
                        stack.append((child.id, child.state, depth + 1))
        if len(tree.nodes) > node_cap:
            raise ResourceLimitError(f"game tree exceeds node cap {node_cap}")
    return tree


def _initial(system: GameSystem, s0):
    ev = system.evaluator
    if s0 is None:
        if len(ev.initial_states) != 1:
            raise PreconditionError(
                f"system has {len(ev.initial_states)} initial states; pass s0 explicitly"
            )
        return ev.initial_states[0]
    s = system.state(s0) if isinstance(s0, dict) else tuple(s0)
    if s not in ev.initial_states:
        raise PreconditionError("s0 is not an initial condition of the system")
    return s


def build_tree(system: GameSystem, s0=None, depth_cap: int = 0,
               node_cap: int | None = None) -> GameTree:
    """Expand every legal decision tuple from s0.

    ``depth_cap`` counts decision plies (0 = unlimited); non-terminal nodes
    at the cap are kept as truncated state nodes."""
    if depth_cap < 0:
        raise PreconditionError("depth_cap must be >= 0")
    ev = system.evaluator
    s = _initial(system, s0)
    tree = GameTree(system.n, system.player_names, system.track_names)
    return _grow(tree, s, ev.transitions, ev.is_terminal, ev.outcome, depth_cap,
                 node_cap or default_node_cap())


@dataclass
class GameAutomaton:
    players: tuple[str, ...]
    tracks: tuple[str, ...]
    states: list[tuple]
    index: dict
    initial: tuple[int, ...]
    transitions: dict[int, list]  # sid -> [(dtuple, ((p, sid2), ...)), ...]
    terminal: dict[int, str | None]

    def successors(self, s):
        sid = self.index[s]
        return tuple(
            (dt, tuple((p, self.states[t]) for p, t in outs))
            for dt, outs in self.transitions.get(sid, ())
        )

    def is_terminal(self, s) -> bool:
        return self.index[s] in self.terminal

    def outcome(self, s):
        return self.terminal.get(self.index[s])

    def to_dict(self) -> dict:
        return {
            "players": list(self.players),
            "tracks": list(self.tracks),
            "states": [dict(zip(self.tracks, s)) for s in self.states],
            "initial": list(self.initial),
            "terminal": {str(k): v for k, v in sorted(self.terminal.items())},
            "transitions": [
                {
                    "from": sid,
                    "decisions": [None if d is None else d for d in dt],
                    "to": [[canon(p), t] for p, t in outs],
                }
                for sid in sorted(self.transitions)
                for dt, outs in self.transitions[sid]
            ],
        }


def build_automaton(system: GameSystem, state_cap: int | None = None) -> GameAutomaton:
    """Breadth-first closure of the transition function from every initial state."""
    cap = state_cap or default_node_cap()
    ev = system.evaluator
    states: list[tuple] = []
    index: dict = {}

    def sid(s):
        got = index.get(s)
        if got is None:
            if len(states) >= cap:
                raise ResourceLimitError(f"automaton exceeds state cap {cap}")
            got = index[s] = len(states)
            states.append(s)
            queue.append(s)
        return got

    queue: deque = deque()
    initial = tuple(sid(s) for s in ev.initial_states)
    transitions: dict[int, list] = {}
    terminal: dict[int, str | None] = {}
    while queue:
        s = queue.popleft()
        me = index[s]
        if ev.is_terminal(s):
            terminal[me] = ev.outcome(s)
            continue
        transitions[me] = [
            (dt, tuple((p, sid(s2)) for p, s2 in outs)) for dt, outs in ev.transitions(s)
        ]
    return GameAutomaton(system.player_names, system.track_names, states, index, initial,
                         transitions, terminal)


def unroll(automaton: GameAutomaton, s0, depth_cap: int = 0,
           node_cap: int | None = None) -> GameTree:
    """Tree obtained by walking the automaton from s0."""
    s0 = tuple(s0)
    if s0 not in automaton.index:
        raise PreconditionError("s0 is not a state of the automaton")
    tree = GameTree(len(automaton.players), automaton.players, automaton.tracks)
    return _grow(tree, s0, automaton.successors, automaton.is_terminal, automaton.outcome,
                 depth_cap, node_cap or default_node_cap())


# -- decision matrices -------------------------------------------------------


@dataclass(frozen=True)
class DecisionMatrix:
    node: int
    players: tuple[int, ...]  # active players, 0-based, ascending
    choices: tuple[tuple, ...]  # one choice list per active player
    cells: dict  # tuple of choices (one per active player) -> edge id

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.choices)

    @property
    def domain_size(self) -> int:
        return sum(len(c) for c in self.choices)

    @property
    def image(self) -> set[int]:
        return set(self.cells.values())


def matrix_from_edges(nid: int, edges) -> DecisionMatrix:
    """Read the matrix of a state node off its outgoing decision-edge labels."""
    edges = list(edges)
    if not edges:
        raise PreconditionError(f"node {nid} has no decision edges")
    n = len(next(iter(edges[0].label)))
    active = []
    for p in range(n):
        if any(t[p] is not None for e in edges for t in e.label):
            active.append(p)
    per: list[dict] = [dict() for _ in active]
    cells = {}
    for e in edges:
        for t in e.label:
            key = tuple(t[p] for p in active)
            for slot, c in zip(per, key):
                slot.setdefault(c, None)
            cells[key] = e.id
    choices = tuple(tuple(sorted(slot, key=canon)) for slot in per)
    return DecisionMatrix(nid, tuple(active), choices, cells)


def decision_matrix(tree: GameTree, node) -> DecisionMatrix:
    nid = node.id if isinstance(node, Node) else node
    n = tree.nodes[nid]
    if n.kind != STATE or not n.children:
        raise PreconditionError(f"node {nid} is not an internal state node")
    if nid in tree.matrices:
        return tree.matrices[nid]
    return matrix_from_edges(nid, tree.child_edges(nid))


def is_single_player(tree: GameTree, nid: int) -> bool:
    return len(decision_matrix(tree, nid).players) == 1


# -- export / import ---------------------------------------------------------


def _child_key(tree: GameTree, e: Edge):
    if e.kind == DECISION:
        return (0, canon(e.label), "")
    return (1, canon(e.prob), canon(tree.nodes[e.dst].state))


def ordered_children(tree: GameTree, nid: int) -> list[Edge]:
    return sorted(tree.child_edges(nid), key=lambda e: _child_key(tree, e))


def bfs_order(tree: GameTree) -> list[int]:
    order = [tree.root]
    i = 0
    while i < len(order):
        for e in ordered_children(tree, order[i]):
            order.append(e.dst)
        i += 1
    return order


def format_label(label) -> str:
    parts = sorted(canon(t) for t in label)
    return parts[0] if len(parts) == 1 else "{" + " ".join(parts) + "}"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(obj) -> str:
    if isinstance(obj, GameAutomaton):
        return _automaton_dot(obj)
    tree = obj
    order = bfs_order(tree)
    num = {nid: i for i, nid in enumerate(order)}
    lines = ["digraph gametree {", "  node [fontname=Helvetica];"]
    for nid in order:
        n = tree.nodes[nid]
        if n.kind == TERMINAL:
            attrs = f'shape=box, label="{_dot_escape(str(n.outcome))}"'
        elif n.kind == CHANCE:
            attrs = 'shape=circle, label=""'
        else:
            text = " ".join(str(v) for v in n.state) if n.state is not None else ""
            if n.truncated:
                text += " ..."
            attrs = f'shape=ellipse, label="{_dot_escape(text)}"'
        lines.append(f"  n{num[nid]} [{attrs}];")
    for nid in order:
        for e in ordered_children(tree, nid):
            text = format_label(e.label) if e.kind == DECISION else canon(e.prob)
            style = "" if e.kind == DECISION else ", style=dashed"
            lines.append(f'  n{num[nid]} -> n{num[e.dst]} [label="{_dot_escape(text)}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _automaton_dot(a: GameAutomaton) -> str:
    lines = ["digraph automaton {"]
    for i, s in enumerate(a.states):
        shape = "box" if i in a.terminal else ("doublecircle" if i in a.initial else "ellipse")
        text = " ".join(s)
        if i in a.terminal:
            text += f" => {a.terminal[i]}"
        lines.append(f'  s{i} [shape={shape}, label="{_dot_escape(text)}"];')
    for sid in sorted(a.transitions):
        for dt, outs in a.transitions[sid]:
            for p, t in outs:
                label = format_tuple(dt) + ("" if p == 1 else f" {canon(p)}")
                lines.append(f'  s{sid} -> s{t} [label="{_dot_escape(label)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _encode(x):
    if x is None or isinstance(x, str):
        return x
    if isinstance(x, tuple):
        return {"t": [_encode(y) for y in x]}
    if isinstance(x, frozenset):
        return {"s": [_encode(y) for y in sorted(x, key=canon)]}
    raise TypeError(x)


def _decode(x):
    if x is None or isinstance(x, str):
        return x
    if "t" in x:
        return tuple(_decode(y) for y in x["t"])
    return frozenset(_decode(y) for y in x["s"])


def tree_to_dict(tree: GameTree) -> dict:
    order = bfs_order(tree)
    num = {nid: i for i, nid in enumerate(order)}
    nodes, edges = [], []
    for nid in order:
        n = tree.nodes[nid]
        nodes.append({
            "id": num[nid],
            "kind": n.kind,
            "state": None if n.state is None else list(n.state),
            "outcome": n.outcome,
            "truncated": n.truncated,
        })
        for e in ordered_children(tree, nid):
            item = {"src": num[nid], "dst": num[e.dst], "kind": e.kind}
            if e.kind == DECISION:
                item["label"] = [[_encode(c) for c in t] for t in sorted(e.label, key=canon)]
            else:
                item["prob"] = canon(e.prob)
            edges.append(item)
    edge_num = {}
    for nid in order:
        for e in ordered_children(tree, nid):
            edge_num[e.id] = len(edge_num)
    matrices = []
    for nid in order:
        D = tree.matrices.get(nid)
        if D is None:
            continue
        matrices.append({
            "node": num[nid],
            "players": list(D.players),
            "choices": [[_encode(c) for c in axis] for axis in D.choices],
            "cells": [[[_encode(c) for c in key], edge_num[e]]
                      for key, e in sorted(D.cells.items(), key=lambda kv: canon(kv[0]))],
        })
    return {"players": list(tree.players), "tracks": list(tree.tracks), "root": 0,
            "nodes": nodes, "edges": edges, "matrices": matrices}


def export_json(obj, indent: int | None = None) -> str:
    if isinstance(obj, GameAutomaton):
        return json.dumps(obj.to_dict(), indent=indent)
    return json.dumps(tree_to_dict(obj), indent=indent)


def import_json(text: str) -> GameTree:
    data = json.loads(text)
    tree = GameTree(len(data["players"]), tuple(data["players"]), tuple(data["tracks"]))
    for item in data["nodes"]:
        state = None if item["state"] is None else tuple(item["state"])
        node = tree.add_node(item["kind"], state, item["outcome"], item["truncated"])
        if node.id != item["id"]:
            raise ValueError("node ids must be consecutive from 0")
    edge_ids = []
    for item in data["edges"]:
        if item["kind"] == DECISION:
            label = frozenset(tuple(_decode(c) for c in t) for t in item["label"])
            e = tree.add_edge(item["src"], item["dst"], DECISION, label=label)
        else:
            e = tree.add_edge(item["src"], item["dst"], CHANCE, prob=Fraction(item["prob"]))
        edge_ids.append(e.id)
    for item in data.get("matrices", ()):
        tree.matrices[item["node"]] = DecisionMatrix(
            item["node"],
            tuple(item["players"]),
            tuple(tuple(_decode(c) for c in axis) for axis in item["choices"]),
            {tuple(_decode(c) for c in key): edge_ids[e] for key, e in item["cells"]},
        )
    tree.root = data["root"]
    return tree


# -- shape signatures --------------------------------------------------------


@dataclass(frozen=True)
class StrippedTree:
    """Unlabeled arrangement of a tree (AHU canonical string)."""

    code: str
    size: int


def strip(tree: GameTree) -> StrippedTree:
    codes: dict[int, str] = {}
    intern: dict[str, str] = {}
    for nid in tree.postorder():
        n = tree.nodes[nid]
        kids = sorted(codes.pop(tree.edges[e].dst) for e in n.children)
        code = "(" + "".join(kids) + ")"
        codes[nid] = intern.setdefault(code, code)
    return StrippedTree(codes[tree.root], len(tree.nodes))


def labeled_signature(tree: GameTree) -> str:
    """Canonical form including kinds, labels, probabilities and outcomes."""
    codes: dict[int, str] = {}
    for nid in tree.postorder():
        n = tree.nodes[nid]
        parts = []
        for eid in n.children:
            e = tree.edges[eid]
            tag = canon(e.label) if e.kind == DECISION else canon(e.prob)
            parts.append(f"{e.kind}:{tag}>{codes.pop(e.dst)}")
        parts.sort()
        head = n.kind
        if n.kind == TERMINAL:
            head += f"={n.outcome}"
        if n.truncated:
            head += "~"
        codes[nid] = head + "[" + ";".join(parts) + "]"
    return codes[tree.root]


def count_correspondences(tree: GameTree) -> int:
    """Number of structural self-correspondences: a product of m! over
    classes of identical sibling subtrees."""
    codes: dict[int, int] = {}
    intern: dict[tuple, int] = {}
    total = 1
    for nid in tree.postorder():
        kids = [codes.pop(tree.edges[e].dst) for e in tree.nodes[nid].children]
        for m in Counter(kids).values():
            total *= math.factorial(m)
        key = tuple(sorted(kids))
        codes[nid] = intern.setdefault(key, len(intern))
    return total
