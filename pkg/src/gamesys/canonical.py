"""Canonical codes for subtrees up to relabeling.

Two subtrees get the same code exactly when one can be carried onto the
other by renaming choices (per node, per player), given a fixed player map
and outcome map.  Codes are small ints interned in a shared table, so codes
from two different trees can be compared directly.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter

from .errors import SearchCapExceeded
from .trees import CHANCE, TERMINAL, DecisionMatrix, GameTree, matrix_from_edges

DEFAULT_PERM_CAP = 100_000


def node_matrix(tree: GameTree, nid: int) -> DecisionMatrix:
    """Stored (reduced) matrix of a node if any, else the one read off its labels."""
    got = tree.matrices.get(nid)
    return got if got is not None else matrix_from_edges(nid, tree.child_edges(nid))


def _axis_order(D: DecisionMatrix, pmap) -> list[int]:
    mapped = [pmap(p) for p in D.players]
    return sorted(range(len(mapped)), key=lambda i: mapped[i])


def matrix_form(D: DecisionMatrix, code_of_edge, pmap=lambda p: p,
                perm_cap: int = DEFAULT_PERM_CAP, want_perm: bool = False):
    """Canonical description of a matrix up to per-axis choice renaming.

    Returns the form, and with ``want_perm`` also the axis order and the
    per-axis choice orders that realise it."""
    axes = _axis_order(D, pmap)
    players = tuple(pmap(D.players[i]) for i in axes)
    k = len(axes)
    if k == 0:
        (edge,) = D.cells.values()
        form = (players, code_of_edge(edge))
        return (form, axes, ()) if want_perm else form
    if k == 1:
        counts = Counter(D.cells.values())
        form = (players, tuple(sorted((code_of_edge(e), c) for e, c in counts.items())))
        if want_perm:
            return form, axes, None
        return form
    sizes = [len(D.choices[i]) for i in axes]
    total = 1
    for s in sizes:
        total *= math.factorial(s)
    if total > perm_cap:
        raise SearchCapExceeded(perm_cap, f"matrix of shape {tuple(sizes)}")
    best = None
    best_perm = None
    axis_choices = [D.choices[i] for i in axes]
    for perm in itertools.product(*(itertools.permutations(c) for c in axis_choices)):
        first: dict[int, int] = {}
        pattern = []
        for combo in itertools.product(*perm):
            key = [None] * k
            for slot, c in zip(axes, combo):
                key[slot] = c
            e = D.cells[tuple(key)]
            idx = first.get(e)
            if idx is None:
                idx = first[e] = len(first)
            pattern.append(idx)
        ordered = [None] * len(first)
        for e, i in first.items():
            ordered[i] = code_of_edge(e)
        cand = (tuple(pattern), tuple(ordered))
        if best is None or cand < best:
            best, best_perm = cand, perm
    form = (players, best)
    return (form, axes, best_perm) if want_perm else form


class Canonicalizer:
    """Interning table plus code computation for whole trees."""

    def __init__(self, perm_cap: int = DEFAULT_PERM_CAP, truncated_by_state: bool = False):
        self.table: dict = {}
        self.perm_cap = perm_cap
        # reductions only merge cut-off siblings that sit at the same state
        self.truncated_by_state = truncated_by_state

    def intern(self, key) -> int:
        got = self.table.get(key)
        if got is None:
            got = self.table[key] = len(self.table)
        return got

    def node_code(self, tree: GameTree, nid: int, codes: dict, pmap=lambda p: p,
                  omap=lambda o: o) -> int:
        n = tree.nodes[nid]
        if not n.children:
            if n.truncated:
                return self.intern(("X", n.state) if self.truncated_by_state else ("X",))
            if n.kind == TERMINAL:
                return self.intern(("T", omap(n.outcome)))
            return self.intern(("L", n.kind))
        if n.kind == CHANCE:
            parts = sorted(
                (tree.edges[e].prob, codes[tree.edges[e].dst]) for e in n.children
            )
            return self.intern(("C", tuple(parts)))
        D = node_matrix(tree, nid)
        form = matrix_form(D, lambda e: codes[tree.edges[e].dst], pmap, self.perm_cap)
        return self.intern(("S", form))

    def tree_codes(self, tree: GameTree, pmap=lambda p: p, omap=lambda o: o) -> dict[int, int]:
        codes: dict[int, int] = {}
        for nid in tree.postorder():
            codes[nid] = self.node_code(tree, nid, codes, pmap, omap)
        return codes

    def root_code(self, tree: GameTree, pmap=lambda p: p, omap=lambda o: o) -> int:
        return self.tree_codes(tree, pmap, omap)[tree.root]
