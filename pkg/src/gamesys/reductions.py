"""Tree reductions that drop differences players cannot act on.

Every reduction works on a ``ReducedTree``: a game tree plus the log of what
was done to it.  Matrix reductions store the reduced decision matrix on the
tree (``tree.matrices``) and leave edge labels alone, so the original
decision tuples stay visible on the edges.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .canonical import Canonicalizer, node_matrix
from .errors import PreconditionError, ResourceLimitError
from .trees import (CHANCE, DECISION, STATE, DecisionMatrix, GameTree, canon,
                    ordered_children, tree_to_dict)

ORDER = ("matrix", "bookkeeping", "single_player", "symmetry")
DEFAULT_PASS_CAP = 10_000


@dataclass
class ReducedTree:
    tree: GameTree
    log: list[dict] = field(default_factory=list)

    def domains(self) -> dict[int, dict[str, tuple]]:
        """Choice sets per internal state node and active player."""
        out = {}
        for nid, n in self.tree.nodes.items():
            if n.kind == STATE and n.children:
                D = node_matrix(self.tree, nid)
                out[nid] = {self.tree.players[p]: c for p, c in zip(D.players, D.choices)}
        return out

    def summary(self) -> dict:
        counts: dict[str, int] = {}
        for item in self.log:
            counts[item["reduction"]] = counts.get(item["reduction"], 0) + 1
        return counts

    def to_dict(self, include_tree: bool = False) -> dict:
        data = {"log": self.log, "applied": self.summary(), "stats": self.tree.stats(),
                "measure": list(measure(self.tree))}
        if include_tree:
            data["tree"] = tree_to_dict(self.tree)
        return data

    def to_json(self, include_tree: bool = False, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(include_tree), indent=indent, default=str)


def _wrap(t, inplace: bool) -> ReducedTree:
    if isinstance(t, ReducedTree):
        return t if inplace else ReducedTree(t.tree.copy(), list(t.log))
    return ReducedTree(t if inplace else t.copy())


def measure(t) -> tuple[int, int]:
    """(node count, total size of decision-matrix domains); every reduction lowers it."""
    tree = t.tree if isinstance(t, ReducedTree) else t
    dom = 0
    for nid, n in tree.nodes.items():
        if n.kind == STATE and n.children:
            dom += node_matrix(tree, nid).domain_size
    return len(tree.nodes), dom


def _internal_state(tree: GameTree, nid) -> bool:
    n = tree.nodes.get(nid)
    return n is not None and n.kind == STATE and bool(n.children)


# -- decision matrix redundancy ----------------------------------------------


def _insert(i: int, c, rest: tuple) -> tuple:
    return rest[:i] + (c,) + rest[i:]


def reduced_matrix(D: DecisionMatrix) -> DecisionMatrix:
    """Delete redundant choices (keeping the earliest), then inactive players."""
    k = len(D.players)
    choices = [list(c) for c in D.choices]
    changed = True
    while changed:
        changed = False
        for i in range(k):
            others = [choices[j] for j in range(k) if j != i]
            seen = set()
            keep = []
            for c in choices[i]:
                sig = tuple(D.cells[_insert(i, c, rest)] for rest in itertools.product(*others))
                if sig in seen:
                    changed = True
                    continue
                seen.add(sig)
                keep.append(c)
            choices[i] = keep
    live = [i for i in range(k) if len(choices[i]) > 1]
    cells = {}
    for combo in itertools.product(*(choices[i] for i in live)):
        full = [c[0] for c in choices]
        for i, c in zip(live, combo):
            full[i] = c
        cells[combo] = D.cells[tuple(full)]
    return DecisionMatrix(D.node, tuple(D.players[i] for i in live),
                          tuple(tuple(choices[i]) for i in live), cells)


def _matrix_step(rt: ReducedTree, nid: int) -> bool:
    tree = rt.tree
    D = node_matrix(tree, nid)
    R = reduced_matrix(D)
    if R.domain_size >= D.domain_size:
        return False
    tree.matrices[nid] = R
    rt.log.append({"reduction": "matrix", "node": nid,
                   "domain": [D.domain_size, R.domain_size],
                   "players": [tree.players[p] for p in R.players]})
    return True


def reduce_matrix(rt, node: int, inplace: bool = False) -> ReducedTree:
    rt = _wrap(rt, inplace)
    if not _internal_state(rt.tree, node):
        raise PreconditionError(f"node {node} is not an internal state node")
    _matrix_step(rt, node)
    return rt


# -- bookkeeping subtrees ----------------------------------------------------


def _bookkeeping_region(tree: GameTree, r: int):
    """Interior nodes (r first), leaves with trajectory probabilities, and
    whether a chance node was crossed; None when r is not a bookkeeping root."""
    n = tree.nodes.get(r)
    if n is None or n.kind != STATE or len(n.children) != 1:
        return None
    interior = [r]
    leaves: list[tuple[int, Fraction]] = []
    chance = False
    stack = [(tree.edges[n.children[0]].dst, Fraction(1))]
    while stack:
        x, p = stack.pop()
        m = tree.nodes[x]
        if m.kind == CHANCE:
            chance = True
            interior.append(x)
            for e in reversed(m.children):
                edge = tree.edges[e]
                stack.append((edge.dst, p * edge.prob))
        elif m.kind == STATE and len(m.children) == 1:
            interior.append(x)
            stack.append((tree.edges[m.children[0]].dst, p))
        else:
            leaves.append((x, p))
    return interior, leaves, chance


def _detach(tree: GameTree, eid: int):
    e = tree.edges.pop(eid)
    tree.nodes[e.src].children.remove(eid)


def _bookkeeping_step(rt: ReducedTree, r: int) -> bool:
    tree = rt.tree
    region = _bookkeeping_region(tree, r)
    if region is None:
        return False
    interior, leaves, chance = region
    pe = tree.nodes[r].parent
    parent = None if pe is None else tree.nodes[tree.edges[pe].src]
    if not chance:
        ((leaf, _),) = leaves
        tree.remove_subtree_nodes(interior)
        _attach(tree, pe, leaf)
        case = "1"
    elif parent is None:
        if len(interior) < 3:  # r -> chance -> leaves is already as small as it gets
            return False
        (e0,) = tree.nodes[r].children
        tree.remove_subtree_nodes(interior[1:])
        c = tree.add_node(CHANCE)
        tree.edges[e0].dst = c.id
        c.parent = e0
        for leaf, p in leaves:
            tree.add_edge(c.id, leaf, CHANCE, prob=p)
        case = "2c"
    elif parent.kind == STATE:
        tree.remove_subtree_nodes(interior)
        c = tree.add_node(CHANCE)
        _attach(tree, pe, c.id)
        for leaf, p in leaves:
            tree.add_edge(c.id, leaf, CHANCE, prob=p)
        case = "2a"
    else:
        p_r = tree.edges[pe].prob
        _detach(tree, pe)
        tree.remove_subtree_nodes(interior)
        for leaf, p in leaves:
            tree.add_edge(parent.id, leaf, CHANCE, prob=p_r * p)
        case = "2b"
    rt.log.append({"reduction": "bookkeeping", "node": r, "case": case,
                   "removed": len(interior), "leaves": len(leaves)})
    return True


def _attach(tree: GameTree, pe, nid: int):
    """Hang nid where the subtree behind edge pe used to be (or make it the root)."""
    if pe is None:
        tree.root = nid
        tree.nodes[nid].parent = None
    else:
        tree.edges[pe].dst = nid
        tree.nodes[nid].parent = pe


def reduce_bookkeeping(rt, root: int, inplace: bool = False) -> ReducedTree:
    rt = _wrap(rt, inplace)
    if _bookkeeping_region(rt.tree, root) is None:
        raise PreconditionError(f"node {root} does not root a bookkeeping subtree")
    _bookkeeping_step(rt, root)
    return rt


# -- single-player deterministic subtrees -------------------------------------


def _owner(tree: GameTree, nid: int):
    """The only active player at an internal state node with no chance children."""
    if not _internal_state(tree, nid):
        return None
    if any(tree.nodes[tree.edges[e].dst].kind == CHANCE for e in tree.nodes[nid].children):
        return None
    D = node_matrix(tree, nid)
    return D.players[0] if len(D.players) == 1 else None


def _single_player_paths(tree: GameTree, r: int):
    q = _owner(tree, r)
    if q is None:
        return None
    interior = [r]
    paths: list[tuple[int, list[int]]] = []
    stack: list[tuple[int, list[int]]] = [(r, [])]
    while stack:
        x, path = stack.pop()
        for eid in reversed(tree.nodes[x].children):
            y = tree.edges[eid].dst
            if _owner(tree, y) == q:
                interior.append(y)
                stack.append((y, path + [eid]))
            else:
                paths.append((y, path + [eid]))
    return q, interior, paths


def _step_choice(tree: GameTree, eid: int):
    D = node_matrix(tree, tree.edges[eid].src)
    pre = [key[0] for key, e in D.cells.items() if e == eid]
    pre.sort(key=canon)
    return pre[0] if len(pre) == 1 else frozenset(pre)


def _single_player_step(rt: ReducedTree, r: int) -> bool:
    tree = rt.tree
    found = _single_player_paths(tree, r)
    if found is None:
        return False
    q, interior, paths = found
    if len(interior) == 1:
        return False  # depth one: each trajectory already is a single edge
    labels = []
    for leaf, path in paths:
        seq = tuple(_step_choice(tree, e) for e in path)
        labels.append((leaf, frozenset((tuple(seq if p == q else None for p in range(tree.n)),))))
    tree.remove_subtree_nodes(interior[1:])
    node = tree.nodes[r]
    for eid in node.children:
        tree.edges.pop(eid, None)
    node.children = []
    tree.matrices.pop(r, None)
    for leaf, label in labels:
        tree.add_edge(r, leaf, DECISION, label=label)
    rt.log.append({"reduction": "single_player", "node": r, "player": tree.players[q],
                   "removed": len(interior) - 1, "trajectories": len(paths)})
    return True


def reduce_single_player(rt, root: int, inplace: bool = False) -> ReducedTree:
    rt = _wrap(rt, inplace)
    if _single_player_paths(rt.tree, root) is None:
        raise PreconditionError(f"node {root} does not root a single-player deterministic subtree")
    _single_player_step(rt, root)
    return rt


# -- symmetry-redundant subtrees ---------------------------------------------


def _merge_into(tree: GameTree, nid: int, keep, drop):
    if keep.kind == DECISION:
        keep.label = keep.label | drop.label
        D = tree.matrices.get(nid)
        if D is not None:
            cells = {k: (keep.id if e == drop.id else e) for k, e in D.cells.items()}
            tree.matrices[nid] = DecisionMatrix(D.node, D.players, D.choices, cells)
    else:
        keep.prob = keep.prob + drop.prob
    tree.remove_subtree_nodes(tree.subtree(drop.dst))
    _detach(tree, drop.id)


def _merge_children(rt: ReducedTree, nid: int, codes: dict, only=None) -> int:
    """Merge sibling subtrees under nid that share a code; returns merges done."""
    tree = rt.tree
    groups: dict[int, list] = {}
    for e in ordered_children(tree, nid):
        groups.setdefault(codes[e.dst], []).append(e)
    merged = 0
    for code, edges in groups.items():
        if len(edges) < 2:
            continue
        keep = edges[0]
        for drop in edges[1:]:
            if only is not None and drop.dst != only:
                continue
            _merge_into(tree, nid, keep, drop)
            merged += 1
    if merged:
        rt.log.append({"reduction": "symmetry", "node": nid, "merged": merged})
    n = tree.nodes[nid]
    if n.kind == CHANCE and len(n.children) == 1:
        (eid,) = n.children
        child = tree.edges.pop(eid).dst
        tree.nodes.pop(nid)
        _attach(tree, n.parent, child)
        rt.log.append({"reduction": "symmetry", "node": nid, "dissolved": True})
    return merged


def _symmetry_pass(rt: ReducedTree) -> int:
    tree = rt.tree
    C = Canonicalizer(truncated_by_state=True)
    codes: dict[int, int] = {}
    total = 0
    for nid in tree.postorder():
        if nid not in tree.nodes:
            continue
        if len(tree.nodes[nid].children) > 1:
            total += _merge_children(rt, nid, codes)
            if nid not in tree.nodes:
                continue
        codes[nid] = C.node_code(tree, nid, codes)
    return total


def reduce_symmetry(rt, root: int, inplace: bool = False) -> ReducedTree:
    """Fold the subtree at ``root`` into an equivalent sibling."""
    rt = _wrap(rt, inplace)
    tree = rt.tree
    if root not in tree.nodes or tree.nodes[root].parent is None:
        raise PreconditionError(f"node {root} has no siblings")
    parent = tree.edges[tree.nodes[root].parent].src
    C = Canonicalizer(truncated_by_state=True)
    codes: dict[int, int] = {}
    for nid in tree.subtree(parent)[::-1]:
        if nid != parent:
            codes[nid] = C.node_code(tree, nid, codes)
    mine = codes[root]
    if sum(codes[e.dst] == mine for e in tree.child_edges(parent)) < 2:
        raise PreconditionError(f"node {root} has no equivalent sibling")
    first = next(e.dst for e in ordered_children(tree, parent) if codes[e.dst] == mine)
    if first == root:
        # root is the survivor in canonical order; fold a sibling into it instead
        other = next(e.dst for e in ordered_children(tree, parent)
                     if codes[e.dst] == mine and e.dst != root)
        _merge_children(rt, parent, codes, only=other)
    else:
        _merge_children(rt, parent, codes, only=root)
    return rt


# -- fixpoint ----------------------------------------------------------------


def _top_down(tree: GameTree) -> list[int]:
    return tree.postorder()[::-1]


def _matrix_pass(rt: ReducedTree) -> int:
    tree = rt.tree
    return sum(_matrix_step(rt, nid) for nid in tree.postorder() if _internal_state(tree, nid))


def _bookkeeping_pass(rt: ReducedTree) -> int:
    done = 0
    for nid in _top_down(rt.tree):
        if nid in rt.tree.nodes:
            done += _bookkeeping_step(rt, nid)
    return done


def _single_player_pass(rt: ReducedTree) -> int:
    done = 0
    for nid in _top_down(rt.tree):
        if nid in rt.tree.nodes:
            done += _single_player_step(rt, nid)
    return done


PASSES: dict[str, Callable[[ReducedTree], int]] = {
    "matrix": _matrix_pass,
    "bookkeeping": _bookkeeping_pass,
    "single_player": _single_player_pass,
    "symmetry": _symmetry_pass,
}


def reduce_fixpoint(t, order=ORDER, pass_cap: int = DEFAULT_PASS_CAP,
                    on_pass: Callable[[str, ReducedTree], None] | None = None) -> ReducedTree:
    """Apply the reductions round-robin until a whole round changes nothing.

    ``on_pass`` is called after every individual pass that changed the tree."""
    rt = _wrap(t, inplace=False)
    for _ in range(pass_cap):
        changed = 0
        for name in order:
            got = PASSES[name](rt)
            if got and on_pass is not None:
                on_pass(name, rt)
            changed += got
        if not changed:
            return rt
    raise ResourceLimitError(f"reductions did not settle within {pass_cap} rounds")
