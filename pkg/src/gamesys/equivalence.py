"""Comparing game trees: structure, probabilities, matrices, outcomes.

The search for a relabeling works on canonical subtree codes: for a fixed
player map and outcome map, two trees are equivalent up to relabeling
exactly when their root codes agree.  A witness correspondence is then read
off top-down and re-checked by ``verify_witness``, which does not use codes.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .canonical import DEFAULT_PERM_CAP, Canonicalizer, matrix_form, node_matrix
from .errors import PreconditionError, SearchCapExceeded
from .model import GameSystem
from .reductions import ReducedTree, reduce_fixpoint
from .trees import (CHANCE, STATE, TERMINAL, DecisionMatrix, GameTree, bfs_order,
                    build_tree, canon, ordered_children)

DEFAULT_SEARCH_CAP = 1_000_000
MAX_PLAYERS = 8

NOT_STRUCTURAL = "not-structural"
STRUCTURAL = "structural"
RELABELING = "up-to-relabeling"
AGENCY = "agency"


def _tree(t) -> GameTree:
    return t.tree if isinstance(t, ReducedTree) else t


@dataclass
class Correspondence:
    f: dict[int, int]
    edges: dict[int, int]
    pi: tuple[int, ...] | None = None
    h: dict[int, dict[int, dict]] | None = None
    o: dict | None = None

    def to_dict(self, t1: GameTree, t2: GameTree) -> dict:
        """Bijections as index arrays over each tree's breadth-first node order."""
        order1, order2 = bfs_order(t1), bfs_order(t2)
        num2 = {nid: i for i, nid in enumerate(order2)}
        data = {"f": [num2[self.f[nid]] for nid in order1]}
        if self.pi is not None:
            data["pi"] = list(self.pi)
        if self.o is not None:
            data["o"] = [[a, b] for a, b in sorted(self.o.items(), key=lambda kv: str(kv[0]))]
        return data


@dataclass
class EquivalenceVerdict:
    level: str
    equivalent: bool | None  # None: search cap hit, no answer
    witness: Correspondence | None = None
    pi: dict | None = None
    o: dict | None = None
    certificate: dict | None = None
    depth: int | None = None
    note: str = ""
    witnesses: list = field(default_factory=list)
    trees: tuple | None = None

    def __bool__(self) -> bool:
        return self.equivalent is True

    @property
    def inconclusive(self) -> bool:
        return self.equivalent is None

    def __str__(self) -> str:
        if self.equivalent is None:
            head = f"inconclusive ({self.note})"
        elif self.equivalent:
            head = "equivalent " + ("(agency)" if self.level == AGENCY else "up to relabeling")
            if self.depth:
                head += f" at depth {self.depth}"
        else:
            head = f"not equivalent (level reached: {self.level})"
        lines = [head]
        if self.pi:
            lines.append("players: " + ", ".join(f"{a} -> {b}" for a, b in self.pi.items()))
        if self.o:
            lines.append("outcomes: " + ", ".join(f"{a} -> {b}" for a, b in self.o.items()))
        if self.certificate:
            lines.append(f"mismatch: {self.certificate}")
        if self.note and self.equivalent is not None:
            lines.append(self.note)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        data = {
            "level": self.level,
            "equivalent": self.equivalent,
            "pi": self.pi,
            "o": self.o,
            "depth": self.depth,
            "certificate": self.certificate,
            "note": self.note,
        }
        if self.witness is not None and self.trees is not None:
            data["witness"] = self.witness.to_dict(*self.trees)
        return data

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent, default=str)


# -- structural correspondences ----------------------------------------------


def _shape_codes(trees) -> list[dict[int, int]]:
    """Kind-aware stripped-tree codes from one shared table (labels,
    outcomes and probabilities ignored)."""
    intern: dict = {}
    out = []
    for tree in trees:
        codes: dict[int, int] = {}
        for nid in tree.postorder():
            n = tree.nodes[nid]
            key = (n.kind, tuple(sorted(codes[tree.edges[e].dst] for e in n.children)))
            codes[nid] = intern.setdefault(key, len(intern))
        out.append(codes)
    return out


def structurally_equivalent(t1, t2) -> bool:
    t1, t2 = _tree(t1), _tree(t2)
    c1, c2 = _shape_codes((t1, t2))
    return c1[t1.root] == c2[t2.root]


def count_structural_correspondences(t1, t2) -> int:
    """Number of structural correspondences, without listing them."""
    t1, t2 = _tree(t1), _tree(t2)
    c1, c2 = _shape_codes((t1, t2))
    if c1[t1.root] != c2[t2.root]:
        return 0
    total = 1
    for nid in t1.nodes:
        for m in Counter(c1[t1.edges[e].dst] for e in t1.nodes[nid].children).values():
            total *= math.factorial(m)
    return total


def _edge_map_from_nodes(t1: GameTree, t2: GameTree, f: dict) -> dict[int, int]:
    return {t1.nodes[x].parent: t2.nodes[y].parent for x, y in f.items() if x != t1.root}


def structural_correspondences(t1, t2, cap: int = DEFAULT_SEARCH_CAP):
    """Lazily enumerate node bijections between trees with equal stripped shape.

    Sibling subtrees of the same shape may be paired in any order; the search
    backtracks over those choices.  More than ``cap`` branch visits raises
    SearchCapExceeded."""
    t1, t2 = _tree(t1), _tree(t2)
    c1, c2 = _shape_codes((t1, t2))
    if c1[t1.root] != c2[t2.root]:
        return

    def options(u, v):
        g1: dict[int, list] = {}
        g2: dict[int, list] = {}
        for e in ordered_children(t1, u):
            g1.setdefault(c1[e.dst], []).append(e.dst)
        for e in ordered_children(t2, v):
            g2.setdefault(c2[e.dst], []).append(e.dst)
        keys = sorted(g1)
        perms = [itertools.permutations(g2[k]) for k in keys]
        for combo in itertools.product(*perms):
            pairs = []
            for k, targets in zip(keys, combo):
                pairs.extend(zip(g1[k], targets))
            yield pairs

    pairs = [(t1.root, t2.root)]
    frames: list[tuple[int, object, int]] = []
    pos = 0
    visits = 0
    while True:
        while pos < len(pairs) and not t1.nodes[pairs[pos][0]].children:
            pos += 1
        if pos == len(pairs):
            f = dict(pairs)
            yield Correspondence(f, _edge_map_from_nodes(t1, t2, f))
            advanced = False
        else:
            it = options(*pairs[pos])
            first = next(it)
            visits += 1
            frames.append((pos, it, len(pairs)))
            pairs.extend(first)
            pos += 1
            continue
        # backtrack to the most recent node with another pairing left
        while frames and not advanced:
            at, it, size = frames.pop()
            del pairs[size:]
            nxt = next(it, None)
            if nxt is None:
                continue
            visits += 1
            if visits > cap:
                raise SearchCapExceeded(cap, "structural correspondences")
            frames.append((at, it, size))
            pairs.extend(nxt)
            pos = at + 1
            advanced = True
        if not advanced:
            return


def _as_f(f) -> dict:
    return f.f if isinstance(f, Correspondence) else f


def matching_probabilities(t1, t2, f) -> bool:
    t1, t2 = _tree(t1), _tree(t2)
    f = _as_f(f)
    for x, y in f.items():
        pe = t1.nodes[x].parent
        if pe is None:
            continue
        e1, e2 = t1.edges[pe], t2.edges[t2.nodes[y].parent]
        if e1.kind == CHANCE and (e2.kind != CHANCE or e1.prob != e2.prob):
            return False
    return True


def similarly_distinct_outcomes(t1, t2, f) -> dict | None:
    """The outcome bijection induced by f over terminal nodes, if there is one."""
    t1, t2 = _tree(t1), _tree(t2)
    f = _as_f(f)
    o: dict = {}
    back: dict = {}
    for x, y in f.items():
        a, b = t1.nodes[x], t2.nodes[y]
        if a.kind != TERMINAL or a.truncated:
            continue
        if o.setdefault(a.outcome, b.outcome) != b.outcome:
            return None
        if back.setdefault(b.outcome, a.outcome) != a.outcome:
            return None
    return o


def match_decision_matrices(D1: DecisionMatrix, D2: DecisionMatrix, g: dict,
                            edge_map: dict | None = None, cap: int = DEFAULT_SEARCH_CAP):
    """Per-player choice bijections carrying D1's cells onto the mapped edges of D2.

    ``g`` maps D1's active players to D2's.  Returns {player: {choice: choice}}
    or None."""
    if edge_map is None:
        edge_map = {}
    if len(D1.players) != len(D2.players):
        return None
    if len(D1.players) == 0:
        return {}
    if sorted(g.get(p, -1) for p in D1.players) != sorted(D2.players):
        return None
    slot2 = {p: i for i, p in enumerate(D2.players)}
    # axis i of D1 lines up with axis where[i] of D2
    where = [slot2[g[p]] for p in D1.players]
    if any(len(D1.choices[i]) != len(D2.choices[where[i]]) for i in range(len(where))):
        return None
    k = len(where)
    variables = [(i, c) for i in range(k) for c in D1.choices[i]]
    assign: dict = {}
    used = [set() for _ in range(k)]
    visits = 0

    def target(e):
        return edge_map.get(e, e)

    def consistent(i, c) -> bool:
        # every cell whose coordinates are all assigned and that involves (i, c)
        others = []
        for j in range(k):
            if j == i:
                others.append([c])
            else:
                others.append([x for x in D1.choices[j] if (j, x) in assign])
        for key in itertools.product(*others):
            key2 = [None] * k
            for j, x in enumerate(key):
                key2[where[j]] = assign[(j, x)] if j != i else assign[(i, c)]
            if D2.cells.get(tuple(key2)) != target(D1.cells[key]):
                return False
        return True

    def search(n) -> bool:
        nonlocal visits
        if n == len(variables):
            return True
        i, c = variables[n]
        for c2 in D2.choices[where[i]]:
            if c2 in used[i]:
                continue
            visits += 1
            if visits > cap:
                raise SearchCapExceeded(cap, "decision matrix matching")
            assign[(i, c)] = c2
            used[i].add(c2)
            if consistent(i, c) and search(n + 1):
                return True
            used[i].discard(c2)
            del assign[(i, c)]
        return False

    if not search(0):
        return None
    return {p: {c: assign[(i, c)] for c in D1.choices[i]} for i, p in enumerate(D1.players)}


def _player_perms(n: int):
    if n > MAX_PLAYERS:
        raise PreconditionError(f"player bijection search supports at most {MAX_PLAYERS} players")
    return itertools.permutations(range(n))


def trees_matching_matrices(t1, t2, f, cap: int = DEFAULT_SEARCH_CAP) -> dict | None:
    """A player bijection under which every corresponding matrix pair matches."""
    t1, t2 = _tree(t1), _tree(t2)
    f = _as_f(f)
    if t1.n != t2.n:
        return None
    edge_map = _edge_map_from_nodes(t1, t2, f)
    pairs = [(u, f[u]) for u in f if t1.nodes[u].kind == STATE and t1.nodes[u].children]
    mats = [(node_matrix(t1, u), node_matrix(t2, v)) for u, v in pairs]
    for pi in _player_perms(t1.n):
        ok = True
        for D1, D2 in mats:
            g = {p: pi[p] for p in D1.players}
            if match_decision_matrices(D1, D2, g, edge_map, cap) is None:
                ok = False
                break
        if ok:
            return {t1.players[i]: t2.players[pi[i]] for i in range(t1.n)}
    return None


# -- witness -----------------------------------------------------------------


def _pair_matrix(D1, D2, code1, code2, pi, perm_cap):
    """Edge pairs and choice maps for two matrices known to have equal forms."""
    k = len(D1.players)
    h: dict = {}
    pairs: list[tuple[int, int]] = []
    if k == 0:
        ((_, e1),) = D1.cells.items()
        ((_, e2),) = D2.cells.items()
        return [(e1, e2)], h
    if k == 1:
        p1 = D1.players[0]
        by1: dict[int, list] = {}
        by2: dict[int, list] = {}
        for (c,), e in D1.cells.items():
            by1.setdefault(e, []).append(c)
        for (c,), e in D2.cells.items():
            by2.setdefault(e, []).append(c)
        pool: dict = {}
        for e in sorted(by2):
            pool.setdefault((code2(e), len(by2[e])), []).append(e)
        hp = {}
        for e in sorted(by1):
            e2 = pool[(code1(e), len(by1[e]))].pop(0)
            pairs.append((e, e2))
            for a, b in zip(sorted(by1[e], key=canon), sorted(by2[e2], key=canon)):
                hp[a] = b
        h[p1] = hp
        return pairs, h
    _, axes1, perm1 = matrix_form(D1, code1, lambda p: pi[p], perm_cap, want_perm=True)
    _, axes2, perm2 = matrix_form(D2, code2, lambda p: p, perm_cap, want_perm=True)
    for j in range(k):
        h[D1.players[axes1[j]]] = dict(zip(perm1[j], perm2[j]))
    seen = {}
    for combo1, combo2 in zip(itertools.product(*perm1), itertools.product(*perm2)):
        key1, key2 = [None] * k, [None] * k
        for slot, c in zip(axes1, combo1):
            key1[slot] = c
        for slot, c in zip(axes2, combo2):
            key2[slot] = c
        e1, e2 = D1.cells[tuple(key1)], D2.cells[tuple(key2)]
        if e1 not in seen:
            seen[e1] = e2
            pairs.append((e1, e2))
    return pairs, h


def _build_witness(t1, t2, codes1, codes2, pi, o, perm_cap) -> Correspondence:
    f = {t1.root: t2.root}
    emap: dict[int, int] = {}
    h: dict[int, dict] = {}
    stack = [(t1.root, t2.root)]
    while stack:
        u, v = stack.pop()
        n1 = t1.nodes[u]
        if not n1.children:
            continue
        if n1.kind == CHANCE:
            pool: dict = {}
            for e in ordered_children(t2, v):
                pool.setdefault((e.prob, codes2[e.dst]), []).append(e.id)
            pairs = [(e.id, pool[(e.prob, codes1[e.dst])].pop(0)) for e in ordered_children(t1, u)]
        else:
            D1, D2 = node_matrix(t1, u), node_matrix(t2, v)
            pairs, h[u] = _pair_matrix(
                D1, D2,
                lambda e: codes1[t1.edges[e].dst], lambda e: codes2[t2.edges[e].dst],
                pi, perm_cap,
            )
        for e1, e2 in pairs:
            emap[e1] = e2
            x, y = t1.edges[e1].dst, t2.edges[e2].dst
            f[x] = y
            stack.append((x, y))
    return Correspondence(f, emap, tuple(pi), h, dict(o))


def verify_witness(t1, t2, w: Correspondence) -> tuple[bool, str]:
    """Independent check of a relabeling witness; returns (ok, reason)."""
    t1, t2 = _tree(t1), _tree(t2)
    f = w.f
    if f.get(t1.root) != t2.root:
        return False, "root not mapped to root"
    if set(f) != set(t1.nodes) or set(f.values()) != set(t2.nodes) or len(t1.nodes) != len(t2.nodes):
        return False, "node map is not a bijection"
    if set(w.edges) != set(t1.edges) or len(set(w.edges.values())) != len(t2.edges):
        return False, "edge map is not a bijection"
    for eid, e in t1.edges.items():
        e2 = t2.edges.get(w.edges[eid])
        if e2 is None or e2.src != f[e.src] or e2.dst != f[e.dst] or e2.kind != e.kind:
            return False, f"edge {eid} not carried to a matching edge"
        if e.kind == CHANCE and e.prob != e2.prob:
            return False, f"probability mismatch on edge {eid}"
    o = w.o or {}
    if len(set(o.values())) != len(o):
        return False, "outcome map is not injective"
    pi = w.pi
    if pi is not None and sorted(pi) != list(range(t2.n)):
        return False, "player map is not a bijection"
    for nid, n in t1.nodes.items():
        m = t2.nodes[f[nid]]
        if n.kind != m.kind or len(n.children) != len(m.children):
            return False, f"node {nid} kind or arity differs"
        if n.kind == TERMINAL and not n.truncated:
            if o.get(n.outcome) != m.outcome:
                return False, f"outcome mismatch at node {nid}"
        if n.kind != STATE or not n.children or pi is None:
            continue
        D1, D2 = node_matrix(t1, nid), node_matrix(t2, f[nid])
        if sorted(pi[p] for p in D1.players) != sorted(D2.players):
            return False, f"active players do not correspond at node {nid}"
        hs = (w.h or {}).get(nid, {})
        slot1 = {p: i for i, p in enumerate(D1.players)}
        for p, choices in zip(D1.players, D1.choices):
            hp = hs.get(p, {})
            target = D2.choices[D2.players.index(pi[p])]
            if sorted(map(canon, hp)) != sorted(map(canon, choices)) or \
                    sorted(map(canon, hp.values())) != sorted(map(canon, target)):
                return False, f"choice map at node {nid} is not a bijection"
        inv = {pi[p]: p for p in D1.players}
        for key, e in D1.cells.items():
            key2 = tuple(hs[inv[q]][key[slot1[inv[q]]]] for q in D2.players)
            if D2.cells.get(key2) != w.edges[e]:
                return False, f"decision matrices do not match at node {nid}"
    return True, ""


# -- search --------------------------------------------------------------------


def _active_counts(tree: GameTree) -> Counter:
    counts: Counter = Counter()
    for nid, n in tree.nodes.items():
        if n.kind == STATE and n.children:
            counts.update(node_matrix(tree, nid).players)
    return counts


def _outcome_counts(tree: GameTree) -> Counter:
    return Counter(n.outcome for n in tree.nodes.values()
                   if n.kind == TERMINAL and not n.truncated)


def _pi_candidates(trees1, trees2, n):
    a1, a2 = Counter(), Counter()
    for t in trees1:
        a1.update(_active_counts(t))
    for t in trees2:
        a2.update(_active_counts(t))
    for pi in _player_perms(n):
        if all(a1[p] == a2[pi[p]] for p in range(n)):
            yield pi


def _o_candidates(trees1, trees2, cap):
    c1, c2 = Counter(), Counter()
    for t in trees1:
        c1.update(_outcome_counts(t))
    for t in trees2:
        c2.update(_outcome_counts(t))
    if sorted(c1.values()) != sorted(c2.values()):
        return
    src = sorted(c1, key=str)
    visits = 0
    assign: dict = {}
    used: set = set()

    def rec(i):
        nonlocal visits
        if i == len(src):
            yield dict(assign)
            return
        a = src[i]
        options = sorted((b for b in c2 if c2[b] == c1[a] and b not in used),
                         key=lambda b: (b != a, str(b)))
        for b in options:
            visits += 1
            if visits > cap:
                raise SearchCapExceeded(cap, "outcome bijections")
            assign[a] = b
            used.add(b)
            yield from rec(i + 1)
            used.discard(b)
            del assign[a]

    yield from rec(0)


def _first_mismatch(t1, t2, codes1, codes2) -> dict:
    u, v = t1.root, t2.root
    reason = "subtrees differ"
    while True:
        n1, n2 = t1.nodes[u], t2.nodes[v]
        if n1.kind != n2.kind:
            reason = "node kinds differ"
            break
        if len(n1.children) != len(n2.children):
            reason = "different number of children"
            break
        k1 = Counter(codes1[e.dst] for e in t1.child_edges(u))
        k2 = Counter(codes2[e.dst] for e in t2.child_edges(v))
        extra1 = [e.dst for e in ordered_children(t1, u) if k1[codes1[e.dst]] > k2[codes1[e.dst]]]
        extra2 = [e.dst for e in ordered_children(t2, v) if k2[codes2[e.dst]] > k1[codes2[e.dst]]]
        if not extra1 or not extra2:
            reason = "children match but the node itself does not"
            break
        u, v = extra1[0], extra2[0]
    return {"node1": u, "node2": v, "state1": _show_state(n1), "state2": _show_state(n2),
            "reason": reason}


def _show_state(n):
    if n.kind == TERMINAL:
        return f"terminal {n.outcome}"
    if n.state is None:
        return n.kind
    return " ".join(str(x) for x in n.state)


def _search(trees1, trees2, perm_cap, search_cap):
    """Find (pi, o, codes) making the root-code multisets equal, else None.

    Also returns a certificate for the first candidate tried, for reporting."""
    n = trees1[0].n
    canon_ = Canonicalizer(perm_cap)
    codes2 = [canon_.tree_codes(t) for t in trees2]
    roots2 = Counter(c[t.root] for c, t in zip(codes2, trees2))
    certificate = None
    tried = 0
    for pi in _pi_candidates(trees1, trees2, n):
        for o in _o_candidates(trees1, trees2, search_cap):
            tried += 1
            if tried > search_cap:
                raise SearchCapExceeded(search_cap, "player and outcome bijections")
            codes1 = [canon_.tree_codes(t, lambda p: pi[p], o.__getitem__) for t in trees1]
            roots1 = Counter(c[t.root] for c, t in zip(codes1, trees1))
            if roots1 == roots2:
                return pi, o, codes1, codes2, None
            if certificate is None and len(trees1) == 1:
                certificate = _first_mismatch(trees1[0], trees2[0], codes1[0], codes2[0])
    if certificate is None:
        if not tried:
            certificate = {"reason": "no player or outcome bijection fits the counts"}
        else:
            certificate = {"reason": "no initial-condition bijection fits"}
    return None, None, None, None, certificate


def _compare(trees1, trees2, level, perm_cap, search_cap):
    """Shared core: returns an EquivalenceVerdict at the given positive level."""
    # structural: the multisets of stripped shapes must agree
    shapes = _shape_codes(list(trees1) + list(trees2))
    roots = [c[t.root] for c, t in zip(shapes, list(trees1) + list(trees2))]
    sh1, sh2 = Counter(roots[:len(trees1)]), Counter(roots[len(trees1):])
    if sh1 != sh2 or len(trees1) != len(trees2):
        return EquivalenceVerdict(NOT_STRUCTURAL, False,
                                  certificate={"reason": "stripped trees differ"})
    if trees1[0].n != trees2[0].n:
        return EquivalenceVerdict(STRUCTURAL, False,
                                  certificate={"reason": "different numbers of players"})
    try:
        pi, o, codes1, codes2, cert = _search(trees1, trees2, perm_cap, search_cap)
    except SearchCapExceeded as exc:
        return EquivalenceVerdict(STRUCTURAL, None, note=str(exc))
    if pi is None:
        return EquivalenceVerdict(STRUCTURAL, False, certificate=cert)
    # pair trees by root code, then read off and check a witness per pair
    witnesses = []
    pool: dict = {}
    for i, t in enumerate(trees2):
        pool.setdefault(codes2[i][t.root], []).append(i)
    for i, t in enumerate(trees1):
        j = pool[codes1[i][t.root]].pop(0)
        w = _build_witness(t, trees2[j], codes1[i], codes2[j], pi, o, perm_cap)
        ok, why = verify_witness(t, trees2[j], w)
        if not ok:
            raise AssertionError(f"witness failed verification: {why}")
        witnesses.append((w, (t, trees2[j])))
    names1, names2 = trees1[0].players, trees2[0].players
    verdict = EquivalenceVerdict(
        level, True, witness=witnesses[0][0],
        pi={names1[i]: names2[pi[i]] for i in range(len(pi))}, o=dict(o),
        witnesses=[w for w, _ in witnesses], trees=witnesses[0][1],
    )
    return verdict


def equivalent_up_to_relabeling(t1, t2, perm_cap: int = DEFAULT_PERM_CAP,
                                search_cap: int = DEFAULT_SEARCH_CAP) -> EquivalenceVerdict:
    t1, t2 = _tree(t1), _tree(t2)
    verdict = _compare([t1], [t2], RELABELING, perm_cap, search_cap)
    if _truncated(t1) or _truncated(t2):
        verdict.note = "trees are truncated; truncated leaves carry no outcome"
    return verdict


def _truncated(tree: GameTree) -> bool:
    return any(n.truncated for n in tree.nodes.values())


def _trees_of(g, depth_cap: int, node_cap) -> list[GameTree]:
    if isinstance(g, GameSystem):
        return [build_tree(g, s0, depth_cap, node_cap) for s0 in g.evaluator.initial_states]
    if isinstance(g, (list, tuple)):
        return [_tree(t) for t in g]
    return [_tree(g)]


def agency_equivalent(g1, g2, depth_cap: int = 0, node_cap: int | None = None,
                      perm_cap: int = DEFAULT_PERM_CAP,
                      search_cap: int = DEFAULT_SEARCH_CAP) -> EquivalenceVerdict:
    """Reduce both sides to a fixpoint, then compare up to relabeling.

    g1, g2 may be game systems (one tree per initial condition) or trees."""
    trees1 = _trees_of(g1, depth_cap, node_cap)
    trees2 = _trees_of(g2, depth_cap, node_cap)
    if len(trees1) != len(trees2):
        return EquivalenceVerdict(NOT_STRUCTURAL, False,
                                  certificate={"reason": "different numbers of initial conditions"})
    red1 = [reduce_fixpoint(t).tree for t in trees1]
    red2 = [reduce_fixpoint(t).tree for t in trees2]
    verdict = _compare(red1, red2, AGENCY, perm_cap, search_cap)
    if any(_truncated(t) for t in trees1 + trees2):
        verdict.depth = depth_cap or None
        verdict.note = f"agency-equivalent at depth {depth_cap}" if verdict else \
            f"compared at depth {depth_cap}"
    return verdict
