"""Shared fixtures: hand-built trees, system variants, a random system
generator, and independent oracles used across the suites."""
from __future__ import annotations

import random
from fractions import Fraction

from gamesys import build_tree, corpus_text, parse_system
from gamesys.trees import CHANCE, DECISION, STATE, TERMINAL, GameTree, labeled_signature


# -- hand-built trees --------------------------------------------------------
#
# ("T", outcome[, name])
# ("S", [(tuples, child), ...][, name])
# ("C", [(prob, child), ...][, name])


def make_tree(spec, players=("P1", "P2")):
    """Build a tree from nested tuples; returns (tree, {name: node id})."""
    tree = GameTree(len(players), players)
    names = {}

    def build(node):
        kind = node[0]
        name = node[2] if len(node) > 2 else None
        if kind == "T":
            nid = tree.add_node(TERMINAL, outcome=node[1]).id
        elif kind == "S":
            nid = tree.add_node(STATE).id
            for tuples, child in node[1]:
                c = build(child)
                tree.add_edge(nid, c, DECISION, label=frozenset(tuples))
        else:
            nid = tree.add_node(CHANCE).id
            for p, child in node[1]:
                c = build(child)
                tree.add_edge(nid, c, CHANCE, prob=Fraction(p))
        if name:
            names[name] = nid
        return nid

    tree.root = build(spec)
    return tree, names


def pair_left():
    D = ("S", [([("u", None)], ("T", "o1")), ([("v", None)], ("T", "o2"))], "D")
    B = ("S", [([(None, "s")], D)], "B")
    C = ("S", [([("g", "i")], ("T", "o1")),
               ([("g", "j"), ("h", "i")], ("T", "o2")),
               ([("h", "j")], ("T", "o3"))], "C")
    chance = ("C", [(Fraction(1, 3), C), (Fraction(2, 3), ("T", "o3"))], "chance")
    A = ("S", [([("a", "c"), ("b", "d")], B), ([("a", "d"), ("b", "c")], chance)], "A")
    return make_tree(A, ("P1", "P2"))


def pair_right():
    # the transpose of the left tree: p2 plays P1's part and p1 plays P2's
    D = ("S", [([(None, "U"), (None, "W")], ("T", "O1")), ([(None, "V")], ("T", "O2"))], "D")
    B = ("S", [([("s1", "t"), ("s2", "t")], D)], "B")
    C = ("S", [([("I", "G")], ("T", "O1")),
               ([("J", "G"), ("I", "H")], ("T", "O2")),
               ([("J", "H")], ("T", "O3"))], "C")
    chance = ("C", [(Fraction(1, 3), C), (Fraction(2, 3), ("T", "O3"))], "chance")
    A = ("S", [([("C", "A"), ("D", "B")], B), ([("D", "A"), ("C", "B")], chance)], "A")
    return make_tree(A, ("p1", "p2"))


def matrix_three_players():
    """Three players, P2 idle; edges 0, 1, 2 stand for alpha, beta, gamma."""
    from gamesys.trees import DecisionMatrix
    cells = {("d1", "d2"): 0, ("d1", "d4"): 0, ("d2", "d3"): 1,
             ("d1", "d3"): 2, ("d2", "d2"): 2, ("d2", "d4"): 2}
    return DecisionMatrix(0, (0, 2), (("d1", "d2"), ("d2", "d3", "d4")), cells)


def matrix_repeated_column():
    from gamesys.trees import DecisionMatrix
    rows = {"a": (0, 2, 0), "b": (2, 1, 2)}
    cells = {(r, c): e for r, es in rows.items() for c, e in zip("cde", es)}
    return DecisionMatrix(0, (0, 2), (("a", "b"), ("c", "d", "e")), cells)


# -- system variants ---------------------------------------------------------


def coinflip_renamed():
    return parse_system(corpus_text("coinflip").replace("P1 win", "heads side")
                        .replace("P2 win", "tails side"))


def coinflip_biased():
    return parse_system(corpus_text("coinflip").replace("1/2 A_heads; 1/2 A_tails",
                                                        "1/3 A_heads; 2/3 A_tails"))


def guessing_misere():
    text = corpus_text("guessing").replace(
        '    "P2 win" for i in [1,5]: (i)@P1 (i)@P2\n    "P2 lose": otherwise',
        '    "P2 lose" for i in [1,5]: (i)@P1 (i)@P2\n    "P2 win": otherwise')
    return parse_system(text)


def guessing_swapped():
    """P2 picks and P1 guesses."""
    text = corpus_text("guessing").replace(
        "    P1 (P1, i) for i in [1,5]: (no)@picked\n"
        "    P2 (P2, i) for i in [1,5]: (yes)@picked (no)@guessed",
        "    P2 (P1, i) for i in [1,5]: (no)@picked\n"
        "    P1 (P2, i) for i in [1,5]: (yes)@picked (no)@guessed")
    return parse_system(text)


# -- random small systems ----------------------------------------------------


def random_system_text(seed: int) -> str:
    rng = random.Random(seed)
    n_players = rng.randint(1, 3)
    players = [f"P{i + 1}" for i in range(n_players)]
    tracks = {}
    for i in range(rng.randint(1, 3)):
        tracks[f"t{i}"] = ["a", "b", "c", "d"][: rng.randint(2, 4)]
    decisions = ["x", "y", "z"][: rng.randint(1, 3)]

    def atom():
        t = rng.choice(list(tracks))
        return f"({rng.choice(tracks[t])})@{t}"

    actions = {}
    for i in range(rng.randint(2, 4)):
        writes = []
        for t in rng.sample(list(tracks), rng.randint(1, len(tracks))):
            writes.append(f"({rng.choice(tracks[t])})@{t}")
        actions[f"k{i}"] = " ".join(writes)
    lines = ["players: " + ", ".join(players), "outcomes: W, L, D", "tracks:"]
    lines += [f"    {t} = {', '.join(vals)}" for t, vals in tracks.items()]
    lines.append("init: " + " ".join(f"({vals[0]})@{t}" for t, vals in tracks.items()))
    lines.append("decisions: " + ", ".join(decisions))
    lines.append("actions:")
    lines += [f"    {name}: {body}" for name, body in actions.items()]
    lines.append("consequences:")
    names = list(actions)
    for _ in range(rng.randint(0, 2)):
        pat = ", ".join(rng.choice(decisions + ["*"]) for _ in players)
        lines.append(f"    ({pat}): {rng.choice(names)}")
    a, b = rng.sample(names, 2)
    p = rng.choice([Fraction(1, 2), Fraction(1, 3), Fraction(1, 4), Fraction(1)])
    star = ", ".join("*" for _ in players)
    if p == 1:
        lines.append(f"    ({star}): {a}")
    else:
        lines.append(f"    ({star}): {p.numerator}/{p.denominator} {a}; "
                     f"{(1 - p).numerator}/{(1 - p).denominator} {b}")
    lines.append("legal:")
    for pl in players:
        for d in decisions:
            if rng.random() < 0.7:
                lines.append(f"    {pl} {d}: {rng.choice(['ALL', atom(), '!' + atom()])}")
    lines.append("    otherwise: EMPTY")
    lines.append(f"ending: {atom()}")
    lines += ["omega:", f"    W: {atom()}", f"    L: {atom()}", "    D: otherwise"]
    return "\n".join(lines) + "\n"


def random_systems(count: int = 100, start: int = 0):
    for seed in range(start, start + count):
        yield seed, parse_system(random_system_text(seed))


# -- oracles -----------------------------------------------------------------


LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8),
         (0, 4, 8), (2, 4, 6)]


def tictactoe_leaf_count() -> int:
    """Plain board DFS: number of finished games (win or full board)."""
    board = [0] * 9

    def won(p):
        return any(board[a] == board[b] == board[c] == p for a, b, c in LINES)

    def dfs(player) -> int:
        total = 0
        for i in range(9):
            if board[i]:
                continue
            board[i] = player
            if won(player) or all(board):
                total += 1
            else:
                total += dfs(3 - player)
            board[i] = 0
        return total

    return dfs(1)


def board_symmetry_orbits() -> list[frozenset]:
    """Orbits of the 9 cells (row, col) under the 8 symmetries of the square."""
    cells = [(r, c) for r in range(3) for c in range(3)]

    def maps(r, c):
        out = set()
        for _ in range(4):
            r, c = c, 2 - r
            out.add((r, c))
            out.add((r, 2 - c))
        return out

    orbits = {frozenset(maps(r, c)) for r, c in cells}
    return sorted(orbits, key=len)


# arithmetic tic-tac-toe numbers laid out on the board, row by row
MAGIC_SQUARE = ((-3, 2, 1), (4, 0, -4), (-1, -2, 3))


def magic_cell(n: int) -> tuple[int, int]:
    for r, row in enumerate(MAGIC_SQUARE):
        if n in row:
            return r, row.index(n)
    raise KeyError(n)


def rps_oracle(d1: str, d2: str) -> str:
    phi = {"rock": 0, "paper": 1, "scissors": 2}
    return ["id", "P1", "P2"][(phi[d1] - phi[d2]) % 3]


# -- matrix comparisons for the transposed two-player pair ----------------------


def matrix_pattern(L, R, names_l, corr, g=None):
    """For each named node, whether its matrix matches its image under corr."""
    from gamesys.canonical import node_matrix
    from gamesys.equivalence import _edge_map_from_nodes, match_decision_matrices
    g = g or {0: 1, 1: 0}
    em = _edge_map_from_nodes(L, R, corr.f)
    return {k: match_decision_matrices(node_matrix(L, names_l[k]),
                                       node_matrix(R, corr.f[names_l[k]]), g, em) is not None
            for k in "ABCD"}


def matrix_everywhere(tree):
    from gamesys import reduce_matrix
    rt = tree
    for n in list(tree.nodes.values()):
        if n.kind == STATE and n.children:
            rt = reduce_matrix(rt, n.id)
    return rt.tree


# -- property checks ---------------------------------------------------------
#
# Each returns a list of failure descriptions; empty means the property holds.

PROPERTY_NODE_CAP = 200_000


def check_probabilities(name, g, depth=4):
    from gamesys.trees import CHANCE as _C
    bad = []
    t = build_tree(g, depth_cap=depth, node_cap=PROPERTY_NODE_CAP)
    for n in t.nodes.values():
        if n.kind == _C and sum(e.prob for e in t.child_edges(n.id)) != 1:
            bad.append(f"{name}: chance node {n.id} does not sum to 1")
    return bad


def check_playouts(name, g, games=5):
    from gamesys import play, validate_trajectory
    bad = []
    for seed in range(games):
        traj = play(g, seed=seed, step_cap=50)
        v = validate_trajectory(g, traj)
        if not v:
            bad.append(f"{name}: seed {seed} trajectory rejected: {v}")
    return bad


def check_round_trip(name, g):
    from gamesys import format_system
    text = format_system(g)
    again = parse_system(text)
    bad = []
    if format_system(again) != text:
        bad.append(f"{name}: text changes on second round trip")
    if labeled_signature(build_tree(g, depth_cap=3, node_cap=PROPERTY_NODE_CAP)) != \
            labeled_signature(build_tree(again, depth_cap=3, node_cap=PROPERTY_NODE_CAP)):
        bad.append(f"{name}: reparsed system plays differently")
    return bad


def check_reduction_measure(name, g, depth=3):
    from gamesys import reduce_fixpoint
    from gamesys.reductions import measure
    t = build_tree(g, depth_cap=depth, node_cap=PROPERTY_NODE_CAP)
    seen = [("start", measure(t))]
    reduce_fixpoint(t, on_pass=lambda p, rt: seen.append((p, measure(rt))))
    return [f"{name}: pass {b[0]} moved measure {a[1]} -> {b[1]}"
            for a, b in zip(seen, seen[1:]) if not b[1] < a[1]]


def check_unroll(name, g, max_depth=6):
    """build_tree against unroll of the automaton, for every depth that fits.

    Returns (failures, deepest depth compared)."""
    from gamesys import ResourceLimitError, build_automaton
    from gamesys.trees import unroll
    a = build_automaton(g)
    s0 = g.evaluator.initial_states[0]
    bad, reached = [], 0
    for k in range(1, max_depth + 1):
        try:
            t = build_tree(g, depth_cap=k, node_cap=PROPERTY_NODE_CAP)
        except ResourceLimitError:
            break
        if labeled_signature(t) != labeled_signature(unroll(a, s0, k, PROPERTY_NODE_CAP)):
            bad.append(f"{name}: build_tree and unroll differ at depth {k}")
        reached = k
    return bad, reached
