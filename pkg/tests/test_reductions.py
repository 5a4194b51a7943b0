from fractions import Fraction

import pytest

from gamesys import (PreconditionError, build_tree, equivalent_up_to_relabeling,
                     reduce_bookkeeping, reduce_fixpoint, reduce_matrix, reduce_single_player,
                     reduce_symmetry)
from gamesys.canonical import node_matrix
from gamesys.reductions import ReducedTree, measure, reduced_matrix
from gamesys.trees import CHANCE, STATE, TERMINAL, labeled_signature
from helpers import matrix_three_players, matrix_repeated_column, pair_left, make_tree


def _chance_sums_ok(tree):
    return all(sum(e.prob for e in tree.child_edges(n.id)) == 1
               for n in tree.nodes.values() if n.kind == CHANCE)


def _terminal(o):
    return ("T", o)


def _pick(o1, o2, player=1):
    slot = (lambda c: ("%s" % c, None)) if player == 0 else (lambda c: (None, c))
    return ("S", [([slot("l")], _terminal(o1)), ([slot("r")], _terminal(o2))])


# -- matrix ------------------------------------------------------------------


def test_repeated_column_deleted():
    R = reduced_matrix(matrix_repeated_column())
    assert R.shape == (2, 2)
    assert R.choices[1] == ("c", "d")
    assert R.cells == {("a", "c"): 0, ("a", "d"): 2, ("b", "c"): 2, ("b", "d"): 1}


def test_reduction_idempotent():
    R = reduced_matrix(matrix_three_players())
    assert R.shape == (2, 2)
    assert reduced_matrix(R).cells == R.cells


def test_single_edge_becomes_blank():
    tree, names = pair_left()
    rt = reduce_matrix(tree, names["B"])
    D = node_matrix(rt.tree, names["B"])
    assert D.players == () and D.domain_size == 0 and len(D.image) == 1
    # the input tree is untouched
    assert names["B"] not in tree.matrices


def test_matrix_needs_internal_node():
    tree, _ = pair_left()
    leaf = next(n.id for n in tree.nodes.values() if n.kind == TERMINAL)
    with pytest.raises(PreconditionError):
        reduce_matrix(tree, leaf)


# -- bookkeeping -------------------------------------------------------------


def test_case1_chain():
    leaf = _pick("w", "l")
    chain = ("S", [([("f", None)], ("S", [([(None, "g")], leaf)]))], "r")
    tree, names = make_tree(("S", [([("x", None)], chain), ([("y", None)], _terminal("d"))]))
    rt = reduce_bookkeeping(tree, names["r"])
    assert len(rt.tree.nodes) == len(tree.nodes) - 2
    assert rt.log[0]["case"] == "1"
    root_kids = {len(rt.tree.nodes[e.dst].children) for e in rt.tree.child_edges(rt.tree.root)}
    assert root_kids == {0, 2}


def test_case2a_chance_then_forced():
    half = Fraction(1, 2)
    chance = ("C", [(half, ("S", [([(None, "f")], _pick("a", "b"))])),
                    (half, ("S", [([(None, "f")], _pick("c", "d"))]))])
    r = ("S", [([("go", None)], chance)], "r")
    tree, names = make_tree(("S", [([("x", None)], r), ([("y", None)], _terminal("e"))]))
    rt = reduce_bookkeeping(tree, names["r"])
    assert rt.log[0]["case"] == "2a"
    (e,) = [e for e in rt.tree.child_edges(rt.tree.root) if rt.tree.nodes[e.dst].kind == CHANCE]
    kids = rt.tree.child_edges(e.dst)
    assert [k.prob for k in kids] == [half, half]
    assert all(rt.tree.nodes[k.dst].kind == STATE for k in kids)
    assert _chance_sums_ok(rt.tree)


def test_case2b_multiplies_incoming():
    inner = ("C", [(Fraction(1, 2), _pick("a", "b")), (Fraction(1, 2), _pick("c", "d"))])
    r = ("S", [([("f", None)], inner)], "r")
    top = ("C", [(Fraction(1, 3), r), (Fraction(2, 3), _terminal("z"))], "c")
    tree, names = make_tree(("S", [([("x", None)], top), ([("y", None)], _terminal("e"))]))
    rt = reduce_bookkeeping(tree, names["r"])
    assert rt.log[0]["case"] == "2b"
    probs = sorted(e.prob for e in rt.tree.child_edges(names["c"]))
    assert probs == [Fraction(1, 6), Fraction(1, 6), Fraction(2, 3)]
    assert _chance_sums_ok(rt.tree)


def test_case2c_at_root():
    inner = ("C", [(Fraction(1, 4), _pick("a", "b")), (Fraction(3, 4), _pick("c", "d"))])
    tree, names = make_tree(("S", [([("f", None)], ("S", [([(None, "g")], inner)]))], "r"))
    rt = reduce_bookkeeping(tree, names["r"])
    assert rt.log[0]["case"] == "2c"
    t = rt.tree
    (e,) = t.child_edges(t.root)
    assert t.nodes[e.dst].kind == CHANCE
    assert sorted(k.prob for k in t.child_edges(e.dst)) == [Fraction(1, 4), Fraction(3, 4)]
    assert measure(t) < measure(tree)


def test_bookkeeping_precondition(guessing):
    t = build_tree(guessing)
    with pytest.raises(PreconditionError):
        reduce_bookkeeping(t, t.root)


# -- single player -----------------------------------------------------------


def test_pawn_promotion():
    promos = ("S", [([(p, None)], _terminal(p)) for p in "qrbn"])
    tree, names = make_tree(("S", [([("push", None)], promos)], "r"))
    rt = reduce_single_player(tree, names["r"])
    edges = rt.tree.child_edges(rt.tree.root)
    assert len(edges) == 4
    labels = sorted(next(iter(e.label))[0] for e in edges)
    assert labels == [("push", p) for p in "bnqr"]
    D = node_matrix(rt.tree, rt.tree.root)
    assert D.players == (0,) and D.shape == (4,)


def test_nested_single_player_sequences():
    deeper = ("S", [([("c", None)], _terminal("w")), ([("d", None)], _terminal("l"))])
    other = _pick("u", "v")
    tree, names = make_tree(("S", [([("a", None)], deeper), ([("b", None)], other)], "r"))
    rt = reduce_single_player(tree, names["r"])
    got = sorted(next(iter(e.label))[0] for e in rt.tree.child_edges(rt.tree.root))
    assert got == [("a", "c"), ("a", "d"), ("b",)]
    assert len(rt.tree.nodes) == len(tree.nodes) - 1


def test_depth_one_unchanged(guessing):
    t = build_tree(guessing)
    p2 = t.child_edges(t.root)[0].dst
    rt = reduce_single_player(t, p2)
    assert labeled_signature(rt.tree) == labeled_signature(t)


def test_single_player_precondition():
    tree, names = pair_left()
    with pytest.raises(PreconditionError):
        reduce_single_player(tree, names["A"])


# -- symmetry ----------------------------------------------------------------


def test_terminal_siblings_merge():
    tree, _ = make_tree(("S", [([("a", None)], _terminal("draw")),
                               ([("b", None)], _terminal("draw")),
                               ([("c", None)], _terminal("win"))]))
    kids = [e.dst for e in tree.child_edges(tree.root)]
    rt = reduce_symmetry(tree, kids[1])
    sizes = sorted(len(e.label) for e in rt.tree.child_edges(rt.tree.root))
    assert sizes == [1, 2]


def test_three_thirds_dissolve():
    third = Fraction(1, 3)
    chance = ("C", [(third, _pick("w", "l")) for _ in range(3)], "c")
    tree, names = make_tree(("S", [([("go", None)], chance), ([("no", None)], _terminal("x"))]))
    kids = [e.dst for e in tree.child_edges(names["c"])]
    rt = reduce_symmetry(tree, kids[2])
    rt = reduce_symmetry(rt, kids[1])
    assert names["c"] not in rt.tree.nodes
    kinds = sorted(rt.tree.nodes[e.dst].kind for e in rt.tree.child_edges(rt.tree.root))
    assert kinds == [STATE, TERMINAL]
    assert _chance_sums_ok(rt.tree)


def test_symmetry_precondition(coinflip):
    t = build_tree(coinflip)
    with pytest.raises(PreconditionError):
        reduce_symmetry(t, t.root)
    chance = t.child_edges(t.root)[0].dst
    with pytest.raises(PreconditionError):
        reduce_symmetry(t, t.child_edges(chance)[0].dst)


# -- fixpoint ----------------------------------------------------------------


def test_coinflip_fixed_point(coinflip):
    t = build_tree(coinflip)
    rt = reduce_fixpoint(t)
    assert len(rt.tree.nodes) == 4 and rt.summary() == {"matrix": 1}
    again = reduce_fixpoint(rt)
    assert again.log == rt.log


def test_guessing_collapses(guessing):
    rt = reduce_fixpoint(build_tree(guessing))
    assert measure(rt) == (3, 2)
    assert sorted(n.outcome for n in rt.tree.leaves()) == ["P2 lose", "P2 win"]


def test_every_pass_lowers_measure(guessing, rps, chopsticks):
    for g, k in ((guessing, 0), (rps, 3), (chopsticks, 3)):
        t = build_tree(g, depth_cap=k)
        seen = [measure(t)]
        reduce_fixpoint(t, on_pass=lambda name, rt: seen.append(measure(rt)))
        assert all(b < a for a, b in zip(seen, seen[1:]))


def test_fixpoint_soundness(guessing, rps):
    for g, k in ((guessing, 0), (rps, 2)):
        t = build_tree(g, depth_cap=k)
        one = reduce_matrix(t, t.root)
        a, b = reduce_fixpoint(t), reduce_fixpoint(one)
        assert equivalent_up_to_relabeling(a, b)


def test_reduced_tree_json(guessing):
    import json
    rt = reduce_fixpoint(build_tree(guessing))
    data = json.loads(rt.to_json(include_tree=True))
    assert data["applied"]["symmetry"] == 6
    assert len(data["tree"]["nodes"]) == 3
    assert isinstance(rt, ReducedTree)
    assert set(rt.domains()[rt.tree.root]) == {"P2"}


def test_order_does_not_matter(guessing, rps, chopsticks):
    # no uniqueness claim is made; this just watches for divergence on fixtures
    import random
    from gamesys.reductions import ORDER
    from helpers import pair_left
    fixtures = [build_tree(guessing), build_tree(rps, depth_cap=2),
                build_tree(chopsticks, depth_cap=3), pair_left()[0]]
    for t in fixtures:
        base = reduce_fixpoint(t)
        for seed in range(2):
            order = list(ORDER)
            random.Random(seed).shuffle(order)
            other = reduce_fixpoint(t, order=tuple(order))
            assert equivalent_up_to_relabeling(base, other), order
