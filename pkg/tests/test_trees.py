import json
from fractions import Fraction

import pytest

from gamesys import (PreconditionError, ResourceLimitError, build_automaton, build_tree,
                     decision_matrix, export_dot, export_json, load_corpus, strip)
from gamesys.trees import (CHANCE, TERMINAL, import_json, labeled_signature, unroll,
                           count_correspondences, default_node_cap)


def test_coinflip_tree(coinflip):
    t = build_tree(coinflip)
    st = t.stats()
    assert (st["nodes"], st["decision_edges"], st["chance_edges"]) == (4, 1, 2)
    assert sorted(e.prob for e in t.edges.values() if e.kind == CHANCE) == [Fraction(1, 2)] * 2


def test_guessing_tree(guessing):
    t = build_tree(guessing)
    assert len(t.nodes) == 31
    assert t.stats()["outcomes"] == {"P2 lose": 20, "P2 win": 5}
    assert count_correspondences(t) == 120 ** 6


def test_decision_matrix_shapes(guessing, rps):
    t = build_tree(guessing)
    D = decision_matrix(t, t.root)
    assert D.players == (0,) and D.shape == (5,)
    r = build_tree(rps, depth_cap=1)
    D = decision_matrix(r, r.root)
    assert D.players == (0, 1) and D.shape == (3, 3)
    assert len(D.image) == 9
    with pytest.raises(PreconditionError):
        decision_matrix(t, next(n.id for n in t.nodes.values() if n.kind == TERMINAL))


def test_automata(coinflip, rps):
    a = build_automaton(coinflip)
    assert len(a.states) == 3 and len(a.terminal) == 2
    assert len(build_automaton(rps).states) == 8


@pytest.mark.parametrize("name", ["coinflip", "guessing", "rps", "chopsticks"])
@pytest.mark.parametrize("k", [1, 3, 5])
def test_unroll_matches_tree(name, k):
    g = load_corpus(name)
    a = build_automaton(g)
    s0 = g.evaluator.initial_states[0]
    assert labeled_signature(unroll(a, s0, k)) == labeled_signature(build_tree(g, depth_cap=k))


def test_depth_cap_marks_truncation(rps):
    t = build_tree(rps, depth_cap=2)
    assert t.stats()["depth"] == 2
    assert all(n.truncated for n in t.leaves() if n.kind != TERMINAL)


def test_node_cap(rps, monkeypatch):
    with pytest.raises(ResourceLimitError):
        build_tree(rps, node_cap=50)
    monkeypatch.setenv("GAMESYS_NODE_CAP", "123")
    assert default_node_cap() == 123


def test_bad_initial_state(coinflip):
    with pytest.raises(PreconditionError):
        build_tree(coinflip, s0=("heads",))


def test_dot_export(guessing):
    dot = export_dot(build_tree(guessing))
    assert dot.startswith("digraph")
    assert dot.count("shape=") == 31
    assert dot == export_dot(build_tree(guessing))


def test_json_round_trip(coinflip, guessing):
    for g in (coinflip, guessing):
        t = build_tree(g)
        text = export_json(t)
        back = import_json(text)
        assert labeled_signature(back) == labeled_signature(t)
        assert json.loads(text)["nodes"][0]["id"] == 0


def test_automaton_json(coinflip):
    data = json.loads(export_json(build_automaton(coinflip)))
    assert len(data["states"]) == 3 and data["initial"] == [0]


def test_strip_ignores_labels(coinflip, guessing):
    a, b = build_tree(coinflip), build_tree(load_corpus("coinflip"))
    assert strip(a) == strip(b)
    assert strip(a) != strip(build_tree(guessing))
