import pytest

from gamesys import check_complete, check_overcomplete, load_corpus, parse_system
from gamesys.analysis import validation_summary


@pytest.mark.parametrize("name", ["coinflip", "guessing", "rps", "tictactoe_arith",
                                  "tictactoe_grid", "chopsticks", "tictactoe_restricted"])
def test_corpus_complete(name):
    assert check_complete(load_corpus(name)).complete


def test_coinflip_not_overcomplete(coinflip):
    over = check_overcomplete(coinflip)
    assert not over.overcomplete
    assert "(flip,0)" in [str(g) for g in over.gaps]
    line = validation_summary(check_complete(coinflip), over)
    assert line == "complete: yes, overcomplete: no (gap: (flip,0))"


def test_rps_ambiguity_note(rps):
    report = check_complete(rps)
    assert any("(2)@P1 (2)@P2" in n and "not legally accessible" in n for n in report.notes)


def test_chopsticks_reachable(chopsticks):
    assert check_complete(chopsticks).reachable_states == 1194


def test_missing_consequence_is_a_gap():
    text = """players: P1, P2
tracks:
    t = a, b
init: (a)@t
decisions: x
actions:
    k: (b)@t
consequences:
    (x, 0): k
legal:
    * x: (a)@t
"""
    report = check_complete(parse_system(text))
    assert not report.complete
    assert any(g.kind == "consequence" for g in report.gaps)
