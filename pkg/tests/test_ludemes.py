import pytest

from gamesys import lookup, register_ludeme, rps_select
from gamesys.ludemes import BUILTINS, CATALOG, Catalog, CatalogError, LudemicFunction
from gamesys.model import Decision, modular, Coordinates
from helpers import rps_oracle


def _z3(name, i):
    return Decision(name, frozenset(), (Coordinates(modular(3), ((name, i),)),))


@pytest.mark.parametrize("a", ["rock", "paper", "scissors"])
@pytest.mark.parametrize("b", ["rock", "paper", "scissors"])
def test_rps_select_matches_cycle(a, b):
    phi = {"rock": 0, "paper": 1, "scissors": 2}
    got = rps_select(_z3(a, phi[a]), _z3(b, phi[b]), "id", "P1", "P2")
    assert got == rps_oracle(a, b)


def test_catalog_lookup():
    assert {f.name for f in BUILTINS} == {"RPS", "TripleSumsToZero", "NInARow"}
    assert lookup("NInARow").signature == ("tracks", "value", "integer")
    with pytest.raises(CatalogError):
        lookup("Nope")


def test_register_in_private_catalog():
    cat = Catalog()
    fn = LudemicFunction("Always", (), "slice", lambda ctx: None, "test entry")
    register_ludeme(fn, cat)
    assert "Always" in cat and "Always" not in CATALOG
    with pytest.raises(CatalogError):
        register_ludeme(fn, cat)


def test_triple_sums_to_zero_lines(ttt_arith):
    # winning triples in arithmetic tic-tac-toe are exactly the 8 magic-square lines
    import itertools
    trips = [c for c in itertools.combinations(range(-4, 5), 3) if sum(c) == 0]
    assert len(trips) == 8
    ev = ttt_arith.evaluator
    for trip in trips:
        s = ttt_arith.state({**{str(n): ("P1" if n in trip else "-") for n in range(-4, 5)},
                             "turn": "P2"})
        assert ev.outcome(s) == "P1"


def test_n_in_a_row_grid(ttt_grid):
    ev = ttt_grid.evaluator
    names = ttt_grid.track_names[:9]
    diag = {n for n in names if ttt_grid.track(n).coords[0].mapping[0][1] in
            [(1, 1), (2, 2), (3, 3)]}
    s = ttt_grid.state({**{n: ("P2" if n in diag else "-") for n in names}, "turn": "P1"})
    assert ev.outcome(s) == "P2"
