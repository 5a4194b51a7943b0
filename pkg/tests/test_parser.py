import pytest

from gamesys import DescriptionError, corpus_text, format_system, parse_system, try_parse
from gamesys.corpus import NAMES
from gamesys.serializer import dump_json


@pytest.mark.parametrize("name", NAMES)
def test_corpus_round_trip(name):
    g = parse_system(corpus_text(name))
    text = format_system(g)
    again = parse_system(text)
    assert again == g
    assert format_system(again) == text


def test_json_dump_is_stable(coinflip):
    assert dump_json(coinflip) == dump_json(parse_system(format_system(coinflip)))
    assert '"1/2"' in dump_json(coinflip)


def test_empty_description():
    system, diags = try_parse("")
    assert system is None
    assert "players section missing" in diags[0].message


@pytest.mark.parametrize("section", ["memory", "foresight"])
def test_reserved_sections(section):
    _, diags = try_parse(f"players: P1\n{section}: x\n")
    assert diags and "reserved" in diags[0].message
    assert diags[0].line == 2


def test_unknown_section():
    _, diags = try_parse("players: P1\nbogus:\n")
    assert diags[0].symbol == "bogus"


def test_bad_value_reports_position():
    text = "players: P1\ntracks:\n  t = a, b\ninit: (c)@t\n"
    with pytest.raises(DescriptionError) as err:
        parse_system(text)
    d = err.value.diagnostics[0]
    assert (d.line, d.symbol) == (4, "c")


def test_unknown_ludeme():
    text = corpus_text("tictactoe_grid").replace("NInARow((numbers), P1, 3)",
                                                  "FourSquare((numbers), P1, 3)")
    _, diags = try_parse(text)
    assert any("FourSquare" in d.message for d in diags)


def test_probabilities_must_sum_to_one():
    text = corpus_text("coinflip").replace("1/2 A_tails", "1/3 A_tails")
    with pytest.raises(DescriptionError):
        parse_system(text)


def test_comprehension_expands_actions(guessing):
    assert len(guessing.actions) == 10
    assert "(P2,5)" in guessing.decision_names


def test_grid_coordinates(ttt_grid):
    coords = {t.name: t.coords[0].mapping[0][1] for t in ttt_grid.tracks if t.coords}
    assert coords["0"] == (2, 2)
    assert sorted(coords.values()) == [(r, c) for r in range(1, 4) for c in range(1, 4)]
