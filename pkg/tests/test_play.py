import random
from fractions import Fraction

import pytest

from gamesys import IllegalDecisionError, play, random_playouts, validate_trajectory
from gamesys.play import Interactive, Scripted, Step, Trajectory, sample_index


def test_random_play_is_legal(guessing, chopsticks, rps):
    for system in (guessing, chopsticks, rps):
        for seed in range(20):
            t = play(system, seed=seed, step_cap=200)
            assert validate_trajectory(system, t)


def test_seed_reproducible(chopsticks):
    assert play(chopsticks, seed=7, step_cap=50) == play(chopsticks, seed=7, step_cap=50)


def test_scripted_guessing(guessing):
    ds = Scripted.from_json('{"P1": ["(P1,3)"], "P2": ["(P2,3)"]}')
    t = play(guessing, deciders=ds)
    assert t.outcome == "P2 win"
    assert [s.decisions for s in t.steps] == [("(P1,3)", None), (None, "(P2,3)")]


def test_scripted_illegal(guessing):
    ds = {"P1": Scripted(["(P2,1)"])}
    with pytest.raises(IllegalDecisionError):
        play(guessing, deciders=ds)


def test_validate_catches_bad_steps(guessing):
    t = play(guessing, seed=1)
    bad = Trajectory(t.initial, [Step(("(P1,9)", None), 0, t.steps[0].state)] + t.steps[1:],
                     t.outcome)
    v = validate_trajectory(guessing, bad)
    assert not v and v.step == 1 and v.reason == "decision not in legal set"
    v = validate_trajectory(guessing, Trajectory(t.steps[0].state, t.steps[1:], t.outcome))
    assert (v.legal, v.step) == (False, 0)
    wrong = Trajectory(t.initial, t.steps, "nobody")
    assert not validate_trajectory(guessing, wrong)


def test_trajectory_dict_round_trip(chopsticks):
    t = play(chopsticks, seed=3, step_cap=30)
    again = Trajectory.from_dict(chopsticks, t.to_dict(chopsticks))
    assert again == t


def test_step_cap_truncates(rps):
    t = play(rps, seed=0, step_cap=1)
    assert t.status in ("terminal", "truncated")
    assert len(t.steps) <= 1
    assert validate_trajectory(rps, t)


def test_sample_index_exact():
    rng = random.Random(0)
    counts = [0, 0, 0]
    for _ in range(3000):
        counts[sample_index([Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)], rng)] += 1
    assert counts[0] < counts[1] < counts[2]


def test_interactive_reprompts(guessing):
    answers = iter(["nonsense", "9", "2", "(P2,2)"])
    shown = []
    d = Interactive(read=lambda prompt: next(answers), write=shown.append, clear=False)
    t = play(guessing, deciders=[d, d])
    assert t.outcome == "P2 win"
    assert shown.count("not a legal decision; try again") == 2


def test_random_playouts_histogram(guessing):
    hist = random_playouts(guessing, 200, seed=0)
    assert sum(hist.values()) == 200
    assert set(hist) <= {"P2 win", "P2 lose"}
    assert hist["P2 lose"] > hist["P2 win"]
