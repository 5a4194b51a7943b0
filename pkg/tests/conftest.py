import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gamesys import build_tree, load_corpus  # noqa: E402


@pytest.fixture(scope="session")
def coinflip():
    return load_corpus("coinflip")


@pytest.fixture(scope="session")
def guessing():
    return load_corpus("guessing")


@pytest.fixture(scope="session")
def rps():
    return load_corpus("rps")


@pytest.fixture(scope="session")
def chopsticks():
    return load_corpus("chopsticks")


@pytest.fixture(scope="session")
def ttt_arith():
    return load_corpus("tictactoe_arith")


@pytest.fixture(scope="session")
def ttt_grid():
    return load_corpus("tictactoe_grid")


@pytest.fixture(scope="session")
def ttt_tree(ttt_arith):
    return build_tree(ttt_arith)
