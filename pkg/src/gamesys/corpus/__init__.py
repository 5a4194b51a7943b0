"""Bundled example game descriptions."""
from __future__ import annotations

from importlib import resources

NAMES = ("coinflip", "guessing", "rps", "tictactoe_arith", "tictactoe_grid",
         "tictactoe_restricted", "chopsticks")


def corpus_text(name: str) -> str:
    stem = name[:-3] if name.endswith(".gs") else name
    return resources.files(__name__).joinpath(f"{stem}.gs").read_text()


def load_corpus(name: str):
    from ..parser import parse_system
    return parse_system(corpus_text(name))
