"""Parser for the line-oriented game description language.

A description is a sequence of sections.  A section header is a word at
column 0 followed by ``:``; the indented lines below it are items, and a
line indented deeper than the first item continues the previous one.
``#`` starts a comment.  Item syntax per section::

    players:      P1, P2
    outcomes:     "P1 win", "P2 win"
    tracks:       NAMES [^tag ...] [~ SPACES] = VALUES [~ SPACES]
    slices:       NAME: SLICE
    init:         SLICE
    decisions:    NAMES [^tag ...] [~ SPACES]      (or header "decisions ~ actions:")
    actions:      NAME [^tag ...]: [GUARD ->] WRITES; ...   |   NAME: identity
    consequences: (PATTERN) [when SLICE]: [p/q] ACTION...; ...
    legal:        PLAYER DECISION: SLICE           |   otherwise: SLICE
    ending:       SLICE
    omega:        OUTCOME: SLICE                   |   OUTCOME: otherwise
    uses:         LUDEME, ...

Any item may carry ``for x in SET, y in SET [if COND]`` before its colon;
it is expanded at parse time into one item per binding.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import DescriptionError, EvaluationError, GameSystemError, ParseDiagnostic
from .ludemes import (
    ACTION,
    CATALOG,
    DECISION_TUPLE,
    INTEGER,
    TRACKS,
    Catalog,
    CatalogError,
)
from .model import (
    INTEGERS,
    Action,
    Clause,
    ConsequenceRule,
    CoordinateSpace,
    Coordinates,
    Decision,
    GameSystem,
    LegalityRule,
    Outcome,
    OutcomeRule,
    Player,
    Track,
    Write,
    lattice,
    simplify,
    modular,
)
from .slices import (
    ALL,
    EMPTY,
    Atom,
    BinOp,
    Bracket,
    Cmp,
    Member,
    Neg,
    Not,
    Num,
    Sym,
    ValueOf,
    ValueTagAtom,
    conj,
    disj,
    expr_is_constant,
    fold_constant,
)

SECTIONS = (
    "players", "outcomes", "tracks", "slices", "init", "decisions", "actions",
    "consequences", "legal", "ending", "omega", "uses",
)
RESERVED_SECTIONS = ("memory", "foresight")
SET_KEYWORDS = ("players", "decisions", "actions", "outcomes", "tracks")
TAG_TYPES = {"t": "tracks", "p": "players", "d": "decisions", "a": "actions", "o": "outcomes"}


# -- tokens ------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # name | string | op | sub | end
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#.*)
  | (?P<string>"[^"\n]*")
  | (?P<op2>->|<=|>=|!=)
  | (?P<name>[A-Za-z0-9_][A-Za-z0-9_']*)
  | (?P<op>[()\[\]{},:;@^!&|~=+\-*/<>])
    """,
    re.X,
)
_SUB_RE = re.compile(r"_([0-9]+)")
_NEG_RE = re.compile(r"-[0-9][A-Za-z0-9_']*")
_OPERAND_OPS = (")", "]", "}")


class _Error(Exception):
    def __init__(self, message: str, token: Token | None = None, symbol: str | None = None):
        super().__init__(message)
        self.token = token
        self.symbol = symbol


def tokenize_line(text: str, line: int) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        prev = out[-1] if out else None
        operand = prev is not None and (
            prev.kind in ("name", "string", "sub") or prev.text in _OPERAND_OPS
        )
        if prev is not None and prev.text in (")", "]"):
            m = _SUB_RE.match(text, pos)
            if m:
                out.append(Token("sub", m.group(1), line, pos + 1))
                pos = m.end()
                continue
        if not operand:
            m = _NEG_RE.match(text, pos)
            if m:
                out.append(Token("name", m.group(0), line, pos + 1))
                pos = m.end()
                continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise _Error(f"unexpected character {text[pos]!r}",
                         Token("op", text[pos], line, pos + 1))
        kind = m.lastgroup
        if kind == "string":
            out.append(Token("string", m.group(0)[1:-1], line, pos + 1))
        elif kind == "name":
            out.append(Token("name", m.group(0), line, pos + 1))
        elif kind in ("op", "op2"):
            out.append(Token("op", m.group(0), line, pos + 1))
        pos = m.end()
    return out


class _Stream:
    def __init__(self, toks: list[Token], end: Token):
        self.toks = toks
        self.i = 0
        self.end = end

    def peek(self, k: int = 0) -> Token:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else self.end

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def at(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "op" and t.text in texts

    def at_word(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "name" and t.text in words

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.kind != "op" or t.text != text:
            raise _Error(f"expected {text!r}, found {_show(t)}", t)
        return self.next()

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def expect_done(self):
        if not self.done():
            raise _Error(f"unexpected {_show(self.peek())}", self.peek())


def _show(t: Token) -> str:
    return "end of item" if t.kind == "end" else repr(t.text)


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


# -- sections ----------------------------------------------------------------


@dataclass
class _Item:
    tokens: list[Token]
    line: int


@dataclass
class _Section:
    name: str
    header: Token
    items: list[_Item]
    trivial: bool = False


_HEADER_RE = re.compile(r"([A-Za-z_]+)\s*(~\s*actions\s*)?:(.*)$")


def _split_sections(text: str, diags: list[ParseDiagnostic]) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    item_indent = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        if indent == 0:
            m = _HEADER_RE.match(raw)
            if not m:
                diags.append(ParseDiagnostic("error", lineno, 1, "expected a section header"))
                current = None
                continue
            header = Token("name", m.group(1), lineno, 1)
            current = _Section(m.group(1), header, [], trivial=bool(m.group(2)))
            sections.append(current)
            item_indent = None
            rest = m.group(3)
            if rest.strip() and not rest.strip().startswith("#"):
                try:
                    toks = tokenize_line(" " * m.start(3) + rest, lineno)
                except _Error as exc:
                    diags.append(_diag(exc))
                    continue
                if toks:
                    current.items.append(_Item(toks, lineno))
            continue
        if current is None:
            diags.append(ParseDiagnostic("error", lineno, indent + 1,
                                         "indented line outside any section"))
            continue
        try:
            toks = tokenize_line(raw, lineno)
        except _Error as exc:
            diags.append(_diag(exc))
            continue
        if not toks:
            continue
        if item_indent is None:
            item_indent = indent
        if indent > item_indent and current.items:
            current.items[-1].tokens.extend(toks)
        else:
            current.items.append(_Item(toks, lineno))
    return sections


def _diag(exc: _Error, default: Token | None = None) -> ParseDiagnostic:
    t = exc.token or default
    line, col = (t.line, t.col) if t else (1, 1)
    return ParseDiagnostic("error", line, col, str(exc), exc.symbol)


# -- the builder -------------------------------------------------------------


class _Builder:
    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        self.diags: list[ParseDiagnostic] = []
        self.players: list[Player] = []
        self.outcomes: list[Outcome] = []
        self.tracks: list[Track] = []
        self.decisions: list[Decision] = []
        self.actions: list[Action] = []
        self.consequences: list[ConsequenceRule] = []
        self.legality: list[LegalityRule] = []
        self.omega: list[OutcomeRule] = []
        self.initial = []
        self.ending = []
        self.legal_default = None
        self.omega_default = None
        self.trivial = False
        self.uses: list[str] = []
        self.named: dict = {}

    # name tables

    def track(self, name: str) -> Track:
        for t in self.tracks:
            if t.name == name:
                return t
        raise EvaluationError(f"unknown track {name!r}")

    def decision(self, name: str) -> Decision:
        for d in self.decisions:
            if d.name == name:
                return d
        raise EvaluationError(f"unknown decision {name!r}")

    def _table(self, kind: str):
        return {
            "tracks": self.tracks, "players": self.players, "decisions": self.decisions,
            "actions": self.actions, "outcomes": self.outcomes,
        }[kind]

    def names_of(self, kind: str) -> list[str]:
        return [x.name for x in self._table(kind)]

    def tagged(self, tags: list[str], kind: str | None, tok: Token) -> list[str]:
        kinds = [kind] if kind else ["tracks", "players", "decisions", "actions", "outcomes"]
        want = set(tags)
        hits = []
        for k in kinds:
            found = [x.name for x in self._table(k) if want <= x.tags]
            if found:
                hits.append(found)
        if not hits:
            raise _Error(f"no elements carry tags ({', '.join(tags)})", tok)
        if len(hits) > 1:
            raise _Error(f"tags ({', '.join(tags)}) are ambiguous across element types; "
                         "add a ^t/^p/^d/^a/^o suffix", tok)
        return hits[0]

    def element_tags(self, name: str) -> frozenset[str] | None:
        for k in ("tracks", "players", "decisions", "actions", "outcomes"):
            for x in self._table(k):
                if x.name == name:
                    return x.tags
        return None

    def error(self, exc: _Error, item: _Item | None = None):
        default = item.tokens[0] if item and item.tokens else None
        self.diags.append(_diag(exc, default))

    # generic readers

    def read_name(self, st: _Stream, what: str = "name") -> str:
        t = st.peek()
        if t.kind in ("name", "string"):
            st.next()
            return t.text
        if t.kind == "op" and t.text == "-":
            st.next()
            return "-"
        if t.kind == "op" and t.text == "(":
            st.next()
            parts = [self.read_name(st, what)]
            while st.accept(","):
                parts.append(self.read_name(st, what))
            st.expect(")")
            return "(" + ",".join(parts) + ")"
        raise _Error(f"expected a {what}, found {_show(t)}", t)

    def read_int(self, st: _Stream) -> int:
        t = st.next()
        if t.kind == "name" and _is_int(t.text):
            return int(t.text)
        raise _Error(f"expected an integer, found {_show(t)}", t)

    def read_tags(self, st: _Stream) -> frozenset[str]:
        tags = []
        while st.accept("^"):
            tags.append(self.read_name(st, "tag"))
        return frozenset(tags)

    def read_elems(self, st: _Stream, value_tags: bool = False):
        """Comma list of names, intervals [a,b] and sets {x, y}.

        Returns (names, implicit_integer, per-name tags)."""
        names: list[str] = []
        implicit = True
        tags: dict[str, frozenset[str]] = {}
        while True:
            if st.at("["):
                st.next()
                a = self.read_int(st)
                st.expect(",")
                b = self.read_int(st)
                st.expect("]")
                if b < a:
                    raise _Error(f"empty interval [{a},{b}]", st.peek(-1))
                names.extend(str(x) for x in range(a, b + 1))
            elif st.at("{"):
                st.next()
                implicit = False
                while not st.at("}"):
                    names.append(self.read_name(st))
                    if value_tags and st.at("^"):
                        tags[names[-1]] = self.read_tags(st)
                    if not st.accept(","):
                        break
                st.expect("}")
            else:
                implicit = False
                names.append(self.read_name(st))
                if value_tags and st.at("^"):
                    tags[names[-1]] = self.read_tags(st)
            if not st.accept(","):
                break
        if len(set(names)) != len(names):
            raise _Error("duplicate name in list", st.peek())
        return names, implicit, tags

    # coordinate spaces

    def read_spaces(self, st: _Stream, elems: list[str]) -> tuple[Coordinates, ...]:
        out = [self.read_space(st, elems)]
        while st.accept(","):
            out.append(self.read_space(st, elems))
        return tuple(out)

    def read_space(self, st: _Stream, elems: list[str]) -> Coordinates:
        t = st.peek()
        default: list | None
        if st.at("["):
            st.next()
            a = self.read_int(st)
            st.expect(",")
            b = self.read_int(st)
            st.expect("]")
            if st.accept("^"):
                d = self.read_int(st)
                space = lattice(d)
                default = list(itertools.product(range(a, b + 1), repeat=d))
            else:
                space = INTEGERS
                default = list(range(a, b + 1))
        elif t.kind == "name" and t.text == "Z":
            st.next()
            if st.accept("^"):
                space = lattice(self.read_int(st))
                default = None
            else:
                space = INTEGERS
                default = list(range(len(elems)))
        elif t.kind == "name" and re.fullmatch(r"Z[0-9]+", t.text):
            st.next()
            m = int(t.text[1:])
            if m < 1:
                raise _Error("modulus must be at least 1", t)
            space = modular(m)
            default = list(range(m))
        elif t.kind == "name" and t.text == "graph":
            st.next()
            st.expect("(")
            edges = []
            nodes: list[str] = []
            while not st.at(")"):
                u = self.read_name(st)
                st.expect("-")
                v = self.read_name(st)
                edges.append((u, v))
                for x in (u, v):
                    if x not in nodes:
                        nodes.append(x)
                if not st.accept(","):
                    break
            st.expect(")")
            space = CoordinateSpace("graph", edges=tuple(edges))
            default = nodes
        else:
            raise _Error(f"expected a coordinate space, found {_show(t)}", t)
        if st.at("{"):
            mapping = self.read_coord_map(st, space, elems)
        else:
            if default is None:
                raise _Error("this space needs an explicit {element: coordinate} map", t)
            if len(elems) > len(default) or (space.kind in ("integer", "lattice")
                                              and t.text == "[" and len(elems) != len(default)):
                raise _Error(
                    f"{len(elems)} elements do not fit the {len(default)} points of this space", t
                )
            mapping = tuple(zip(elems, default))
        return Coordinates(space, mapping)

    def read_coord_map(self, st: _Stream, space: CoordinateSpace, elems: list[str]):
        st.expect("{")
        got: dict[str, object] = {}
        while not st.at("}"):
            key = self.read_name(st)
            st.expect(":")
            if space.kind == "lattice":
                st.expect("(")
                pt = [self.read_int(st)]
                while st.accept(","):
                    pt.append(self.read_int(st))
                st.expect(")")
                if len(pt) != space.dimension:
                    raise _Error("lattice point has the wrong dimension", st.peek(-1))
                val: object = tuple(pt)
            elif space.kind == "graph":
                val = self.read_name(st)
            else:
                val = space.normalize(self.read_int(st))
            got[key] = val
            if not st.accept(","):
                break
        end = st.expect("}")
        if set(got) != set(elems):
            raise _Error("coordinate map must list every element exactly once", end)
        return tuple((e, got[e]) for e in elems)

    # comprehension expansion

    def expand(self, item: _Item, stop_at_colon: bool = True) -> list[list[Token]]:
        toks = item.tokens
        depth = 0
        start = None
        for i, t in enumerate(toks):
            if t.kind == "op" and t.text in "([{":
                depth += 1
            elif t.kind == "op" and t.text in ")]}":
                depth -= 1
            elif depth == 0 and t.kind == "name" and t.text == "for":
                start = i
                break
            elif depth == 0 and t.kind == "op" and t.text == ":" and stop_at_colon:
                break
        if start is None:
            return [toks]
        end = len(toks)
        depth = 0
        for j in range(start + 1, len(toks)):
            t = toks[j]
            if t.kind == "op" and t.text in "([{":
                depth += 1
            elif t.kind == "op" and t.text in ")]}":
                depth -= 1
            elif depth == 0 and (
                (t.kind == "op" and t.text in (":", "~") and (stop_at_colon or t.text == "~"))
                or (t.kind == "name" and t.text == "when")
            ):
                end = j
                break
        head, region, rest = toks[:start], toks[start + 1:end], toks[end:]
        cond: list[Token] = []
        depth = 0
        for j, t in enumerate(region):
            if t.kind == "op" and t.text in "([{":
                depth += 1
            elif t.kind == "op" and t.text in ")]}":
                depth -= 1
            elif depth == 0 and t.kind == "name" and t.text == "if":
                region, cond = region[:j], region[j + 1:]
                break
        bindings = self._split_bindings(region, toks[start])
        out: list[list[Token]] = []
        for env in self._bind(bindings, {}):
            if cond and not self._truthy(_subst(cond, env), toks[start]):
                continue
            out.append(_subst(head, env) + _subst(rest, env))
        return out

    def _split_bindings(self, region: list[Token], at: Token):
        groups: list[list[Token]] = [[]]
        depth = 0
        for t in region:
            if t.kind == "op" and t.text in "([{":
                depth += 1
            elif t.kind == "op" and t.text in ")]}":
                depth -= 1
            if depth == 0 and t.kind == "op" and t.text == ",":
                groups.append([])
            else:
                groups[-1].append(t)
        out = []
        for g in groups:
            names = []
            k = 0
            while k < len(g) and not (g[k].kind == "name" and g[k].text == "in"):
                if g[k].kind != "op" or g[k].text != ",":
                    names.append(g[k])
                k += 1
            if k >= len(g) or not names:
                raise _Error("expected 'VAR in SET' in for clause", g[0] if g else at)
            out.append(([n.text for n in names], g[k + 1:]))
        return out

    def _bind(self, bindings, env):
        if not bindings:
            yield dict(env)
            return
        names, set_toks = bindings[0]
        values = self._set_values(_subst(set_toks, env))
        for v in values:
            new = dict(env)
            if len(names) == 1:
                new[names[0]] = v
            else:
                raise _Error("bind one variable per set", set_toks[0] if set_toks else None)
            yield from self._bind(bindings[1:], new)

    def _set_values(self, toks: list[Token]) -> list[str]:
        if not toks:
            raise _Error("empty set in for clause")
        st = _Stream(toks, _end_after(toks))
        t = st.peek()
        if t.kind == "name" and t.text in SET_KEYWORDS:
            st.next()
            vals = self.names_of(t.text)
        elif st.at("("):
            st.next()
            tags = [self.read_name(st, "tag")]
            while st.accept(","):
                tags.append(self.read_name(st, "tag"))
            st.expect(")")
            kind = None
            if st.accept("^"):
                k = st.next()
                if k.text not in TAG_TYPES:
                    raise _Error("tag type must be one of t, p, d, a, o", k)
                kind = TAG_TYPES[k.text]
            vals = self.tagged(tags, kind, t)
        else:
            vals, _, _ = self.read_elems(st)
        st.expect_done()
        return vals

    def _truthy(self, toks: list[Token], at: Token) -> bool:
        st = _Stream(toks, _end_after(toks))
        e = self.parse_bexpr(st)
        st.expect_done()
        if not expr_is_constant(e):
            raise _Error("for-clause condition must not depend on the state", at)
        try:
            return bool(fold_constant(e))
        except EvaluationError as exc:
            raise _Error(str(exc), at) from None

    # slices

    def parse_slice(self, st: _Stream):
        items = [self.parse_term(st)]
        while st.accept("|"):
            items.append(self.parse_term(st))
        return simplify(disj(items))

    def _starts_factor(self, st: _Stream) -> bool:
        t = st.peek()
        if t.kind == "op":
            return t.text in ("!", "(", "[")
        if t.kind in ("name", "string"):
            return t.text not in ("when", "for", "if", "otherwise", "in")
        return False

    def parse_term(self, st: _Stream):
        items = [self.parse_factor(st)]
        while True:
            if st.accept("&"):
                items.append(self.parse_factor(st))
            elif self._starts_factor(st):
                items.append(self.parse_factor(st))
            else:
                break
        return conj(items)

    def parse_factor(self, st: _Stream):
        if st.accept("!"):
            return Not(self.parse_factor(st))
        t = st.peek()
        if st.at("["):
            return self.parse_bracket(st)
        if st.at("("):
            return self.parse_paren(st)
        if t.kind == "name" and t.text == "ALL":
            st.next()
            return ALL
        if t.kind == "name" and t.text == "EMPTY":
            st.next()
            return EMPTY
        if t.kind in ("name", "string"):
            if t.text in self.named and t.kind == "name":
                st.next()
                return self.named[t.text]
            if st.peek(1).kind == "op" and st.peek(1).text == "(":
                result = self.call_ludeme(st, "slice")
                return result
            raise _Error(f"unknown slice name {t.text!r}", t, t.text)
        raise _Error(f"expected a slice, found {_show(t)}", t)

    def parse_paren(self, st: _Stream):
        open_tok = st.peek()
        # value-tag atom: (^a ^b)@T
        if st.peek(1).kind == "op" and st.peek(1).text == "^":
            st.next()
            tags = tuple(sorted(self.read_tags(st)))
            st.expect(")")
            st.expect("@")
            return conj(ValueTagAtom(name, tags) for name in self.read_target(st))
        # atom: (v)@T
        p1, p2 = st.peek(1), st.peek(2)
        simple = p1.kind in ("name", "string") or (p1.kind == "op" and p1.text == "-")
        if simple and p2.kind == "op" and p2.text == ")" and st.peek(3).text == "@" \
                and st.peek(3).kind == "op":
            st.next()
            value = self.read_name(st, "value")
            st.expect(")")
            st.expect("@")
            tracks = self.read_target(st)
            atoms = []
            for name in tracks:
                track = self.track_or_error(name, open_tok)
                if value not in track.values:
                    raise _Error(f"track {name!r} has no value {value!r}", p1, value)
                atoms.append(Atom(name, value))
            return conj(atoms)
        st.next()
        inner = self.parse_slice(st)
        st.expect(")")
        return inner

    def read_target(self, st: _Stream) -> list[str]:
        """Track name after '@', or a parenthesised tag intersection of tracks."""
        t = st.peek()
        if st.at("("):
            st.next()
            tags = [self.read_name(st, "tag")]
            while st.accept(","):
                tags.append(self.read_name(st, "tag"))
            st.expect(")")
            want = set(tags)
            names = [x.name for x in self.tracks if want <= x.tags]
            if not names:
                raise _Error(f"no tracks carry tags ({', '.join(tags)})", t)
            return names
        name = self.read_name(st, "track")
        self.track_or_error(name, t)
        return [name]

    def track_or_error(self, name: str, tok: Token) -> Track:
        try:
            return self.track(name)
        except EvaluationError:
            raise _Error(f"unknown track {name!r}", tok, name) from None

    def parse_bracket(self, st: _Stream):
        open_tok = st.expect("[")
        e = self.parse_bexpr(st, allow_list=True)
        st.expect("]")
        coord = 1
        if st.peek().kind == "sub":
            coord = int(st.next().text)
        if isinstance(e, list):
            return conj(self._finish_bracket(x, coord, open_tok) for x in e)
        return self._finish_bracket(e, coord, open_tok)

    def _finish_bracket(self, e, coord: int, tok: Token):
        if expr_is_constant(e):
            try:
                return ALL if fold_constant(e) else EMPTY
            except EvaluationError as exc:
                raise _Error(str(exc), tok) from None
        if not isinstance(e, (Cmp, Member)):
            raise _Error("a bracket must hold a comparison or membership test", tok)
        self._check_expr(e, coord, tok)
        return Bracket(e, coord)

    def _check_expr(self, e, coord: int, tok: Token):
        stack = [e]
        while stack:
            x = stack.pop()
            if isinstance(x, ValueOf):
                track = self.track_or_error(x.track, tok)
                if isinstance(e, Cmp) and not (
                    e.op in ("=", "!=") and _symbolic_side(e)
                ) and coord > len(track.value_coords):
                    raise _Error(f"track {x.track!r} has no value coordinate {coord}", tok)
            elif isinstance(x, (BinOp, Cmp)):
                stack += [x.left, x.right]
            elif isinstance(x, Neg):
                stack.append(x.item)
            elif isinstance(x, Member):
                stack.append(x.item)

    # bracket expressions

    def parse_bexpr(self, st: _Stream, allow_list: bool = False):
        left = self.parse_arith(st)
        if allow_list and st.at(","):
            items = [left]
            while st.accept(","):
                items.append(self.parse_arith(st))
            if not st.at_word("in"):
                raise _Error("expected 'in' after a list of elements", st.peek())
            st.next()
            tags, tok = self._read_tagset(st)
            return [self._member(x, tags, tok) for x in items]
        if st.at_word("in"):
            st.next()
            tags, tok = self._read_tagset(st)
            return self._member(left, tags, tok)
        t = st.peek()
        if t.kind == "op" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            st.next()
            right = self.parse_arith(st)
            return Cmp(t.text, left, right)
        return left

    def _read_tagset(self, st: _Stream):
        tok = st.expect("(")
        tags = [self.read_name(st, "tag")]
        while st.accept(","):
            tags.append(self.read_name(st, "tag"))
        st.expect(")")
        if st.accept("^"):
            st.next()  # type suffix: implied by the left-hand side
        return tuple(tags), tok

    def _member(self, x, tags: tuple[str, ...], tok: Token):
        if isinstance(x, ValueOf):
            self.track_or_error(x.track, tok)
            return Member(x, tags)
        if isinstance(x, (Sym, Num)):
            name = x.name if isinstance(x, Sym) else str(x.value)
            have = self.element_tags(name)
            if have is None:
                raise _Error(f"unknown element {name!r}", tok, name)
            return Num(1) if set(tags) <= have else Num(0)
        raise _Error("membership needs an element or v(TRACK)", tok)

    def parse_arith(self, st: _Stream):
        left = self.parse_mul(st)
        while st.at("+", "-"):
            op = st.next().text
            left = BinOp(op, left, self.parse_mul(st))
        return left

    def parse_mul(self, st: _Stream):
        left = self.parse_unary(st)
        while st.at("*"):
            st.next()
            left = BinOp("*", left, self.parse_unary(st))
        return left

    def parse_unary(self, st: _Stream):
        if st.at("-"):
            nxt = st.peek(1)
            if nxt.kind == "op" and nxt.text in ("(",) or nxt.kind == "name" and nxt.text == "v":
                st.next()
                return Neg(self.parse_unary(st))
            if nxt.kind in ("name", "string"):
                st.next()
                return Neg(self.parse_unary(st))
        t = st.peek()
        if st.at("("):
            st.next()
            e = self.parse_arith(st)
            st.expect(")")
            return e
        if t.kind == "name" and t.text == "v" and st.peek(1).text == "(" \
                and st.peek(1).kind == "op":
            st.next()
            st.next()
            name = self.read_name(st, "track")
            st.expect(")")
            return ValueOf(name)
        if t.kind == "name":
            st.next()
            return Num(int(t.text)) if _is_int(t.text) else Sym(t.text)
        if t.kind == "string":
            st.next()
            return Sym(t.text)
        if t.kind == "op" and t.text == "-":
            st.next()
            return Sym("-")
        raise _Error(f"expected an expression, found {_show(t)}", t)

    # ludemes

    def call_ludeme(self, st: _Stream, want: str):
        t = st.next()
        name = t.text
        try:
            fn = self.catalog.lookup(name)
        except CatalogError:
            raise _Error(f"unknown ludeme {name!r}", t, name) from None
        if self.uses and name not in self.uses:
            raise _Error(f"ludeme {name!r} is not listed under uses", t, name)
        if fn.returns != want:
            raise _Error(f"ludeme {name!r} does not return a {want}", t, name)
        st.expect("(")
        raw = []
        if not st.at(")"):
            raw.append(self._ludeme_arg(st))
            while st.accept(","):
                raw.append(self._ludeme_arg(st))
        st.expect(")")
        if len(raw) != len(fn.signature):
            raise _Error(f"{name} takes {len(fn.signature)} arguments, got {len(raw)}", t, name)
        args = [self._coerce(kind, a, t) for kind, a in zip(fn.signature, raw)]
        try:
            return fn(self, *args)
        except GameSystemError as exc:
            raise _Error(f"{name}: {exc}", t, name) from None

    def _ludeme_arg(self, st: _Stream):
        if st.at("("):
            st.next()
            items = [self.read_name(st)]
            while st.accept(","):
                items.append(self.read_name(st))
            st.expect(")")
            return ("group", items)
        return ("name", self.read_name(st))

    def _coerce(self, kind: str, arg, tok: Token):
        form, val = arg
        if kind == TRACKS:
            names = val if form == "group" else [val]
            want = set(names)
            tagged = [x.name for x in self.tracks if want <= x.tags]
            if tagged:
                return tagged
            if all(n in self.names_of("tracks") for n in names):
                return names
            raise _Error(f"no tracks match ({', '.join(names)})", tok)
        if kind == DECISION_TUPLE:
            items = val if form == "group" else [val]
            for d in items:
                if d != "0" and d not in self.names_of("decisions"):
                    raise _Error(f"unknown decision {d!r}", tok, d)
            return tuple(items)
        if form != "name":
            raise _Error("expected a single name argument", tok)
        if kind == ACTION:
            if val not in self.names_of("actions"):
                raise _Error(f"unknown action {val!r}", tok, val)
            return val
        if kind == INTEGER:
            if not _is_int(val):
                raise _Error(f"expected an integer, got {val!r}", tok)
            return int(val)
        return val

    # sections

    def section_players(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item, stop_at_colon=False):
                    st = _Stream(toks, _end_after(toks))
                    names, _, _ = self.read_elems(st)
                    tags = self.read_tags(st)
                    st.expect_done()
                    for n in names:
                        if n in self.names_of("players"):
                            raise _Error(f"duplicate player {n!r}", toks[0], n)
                        self.players.append(Player(len(self.players) + 1, n, tags))
            except _Error as exc:
                self.error(exc, item)

    def section_outcomes(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item, stop_at_colon=False):
                    st = _Stream(toks, _end_after(toks))
                    names, _, _ = self.read_elems(st)
                    tags = self.read_tags(st)
                    st.expect_done()
                    for n in names:
                        if n in self.names_of("outcomes"):
                            raise _Error(f"duplicate outcome {n!r}", toks[0], n)
                        self.outcomes.append(Outcome(n, tags))
            except _Error as exc:
                self.error(exc, item)

    def section_tracks(self, sec: _Section):
        for item in sec.items:
            try:
                st = _Stream(item.tokens, _end_after(item.tokens))
                names, implicit_names, _ = self.read_elems(st)
                tags = self.read_tags(st)
                track_coords: list[tuple[Coordinates, ...]]
                if st.accept("~"):
                    spaces = self.read_spaces(st, names)
                    track_coords = [
                        tuple(Coordinates(c.space, ((n, c.table[n]),)) for c in spaces)
                        for n in names
                    ]
                elif implicit_names:
                    track_coords = [(Coordinates(INTEGERS, ((n, int(n)),)),) for n in names]
                else:
                    track_coords = [() for _ in names]
                st.expect("=")
                values, implicit_values, vtags = self.read_elems(st, value_tags=True)
                if st.accept("~"):
                    vcoords = self.read_spaces(st, values)
                elif implicit_values:
                    vcoords = (Coordinates(INTEGERS, tuple((v, int(v)) for v in values)),)
                else:
                    vcoords = ()
                st.expect_done()
                vt = tuple((v, vtags[v]) for v in values if v in vtags)
                for n, coords in zip(names, track_coords):
                    if n in self.names_of("tracks"):
                        raise _Error(f"duplicate track {n!r}", item.tokens[0], n)
                    self.tracks.append(
                        Track(n, tuple(values), tags, coords, vcoords, vt)
                    )
            except _Error as exc:
                self.error(exc, item)
            except DescriptionError as exc:
                self.error(_Error(str(exc), item.tokens[0]), item)

    def section_slices(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item):
                    st = _Stream(toks, _end_after(toks))
                    name = st.next()
                    if name.kind != "name":
                        raise _Error("expected a slice name", name)
                    st.expect(":")
                    self.named[name.text] = self.parse_slice(st)
                    st.expect_done()
            except _Error as exc:
                self.error(exc, item)

    def section_init(self, sec: _Section):
        for item in sec.items:
            try:
                st = _Stream(item.tokens, _end_after(item.tokens))
                self.initial.append(self.parse_slice(st))
                st.expect_done()
            except _Error as exc:
                self.error(exc, item)

    def section_decisions(self, sec: _Section):
        if sec.trivial:
            self.trivial = True
            if sec.items:
                self.error(_Error("'decisions ~ actions' takes no items", sec.items[0].tokens[0]))
            return
        for item in sec.items:
            try:
                for toks in self.expand(item, stop_at_colon=False):
                    st = _Stream(toks, _end_after(toks))
                    names, _, _ = self.read_elems(st)
                    tags = self.read_tags(st)
                    coords = self.read_spaces(st, names) if st.accept("~") else ()
                    st.expect_done()
                    for n in names:
                        if n in ("0", "*"):
                            raise _Error(f"decision name {n!r} is reserved", toks[0], n)
                        if n in self.names_of("decisions"):
                            raise _Error(f"duplicate decision {n!r}", toks[0], n)
                        per = tuple(Coordinates(c.space, ((n, c.table[n]),)) for c in coords)
                        self.decisions.append(Decision(n, tags, per))
            except _Error as exc:
                self.error(exc, item)

    def section_actions(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item):
                    st = _Stream(toks, _end_after(toks))
                    name = self.read_name(st, "action name")
                    tags = self.read_tags(st)
                    st.expect(":")
                    clauses = self.read_action_body(st)
                    st.expect_done()
                    if name in self.names_of("actions"):
                        raise _Error(f"duplicate action {name!r}", toks[0], name)
                    self.actions.append(Action(name, clauses, tags))
            except _Error as exc:
                self.error(exc, item)
        if self.trivial:
            self.decisions = [Decision(a.name, a.tags) for a in self.actions]

    def read_action_body(self, st: _Stream) -> tuple[Clause, ...]:
        if st.at_word("identity"):
            st.next()
            return ()
        clauses = [self.read_clause(st)]
        while st.accept(";"):
            clauses.append(self.read_clause(st))
        return tuple(clauses)

    def read_clause(self, st: _Stream) -> Clause:
        # a guard is present iff '->' occurs before the next ';'
        j = st.i
        depth = 0
        has_guard = False
        while j < len(st.toks):
            t = st.toks[j]
            if t.kind == "op" and t.text in "([{":
                depth += 1
            elif t.kind == "op" and t.text in ")]}":
                depth -= 1
            elif depth == 0 and t.kind == "op" and t.text == ";":
                break
            elif depth == 0 and t.kind == "op" and t.text == "->":
                has_guard = True
                break
            j += 1
        guard = ALL
        if has_guard:
            guard = self.parse_slice(st)
            st.expect("->")
        writes = []
        while st.at("("):
            writes.extend(self.read_write(st))
        if not writes:
            raise _Error("expected a write such as (value)@track", st.peek())
        return Clause(guard, tuple(writes))

    def read_write(self, st: _Stream) -> list[Write]:
        open_tok = st.expect("(")
        j = st.i
        depth = 0
        while j < len(st.toks):
            t = st.toks[j]
            if t.kind == "op" and t.text in "([{":
                depth += 1
            elif t.kind == "op" and t.text in ")]}":
                if depth == 0:
                    break
                depth -= 1
            j += 1
        inner = st.toks[st.i:j]
        st.i = j
        st.expect(")")
        coord = None
        if st.peek().kind == "sub":
            coord = int(st.next().text)
        st.expect("@")
        targets = self.read_target(st)
        out = []
        for target in targets:
            track = self.track(target)
            if coord is None and len(inner) == 1 and (
                inner[0].kind in ("name", "string") or inner[0].text == "-"
            ):
                value = inner[0].text
                if value not in track.values:
                    raise _Error(f"track {target!r} has no value {value!r}", inner[0], value)
                out.append(Write(target, value=value))
                continue
            sub = _Stream(inner, _end_after(inner) if inner else open_tok)
            if sub.at("+") and len(inner) == 2:
                sub.next()
                e = BinOp("+", ValueOf(target), Num(self.read_int(sub)))
            else:
                e = self.parse_arith(sub)
            sub.expect_done()
            c = coord or 1
            if c > len(track.value_coords):
                raise _Error(f"track {target!r} has no value coordinate {c}", open_tok)
            self._check_expr(e, c, open_tok)
            out.append(Write(target, expr=e, coord=c))
        return out

    def section_consequences(self, sec: _Section):
        if self.trivial and sec.items:
            self.error(_Error("consequences are implied by 'decisions ~ actions'",
                              sec.items[0].tokens[0]))
            return
        n = len(self.players)
        for item in sec.items:
            try:
                for toks in self.expand(item):
                    st = _Stream(toks, _end_after(toks))
                    open_tok = st.expect("(")
                    pattern = [self.read_pattern_entry(st)]
                    while st.accept(","):
                        pattern.append(self.read_pattern_entry(st))
                    st.expect(")")
                    if len(pattern) != n:
                        raise _Error(f"pattern needs {n} entries, one per player", open_tok)
                    guard = ALL
                    if st.at_word("when"):
                        st.next()
                        guard = self.parse_slice(st)
                    st.expect(":")
                    cons = self.read_consequence_body(st)
                    st.expect_done()
                    try:
                        self.consequences.append(ConsequenceRule(tuple(pattern), cons, guard))
                    except DescriptionError as exc:
                        raise _Error(str(exc), open_tok) from None
            except _Error as exc:
                self.error(exc, item)

    def read_pattern_entry(self, st: _Stream) -> str:
        if st.accept("*"):
            return "*"
        t = st.peek()
        name = self.read_name(st, "decision")
        if name != "0" and name not in self.names_of("decisions"):
            raise _Error(f"unknown decision {name!r}", t, name)
        return name

    def read_consequence_body(self, st: _Stream):
        t = st.peek()
        if t.kind == "name" and st.peek(1).kind == "op" and st.peek(1).text == "(" \
                and t.text in self.catalog:
            return self.call_ludeme(st, "consequence")
        items = [self.read_consequence(st)]
        while st.accept(";"):
            items.append(self.read_consequence(st))
        if len(items) > 1 and any(p is None for p, _ in items):
            raise _Error("give every consequence a probability p/q", t)
        if len(items) == 1 and items[0][0] is None:
            return ((Fraction(1), items[0][1]),)
        return tuple(items)

    def read_consequence(self, st: _Stream):
        prob = None
        t = st.peek()
        if t.kind == "name" and _is_int(t.text) and st.peek(1).kind == "op" \
                and st.peek(1).text == "/":
            st.next()
            st.next()
            den = self.read_int(st)
            if den <= 0:
                raise _Error("probability denominator must be positive", t)
            prob = Fraction(int(t.text), den)
        acts = []
        while not st.done() and not st.at(";"):
            at = st.peek()
            a = self.read_name(st, "action")
            if a not in self.names_of("actions"):
                raise _Error(f"unknown action {a!r}", at, a)
            acts.append(a)
        if not acts:
            raise _Error("expected at least one action", st.peek())
        return prob, tuple(acts)

    def section_legal(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item):
                    st = _Stream(toks, _end_after(toks))
                    if st.at_word("otherwise"):
                        st.next()
                        st.expect(":")
                        self.legal_default = self.parse_slice(st)
                        st.expect_done()
                        continue
                    pt = st.peek()
                    player = "*" if st.accept("*") else self.read_name(st, "player")
                    if player != "*" and player not in self.names_of("players"):
                        raise _Error(f"unknown player {player!r}", pt, player)
                    dt = st.peek()
                    decision = "*" if st.accept("*") else self.read_name(st, "decision")
                    if decision != "*" and decision not in self.names_of("decisions"):
                        raise _Error(f"unknown decision {decision!r}", dt, decision)
                    st.expect(":")
                    sl = self.parse_slice(st)
                    st.expect_done()
                    self.legality.append(LegalityRule(player, decision, sl))
            except _Error as exc:
                self.error(exc, item)

    def section_ending(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item):
                    st = _Stream(toks, _end_after(toks))
                    self.ending.append(self.parse_slice(st))
                    st.expect_done()
            except _Error as exc:
                self.error(exc, item)

    def section_omega(self, sec: _Section):
        for item in sec.items:
            try:
                for toks in self.expand(item):
                    st = _Stream(toks, _end_after(toks))
                    t = st.peek()
                    outcome = self.read_name(st, "outcome")
                    if outcome not in self.names_of("outcomes"):
                        raise _Error(f"unknown outcome {outcome!r}", t, outcome)
                    st.expect(":")
                    if st.at_word("otherwise"):
                        st.next()
                        if self.omega_default is not None:
                            raise _Error("only one default outcome is allowed", t)
                        self.omega_default = outcome
                    else:
                        self.omega.append(OutcomeRule(outcome, self.parse_slice(st)))
                    st.expect_done()
            except _Error as exc:
                self.error(exc, item)

    def section_uses(self, sec: _Section):
        for item in sec.items:
            try:
                st = _Stream(item.tokens, _end_after(item.tokens))
                while True:
                    t = st.peek()
                    name = self.read_name(st, "ludeme")
                    if name not in self.catalog:
                        raise _Error(f"unknown ludeme {name!r}", t, name)
                    self.uses.append(name)
                    if not st.accept(","):
                        break
                st.expect_done()
            except _Error as exc:
                self.error(exc, item)


def _symbolic_side(e: Cmp) -> bool:
    def sym(x):
        return isinstance(x, ValueOf) or (isinstance(x, Sym))
    return sym(e.left) and sym(e.right)


def _end_after(toks: list[Token]) -> Token:
    if not toks:
        return Token("end", "", 1, 1)
    last = toks[-1]
    return Token("end", "", last.line, last.col + len(last.text))


def _subst(toks: list[Token], env: dict[str, str]) -> list[Token]:
    if not env:
        return list(toks)
    out = []
    for t in toks:
        if t.kind == "name" and t.text in env:
            out.append(Token("name", env[t.text], t.line, t.col))
        else:
            out.append(t)
    return out


# -- entry points ------------------------------------------------------------


def try_parse(text: str, catalog: Catalog | None = None):
    """Parse a description; returns (system or None, diagnostics)."""
    diags: list[ParseDiagnostic] = []
    sections = _split_sections(text, diags)
    by_name: dict[str, _Section] = {}
    for sec in sections:
        if sec.name in RESERVED_SECTIONS:
            diags.append(ParseDiagnostic(
                "error", sec.header.line, 1,
                f"section {sec.name!r} is reserved and has no semantics yet", sec.name))
            continue
        if sec.name not in SECTIONS:
            diags.append(ParseDiagnostic("error", sec.header.line, 1,
                                         f"unknown section {sec.name!r}", sec.name))
            continue
        if sec.name in by_name:
            diags.append(ParseDiagnostic("error", sec.header.line, 1,
                                         f"duplicate section {sec.name!r}", sec.name))
            continue
        by_name[sec.name] = sec
    if "players" not in by_name:
        line = 1 if not text.strip() else len(text.splitlines())
        diags.append(ParseDiagnostic("error", line, 1, "players section missing"))
        return None, diags
    b = _Builder(catalog or CATALOG)
    b.diags = diags
    order = ("uses", "players", "outcomes", "tracks", "decisions", "actions", "slices",
             "init", "consequences", "legal", "ending", "omega")
    for name in order:
        sec = by_name.get(name)
        if sec is not None:
            getattr(b, "section_" + name)(sec)
    for name, what in (("tracks", "tracks"), ("init", "initial conditions"),
                       ("actions", "actions")):
        if name not in by_name and not diags:
            diags.append(ParseDiagnostic("error", 1, 1, f"{name} section missing"))
    if "decisions" not in by_name and not diags:
        diags.append(ParseDiagnostic("error", 1, 1, "decisions section missing"))
    if any(d.severity == "error" for d in diags):
        return None, diags
    try:
        system = GameSystem(
            players=tuple(b.players),
            tracks=tuple(b.tracks),
            initial=tuple(b.initial),
            decisions=tuple(b.decisions),
            actions=tuple(b.actions),
            consequences=tuple(b.consequences),
            legality=tuple(b.legality),
            outcomes=tuple(b.outcomes),
            omega=tuple(b.omega),
            ending=disj(b.ending),
            legal_default=b.legal_default,
            omega_default=b.omega_default,
            trivial_consequences=b.trivial,
            uses=tuple(b.uses),
        )
        system.evaluator  # compile now so bad references surface as diagnostics
    except GameSystemError as exc:
        diags.append(ParseDiagnostic("error", 1, 1, str(exc).splitlines()[0]))
        return None, diags
    return system, diags


def parse_system(text: str, catalog: Catalog | None = None) -> GameSystem:
    system, diags = try_parse(text, catalog)
    if system is None:
        raise DescriptionError(diags)
    return system
