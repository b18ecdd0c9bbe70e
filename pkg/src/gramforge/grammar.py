"""Grammar values and the line-oriented ``.bnf`` file format.

A rule is written ``name: alt | alt ...`` on one line.  Terminals are
double-quoted, non-terminals are bare identifiers and character classes are
spelled ``<digits+>``, ``<letters+>``, ``<alnum_+>`` or ``<print+>``.  The
empty alternative is written ``""``.  Lines starting with ``|`` continue the
previous rule, and ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

START = "start"


@dataclass(frozen=True, order=True)
class Terminal:
    text: str

    def __str__(self) -> str:
        return quote(self.text)


@dataclass(frozen=True, order=True)
class NonTerminal:
    name: str

    def __str__(self) -> str:
        return self.name


CHAR_CLASS_SPELLING = {
    "digits": "<digits+>",
    "letters": "<letters+>",
    "alnum_": "<alnum_+>",
    "print": "<print+>",
}
_SPELLING_TO_KIND = {v: k for k, v in CHAR_CLASS_SPELLING.items()}


@dataclass(frozen=True, order=True)
class CharClass:
    """One or more characters drawn from a fixed class."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in CHAR_CLASS_SPELLING:
            raise ValueError(f"unknown character class {self.kind!r}")

    def __str__(self) -> str:
        return CHAR_CLASS_SPELLING[self.kind]

    def matches_char(self, ch: str) -> bool:
        if self.kind == "digits":
            return "0" <= ch <= "9"
        if self.kind == "letters":
            return ch.isalpha()
        if self.kind == "alnum_":
            return ch.isalpha() or ("0" <= ch <= "9") or ch == "_"
        return ch.isprintable() and not ch.isspace()

    def matches(self, text: str) -> bool:
        return bool(text) and all(self.matches_char(c) for c in text)


Symbol = Union[Terminal, NonTerminal, CharClass]
Alternative = tuple[Symbol, ...]


class GrammarSyntaxError(ValueError):
    """Raised for malformed grammar text; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class GrammarError(ValueError):
    pass


@dataclass
class Grammar:
    """Context-free grammar with ordered, duplicate-free alternatives."""

    start: str = START
    rules: dict[str, list[Alternative]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        deduped: dict[str, list[Alternative]] = {}
        for name, alts in self.rules.items():
            seen: list[Alternative] = []
            for alt in alts:
                alt = tuple(alt)
                if alt not in seen:
                    seen.append(alt)
            deduped[name] = seen
        self.rules = deduped

    def validate(self) -> None:
        if self.start not in self.rules:
            raise GrammarError(f"start symbol {self.start!r} has no rule")
        for name, alts in self.rules.items():
            for alt in alts:
                for sym in alt:
                    if isinstance(sym, NonTerminal) and sym.name not in self.rules:
                        raise GrammarError(f"{name!r} references undefined {sym.name!r}")

    def add(self, name: str, alt: Iterable[Symbol]) -> None:
        alt = tuple(alt)
        alts = self.rules.setdefault(name, [])
        if alt not in alts:
            alts.append(alt)

    def nonterminals(self) -> list[str]:
        return list(self.rules)

    def terminals(self) -> set[str]:
        return {s.text for alts in self.rules.values() for alt in alts for s in alt
                if isinstance(s, Terminal)}

    def alternatives(self):
        for name, alts in self.rules.items():
            for alt in alts:
                yield name, alt

    def copy(self) -> Grammar:
        return Grammar(self.start, {k: list(v) for k, v in self.rules.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grammar):
            return NotImplemented
        return self.start == other.start and self.rules == other.rules


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}
_UNESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


def quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(c, c) for c in text) + '"'


def serialize(g: Grammar) -> str:
    """Render ``g`` with the start rule first; parse_grammar inverts this."""
    if g.start != START:
        raise GrammarError("serialized grammars must use the start symbol 'start'")
    lines = []
    order = [START] + [n for n in g.rules if n != START]
    for name in order:
        if name not in g.rules:
            continue
        alts = [" ".join(str(s) for s in alt) if alt else '""' for alt in g.rules[name]]
        lines.append(f"{name}: " + " | ".join(alts))
    return "\n".join(lines) + "\n"


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_CLASS = re.compile(r"<[a-z_]+\+>")


def _lex_rule_body(body: str, line_no: int, col0: int):
    """Yield symbols and '|' markers from the right-hand side of one rule."""
    i = 0
    n = len(body)
    while i < n:
        c = body[i]
        col = col0 + i + 1
        if c in " \t":
            i += 1
        elif c == "#":
            return
        elif c == "|":
            yield "|", col
            i += 1
        elif c == '"':
            j = i + 1
            chars = []
            while True:
                if j >= n:
                    raise GrammarSyntaxError("unterminated string", line_no, col)
                if body[j] == "\\":
                    if j + 1 >= n or body[j + 1] not in _UNESCAPES:
                        raise GrammarSyntaxError("bad escape", line_no, col0 + j + 1)
                    chars.append(_UNESCAPES[body[j + 1]])
                    j += 2
                elif body[j] == '"':
                    break
                else:
                    chars.append(body[j])
                    j += 1
            text = "".join(chars)
            yield (Terminal(text) if text else None), col
            i = j + 1
        elif c == "<":
            m = _CLASS.match(body, i)
            if not m or m.group(0) not in _SPELLING_TO_KIND:
                raise GrammarSyntaxError("unknown character class", line_no, col)
            yield CharClass(_SPELLING_TO_KIND[m.group(0)]), col
            i = m.end()
        else:
            m = _NAME.match(body, i)
            if not m:
                raise GrammarSyntaxError(f"unexpected character {c!r}", line_no, col)
            yield NonTerminal(m.group(0)), col
            i = m.end()


def parse_grammar(text: str) -> Grammar:
    rules: dict[str, list[Alternative]] = {}
    current: str | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("|"):
            if current is None:
                raise GrammarSyntaxError("continuation before any rule", line_no, 1)
            body_start = raw.index("|") + 1
        else:
            offset = len(raw) - len(raw.lstrip())
            m = _NAME.match(raw, offset)
            if not m:
                raise GrammarSyntaxError("expected rule name", line_no, offset + 1)
            colon = m.end()
            while colon < len(raw) and raw[colon] in " \t":
                colon += 1
            if colon >= len(raw) or raw[colon] != ":":
                raise GrammarSyntaxError("expected ':' after rule name", line_no, colon + 1)
            current = m.group(0)
            rules.setdefault(current, [])
            body_start = colon + 1
        alt: list[Symbol] = []
        explicit_empty = False
        seg_col = body_start + 1

        def close(col: int) -> None:
            if not alt and not explicit_empty:
                raise GrammarSyntaxError('empty alternative must be written ""', line_no, col)
            _push(rules[current], alt)

        for sym, col in _lex_rule_body(raw[body_start:], line_no, body_start):
            if sym == "|":
                close(col)
                alt, explicit_empty, seg_col = [], False, col + 1
            elif sym is None:
                explicit_empty = True
            else:
                alt.append(sym)
        close(seg_col)
    if START not in rules:
        raise GrammarSyntaxError("missing 'start' rule", 1, 1)
    g = Grammar(START, rules)
    try:
        g.validate()
    except GrammarError as exc:
        raise GrammarSyntaxError(str(exc), 1, 1) from exc
    return g


def _push(alts: list[Alternative], alt: list[Symbol]) -> None:
    t = tuple(alt)
    if t not in alts:
        alts.append(t)


def load_grammar(path) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read())
