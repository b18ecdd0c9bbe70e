"""Character-class pretokenization and oracle-guided whitespace pruning."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

WHITESPACE = frozenset(" \t\n\r")


class Klass(enum.Enum):
    LETTERS = "Letters"
    DIGITS = "Digits"
    WHITESPACE = "Whitespace"
    PUNCT = "Punct"


def char_class(ch: str) -> Klass:
    if ch.isalpha():
        return Klass.LETTERS
    if "0" <= ch <= "9":
        return Klass.DIGITS
    if ch in WHITESPACE:
        return Klass.WHITESPACE
    return Klass.PUNCT


@dataclass(frozen=True)
class Token:
    text: str
    klass: Klass

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")


@dataclass
class TokenSeq:
    tokens: list[Token] = field(default_factory=list)
    source_id: str = ""

    def text(self) -> str:
        return "".join(t.text for t in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


class OracleFailure(RuntimeError):
    """The oracle rejected a seed program as given."""


def _merging(split_digit_runs: bool) -> frozenset:
    return frozenset({Klass.LETTERS} if split_digit_runs else {Klass.LETTERS, Klass.DIGITS})


def pretokenize(text: str, source_id: str = "", split_digit_runs: bool = False) -> TokenSeq:
    """Split ``text`` into maximal letter runs, digit runs and single characters."""
    merging = _merging(split_digit_runs)
    tokens: list[Token] = []
    run: list[str] = []
    run_klass: Klass | None = None
    for ch in text:
        k = char_class(ch)
        if run and k == run_klass and k in merging:
            run.append(ch)
            continue
        if run:
            tokens.append(Token("".join(run), run_klass))
        run, run_klass = [ch], k
    if run:
        tokens.append(Token("".join(run), run_klass))
    return TokenSeq(tokens, source_id)


def remove_redundant_whitespace(seq: TokenSeq, oracle, split_digit_runs: bool = False) -> TokenSeq:
    """Drop whitespace tokens, left to right, whenever the oracle still accepts.

    Each whitespace token is tried at most once, after one query confirming
    the input itself.  A space between two runs that would fuse (``ab cd``)
    is a lexical separator, not redundant, and is kept without a query:
    fusing would turn two lexemes into one and the seed as written would no
    longer be derivable from its own tree.
    """
    if not any(t.klass is Klass.WHITESPACE for t in seq.tokens):
        return TokenSeq(list(seq.tokens), seq.source_id)
    if not oracle.accepts(seq.text()):
        raise OracleFailure(f"seed {seq.source_id or seq.text()!r} is rejected by the oracle")
    merging = _merging(split_digit_runs)
    kept = list(seq.tokens)
    i = 0
    while i < len(kept):
        if kept[i].klass is Klass.WHITESPACE:
            if 0 < i < len(kept) - 1:
                left, right = kept[i - 1], kept[i + 1]
                if left.klass == right.klass and left.klass in merging:
                    i += 1
                    continue
            trial = kept[:i] + kept[i + 1:]
            if oracle.accepts("".join(t.text for t in trial)):
                kept = trial
                continue
        i += 1
    return TokenSeq(kept, seq.source_id)
