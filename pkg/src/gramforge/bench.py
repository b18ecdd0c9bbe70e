"""Bundled golden languages, their acceptor, and seed/test corpora."""

from __future__ import annotations

import os
import random
import sys
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .earley import EarleyRecognizer
from .grammar import Grammar, GrammarError, GrammarSyntaxError, load_grammar, parse_grammar
from .sampling import GrammarSampler

SEED_DEPTH = 7
TEST_DEPTH = 7


class InsufficientDiversity(ValueError):
    pass


@dataclass
class GoldenLanguage:
    name: str
    grammar: Grammar
    seed_grammar: Grammar | None = None
    seed_count: int = 25
    test_count: int = 100
    seed_depth: int = SEED_DEPTH
    test_depth: int = TEST_DEPTH

    def acceptor(self) -> EarleyRecognizer:
        return EarleyRecognizer(self.grammar)

    def accepts(self, s: str) -> bool:
        return self.acceptor().accepts(s)


_FILES = {
    "while": ("while.bnf", None),
    "json": ("json.bnf", None),
    "lisp": ("lisp.bnf", None),
    "ifelse": ("ifelse.bnf", "ifelse_seeds.bnf"),
}
LANGUAGES = tuple(_FILES)


def language_text(filename: str) -> str:
    return resources.files("gramforge.languages").joinpath(filename).read_text(encoding="utf-8")


def get_language(name: str) -> GoldenLanguage:
    try:
        main, seeds = _FILES[name]
    except KeyError:
        raise KeyError(f"unknown language {name!r}; bundled: {', '.join(LANGUAGES)}") from None
    return GoldenLanguage(
        name, parse_grammar(language_text(main)),
        parse_grammar(language_text(seeds)) if seeds else None)


def stratified_sample(g: Grammar, n: int, seed: int, max_depth: int) -> list[str]:
    """``n`` distinct strings, drawn round-robin over derivation depth caps 0..max_depth.

    Cap 0 forces minimal derivations, so the first string is always a
    shortest-derivation program.
    """
    if n <= 0:
        return []
    samplers = [GrammarSampler(g, d) for d in range(max_depth + 1)]
    rng = random.Random(seed)
    out: list[str] = []
    seen: set[str] = set()
    idle_rounds = 0
    while len(out) < n:
        added = False
        for sampler in samplers:
            for _ in range(10):
                s = sampler.sample(rng)
                if s not in seen:
                    seen.add(s)
                    out.append(s)
                    added = True
                    break
            if len(out) == n:
                break
        idle_rounds = 0 if added else idle_rounds + 1
        if idle_rounds >= 20:
            raise InsufficientDiversity(
                f"only {len(out)} distinct strings reachable at depth {max_depth}, wanted {n}")
    return out


def make_seeds(lang: GoldenLanguage, n: int | None = None, seed: int = 101,
               max_depth: int | None = None) -> list[str]:
    g = lang.seed_grammar or lang.grammar
    return stratified_sample(g, lang.seed_count if n is None else n, seed,
                             lang.seed_depth if max_depth is None else max_depth)


def make_test_set(lang: GoldenLanguage, n: int | None = None, seed: int = 202,
                  max_depth: int | None = None) -> list[str]:
    """Held-out strings from the full golden grammar, with a sampler seed apart from the seeds'."""
    return stratified_sample(lang.grammar, lang.test_count if n is None else n, seed,
                             lang.test_depth if max_depth is None else max_depth)


def write_programs(directory: str | os.PathLike, programs: Sequence[str], prefix: str = "seed") -> None:
    os.makedirs(directory, exist_ok=True)
    width = max(3, len(str(len(programs))))
    for i, text in enumerate(programs):
        with open(os.path.join(directory, f"{prefix}_{i:0{width}d}.txt"), "w",
                  encoding="utf-8", newline="") as fh:
            fh.write(text)


def read_programs(directory: str | os.PathLike) -> list[str]:
    out = []
    for name in sorted(os.listdir(directory)):
        path = os.path.join(directory, name)
        if os.path.isfile(path) and not name.startswith("."):
            with open(path, encoding="utf-8", newline="") as fh:
                out.append(fh.read())
    return out


def resolve_grammar(spec: str) -> Grammar:
    """A grammar file path, or the name of a bundled language."""
    if spec in _FILES and not os.path.exists(spec):
        return get_language(spec).grammar
    return load_grammar(spec)


def golden_acceptor_main(grammar_file: str, stdin=None) -> int:
    """Exit status for the candidate on stdin: 0 accept, 1 reject, 2 bad grammar."""
    try:
        g = resolve_grammar(grammar_file)
    except (OSError, GrammarSyntaxError, GrammarError) as exc:
        print(f"gram-forge: cannot load grammar: {exc}", file=sys.stderr)
        return 2
    stream = stdin if stdin is not None else sys.stdin
    data = stream.buffer.read() if hasattr(stream, "buffer") else stream.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError:
            return 1
    return 0 if EarleyRecognizer(g).accepts(data) else 1


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("usage: python -m gramforge.bench GRAMMAR", file=sys.stderr)
        sys.exit(2)
    sys.exit(golden_acceptor_main(sys.argv[1]))
