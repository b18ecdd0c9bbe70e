"""Random derivation of strings from a grammar."""

from __future__ import annotations

import math
import random
import string

from .grammar import CharClass, Grammar, NonTerminal, Terminal

DEFAULT_MAX_DEPTH = 40
# keeps supercritical grammars (more than one expected recursive child) finite in practice
DEFAULT_MAX_EXPANSIONS = 400


class NonTerminatingGrammar(ValueError):
    pass


_CLASS_ALPHABET = {
    "digits": string.digits,
    "letters": string.ascii_letters,
    "alnum_": string.ascii_letters + string.digits + "_",
    "print": "".join(c for c in string.printable if not c.isspace()),
}


def random_class_instance(kind: str, rng: random.Random, max_len: int = 4) -> str:
    alphabet = _CLASS_ALPHABET[kind]
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(1, max_len)))


def min_heights(g: Grammar) -> dict[str, float]:
    """Height of the shallowest derivation tree for every non-terminal."""
    height = {name: math.inf for name in g.rules}
    changed = True
    while changed:
        changed = False
        for name, alts in g.rules.items():
            for alt in alts:
                h = 1 + max((height.get(s.name, math.inf) for s in alt
                             if isinstance(s, NonTerminal)), default=0)
                if h < height[name]:
                    height[name] = h
                    changed = True
    return height


def _alt_height(alt, height) -> float:
    return 1 + max((height.get(s.name, math.inf) for s in alt if isinstance(s, NonTerminal)),
                   default=0)


class GrammarSampler:
    """Random derivations; past ``max_depth`` (or after ``max_expansions``
    non-terminal expansions) only minimal-height alternatives are chosen."""

    def __init__(self, g: Grammar, max_depth: int = DEFAULT_MAX_DEPTH,
                 max_expansions: int = DEFAULT_MAX_EXPANSIONS) -> None:
        self.grammar = g
        self.max_depth = max_depth
        self.max_expansions = max_expansions
        self.height = min_heights(g)
        bad = sorted(n for n, h in self.height.items() if h == math.inf)
        if bad:
            raise NonTerminatingGrammar(f"no finite derivation for {', '.join(bad)}")
        self.minimal_alts = {
            name: [a for a in alts if _alt_height(a, self.height) == self.height[name]]
            for name, alts in g.rules.items()
        }

    def sample(self, rng: random.Random, symbol: str | None = None) -> str:
        out: list[str] = []
        # explicit stack of (symbol, depth) keeps deep recursion off the call stack
        stack = [(NonTerminal(symbol or self.grammar.start), 0)]
        budget = self.max_expansions
        while stack:
            sym, depth = stack.pop()
            if isinstance(sym, Terminal):
                out.append(sym.text)
            elif isinstance(sym, CharClass):
                out.append(random_class_instance(sym.kind, rng))
            else:
                budget -= 1
                if depth >= self.max_depth or budget < 0:
                    alt = rng.choice(self.minimal_alts[sym.name])
                else:
                    alt = rng.choice(self.grammar.rules[sym.name])
                for child in reversed(alt):
                    stack.append((child, depth + 1))
        return "".join(out)


def sample_from_grammar(g: Grammar, n: int, max_depth: int = DEFAULT_MAX_DEPTH,
                        seed: int = 101, rng: random.Random | None = None,
                        max_expansions: int = DEFAULT_MAX_EXPANSIONS) -> list[str]:
    if not g.rules:
        raise ValueError("cannot sample from an empty grammar")
    sampler = GrammarSampler(g, max_depth, max_expansions)
    rng = rng or random.Random(seed)
    return [sampler.sample(rng) for _ in range(n)]
