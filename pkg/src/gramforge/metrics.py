"""Precision, recall, F1 and grammar size/complexity measures."""

from __future__ import annotations

import random
from typing import Sequence

from .earley import EarleyRecognizer
from .grammar import CharClass, Grammar, Terminal
from .sampling import DEFAULT_MAX_DEPTH, sample_from_grammar

PRECISION_SAMPLES = 1000


class EmptyTestSet(ValueError):
    pass


def precision(g: Grammar, oracle, n: int = PRECISION_SAMPLES, seed: int = 101,
              max_depth: int = DEFAULT_MAX_DEPTH) -> float:
    """Share of ``n`` sampled strings the oracle accepts; duplicates count per draw."""
    if n <= 0:
        raise ValueError("precision needs at least one sample")
    samples = sample_from_grammar(g, n, max_depth, rng=random.Random(seed))
    return sum(1 for s in samples if oracle.accepts(s)) / n


def recall(g: Grammar, test_set: Sequence[str]) -> float:
    if not test_set:
        raise EmptyTestSet("recall needs a non-empty test set")
    rec = EarleyRecognizer(g)
    return sum(1 for s in test_set if rec.accepts(s)) / len(test_set)


def f1(p: float, r: float) -> float:
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def complexity_metrics(g: Grammar) -> dict[str, float]:
    """T, NT, RHS plus branch counts.

    ``mcc_total`` counts ``|`` separators and one ``+`` per character class
    occurrence; ``mcc_avg`` divides it by NT.
    """
    terminals = set()
    symbols = 0
    branches = 0
    for alts in g.rules.values():
        branches += max(len(alts) - 1, 0)
        for alt in alts:
            symbols += len(alt)
            for s in alt:
                if isinstance(s, Terminal):
                    terminals.add(str(s))
                elif isinstance(s, CharClass):
                    terminals.add(str(s))
                    branches += 1
    nt = len(g.rules)
    return {
        "t": len(terminals),
        "nt": nt,
        "rhs": symbols / nt if nt else 0.0,
        "mcc_total": branches,
        "mcc_avg": branches / nt if nt else 0.0,
    }

