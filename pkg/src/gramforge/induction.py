"""Reading a grammar off parse trees, and generalizing its terminals."""

from __future__ import annotations

import logging
import random
from typing import Sequence

from .grammar import START, CharClass, Grammar, NonTerminal, Terminal
from .sampling import random_class_instance
from .tree import ParseNode, iter_nodes, yield_string

log = logging.getLogger(__name__)

LEXICAL_SAMPLES = 50


def induce_grammar(trees: Sequence[ParseNode], start: str = START) -> Grammar:
    """One production per internal node; labels in order of first appearance."""
    g = Grammar(start, {})
    roots = []
    for t in trees:
        if t.label != start and t.label not in roots:
            roots.append(t.label)
    if roots or not trees:
        g.rules[start] = [(NonTerminal(r),) for r in roots]
    for t in trees:
        # breadth-first keeps the rule order close to top-down reading order
        frontier = [t]
        while frontier:
            nxt = []
            for node in frontier:
                if node.is_leaf:
                    continue
                kids = node.children
                if len(kids) == 1 and not kids[0].is_leaf and kids[0].label == node.label:
                    nxt.extend(kids)  # X -> X adds nothing
                    continue
                g.add(node.label, (Terminal(c.label) if c.is_leaf else NonTerminal(c.label)
                                   for c in kids))
                nxt.extend(node.children)
            frontier = nxt
    return g


def ladder_for(text: str, allow_print: bool = False) -> list[str]:
    """Character-class rungs worth trying for a terminal, weakest first."""
    if text.isascii() and text.isdigit():
        rungs = ["digits"]
    elif text.isalpha():
        rungs = ["letters", "alnum_"]
    else:
        return []
    if allow_print:
        rungs.append("print")
    return rungs


def _leaf_spans(trees: Sequence[ParseNode], text: str) -> list[tuple[int, int, int]]:
    """(tree index, start, end) of every leaf whose label is ``text``."""
    spans = []
    for ti, t in enumerate(trees):
        pos = 0
        for n in iter_nodes(t):
            if n.is_leaf:
                if n.label == text:
                    spans.append((ti, pos, pos + len(n.label)))
                pos += len(n.label)
    return spans


def rung_passes(trees: Sequence[ParseNode], yields: Sequence[str], text: str, kind: str,
                oracle, rng: random.Random, n: int = LEXICAL_SAMPLES) -> bool:
    """Do ``n`` programs with one occurrence of ``text`` swapped for a class member pass?"""
    spans = _leaf_spans(trees, text)
    if not spans:
        return False
    strings = []
    for _ in range(n):
        ti, lo, hi = rng.choice(spans)
        y = yields[ti]
        strings.append(y[:lo] + random_class_instance(kind, rng) + y[hi:])
    return oracle.accepts_all(strings)


def expand_tokens(trees: Sequence[ParseNode], g: Grammar, oracle, *, seed: int = 101,
                  n: int = LEXICAL_SAMPLES, allow_print: bool = False) -> Grammar:
    """Replace terminals by the highest character class rung the oracle tolerates."""
    yields = [yield_string(t) for t in trees]
    adopted: dict[str, str] = {}
    for text in sorted(g.terminals()):
        best = None
        for kind in ladder_for(text, allow_print):
            rng = random.Random(f"{seed}:lex:{text}:{kind}")
            if not rung_passes(trees, yields, text, kind, oracle, rng, n):
                break
            best = kind
        if best is not None:
            log.info("lexical: %r -> <%s+>", text, best)
            adopted[text] = best
    if not adopted:
        return g
    out = Grammar(g.start, {})
    for name, alts in g.rules.items():
        out.rules[name] = []
        for alt in alts:
            out.add(name, (CharClass(adopted[s.text]) if isinstance(s, Terminal) and s.text in adopted
                           else s for s in alt))
    return out
