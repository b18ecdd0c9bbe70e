"""Deterministic bubble ranking used once LLM guidance stops changing the trees.

Candidates are sibling n-grams paired with an existing class, or with a
second n-gram.  They are ordered by

1. similarity of their (left, right) neighbor contexts: multiset Jaccard,
2. occurrence frequency,
3. depth of the deepest occurrence (deeper first),
4. length (shorter first),
5. the label sequences themselves.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from .bubbling import Bubbler, MergeCandidate, is_absorbed
from .tree import ParseForest, plausible_group

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 500
DEFAULT_MAX_LEN = 6
START_MARK = "^"
END_MARK = "$"


@dataclass(frozen=True)
class Ranked:
    candidate: MergeCandidate
    similarity: float
    frequency: int
    depth: int
    length: int

    def key(self):
        c = self.candidate
        partner = c.partner if c.is_two else (c.partner,)
        return (-self.similarity, -self.frequency, -self.depth, self.length, c.bubble, partner)


def jaccard(a: Counter, b: Counter) -> float:
    keys = a.keys() | b.keys()
    top = sum(min(a[k], b[k]) for k in keys)
    bottom = sum(max(a[k], b[k]) for k in keys)
    return top / bottom if bottom else 0.0


class ContextTable:
    """Neighbor contexts for every class and every sibling n-gram in a forest."""

    def __init__(self, forest: ParseForest, max_len: int = DEFAULT_MAX_LEN) -> None:
        self.class_ctx: dict[str, Counter] = {}
        self.gram_ctx: dict[tuple, Counter] = {}
        self.gram_freq: Counter = Counter()
        self.gram_depth: dict[tuple, int] = {}
        for tree in forest.trees:
            self.class_ctx.setdefault(tree.label, Counter())[(START_MARK, END_MARK)] += 1
            stack = [(tree, START_MARK, END_MARK, 0)]
            while stack:
                node, left, right, depth = stack.pop()
                kids = node.children
                if not kids:
                    continue
                lefts = [kids[i - 1].label if i > 0 else left for i in range(len(kids))]
                rights = [kids[i + 1].label if i + 1 < len(kids) else right
                          for i in range(len(kids))]
                for i, child in enumerate(kids):
                    if not is_absorbed(child, node, tree):
                        self.class_ctx.setdefault(child.label, Counter())[(lefts[i], rights[i])] += 1
                    stack.append((child, lefts[i], rights[i], depth + 1))
                for n in range(1, min(max_len, len(kids) - 1) + 1):
                    for i in range(len(kids) - n + 1):
                        gram = tuple(c.label for c in kids[i:i + n])
                        if not plausible_group(gram):
                            continue
                        self.gram_ctx.setdefault(gram, Counter())[(lefts[i], rights[i + n - 1])] += 1
                        self.gram_freq[gram] += 1
                        self.gram_depth[gram] = max(self.gram_depth.get(gram, 0), depth + 1)


def rank_bubbles(forest: ParseForest, max_len: int = DEFAULT_MAX_LEN, limit: int | None = None,
                 two_bubbles: bool = True) -> list[MergeCandidate]:
    return [r.candidate for r in rank_scored(forest, max_len, limit, two_bubbles)]


def rank_scored(forest: ParseForest, max_len: int = DEFAULT_MAX_LEN, limit: int | None = None,
                two_bubbles: bool = True) -> list[Ranked]:
    table = ContextTable(forest, max_len)
    classes_by_ctx: dict[tuple, set[str]] = {}
    for sym, ctx in table.class_ctx.items():
        if sym.isspace():
            continue
        for c in ctx:
            classes_by_ctx.setdefault(c, set()).add(sym)
    grams_by_ctx: dict[tuple, set[tuple]] = {}
    if two_bubbles:
        for gram, ctx in table.gram_ctx.items():
            if len(gram) >= 2:
                for c in ctx:
                    grams_by_ctx.setdefault(c, set()).add(gram)

    out: list[Ranked] = []
    for gram, ctx in table.gram_ctx.items():
        freq = table.gram_freq[gram]
        depth = table.gram_depth[gram]
        partners = set().union(*(classes_by_ctx.get(c, ()) for c in ctx))
        for sym in partners:
            if len(gram) == 1 and (gram[0] == sym or sym < gram[0] and (sym,) in table.gram_ctx):
                continue  # class pairs are symmetric; keep one ordering
            sim = jaccard(ctx, table.class_ctx[sym])
            if sim > 0:
                out.append(Ranked(MergeCandidate(gram, sym), sim, freq, depth, len(gram)))
        if two_bubbles and len(gram) >= 2:
            others = set().union(*(grams_by_ctx.get(c, ()) for c in ctx))
            for other in others:
                if other <= gram:
                    continue
                sim = jaccard(ctx, table.gram_ctx[other])
                if sim > 0:
                    out.append(Ranked(
                        MergeCandidate(gram, other), sim,
                        min(freq, table.gram_freq[other]),
                        max(depth, table.gram_depth[other]), len(gram) + len(other)))
    out.sort(key=Ranked.key)
    return out[:limit] if limit is not None else out


def refine_with_heuristics(forest: ParseForest, oracle, budget: int = DEFAULT_BUDGET,
                           bubbler: Bubbler | None = None,
                           max_len: int = DEFAULT_MAX_LEN) -> ParseForest:
    """Walk ranked candidates, re-ranking after each accept.

    Stops after ``budget`` consecutive rejects or when the list is used up.
    A rejected candidate is not retried later in the same call.
    """
    if budget <= 0:
        return forest
    bub = bubbler or Bubbler(forest, oracle)
    rejected: set[MergeCandidate] = set()
    misses = 0
    while misses < budget:
        ranked = [c for c in rank_bubbles(forest, max_len, limit=budget + len(rejected))
                  if c not in rejected]
        if not ranked:
            break
        progressed = False
        for cand in ranked:
            if bub.try_merge(cand) is not None:
                log.info("heuristic merge %s", cand.describe())
                misses = 0
                progressed = True
                break
            rejected.add(cand)
            misses += 1
            if misses >= budget:
                break
        if not progressed:
            break
    return forest
