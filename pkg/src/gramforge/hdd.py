"""Hierarchical delta debugging over recovered parse trees.

Every node's child list is minimized with ddmin, level by level from the
root.  A configuration is kept when all strings sampled from the pruned tree
are accepted; every such intermediate tree is returned.
"""

from __future__ import annotations

import logging
import random
from typing import Callable, Sequence

from .tree import ParseForest, ParseNode, _copy_tree, leaf_count, tree_to_brackets, yield_string

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 50


class SubtreePool:
    """Yields and occurrence contexts per label, drawn from the inferred forest."""

    def __init__(self, trees: Sequence[ParseNode]) -> None:
        found: dict[str, set[str]] = {}
        self.texts: list[str] = []
        self.contexts: dict[str, list[tuple[int, int, int]]] = {}
        for ti, t in enumerate(trees):
            self.texts.append(yield_string(t))
            for node, lo, hi, _ in labeled_spans(t):
                found.setdefault(node.label, set()).add(self.texts[ti][lo:hi])
                self.contexts.setdefault(node.label, []).append((ti, lo, hi))
        self.yields = {k: sorted(v) for k, v in found.items()}
        self.known = {k: set(v) for k, v in found.items()}


def labeled_spans(tree: ParseNode):
    """``(node, start, end, is_root)`` for every internal node, pre-order."""
    out = []
    stack = [(tree, 0, True)]
    while stack:
        node, pos, is_root = stack.pop()
        if node.is_leaf:
            continue
        end = pos + len(yield_string(node))
        out.append((node, pos, end, is_root))
        offset = pos
        kids = []
        for c in node.children:
            kids.append((c, offset, False))
            offset += len(yield_string(c))
        stack.extend(reversed(kids))
    return out


def sample_tree_strings(tree: ParseNode, pool: SubtreePool, n: int,
                        rng: random.Random) -> list[str]:
    """The tree's own yield plus up to ``n - 1`` variants.

    Half of the variants put a node whose yield is new for its label (the
    pruned node and its ancestors) into other contexts of that label; the
    rest re-expand one labeled subtree of the tree with another yield of
    the same label.
    """
    text = yield_string(tree)
    out = [text]
    seen = {text}
    spans = labeled_spans(tree)
    novel = [(node.label, text[lo:hi]) for node, lo, hi, _ in spans
             if text[lo:hi] not in pool.known.get(node.label, ()) and pool.contexts.get(node.label)]
    inner = [(lo, hi, node.label) for node, lo, hi, is_root in spans
             if not is_root and len(pool.yields.get(node.label, ())) > 1]

    def add(s: str) -> None:
        if s not in seen:
            seen.add(s)
            out.append(s)

    if novel:
        target = 1 + (n - 1) // 2
        for _ in range(4 * n):
            if len(out) >= target:
                break
            label, y = rng.choice(novel)
            ti, lo, hi = rng.choice(pool.contexts[label])
            host = pool.texts[ti]
            add(host[:lo] + y + host[hi:])
    attempts = 0
    while inner and len(out) < n and attempts < 4 * n:
        attempts += 1
        lo, hi, label = rng.choice(inner)
        add(text[:lo] + rng.choice(pool.yields[label]) + text[hi:])
    return out


def passes_sample_criterion(tree: ParseNode, oracle, n: int = DEFAULT_SAMPLES,
                            pool: SubtreePool | None = None, seed: int = 101) -> bool:
    if not yield_string(tree):
        return False
    pool = pool or SubtreePool([tree])
    rng = random.Random(f"{seed}:{tree_to_brackets(tree)}")
    return oracle.accepts_all(sample_tree_strings(tree, pool, n, rng))


def ddmin(items: list, test: Callable[[list], bool]) -> list:
    """Classic ddmin: smallest non-empty subsequence (1-minimal) passing ``test``."""
    current = list(items)
    n = 2
    while len(current) >= 2:
        size = len(current)
        bounds = [(i * size // n, (i + 1) * size // n) for i in range(n)]
        chunks = [current[a:b] for a, b in bounds if b > a]
        reduced = False
        for chunk in chunks:
            if len(chunk) < size and test(chunk):
                current, n, reduced = chunk, 2, True
                break
        if not reduced:
            for a, b in bounds:
                complement = current[:a] + current[b:]
                if complement and len(complement) < size and test(complement):
                    current, n, reduced = complement, max(n - 1, 2), True
                    break
        if not reduced:
            if n >= size:
                break
            n = min(size, 2 * n)
    return current


def hdd_tree(tree: ParseNode, oracle, pool: SubtreePool, n: int = DEFAULT_SAMPLES,
             seed: int = 101) -> list[ParseNode]:
    """Pruned variants of ``tree`` that pass the sampling criterion."""
    work = _copy_tree(tree)
    kept: list[ParseNode] = []
    level = [work]
    while level:
        for node in level:
            if len(node.children) < 2:
                continue
            original = node.children

            def test(subset: list, node=node) -> bool:
                node.children = subset
                ok = passes_sample_criterion(work, oracle, n, pool, seed)
                if ok:
                    kept.append(_copy_tree(work))
                node.children = original
                return ok

            node.children = ddmin(original, test)
        level = [c for node in level for c in node.children if not c.is_leaf]
    return kept


def hdd_decompose(forest: ParseForest, oracle, n: int = DEFAULT_SAMPLES,
                  seed: int = 101) -> list[ParseNode]:
    """Original trees followed by every distinct passing pruned tree."""
    pool = SubtreePool(forest.trees)
    out = list(forest.trees)
    seen = {tree_to_brackets(t) for t in out}
    for tree in forest.trees:
        for variant in hdd_tree(tree, oracle, pool, n, seed):
            key = tree_to_brackets(variant)
            if key not in seen and leaf_count(variant) < leaf_count(tree):
                seen.add(key)
                out.append(variant)
    return out
