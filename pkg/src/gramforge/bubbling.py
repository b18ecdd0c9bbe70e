"""Oracle-validated bubbling: propose a grouping, swap-test it, merge or drop.

A *side* of a merge is either a class (every node carrying one symbol) or a
bubble (every non-overlapping occurrence of a sibling label sequence).  The
check replaces one occurrence of each side with a yield of the other side and
asks the oracle about the resulting programs.  Nothing is mutated until the
check passes, so a rejected candidate leaves the forest untouched.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO, Union

from .tree import (OPENERS, ParseForest, ParseNode, is_fresh, iter_with_parent,
                   tree_to_brackets, yield_string)

log = logging.getLogger(__name__)

DEFAULT_CAP = 100
CONTEXTS_PER_SIDE = 50

Seq = tuple[str, ...]
Partner = Union[str, Seq]


@dataclass(frozen=True)
class MergeCandidate:
    """``bubble`` merged into class ``partner`` or, for 2-bubbles, with a second bubble."""

    bubble: Seq
    partner: Partner

    @property
    def is_two(self) -> bool:
        return isinstance(self.partner, tuple)

    def describe(self) -> str:
        b = " ".join(self.bubble)
        p = " ".join(self.partner) if self.is_two else self.partner
        return f"[{b}] ~ {'[' + p + ']' if self.is_two else p}"


@dataclass
class Occurrence:
    tree: int
    parent: ParseNode | None
    start: int
    end: int  # inclusive child index
    lo: int
    hi: int  # character span [lo, hi)


@dataclass
class Side:
    contexts: list[tuple[int, int, int]] = field(default_factory=list)  # (tree, lo, hi)
    fillers: list[str] = field(default_factory=list)


def is_absorbed(node: ParseNode, parent: ParseNode | None, root: ParseNode) -> bool:
    """A leaf that is the only child of a non-root node belongs to its parent's class."""
    return (node.is_leaf and parent is not None and parent is not root
            and len(parent.children) == 1)


class ForestIndex:
    """Character spans and label lookups for one snapshot of a forest."""

    def __init__(self, forest: ParseForest) -> None:
        self.texts: list[str] = []
        self.spans: dict[int, tuple[int, int]] = {}
        self.by_label: dict[str, list[tuple[int, ParseNode]]] = {}
        self.sibling_lists: list[tuple[int, ParseNode]] = []
        # first label -> sibling-list positions, in sibling_lists order
        self.starts: dict[str, list[tuple[int, int]]] = {}
        self.sides: dict = {}
        for ti, tree in enumerate(forest.trees):
            pos = 0
            # post-order pass to compute spans
            stack = [(tree, False)]
            starts: dict[int, int] = {}
            while stack:
                node, done = stack.pop()
                if done:
                    self.spans[node.id] = (starts[node.id], pos)
                    continue
                starts[node.id] = pos
                if node.is_leaf:
                    pos += len(node.label)
                    self.spans[node.id] = (starts[node.id], pos)
                    continue
                stack.append((node, True))
                for c in reversed(node.children):
                    stack.append((c, False))
            self.texts.append(yield_string(tree))
            for node, parent, _, _ in iter_with_parent(tree):
                if not is_absorbed(node, parent, tree):
                    self.by_label.setdefault(node.label, []).append((ti, node))
                if node.children:
                    for i, c in enumerate(node.children):
                        self.starts.setdefault(c.label, []).append((len(self.sibling_lists), i))
                    self.sibling_lists.append((ti, node))

    def node_text(self, ti: int, node: ParseNode) -> str:
        lo, hi = self.spans[node.id]
        return self.texts[ti][lo:hi]


def find_occurrences(forest: ParseForest, seq: Sequence[str],
                     index: ForestIndex | None = None) -> list[Occurrence]:
    """Non-overlapping, leftmost occurrences of ``seq`` among siblings.

    A match covering every child of its parent is skipped: it is already
    a node of its own (or the whole program), so wrapping it would only add
    a unary chain.
    """
    index = index or ForestIndex(forest)
    seq = tuple(seq)
    k = len(seq)
    out = []
    last_list, free_from = -1, 0
    for li, i in index.starts.get(seq[0], ()):
        ti, parent = index.sibling_lists[li]
        kids = parent.children
        if k >= len(kids) or i + k > len(kids):
            continue
        if li != last_list:
            last_list, free_from = li, 0
        if i < free_from:
            continue
        if all(kids[i + j].label == seq[j] for j in range(1, k)):
            lo = index.spans[kids[i].id][0]
            hi = index.spans[kids[i + k - 1].id][1]
            out.append(Occurrence(ti, parent, i, i + k - 1, lo, hi))
            free_from = i + k
    return out


def class_side(index: ForestIndex, symbol: str) -> Side:
    if symbol in index.sides:
        return index.sides[symbol]
    side = index.sides[symbol] = Side()
    seen = set()
    for ti, node in index.by_label.get(symbol, ()):
        lo, hi = index.spans[node.id]
        side.contexts.append((ti, lo, hi))
        text = index.texts[ti][lo:hi]
        if text not in seen:
            seen.add(text)
            side.fillers.append(text)
    return side


def bubble_side(forest: ParseForest, index: ForestIndex, seq: Sequence[str]) -> Side:
    if len(seq) == 1:
        return class_side(index, seq[0])
    seq = tuple(seq)
    if seq in index.sides:
        return index.sides[seq]
    side = index.sides[seq] = Side()
    seen = set()
    for occ in find_occurrences(forest, seq, index):
        side.contexts.append((occ.tree, occ.lo, occ.hi))
        text = index.texts[occ.tree][occ.lo:occ.hi]
        if text not in seen:
            seen.add(text)
            side.fillers.append(text)
    return side


def node_side(index: ForestIndex, node: ParseNode) -> Side:
    for ti, n in index.by_label.get(node.label, ()):
        if n is node:
            lo, hi = index.spans[node.id]
            return Side([(ti, lo, hi)], [index.texts[ti][lo:hi]])
    raise ValueError("node is not in the forest")


def swap_strings(index: ForestIndex, a: Side, b: Side, rng: random.Random,
                 cap: int = DEFAULT_CAP) -> list[str]:
    """Programs obtained by putting a yield of one side into a context of the other."""
    if cap <= 0:
        return []
    per_side = min(CONTEXTS_PER_SIDE, max(1, cap // 2))
    out: list[str] = []
    seen: set[str] = set()
    for ctx_side, fill_side in ((a, b), (b, a)):
        if not fill_side.fillers:
            continue
        contexts = ctx_side.contexts
        if len(contexts) > per_side:
            contexts = rng.sample(contexts, per_side)
        for ti, lo, hi in contexts:
            text = index.texts[ti]
            own = text[lo:hi]
            choices = [f for f in fill_side.fillers if f != own] or fill_side.fillers
            s = text[:lo] + rng.choice(choices) + text[hi:]
            if s not in seen:
                seen.add(s)
                out.append(s)
    return out[:cap]


def _as_side(forest, index, x) -> Side:
    if isinstance(x, ParseNode):
        return node_side(index, x)
    if isinstance(x, str):
        return class_side(index, x)
    return bubble_side(forest, index, tuple(x))


def sample_swapped_strings(forest: ParseForest, node_a, node_b, cap: int = DEFAULT_CAP,
                           seed: int = 101) -> list[str]:
    """Swap samples for two nodes, classes (labels) or label sequences."""
    index = ForestIndex(forest)
    return swap_strings(index, _as_side(forest, index, node_a),
                        _as_side(forest, index, node_b), random.Random(seed), cap)


# -- mutation --------------------------------------------------------------

def relabel_class(forest: ParseForest, symbol: str, new_label: str) -> None:
    """Give every ``symbol`` node the label ``new_label``; leaves get wrapped."""
    if symbol == new_label and symbol in forest.labels():
        return
    for tree in forest.trees:
        for node, parent, idx, _ in list(iter_with_parent(tree)):
            if node.label != symbol:
                continue
            if node.is_leaf:
                if parent is None or is_absorbed(node, parent, tree):
                    continue
                parent.children[idx] = forest.node(new_label, [node])
            else:
                node.label = new_label


def bubble_up(forest: ParseForest, seq: Sequence[str], label: str) -> int:
    """Wrap every non-overlapping occurrence of ``seq`` in a ``label`` node."""
    seq = tuple(seq)
    if len(seq) == 1:
        relabel_class(forest, seq[0], label)
        return 1
    occs = find_occurrences(forest, seq)
    # process right-to-left inside each parent so indices stay valid
    for occ in sorted(occs, key=lambda o: (o.parent.id, -o.start)):
        kids = occ.parent.children
        if occ.start == 0 and occ.end == len(kids) - 1 and occ.parent.label == label:
            continue
        node = forest.node(label, kids[occ.start:occ.end + 1])
        occ.parent.children = kids[:occ.start] + [node] + kids[occ.end + 1:]
    return len(occs)


def apply_rule_everywhere(forest: ParseForest, seq: Sequence[str], target: str,
                          oracle=None) -> int:
    """Fold ``seq`` into ``target`` nodes until no sibling span matches.

    Matches are folded leftmost-first, innermost parents before their
    ancestors.  A span that is already the whole child list of a ``target``
    node is left alone.  Returns the number of folds.
    """
    seq = tuple(seq)
    if len(seq) < 2:
        return 0
    folds = 0
    changed = True
    while changed:
        changed = False
        for tree in forest.trees:
            parents = [n for n, _, _, d in sorted(
                ((n, p, i, d) for n, p, i, d in iter_with_parent(tree) if n.children),
                key=lambda x: -x[3])]
            for parent in parents:
                kids = parent.children
                k = len(seq)
                for i in range(len(kids) - k + 1):
                    if tuple(c.label for c in kids[i:i + k]) != seq:
                        continue
                    whole = k == len(kids)
                    if whole and (parent.label == target or parent is tree):
                        continue
                    parent.children = kids[:i] + [forest.node(target, kids[i:i + k])] + kids[i + k:]
                    folds += 1
                    changed = True
                    break
                if changed:
                    break
            if changed:
                break
    return folds


def forest_signature(forest: ParseForest) -> tuple[str, ...]:
    return tuple(tree_to_brackets(t) for t in forest.trees)


# -- the check ---------------------------------------------------------------

Labeler = Callable[[str, str, set], str]


class Bubbler:
    """Shared state for candidate checks against one forest."""

    def __init__(self, forest: ParseForest, oracle, *, seed: int = 101, cap: int = DEFAULT_CAP,
                 labeler: Labeler | None = None, trace: TextIO | None = None) -> None:
        self.forest = forest
        self.oracle = oracle
        self.seed = seed
        self.cap = cap
        self.labeler = labeler
        self.trace = trace
        self.accepted = 0
        self.checked = 0
        self._index: ForestIndex | None = None
        self.version = 0

    def invalidate(self) -> None:
        self._index = None
        self.version += 1

    @property
    def index(self) -> ForestIndex:
        if self._index is None:
            self._index = ForestIndex(self.forest)
        return self._index

    def rng_for(self, cand: MergeCandidate) -> random.Random:
        return random.Random(f"{self.seed}:{cand.describe()}")

    def sides(self, cand: MergeCandidate) -> tuple[Side, Side]:
        index = self.index
        a = bubble_side(self.forest, index, cand.bubble)
        if cand.is_two:
            b = bubble_side(self.forest, index, cand.partner)
        else:
            b = class_side(index, cand.partner)
        return a, b

    def samples(self, cand: MergeCandidate) -> list[str]:
        a, b = self.sides(cand)
        return swap_strings(self.index, a, b, self.rng_for(cand), self.cap)

    def well_formed(self, cand: MergeCandidate) -> bool:
        if not cand.bubble:
            return False
        if cand.is_two:
            return bool(cand.partner) and cand.partner != cand.bubble
        if len(cand.bubble) == 1 and cand.bubble[0] == cand.partner:
            return False
        return True

    def check(self, cand: MergeCandidate) -> bool:
        """Oracle verdict for ``cand``; does not touch the forest."""
        if not self.well_formed(cand):
            return False
        a, b = self.sides(cand)
        if not a.contexts or not b.contexts:
            return False
        strings = swap_strings(self.index, a, b, self.rng_for(cand), self.cap)
        self.checked += 1
        ok = self.oracle.accepts_all(strings)
        if self.trace is not None:
            self.trace.write(f"{cand.describe()}\t{'accept' if ok else 'reject'}\t{len(strings)}\n")
        return ok

    def try_merge(self, cand: MergeCandidate) -> str | None:
        """Check ``cand`` and apply it on success; returns the surviving label."""
        if not self.check(cand):
            return None
        label = self.choose_label(cand)
        before = forest_signature(self.forest)
        self.apply(cand, label)
        if forest_signature(self.forest) == before:
            return None  # both sides already shared one label: nothing learned
        self.accepted += 1
        return label

    def apply(self, cand: MergeCandidate, label: str) -> None:
        forest = self.forest
        bubble_up(forest, cand.bubble, label)
        if cand.is_two:
            bubble_up(forest, cand.partner, label)
        elif cand.partner != label:
            relabel_class(forest, cand.partner, label)
        self.invalidate()

    def example_yield(self, seq: Partner) -> str:
        side = class_side(self.index, seq) if isinstance(seq, str) else \
            bubble_side(self.forest, self.index, seq)
        return side.fillers[0] if side.fillers else ""

    def choose_label(self, cand: MergeCandidate) -> str:
        forest = self.forest
        labels = forest.labels()
        start = forest.start_label

        def own_label(x: Partner) -> str | None:
            if isinstance(x, str):
                return x
            return x[0] if len(x) == 1 else None

        a = own_label(cand.bubble)
        b = own_label(cand.partner)
        names = [x for x in (a, b) if x is not None]
        if start in names:
            return start
        descriptive = sorted(x for x in names if x in labels and not is_fresh(x))
        if descriptive:
            return descriptive[0]
        if self.labeler is not None:
            taken = forest.symbols() - set(names)
            return self.labeler(self.example_yield(cand.bubble),
                                self.example_yield(cand.partner), taken)
        fresh = [x for x in (b, a) if x is not None and x in labels]
        return fresh[0] if fresh else forest.fresh_label()


def check_bubble(forest: ParseForest, cand: MergeCandidate, oracle, **kwargs) -> str | None:
    """Accept (returns the merged label, forest updated) or reject (returns None)."""
    return Bubbler(forest, oracle, **kwargs).try_merge(cand)


def is_bracket_node(node: ParseNode) -> bool:
    kids = node.children
    return (len(kids) >= 2 and kids[0].is_leaf and kids[-1].is_leaf
            and OPENERS.get(kids[0].label) == kids[-1].label)


def bracket_nodes(forest: ParseForest) -> list[ParseNode]:
    return sorted((n for n in forest.nodes() if is_bracket_node(n)), key=lambda n: n.id)


def symbol_order(forest: ParseForest) -> list[str]:
    """Every symbol once, in order of first appearance by node id."""
    first: dict[str, int] = {}
    for n in forest.nodes():
        if n.label not in first or n.id < first[n.label]:
            first[n.label] = n.id
    return sorted(first, key=lambda s: (first[s], s))


def merge_all_valid(forest: ParseForest, oracle, bubbler: Bubbler | None = None) -> ParseForest:
    """Try to merge each bracket node's class with every other class."""
    bub = bubbler or Bubbler(forest, oracle)
    for node in bracket_nodes(forest):
        if not is_fresh(node.label):
            continue
        for sym in symbol_order(forest):
            if sym == node.label or sym.isspace():
                continue
            bub.try_merge(MergeCandidate((node.label,), sym))
    return forest


def bracket_bubble_candidates(forest: ParseForest) -> list[Seq]:
    """Distinct label sequences found strictly inside matched bracket nodes."""
    seqs = {tuple(c.label for c in n.children[1:-1]) for n in bracket_nodes(forest)}
    seqs.discard(())
    return sorted(seqs, key=lambda s: (len(s), s))


def enclosing_labels(forest: ParseForest, seq: Seq) -> list[str]:
    labels = []
    for n in bracket_nodes(forest):
        if tuple(c.label for c in n.children[1:-1]) == seq and n.label not in labels:
            labels.append(n.label)
    return labels
