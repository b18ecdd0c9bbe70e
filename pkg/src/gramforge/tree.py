"""Ordered labeled parse trees over seed programs.

Leaves carry token text as their label; internal nodes carry a non-terminal
name.  A node's *symbol* is simply its label, and the inference code treats
all nodes sharing a symbol as one class.  Fresh non-terminal names are
``t<k>`` with a forest-wide counter.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterator, Sequence

from .tokenizer import TokenSeq

OPENERS = {"(": ")", "[": "]", "{": "}"}
CLOSERS = {v: k for k, v in OPENERS.items()}
FRESH = re.compile(r"t\d+$")


class EmptySeed(ValueError):
    pass


class ParseNode:
    __slots__ = ("label", "children", "id")

    def __init__(self, label: str, children: list[ParseNode] | None, node_id: int) -> None:
        self.label = label
        self.children = children if children is not None else []
        self.id = node_id

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self) -> str:
        if self.is_leaf:
            return f"Leaf({self.label!r})"
        return f"Node({self.label!r}, {self.children!r})"


def yield_string(node: ParseNode) -> str:
    out: list[str] = []
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            out.append(n.label)
        else:
            stack.extend(reversed(n.children))
    return "".join(out)


def iter_nodes(node: ParseNode) -> Iterator[ParseNode]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children))


def iter_with_parent(node: ParseNode, depth: int = 0):
    """Yield ``(node, parent, index, depth)`` in pre-order; the root has no parent."""
    stack = [(node, None, -1, depth)]
    while stack:
        n, parent, idx, d = stack.pop()
        yield n, parent, idx, d
        for i in range(len(n.children) - 1, -1, -1):
            stack.append((n.children[i], n, i, d + 1))


def leaf_count(node: ParseNode) -> int:
    return sum(1 for n in iter_nodes(node) if n.is_leaf)


def is_fresh(label: str) -> bool:
    return bool(FRESH.match(label))


@dataclass(frozen=True)
class Bubble:
    tree_id: int
    parent_node_id: int
    start_index: int
    end_index: int
    proposed_label: str | None = None


class ParseForest:
    def __init__(self, trees: list[ParseNode] | None = None, start_label: str = "stmt") -> None:
        self.trees: list[ParseNode] = trees or []
        self.start_label = start_label
        self.next_id = 1
        self.next_fresh = 1
        self.reserved: set[str] = set()

    def node(self, label: str, children: list[ParseNode] | None = None) -> ParseNode:
        self.next_id += 1
        return ParseNode(label, children, self.next_id - 1)

    def fresh_label(self) -> str:
        taken = self.reserved | self.labels()
        while True:
            label = f"t{self.next_fresh}"
            self.next_fresh += 1
            if label not in taken:
                return label

    def labels(self) -> set[str]:
        """Labels of internal nodes."""
        return {n.label for t in self.trees for n in iter_nodes(t) if not n.is_leaf}

    def symbols(self) -> set[str]:
        return {n.label for t in self.trees for n in iter_nodes(t)}

    def nodes(self) -> Iterator[ParseNode]:
        for t in self.trees:
            yield from iter_nodes(t)

    def copy(self) -> ParseForest:
        clone = ParseForest([_copy_tree(t) for t in self.trees], self.start_label)
        clone.next_id = self.next_id
        clone.next_fresh = self.next_fresh
        clone.reserved = set(self.reserved)
        return clone

    def dump(self) -> str:
        return "\n".join(dump_tree(t) for t in self.trees)

    def write_dump(self, directory: str | os.PathLike, tag: str) -> None:
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, f"{tag}.txt"), "w", encoding="utf-8") as fh:
            fh.write(self.dump() + "\n")


def _copy_tree(node: ParseNode) -> ParseNode:
    return ParseNode(node.label, [_copy_tree(c) for c in node.children], node.id)


def display_label(label: str) -> str:
    """Printable single-word form of a label; whitespace is escaped."""
    return (label.replace("\\", "\\\\").replace(" ", "\\s")
            .replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r"))


_UNDISPLAY = {"\\": "\\", "s": " ", "n": "\n", "t": "\t", "r": "\r"}


def parse_display_label(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text) and text[i + 1] in _UNDISPLAY:
            out.append(_UNDISPLAY[text[i + 1]])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def dump_tree(node: ParseNode) -> str:
    lines = []
    for n, _, _, depth in iter_with_parent(node):
        mark = "" if n.is_leaf else ":"
        lines.append("  " * depth + display_label(n.label) + mark)
    return "\n".join(lines)


def tree_to_brackets(node: ParseNode) -> str:
    """Compact one-line rendering, e.g. ``(stmt if (expr a) then ...)``."""
    if node.is_leaf:
        return display_label(node.label)
    inner = " ".join(tree_to_brackets(c) for c in node.children)
    return f"({display_label(node.label)} {inner})"


def tree_to_nested(node: ParseNode):
    """JSON-friendly form: a leaf is its text, an internal node is ``[label, [children]]``."""
    if node.is_leaf:
        return node.label
    return [node.label, [tree_to_nested(c) for c in node.children]]


def create_naive_trees(seqs: Sequence[TokenSeq], start_label: str = "stmt") -> ParseForest:
    forest = ParseForest([], start_label)
    for seq in seqs:
        if len(seq) == 0:
            raise EmptySeed(f"seed {seq.source_id!r} has no tokens")
        forest.reserved.update(t.text for t in seq)
        leaves = [forest.node(t.text) for t in seq]
        forest.trees.append(forest.node(start_label, leaves))
    return forest


def match_brackets(labels: Sequence[str]) -> list[tuple[int, int]]:
    """Matched (open, close) index pairs; mismatched closers are ignored."""
    stack: list[int] = []
    pairs = []
    for i, lab in enumerate(labels):
        if lab in OPENERS:
            stack.append(i)
        elif lab in CLOSERS and stack and labels[stack[-1]] == CLOSERS[lab]:
            pairs.append((stack.pop(), i))
    return sorted(pairs)


def prestructure_brackets(forest: ParseForest, oracle=None) -> ParseForest:
    """Move every matched bracket span under a fresh node, innermost first.

    Yields are unchanged, so no oracle query is needed; the parameter is
    kept for interface symmetry with the other stages.
    """
    for tree in forest.trees:
        _nest_children(forest, tree)
    return forest


def _nest_children(forest: ParseForest, parent: ParseNode) -> None:
    kids = parent.children
    pairs = match_brackets([k.label if k.is_leaf else "" for k in kids])
    if not pairs:
        return
    # fold innermost pairs first: narrower spans before the spans enclosing them
    spans = sorted(pairs, key=lambda p: (p[1] - p[0], p[0]))
    groups: list[tuple[int, int, ParseNode]] = []
    for lo, hi in spans:
        inner = [g for g in groups if lo < g[0] and g[1] < hi]
        groups = [g for g in groups if g not in inner]
        members: list[ParseNode] = []
        i = lo
        for g in sorted(inner):
            members.extend(kids[i:g[0]])
            members.append(g[2])
            i = g[1] + 1
        members.extend(kids[i:hi + 1])
        groups.append((lo, hi, forest.node(forest.fresh_label(), members)))
    new_kids: list[ParseNode] = []
    i = 0
    for lo, hi, node in sorted(groups, key=lambda g: g[0]):
        new_kids.extend(kids[i:lo])
        new_kids.append(node)
        i = hi + 1
    new_kids.extend(kids[i:])
    parent.children = new_kids


def plausible_group(group: Sequence[str]) -> bool:
    """No whitespace at either edge and brackets balanced inside the group."""
    if group[0].isspace() or group[-1].isspace():
        return False
    depth: list[str] = []
    for x in group:
        if x in OPENERS:
            depth.append(OPENERS[x])
        elif x in CLOSERS:
            if not depth or depth.pop() != x:
                return False
    return not depth


def tree_levels(tree: ParseNode) -> list[str]:
    """Labels at each depth, left to right, as ``[a b c]`` strings."""
    levels: list[list[str]] = []
    frontier = [tree]
    while frontier:
        levels.append([display_label(n.label) for n in frontier])
        frontier = [c for n in frontier for c in n.children]
    return ["[" + " ".join(level) + "]" for level in levels]


def parse_level(level: str) -> list[str]:
    body = level.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    return [parse_display_label(x) for x in body.split(" ") if x]
