"""End-to-end inference: seeds and an oracle in, a grammar out."""

from __future__ import annotations

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .bubbling import (Bubbler, MergeCandidate, apply_rule_everywhere, bracket_bubble_candidates,
                       enclosing_labels, merge_all_valid)
from .grammar import START, Grammar
from .hdd import hdd_decompose
from .heuristics import DEFAULT_BUDGET, ContextTable, jaccard, refine_with_heuristics
from .induction import expand_tokens, induce_grammar
from .llm import LlmGuide, Provider
from .tokenizer import OracleFailure, TokenSeq, pretokenize, remove_redundant_whitespace
from .tree import (ParseForest, create_naive_trees, display_label, prestructure_brackets,
                   tree_levels, tree_to_brackets, tree_to_nested)

log = logging.getLogger(__name__)

ROOT_LABEL = "stmt"
IDLE_LIMIT = 5
MAX_BUBBLE_LEN = 8


class InferenceError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class InferenceConfig:
    rng_seed: int = 101
    ai_label: bool = True
    hdd: bool = True
    bracket_bubbles: bool = True
    llm_bubbles: bool = True
    treevada: bool = True
    lexinfer: bool = True
    split_digit_runs: bool = False
    heuristic_budget: int = DEFAULT_BUDGET
    idle_limit: int = IDLE_LIMIT
    allow_print: bool = False
    trace: TextIO | None = None
    dump_trees: str | None = None


@dataclass
class InferenceResult:
    grammar: Grammar
    forest: ParseForest
    all_trees: list
    seqs: list[TokenSeq]
    stage_seconds: dict[str, float] = field(default_factory=dict)
    merges: int = 0
    checks: int = 0
    llm_failures: int = 0


class _Run:
    def __init__(self, seeds: Sequence[str], oracle, provider: Provider | None,
                 config: InferenceConfig) -> None:
        self.seeds = list(seeds)
        self.oracle = oracle
        self.config = config
        self.guide = LlmGuide(provider, ROOT_LABEL) if provider is not None else None
        self.timings: dict[str, float] = {}
        self.dumps = 0
        self.forest: ParseForest | None = None
        self.bubbler: Bubbler | None = None
        self._table: tuple[int, ContextTable] | None = None

    # -- plumbing -----------------------------------------------------------

    def stage(self, name: str, fn, *args):
        t0 = time.perf_counter()
        try:
            result = fn(*args)
        except InferenceError:
            raise
        except Exception as exc:  # noqa: BLE001 - re-raised with the stage name attached
            raise InferenceError(name, exc) from exc
        self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0
        log.info("stage %s done in %.2fs", name, time.perf_counter() - t0)
        forest = result if isinstance(result, ParseForest) else self.forest
        if self.config.dump_trees and forest is not None:
            self.dumps += 1
            forest.write_dump(self.config.dump_trees, f"{self.dumps:02d}-{name}")
        return result

    def labeler(self, yield_a: str, yield_b: str, taken: set) -> str:
        return self.guide.suggest_label(yield_a, yield_b, taken | {START},
                                        fallback=self.forest.fresh_label)

    # -- stages ---------------------------------------------------------------

    def tokenize(self) -> list[TokenSeq]:
        seqs = []
        for i, text in enumerate(self.seeds):
            seq = pretokenize(text, f"seed{i}", self.config.split_digit_runs)
            if not self.oracle.accepts(text):
                raise OracleFailure(f"seed {i} is rejected by the oracle: {text[:60]!r}")
            seqs.append(remove_redundant_whitespace(seq, self.oracle, self.config.split_digit_runs))
        return seqs

    def context_table(self) -> ContextTable:
        if self._table is None or self._table[0] != self.bubbler.version:
            self._table = (self.bubbler.version, ContextTable(self.forest, MAX_BUBBLE_LEN))
        return self._table[1]

    def partner_order(self, seq: tuple) -> list[str]:
        """Classes to try against a bubble, most similar contexts first."""
        table = self.context_table()
        ctx = table.gram_ctx.get(tuple(seq))
        if ctx is None:
            if len(seq) <= MAX_BUBBLE_LEN:
                return []  # not a strict sibling span anywhere
            ctx = Counter()
        scored = []
        for sym, cctx in table.class_ctx.items():
            if sym.isspace() or (len(seq) == 1 and sym == seq[0]):
                continue
            scored.append((-jaccard(ctx, cctx), sym))
        return [s for _, s in sorted(scored)]

    def merge_bubble(self, seq: tuple, first: Sequence[str] = ()) -> str | None:
        tried = set()
        for partner in list(first) + self.partner_order(seq):
            if partner in tried:
                continue
            tried.add(partner)
            label = self.bubbler.try_merge(MergeCandidate(tuple(seq), partner))
            if label is not None:
                log.info("merged [%s] with %s as %s", " ".join(map(display_label, seq)), partner, label)
                return label
        return None

    def bracket_pass(self) -> bool:
        changed = False
        for seq in bracket_bubble_candidates(self.forest):
            label = self.merge_bubble(seq, enclosing_labels(self.forest, seq))
            if label is not None:
                apply_rule_everywhere(self.forest, seq, label)
                self.bubbler.invalidate()
                changed = True
        return changed

    def llm_payload(self):
        trees = self.forest.trees
        levels = [tree_levels(t) for t in trees]
        siblings = [[c.label for c in n.children] for n in self.forest.nodes() if n.children]
        return dict(levels=levels, siblings=siblings, trees=[tree_to_brackets(t) for t in trees],
                    nested=[tree_to_nested(t) for t in trees])

    def one_bubble_pass(self) -> bool:
        changed_any = False
        while True:
            proposal = self.guide.propose_1_bubbles(**self.llm_payload())
            changed = False
            for seq in proposal.labels:
                if self.merge_bubble(seq) is not None:
                    changed = True
            if not changed:
                return changed_any
            changed_any = True

    def two_bubble_pass(self) -> bool:
        changed_any = False
        while True:
            proposal = self.guide.propose_2_bubbles(**self.llm_payload())
            changed = False
            for a, b in proposal.labels:
                if self.bubbler.try_merge(MergeCandidate(a, b)) is not None:
                    changed = True
            if not changed:
                return changed_any
            changed_any = True

    def structure_loop(self) -> None:
        cfg = self.config
        use_llm = cfg.llm_bubbles and self.guide is not None
        if not (cfg.bracket_bubbles or use_llm):
            return
        idle = 0
        while idle < cfg.idle_limit:
            changed = False
            if cfg.bracket_bubbles:
                changed |= self.bracket_pass()
            if use_llm:
                changed |= self.one_bubble_pass()
                changed |= self.two_bubble_pass()
            idle = 0 if changed else idle + 1

    def run(self) -> InferenceResult:
        cfg = self.config
        seqs = self.stage("tokenize", self.tokenize)
        self.forest = forest = self.stage("naive-trees", create_naive_trees, seqs, ROOT_LABEL)
        forest.reserved.add(START)
        labeler = self.labeler if cfg.ai_label and self.guide is not None else None
        self.bubbler = Bubbler(forest, self.oracle, seed=cfg.rng_seed, labeler=labeler,
                               trace=cfg.trace)
        if cfg.bracket_bubbles:
            self.stage("brackets", prestructure_brackets, forest, self.oracle)
            self.stage("merge-all-valid", merge_all_valid, forest, self.oracle, self.bubbler)
        self.stage("bubbles", self.structure_loop)
        if cfg.treevada:
            self.stage("heuristics", refine_with_heuristics, forest, self.oracle,
                       cfg.heuristic_budget, self.bubbler)
        all_trees = list(forest.trees)
        if cfg.hdd:
            all_trees = self.stage("hdd", hdd_decompose, forest, self.oracle, 50, cfg.rng_seed)
        grammar = self.stage("induce", induce_grammar, all_trees, START)
        if cfg.lexinfer:
            grammar = self.stage("lexical", lambda: expand_tokens(
                all_trees, grammar, self.oracle, seed=cfg.rng_seed, allow_print=cfg.allow_print))
        return InferenceResult(grammar, forest, all_trees, seqs, self.timings,
                               self.bubbler.accepted, self.bubbler.checked,
                               self.guide.failures if self.guide is not None else 0)


def infer_grammar(seeds: Sequence[str], oracle, provider: Provider | None = None,
                  config: InferenceConfig | None = None) -> InferenceResult:
    if not seeds:
        raise InferenceError("tokenize", ValueError("no seed programs"))
    return _Run(seeds, oracle, provider, config or InferenceConfig()).run()
