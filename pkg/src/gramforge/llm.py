"""LLM guidance: bubble proposals, non-terminal labels, zero-shot grammars.

Providers map a prompt to a reply.  Besides the prompt text every request
carries a ``task`` name and a structured ``payload`` (levels, sibling lists,
yields); network and replay providers ignore the payload, the offline stub
answers from it.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from string import Template
from typing import Callable, Protocol, Sequence

from .grammar import Grammar, NonTerminal, Terminal
from .tree import display_label, parse_display_label, plausible_group

log = logging.getLogger(__name__)

TEMPERATURE = 0.0
SAMPLING_SEED = 101
MAX_BUBBLES = 20
LABEL_MAX = 20
API_KEY_ENV = "GRAMFORGE_LLM_API_KEY"


class ProviderError(RuntimeError):
    pass


class MalformedReply(ValueError):
    pass


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def load_prompt(name: str) -> Template:
    text = resources.files("gramforge.prompts").joinpath(f"{name}.txt").read_text("utf-8")
    body = "\n".join(line for line in text.splitlines() if not line.startswith("# prompt-version"))
    return Template(body)


class Provider(Protocol):
    model_name: str

    def complete(self, prompt: str, task: str, payload: dict) -> str: ...


class HttpProvider:
    """Generic chat-completion endpoint (OpenAI-compatible JSON body)."""

    kind = "http"

    def __init__(self, url: str, model_name: str, api_key: str | None = None,
                 timeout_s: float = 120.0) -> None:
        self.url = url
        self.model_name = model_name
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.timeout_s = timeout_s

    def complete(self, prompt: str, task: str, payload: dict) -> str:
        body = json.dumps({
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": TEMPERATURE,
            "seed": SAMPLING_SEED,
        }).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        req = urllib.request.Request(self.url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                data = json.loads(resp.read().decode("utf-8"))
            return data["choices"][0]["message"]["content"]
        except Exception as exc:  # network, HTTP status, or response shape
            raise ProviderError(f"LLM request failed: {exc}") from exc


class ReplayProvider:
    """Answers only prompts recorded in ``store`` (sha256(prompt) -> reply)."""

    kind = "replay"

    def __init__(self, store: dict[str, str], model_name: str = "replay") -> None:
        self.store = store
        self.model_name = model_name

    @classmethod
    def from_file(cls, path) -> ReplayProvider:
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def complete(self, prompt: str, task: str, payload: dict) -> str:
        try:
            return self.store[prompt_key(prompt)]
        except KeyError:
            raise ProviderError(f"no recorded reply for {task} prompt "
                                f"{prompt_key(prompt)[:12]}") from None


class RecordingProvider:
    """Wraps another provider and remembers every reply for later replay."""

    def __init__(self, inner: Provider) -> None:
        self.inner = inner
        self.model_name = inner.model_name
        self.kind = getattr(inner, "kind", "record")
        self.store: dict[str, str] = {}

    def complete(self, prompt: str, task: str, payload: dict) -> str:
        reply = self.inner.complete(prompt, task, payload)
        self.store[prompt_key(prompt)] = reply
        return reply

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.store, fh, indent=0, sort_keys=True)


def ngram_contexts(siblings: Sequence[Sequence[str]], sizes=(2, 3, 4)):
    """Occurrence counts and (left, right) contexts of strict sibling n-grams."""
    counts: Counter = Counter()
    contexts: dict[tuple, Counter] = {}
    for kids in siblings:
        for n in sizes:
            for i in range(len(kids) - n + 1):
                if n == len(kids):
                    continue
                g = tuple(kids[i:i + n])
                counts[g] += 1
                left = kids[i - 1] if i > 0 else "^"
                right = kids[i + n] if i + n < len(kids) else "$"
                contexts.setdefault(g, Counter())[(left, right)] += 1
    return counts, contexts


class HeuristicStub:
    """Offline stand-in that answers from frequency statistics of the payload."""

    kind = "stub"
    model_name = "heuristic-stub"

    def __init__(self, k: int = MAX_BUBBLES) -> None:
        self.k = k

    def complete(self, prompt: str, task: str, payload: dict) -> str:
        if task == "bubbles1":
            counts, _ = ngram_contexts(payload["siblings"])
            ranked = sorted((g for g in counts if plausible_group(g)),
                            key=lambda g: (-counts[g], len(g), g))
            return json.dumps([[display_label(x) for x in g] for g in ranked[:self.k]])
        if task == "bubbles2":
            counts, contexts = ngram_contexts(payload["siblings"])
            by_ctx: dict[tuple, list] = {}
            for g, ctxs in contexts.items():
                if not plausible_group(g):
                    continue
                for c in ctxs:
                    by_ctx.setdefault(c, []).append(g)
            shared: Counter = Counter()
            for members in by_ctx.values():
                members = sorted(set(members))
                for i, a in enumerate(members):
                    for b in members[i + 1:]:
                        shared[(a, b)] += 1
            ranked = sorted(shared, key=lambda p: (-shared[p], -(counts[p[0]] + counts[p[1]]), p))
            return json.dumps([[[display_label(x) for x in a], [display_label(x) for x in b]]
                               for a, b in ranked[:self.k]])
        if task == "label":
            letters = [next((c.lower() for c in y if c.isalpha()), "") for y in
                       (payload["yield_a"], payload["yield_b"])]
            return "".join(letters) or "n"
        if task == "zero_shot":
            alts = " | ".join(json.dumps(s) for s in payload["seeds"])
            return f"<production-rules>\n<stmt> ::= {alts}\n</production-rules>"
        raise ProviderError(f"stub cannot answer task {task!r}")


@dataclass
class BubbleProposal:
    labels: list = field(default_factory=list)
    kind: str = "One"


def extract_json_array(text: str):
    """First JSON array embedded in ``text`` (replies often add prose or fences)."""
    decoder = json.JSONDecoder()
    for m in re.finditer(r"\[", text):
        try:
            value, _ = decoder.raw_decode(text, m.start())
        except json.JSONDecodeError:
            continue
        if isinstance(value, list):
            return value
    raise MalformedReply("no JSON array in reply")


def _as_group(entry) -> tuple[str, ...] | None:
    if not isinstance(entry, list) or not entry:
        return None
    if not all(isinstance(x, str) and x for x in entry):
        return None
    return tuple(parse_display_label(x) for x in entry)


def parse_one_bubbles(reply: str, limit: int = MAX_BUBBLES) -> list[tuple[str, ...]]:
    groups: list[tuple[str, ...]] = []
    for entry in extract_json_array(reply):
        g = _as_group(entry)
        if g is None:
            log.info("dropping malformed bubble entry %r", entry)
            continue
        if g not in groups:
            groups.append(g)
    return sorted(groups[:limit], key=len)


def parse_two_bubbles(reply: str, limit: int = MAX_BUBBLES) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    pairs = []
    for entry in extract_json_array(reply):
        if not isinstance(entry, list) or len(entry) != 2:
            log.info("dropping unpaired entry %r", entry)
            continue
        a, b = _as_group(entry[0]), _as_group(entry[1])
        if a is None or b is None or a == b:
            continue
        if (a, b) not in pairs:
            pairs.append((a, b))
    return sorted(pairs[:limit], key=lambda p: len(p[0]) + len(p[1]))


_LABEL_OK = re.compile(r"^[a-z][a-z0-9_]{0,19}$")


def sanitize_label(raw: str) -> str | None:
    words = re.findall(r"[A-Za-z][A-Za-z0-9_]*", raw)
    if not words:
        return None
    label = words[0].lower()[:LABEL_MAX]
    return label if _LABEL_OK.match(label) else None


def dedupe_label(label: str, taken: set[str]) -> str:
    if label not in taken:
        return label
    k = 1
    while True:
        suffix = f"_{k}"
        cand = label[:LABEL_MAX - len(suffix)] + suffix
        if cand not in taken:
            return cand
        k += 1


_BNF_RULE = re.compile(r"<([^<>\s]+)>\s*::=")
_BNF_SYMBOL = re.compile(r"<([^<>\s]+)>|\"((?:[^\"\\]|\\.)*)\"|'((?:[^'\\]|\\.)*)'|(\|)")


def parse_zero_shot_reply(reply: str) -> Grammar:
    m = re.search(r"<production-rules>(.*?)</production-rules>", reply, re.S)
    if not m:
        raise MalformedReply("reply lacks <production-rules> tags")
    body = m.group(1)
    heads = list(_BNF_RULE.finditer(body))
    if not heads:
        raise MalformedReply("no production rules inside tags")
    g = Grammar("start", {"start": [(NonTerminal("stmt"),)]})
    for i, head in enumerate(heads):
        name = _ident(head.group(1))
        end = heads[i + 1].start() if i + 1 < len(heads) else len(body)
        alt: list = []
        for sm in _BNF_SYMBOL.finditer(body, head.end(), end):
            if sm.group(4):
                g.add(name, alt)
                alt = []
            elif sm.group(1):
                alt.append(NonTerminal(_ident(sm.group(1))))
            else:
                raw = sm.group(2) if sm.group(2) is not None else sm.group(3)
                text = json.loads('"' + raw.replace("\\'", "'") + '"') if "\\" in raw else raw
                if text:
                    alt.append(Terminal(text))
        g.add(name, alt)
    for name, alts in list(g.rules.items()):
        for alt in alts:
            for sym in alt:
                if isinstance(sym, NonTerminal) and sym.name not in g.rules:
                    raise MalformedReply(f"undefined non-terminal <{sym.name}>")
    if "stmt" not in g.rules:
        raise MalformedReply("no <stmt> rule")
    return g


def _ident(name: str) -> str:
    ident = re.sub(r"[^A-Za-z0-9_]", "_", name)
    return ident if re.match(r"[A-Za-z_]", ident) else "n_" + ident


class LlmGuide:
    def __init__(self, provider: Provider, root_label: str = "stmt",
                 limit: int = MAX_BUBBLES) -> None:
        self.provider = provider
        self.root_label = root_label
        self.limit = limit
        self.prior_state: str | None = None
        self.failures = 0

    def _ask(self, task: str, prompt: str, payload: dict) -> str | None:
        try:
            return self.provider.complete(prompt, task, payload)
        except ProviderError as exc:
            self.failures += 1
            log.warning("%s", exc)
            return None

    def bubble_prompt(self, template: str, levels: Sequence[Sequence[str]],
                      trees: Sequence[str], prior_state: str | None) -> str:
        level_text = "\n".join(f"Tree {i + 1}:\n" + "\n".join(lv) for i, lv in enumerate(levels))
        return load_prompt(template).substitute(
            limit=self.limit, levels=level_text, trees="\n".join(trees),
            prior=prior_state or "(none)")

    def _propose(self, task: str, levels, siblings, trees, prior_state, nested=()):
        prior = prior_state if prior_state is not None else self.prior_state
        prompt = self.bubble_prompt(task, levels, trees, prior)
        self.prior_state = "\n".join(trees)
        payload = {"levels": [list(lv) for lv in levels], "siblings": [list(s) for s in siblings],
                   "trees": list(trees), "nested": list(nested)}
        return self._ask(task, prompt, payload)

    def propose_1_bubbles(self, levels, siblings=(), trees=(), prior_state=None,
                           nested=()) -> BubbleProposal:
        reply = self._propose("bubbles1", levels, siblings, trees, prior_state, nested)
        if reply is None:
            return BubbleProposal([], "One")
        try:
            return BubbleProposal(parse_one_bubbles(reply, self.limit), "One")
        except MalformedReply as exc:
            log.warning("malformed 1-bubble reply: %s", exc)
            return BubbleProposal([], "One")

    def propose_2_bubbles(self, levels, siblings=(), trees=(), prior_state=None,
                           nested=()) -> BubbleProposal:
        reply = self._propose("bubbles2", levels, siblings, trees, prior_state, nested)
        if reply is None:
            return BubbleProposal([], "Two")
        try:
            return BubbleProposal(parse_two_bubbles(reply, self.limit), "Two")
        except MalformedReply as exc:
            log.warning("malformed 2-bubble reply: %s", exc)
            return BubbleProposal([], "Two")

    def suggest_label(self, yield_a: str, yield_b: str, taken: set[str] = frozenset(),
                      fallback: Callable[[], str] | None = None) -> str:
        prompt = load_prompt("label").substitute(root=self.root_label, yield_a=yield_a,
                                                 yield_b=yield_b)
        reply = self._ask("label", prompt, {"yield_a": yield_a, "yield_b": yield_b})
        label = sanitize_label(reply) if reply is not None else None
        if label is None:
            return fallback() if fallback is not None else dedupe_label("t", set(taken))
        return dedupe_label(label, set(taken))

    def zero_shot_grammar(self, seeds: Sequence[str]) -> Grammar:
        if not seeds:
            raise ValueError("zero-shot inference needs at least one seed")
        programs = "\n".join(f"<program {i + 1}>\n{s}\n</program {i + 1}>"
                             for i, s in enumerate(seeds))
        prompt = load_prompt("zero_shot").substitute(programs=programs)
        reply = self.provider.complete(prompt, "zero_shot", {"seeds": list(seeds)})
        return parse_zero_shot_reply(reply)


def make_provider(kind: str, *, model: str = "gpt-4o", url: str | None = None,
                  replay_store: str | None = None) -> Provider:
    if kind == "stub":
        return HeuristicStub()
    if kind == "replay":
        if not replay_store:
            raise ValueError("--llm replay needs --replay-store")
        return ReplayProvider.from_file(replay_store)
    if kind == "http":
        if not url:
            raise ValueError("--llm http needs --llm-url")
        return HttpProvider(url, model)
    raise ValueError(f"unknown LLM provider {kind!r}")
