"""``gram-forge`` command line: infer, eval, stats, oracle-serve, seeds."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

from . import __version__
from .bench import (LANGUAGES, get_language, golden_acceptor_main, make_seeds, make_test_set,
                    read_programs, resolve_grammar, write_programs)
from .grammar import GrammarSyntaxError, load_grammar, serialize
from .metrics import PRECISION_SAMPLES, complexity_metrics, f1, precision, recall
from .oracle import DEFAULT_TIMEOUT_MS, OracleClient, OracleError
from .sampling import DEFAULT_MAX_DEPTH

log = logging.getLogger("gramforge")

BUILTIN = "builtin:"


class UsageError(Exception):
    pass


def make_oracle(spec: str | None, timeout_ms: int, cache: str | None = None,
                workers: int = 1) -> OracleClient:
    """``builtin:NAME`` (or ``builtin:FILE.bnf``) decides in-process; anything else is a command."""
    if not spec:
        raise UsageError("--oracle is required")
    if spec.startswith(BUILTIN):
        g = resolve_grammar(spec[len(BUILTIN):])
        return OracleClient.from_grammar(g, timeout_ms=timeout_ms, cache_file=cache)
    return OracleClient(spec, timeout_ms=timeout_ms, cache_file=cache, workers=workers)


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--rng-seed", type=int, default=d(101), help="inference RNG seed (default 101)")
    p.add_argument("--trace", metavar="FILE", default=d(None), help="write one line per merge check")
    p.add_argument("--dump-trees", metavar="DIR", default=d(None),
                   help="dump the forest after every stage")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def _oracle_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--oracle", metavar="CMD",
                   help="acceptor command (exit 0 = accept), or builtin:LANG|FILE.bnf")
    p.add_argument("--oracle-timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    p.add_argument("--oracle-cache", metavar="FILE", help="persist verdicts here")
    p.add_argument("--oracle-workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gram-forge",
                                     description="Infer a context-free grammar from seeds and an oracle.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="infer a grammar")
    _global_flags(p, suppress=True)
    p.add_argument("--seeds", metavar="DIR", required=True, help="one seed program per file")
    _oracle_flags(p)
    p.add_argument("--llm", choices=("http", "replay", "stub"), default="stub")
    p.add_argument("--llm-model", default="gpt-4o")
    p.add_argument("--llm-url")
    p.add_argument("--replay-store", metavar="FILE")
    p.add_argument("--out", metavar="FILE", help="grammar file (default: stdout)")
    p.add_argument("--split-digit-runs", action="store_true")
    p.add_argument("--allow-print", action="store_true", help="let lexical inference try <print+>")
    p.add_argument("--zero-shot", action="store_true",
                   help="ask the LLM for a grammar directly instead of inferring one")
    for flag, help_ in (("ai-label", "fresh t<k> labels instead of LLM names"),
                        ("hdd", "skip hierarchical delta debugging"),
                        ("bracket-bubbles", "skip bracket structuring and bracket bubbles"),
                        ("llm-bubbles", "skip LLM 1-/2-bubble proposals"),
                        ("treevada", "skip heuristic refinement"),
                        ("lexinfer", "keep terminals literal")):
        p.add_argument(f"--no-{flag}", action="store_true", help=help_)

    p = sub.add_parser("eval", help="precision/recall/F1 and size metrics as JSON")
    _global_flags(p, suppress=True)
    p.add_argument("grammar")
    _oracle_flags(p)
    p.add_argument("--test-set", metavar="DIR", required=True)
    p.add_argument("--samples", type=int, default=PRECISION_SAMPLES)
    p.add_argument("--sample-seed", type=int, default=101)
    p.add_argument("--max-depth", type=int, default=DEFAULT_MAX_DEPTH)

    p = sub.add_parser("stats", help="size and branching metrics of a grammar")
    _global_flags(p, suppress=True)
    p.add_argument("grammar")

    p = sub.add_parser("oracle-serve", help="accept stdin iff the grammar derives it")
    _global_flags(p, suppress=True)
    p.add_argument("grammar", help=f"grammar file or bundled language ({', '.join(LANGUAGES)})")

    p = sub.add_parser("seeds", help="write seed and held-out programs for a bundled language")
    _global_flags(p, suppress=True)
    p.add_argument("language", choices=LANGUAGES)
    p.add_argument("--out", metavar="DIR", required=True)
    p.add_argument("-n", type=int, help="number of programs (language default)")
    p.add_argument("--sample-seed", type=int, help="default 101 for seeds, 202 for --test")
    p.add_argument("--test", action="store_true", help="held-out set from the full grammar")
    return parser


def run_infer(args) -> int:
    from .llm import LlmGuide, make_provider
    from .pipeline import InferenceConfig, infer_grammar

    seeds = read_programs(args.seeds)
    if not seeds:
        raise UsageError(f"no seed files in {args.seeds}")
    oracle = make_oracle(args.oracle, args.oracle_timeout_ms, args.oracle_cache, args.oracle_workers)
    try:
        provider = make_provider(args.llm, model=args.llm_model, url=args.llm_url,
                                 replay_store=args.replay_store)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.zero_shot:
        grammar = LlmGuide(provider).zero_shot_grammar(seeds)
    else:
        trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
        try:
            config = InferenceConfig(
                rng_seed=args.rng_seed, ai_label=not args.no_ai_label, hdd=not args.no_hdd,
                bracket_bubbles=not args.no_bracket_bubbles, llm_bubbles=not args.no_llm_bubbles,
                treevada=not args.no_treevada, lexinfer=not args.no_lexinfer,
                split_digit_runs=args.split_digit_runs, allow_print=args.allow_print,
                trace=trace, dump_trees=args.dump_trees)
            result = infer_grammar(seeds, oracle, provider, config)
        finally:
            if trace is not None:
                trace.close()
        grammar = result.grammar
        log.info("stages: %s", {k: round(v, 2) for k, v in result.stage_seconds.items()})
        log.info("oracle: %s; merges %d of %d checks", oracle.stats(), result.merges, result.checks)
    oracle.save_cache()
    text = serialize(grammar)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def run_eval(args) -> int:
    t0 = time.perf_counter()
    g = load_grammar(args.grammar)
    oracle = make_oracle(args.oracle, args.oracle_timeout_ms, args.oracle_cache, args.oracle_workers)
    tests = read_programs(args.test_set)
    p = precision(g, oracle, args.samples, args.sample_seed, args.max_depth)
    r = recall(g, tests)
    report = {"precision": p, "recall": r, "f1": f1(p, r),
              "oracle_calls": oracle.stats()["calls_external"]}
    report.update(complexity_metrics(g))
    report["runtime_s"] = round(time.perf_counter() - t0, 3)
    oracle.save_cache()
    print(json.dumps(report))
    return 0


def run_stats(args) -> int:
    print(json.dumps(complexity_metrics(load_grammar(args.grammar))))
    return 0


def run_seeds(args) -> int:
    lang = get_language(args.language)  # choices= already validated the name
    if args.test:
        programs = make_test_set(lang, args.n, 202 if args.sample_seed is None else args.sample_seed)
    else:
        programs = make_seeds(lang, args.n, 101 if args.sample_seed is None else args.sample_seed)
    write_programs(args.out, programs, "test" if args.test else "seed")
    print(f"wrote {len(programs)} programs to {args.out}", file=sys.stderr)
    return 0


def run_oracle_serve(args) -> int:
    return golden_acceptor_main(args.grammar)


COMMANDS = {"infer": run_infer, "eval": run_eval, "stats": run_stats, "seeds": run_seeds,
            "oracle-serve": run_oracle_serve}


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None and sys.argv[1:2] == ["oracle-serve"]:
        # hot path: one process per oracle query, so skip the inference imports
        return golden_acceptor_main(parser.parse_args().grammar)
    from .llm import ProviderError
    from .pipeline import InferenceError

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except InferenceError as exc:
        print(f"gram-forge: inference failed in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    except GrammarSyntaxError as exc:
        print(f"gram-forge: grammar syntax error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, OracleError, ProviderError) as exc:
        print(f"gram-forge: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
