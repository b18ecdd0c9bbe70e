import random

import pytest
from hypothesis import given, settings, strategies as st

from brute import all_strings, bounded_language, random_grammar
from gramforge.earley import EarleyRecognizer, earley_accepts, nullable_set
from gramforge.grammar import (CharClass, Grammar, GrammarError, GrammarSyntaxError, NonTerminal,
                               Terminal, load_grammar, parse_grammar, serialize)
from gramforge.induction import expand_tokens, induce_grammar, ladder_for
from gramforge.oracle import OracleClient
from gramforge.sampling import NonTerminatingGrammar, min_heights, sample_from_grammar
from conftest import forest_of
from gramforge.tree import create_naive_trees
from gramforge.tokenizer import pretokenize

# -- file format -------------------------------------------------------------


def test_while_file_layout(while_lang):
    text = serialize(while_lang.grammar)
    lines = text.splitlines()
    assert lines[0] == "start: stmt"
    assert lines[1].startswith('stmt: stmt " ; " stmt | "L = " numexpr')
    assert parse_grammar(text) == while_lang.grammar


def test_empty_text_has_no_start():
    with pytest.raises(GrammarSyntaxError):
        parse_grammar("")


def test_syntax_error_position():
    with pytest.raises(GrammarSyntaxError) as err:
        parse_grammar('start: "a"\nx: "unterminated\n')
    assert err.value.line == 2


def test_undefined_reference():
    with pytest.raises(GrammarSyntaxError, match="undefined"):
        parse_grammar("start: missing\n")
    with pytest.raises(GrammarError):
        Grammar("start", {"start": [(NonTerminal("missing"),)]}).validate()


def test_comments_continuations_and_classes():
    g = parse_grammar('# c\nstart: "a" <digits+>\n    | "\\n"   # tail\n')
    assert g.rules["start"] == [(Terminal("a"), CharClass("digits")), (Terminal("\n"),)]


def test_load_grammar(tmp_path):
    p = tmp_path / "g.bnf"
    p.write_text('start: "x"\n')
    assert load_grammar(p).rules == {"start": [(Terminal("x"),)]}


def test_duplicate_alternatives_collapse():
    g = Grammar("start", {"start": [(Terminal("a"),), (Terminal("a"),)]})
    assert len(g.rules["start"]) == 1


def test_unknown_class_rejected():
    with pytest.raises(ValueError):
        CharClass("hex")


NAMES = st.sampled_from(["start", "a", "b_1", "Expr"])
TEXTS = st.text(alphabet='ab"\\\n\t ;(', min_size=1, max_size=4)
SYMBOLS = st.one_of(TEXTS.map(Terminal), NAMES.map(NonTerminal),
                    st.sampled_from(["digits", "letters", "alnum_", "print"]).map(CharClass))


@settings(max_examples=200)
@given(st.dictionaries(NAMES, st.lists(st.lists(SYMBOLS, max_size=4).map(tuple),
                                        min_size=1, max_size=3), min_size=1))
def test_round_trip(rules):
    rules.setdefault("start", [(Terminal("x"),)])
    names = set(rules)
    for alts in rules.values():
        for alt in alts:
            for s in alt:
                if isinstance(s, NonTerminal):
                    names.add(s.name)
    for n in names:
        rules.setdefault(n, [(Terminal("z"),)])
    g = Grammar("start", rules)
    text = serialize(g)
    assert parse_grammar(text) == g
    assert serialize(parse_grammar(text)) == text


# -- recognizer ----------------------------------------------------------------


def test_while_membership(while_lang):
    assert earley_accepts(while_lang.grammar, "skip")
    assert not earley_accepts(while_lang.grammar, "skip skip")
    assert earley_accepts(while_lang.grammar, "while ~true & false do L = (n + L)")


def test_skip_skip_absent_by_enumeration(while_lang):
    assert "skip skip" not in bounded_language(while_lang.grammar, 9)
    assert "skip" in bounded_language(while_lang.grammar, 9)


def test_empty_string_iff_nullable_start():
    g = parse_grammar('start: a "x" | a\na: "" | "y"\n')
    assert "a" in nullable_set(g) and "start" in nullable_set(g)
    assert earley_accepts(g, "")
    assert not earley_accepts(parse_grammar('start: "x"\n'), "")


def test_char_classes_match_runs():
    g = parse_grammar('start: "v" <digits+> "=" <alnum_+>\n')
    assert earley_accepts(g, "v12=a_9")
    assert not earley_accepts(g, "v=a")
    assert not earley_accepts(g, "v1=")


def test_adjacent_classes_backtrack():
    g = parse_grammar('start: <letters+> <alnum_+>\n')
    assert earley_accepts(g, "ab")
    assert not earley_accepts(g, "a")


def test_left_recursion():
    g = parse_grammar('start: e\ne: e "+" e | "n"\n')
    assert earley_accepts(g, "n+n+n")
    assert not earley_accepts(g, "n+")


@pytest.mark.parametrize("seed", range(40))
def test_earley_matches_enumeration(seed):
    rng = random.Random(seed)
    g = random_grammar(rng)
    lang = bounded_language(g, 6)
    rec = EarleyRecognizer(g)
    for s in all_strings("abc", 6):
        assert rec.accepts(s) == (s in lang), (serialize(g), s)


# -- sampler -----------------------------------------------------------------


def test_single_string_language():
    assert sample_from_grammar(parse_grammar('start: "a"\n'), 5) == ["a"] * 5


def test_while_samples_are_accepted(while_lang):
    rec = EarleyRecognizer(while_lang.grammar)
    assert all(rec.accepts(s) for s in sample_from_grammar(while_lang.grammar, 1000))


def test_left_recursive_sampler_terminates():
    g = parse_grammar('start: e\ne: e "+" e | "n"\n')
    out = sample_from_grammar(g, 200, max_depth=10)
    assert all(set(s) <= {"n", "+"} for s in out)


def test_non_terminating_grammar():
    with pytest.raises(NonTerminatingGrammar):
        sample_from_grammar(parse_grammar('start: start "a"\n'), 1)


def test_min_heights():
    h = min_heights(parse_grammar('start: e\ne: e "+" e | "n"\n'))
    assert h == {"start": 2, "e": 1}


def test_sampling_is_seeded(while_lang):
    assert sample_from_grammar(while_lang.grammar, 20, seed=5) == \
        sample_from_grammar(while_lang.grammar, 20, seed=5)


@pytest.mark.parametrize("seed", range(15))
def test_sampler_soundness_on_random_grammars(seed):
    g = random_grammar(random.Random(1000 + seed))
    try:
        samples = sample_from_grammar(g, 30, max_depth=8, seed=seed)
    except NonTerminatingGrammar:
        return
    rec = EarleyRecognizer(g)
    assert all(rec.accepts(s) for s in samples)


# -- induction ---------------------------------------------------------------


def test_rule_from_bubbled_trees():
    forest = forest_of(("stmt", ["if", " ", ("t1", ["a", "==", "b"]), " ", "then"]),
                       ("stmt", ["if", " ", ("t1", ["true"]), " ", "then"]))
    g = induce_grammar(forest.trees)
    assert g.rules["t1"] == [(Terminal("a"), Terminal("=="), Terminal("b")), (Terminal("true"),)]
    assert g.rules["start"] == [(NonTerminal("stmt"),)]


def test_flat_tree_grammar():
    g = induce_grammar(create_naive_trees([pretokenize("skip")]).trees)
    assert serialize(g) == 'start: stmt\nstmt: "skip"\n'


def test_identical_trees_dedupe():
    one = induce_grammar(create_naive_trees([pretokenize("a b")]).trees)
    two = induce_grammar(create_naive_trees([pretokenize("a b"), pretokenize("a b")]).trees)
    assert one == two


def test_induced_grammar_covers_trees(while_seeds):
    forest = create_naive_trees([pretokenize(s) for s in while_seeds])
    g = induce_grammar(forest.trees)
    g.validate()
    rec = EarleyRecognizer(g)
    assert all(rec.accepts(s) for s in while_seeds)


def test_unary_self_loops_dropped():
    g = induce_grammar(forest_of(("stmt", [("e", [("e", ["x"])])])).trees)
    assert (NonTerminal("e"),) not in g.rules["e"]


def test_ladder():
    assert ladder_for("123") == ["digits"]
    assert ladder_for("while") == ["letters", "alnum_"]
    assert ladder_for("x", allow_print=True)[-1] == "print"
    assert ladder_for(";") == []


NUM_GRAMMAR = 'start: stmt\nstmt: "x=" num ";"\nnum: "{num}"\n'


def test_numeral_expands_when_acceptor_allows():
    forest = forest_of(("stmt", ["x=", ("num", ["7"]), ";"]))
    g = induce_grammar(forest.trees)
    multi = OracleClient(func=lambda s: s[:2] == "x=" and s[-1] == ";" and s[2:-1].isdigit())
    assert expand_tokens(forest.trees, g, multi).rules["num"] == [(CharClass("digits"),)]
    single = OracleClient(func=lambda s: s[:2] == "x=" and s[-1] == ";" and len(s) == 4
                          and s[2].isdigit())
    assert expand_tokens(forest.trees, g, single).rules["num"] == [(Terminal("7"),)]


def test_keyword_stays_literal(while_oracle):
    forest = create_naive_trees([pretokenize("while true do skip")])
    g = induce_grammar(forest.trees)
    out = expand_tokens(forest.trees, g, while_oracle)
    assert Terminal("while") in out.rules["stmt"][0]


def test_no_terminals_unchanged():
    g = parse_grammar('start: a\na: ""\n')
    assert expand_tokens([], g, OracleClient(func=bool)) == g


def test_expansion_is_monotone():
    forest = forest_of(("stmt", ["x=", ("num", ["7"]), ";"]), ("stmt", ["y=", ("num", ["42"]), ";"]))
    g = induce_grammar(forest.trees)
    ok = OracleClient(func=lambda s: len(s) > 3 and s[1] == "=" and s[2:-1].isdigit())
    wider = expand_tokens(forest.trees, g, ok)
    rec = EarleyRecognizer(wider)
    assert all(rec.accepts(s) for s in sample_from_grammar(g, 100))
