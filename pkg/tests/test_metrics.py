import pytest

from gramforge.grammar import NonTerminal, Terminal, parse_grammar
from gramforge.metrics import EmptyTestSet, complexity_metrics, f1, precision, recall


def test_golden_precision_is_one(while_lang, while_oracle):
    assert precision(while_lang.grammar, while_oracle, n=300) == 1.0


def test_alien_alternative_lowers_precision(while_lang, while_oracle):
    g = while_lang.grammar.copy()
    g.add("start", [Terminal("###")])
    assert precision(g, while_oracle, n=300) < 1.0


def test_precision_needs_samples(while_lang, while_oracle):
    with pytest.raises(ValueError):
        precision(while_lang.grammar, while_oracle, n=0)


def test_duplicates_count_per_draw():
    from gramforge.oracle import OracleClient
    g = parse_grammar('start: "a" | "b"\n')
    p = precision(g, OracleClient(func=lambda s: s == "a"), n=400)
    assert 0.4 < p < 0.6


def test_golden_recall_is_one(while_lang, while_tests):
    assert recall(while_lang.grammar, while_tests) == 1.0


def test_skip_only_grammar_recall(while_tests):
    g = parse_grammar('start: "skip"\n')
    expected = while_tests.count("skip") / len(while_tests)
    assert recall(g, while_tests) == expected
    assert 0 < expected < 0.1


def test_empty_language_recall(while_tests):
    g = parse_grammar('start: start "x"\n')
    assert recall(g, while_tests) == 0.0


def test_empty_test_set(while_lang):
    with pytest.raises(EmptyTestSet):
        recall(while_lang.grammar, [])


def test_f1_values():
    assert f1(1.0, 1.0) == 1.0
    assert f1(0.0, 0.0) == 0.0
    assert round(f1(0.25, 0.01), 2) == 0.02
    assert f1(0.25, 0.01) == pytest.approx(0.01923, abs=1e-5)


@pytest.mark.parametrize("p,r", [(0.1, 0.9), (0.5, 0.5), (1.0, 0.0), (0.3, 0.7)])
def test_f1_bound(p, r):
    assert f1(p, r) <= 2 * min(p, r) + 1e-12


def test_single_rule_metrics():
    m = complexity_metrics(parse_grammar('start: "a"\n'))
    assert (m["t"], m["nt"], m["rhs"], m["mcc_total"], m["mcc_avg"]) == (1, 1, 1, 0, 0)


def test_while_hand_count(while_lang):
    # 18 distinct terminal spellings; 1+16+10+7 symbols over 4 rules;
    # 0+4+4+2 alternation bars
    assert complexity_metrics(while_lang.grammar) == {
        "t": 18, "nt": 4, "rhs": 8.5, "mcc_total": 10, "mcc_avg": 2.5}


def test_char_classes_count_as_branches():
    m = complexity_metrics(parse_grammar('start: "x" <digits+> | <digits+>\n'))
    assert m["t"] == 2 and m["mcc_total"] == 3


def test_metrics_ignore_rule_order():
    a = parse_grammar('start: b | "x"\nb: "y" "z"\n')
    b = parse_grammar('start: "x" | b\nb: "y" "z"\n')
    assert complexity_metrics(a) == complexity_metrics(b)
    assert NonTerminal("b") in a.rules["start"][0]
