from hypothesis import given, strategies as st

from conftest import IFELSE_SEED, forest_of
from gramforge.tokenizer import pretokenize
from gramforge.tree import (ParseForest, create_naive_trees, display_label, dump_tree, is_fresh,
                            iter_nodes, match_brackets, parse_display_label, parse_level,
                            plausible_group, prestructure_brackets, tree_levels, tree_to_brackets,
                            tree_to_nested, yield_string)


def naive(*texts):
    return create_naive_trees([pretokenize(t) for t in texts])


def test_single_token_tree():
    forest = naive("skip")
    (tree,) = forest.trees
    assert tree.label == "stmt"
    assert [c.label for c in tree.children] == ["skip"]


def test_ifelse_seed_is_flat():
    (tree,) = naive(IFELSE_SEED).trees
    assert all(c.is_leaf for c in tree.children)
    assert len(tree.children) == 22  # the two spaces and "else" are separate tokens
    assert yield_string(tree) == IFELSE_SEED


def test_empty_seed_list():
    assert naive().trees == []


def test_ifelse_brackets_get_a_fresh_node():
    forest = prestructure_brackets(naive(IFELSE_SEED))
    (tree,) = forest.trees
    inner = [c for c in tree.children if not c.is_leaf]
    assert len(inner) == 1
    assert is_fresh(inner[0].label)
    assert yield_string(inner[0]) == "(a+b)"
    assert yield_string(tree) == IFELSE_SEED


def test_no_brackets_unchanged():
    forest = prestructure_brackets(naive("a+b"))
    assert tree_to_brackets(forest.trees[0]) == "(stmt a + b)"


def test_nested_brackets_nest():
    forest = prestructure_brackets(naive("((x))"))
    (outer,) = forest.trees[0].children
    assert [c.label for c in outer.children][0] == "("
    inner = outer.children[1]
    assert not inner.is_leaf and yield_string(inner) == "(x)"
    assert outer.label != inner.label


def test_sibling_bracket_groups():
    forest = prestructure_brackets(naive("(a)(b)[c]"))
    assert [yield_string(c) for c in forest.trees[0].children] == ["(a)", "(b)", "[c]"]


def test_mismatched_closer_ignored():
    assert match_brackets(["(", "]", ")"]) == [(0, 2)]
    assert match_brackets([")", "("]) == []


def test_levels_of_flat_tree():
    assert tree_levels(naive("skip").trees[0]) == ["[stmt]", "[skip]"]


def test_levels_of_ifelse_tree():
    forest = prestructure_brackets(naive(IFELSE_SEED))
    t1 = [c for c in forest.trees[0].children if not c.is_leaf][0].label
    level1 = tree_levels(forest.trees[0])[1]
    assert f"{t1} \\s c = d" in level1


def test_single_node_has_one_level():
    forest = forest_of("x")
    assert tree_levels(forest.trees[0]) == ["[x]"]


def test_yields():
    forest = prestructure_brackets(naive(IFELSE_SEED))
    tree = forest.trees[0]
    t1 = [c for c in tree.children if not c.is_leaf][0]
    assert yield_string(t1) == "(a+b)"
    assert yield_string(tree.children[0]) == "if"


def test_leaves_are_tokens_and_roots_share_label():
    forest = naive("a b", "c")
    for tree in forest.trees:
        assert tree.label == forest.start_label
        for n in iter_nodes(tree):
            assert n.is_leaf or n.children


def test_fresh_labels_skip_taken_names():
    forest = forest_of(("stmt", [("t1", ["a"])]))
    forest.reserved.add("t2")
    assert forest.fresh_label() == "t3"


def test_copy_is_deep():
    forest = naive("a b")
    clone = forest.copy()
    clone.trees[0].children.pop()
    assert len(forest.trees[0].children) == 3


def test_display_label_escapes_whitespace():
    assert display_label(" ") == "\\s"
    assert parse_display_label("\\s\\n") == " \n"
    assert parse_level("[a \\s b]") == ["a", " ", "b"]


@given(st.text(max_size=12))
def test_display_round_trip(text):
    assert parse_display_label(display_label(text)) == text


def test_nested_form():
    forest = forest_of(("stmt", [("t1", ["(", "a", ")"]), ";"]))
    assert tree_to_nested(forest.trees[0]) == ["stmt", [["t1", ["(", "a", ")"]], ";"]]


def test_dump_is_indented():
    forest = forest_of(("stmt", [("t1", ["a"]), " "]))
    assert dump_tree(forest.trees[0]).splitlines() == ["stmt:", "  t1:", "    a", "  \\s"]


def test_plausible_group():
    assert plausible_group(["(", "a", ")"])
    assert not plausible_group(["a", " "])
    assert not plausible_group(["(", "a"])
    assert not plausible_group([")", "a", "("])


def test_write_dump(tmp_path):
    forest = naive("skip")
    forest.write_dump(tmp_path / "d", "01-naive")
    assert (tmp_path / "d" / "01-naive.txt").read_text() == "stmt:\n  skip\n"


@given(st.text(alphabet="ab()[]{} ", max_size=30))
def test_prestructure_preserves_yield(text):
    if not text:
        return
    forest = prestructure_brackets(naive(text))
    assert yield_string(forest.trees[0]) == text


def test_forest_is_empty_by_default():
    assert ParseForest().trees == []
