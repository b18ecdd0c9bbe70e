import json
import subprocess
import sys

import pytest

from gramforge.cli import build_parser, main
from gramforge.earley import earley_accepts
from gramforge.grammar import load_grammar

ABLATIONS = ["--no-ai-label", "--no-hdd", "--no-bracket-bubbles", "--no-llm-bubbles",
             "--no-treevada", "--no-lexinfer"]


@pytest.fixture
def seeds_dir(tmp_path):
    d = tmp_path / "seeds"
    for i, text in enumerate(["skip", "L = n", "while true do skip", "skip ; L = (n + L)"]):
        d.mkdir(exist_ok=True)
        (d / f"s{i}.txt").write_text(text)
    return d


def test_every_ablation_has_one_flag():
    infer = build_parser()._subparsers._group_actions[0].choices["infer"]
    flags = {s for a in infer._actions for s in a.option_strings if s.startswith("--no-")}
    assert flags == set(ABLATIONS)


def test_offline_infer(seeds_dir, tmp_path, capsys):
    out = tmp_path / "g.bnf"
    rc = main(["infer", "--seeds", str(seeds_dir), "--oracle", "builtin:while", "--llm", "stub",
               "--no-treevada", "--out", str(out)])
    assert rc == 0
    g = load_grammar(out)
    for p in seeds_dir.iterdir():
        assert earley_accepts(g, p.read_text())


def test_infer_to_stdout_with_trace_and_dumps(seeds_dir, tmp_path, capsys):
    trace = tmp_path / "trace.tsv"
    dumps = tmp_path / "dumps"
    rc = main(["--trace", str(trace), "--dump-trees", str(dumps), "infer", "--seeds",
               str(seeds_dir), "--oracle", "builtin:while"])
    assert rc == 0
    assert capsys.readouterr().out.startswith("start: ")
    assert all(len(line.split("\t")) == 3 for line in trace.read_text().splitlines())
    names = sorted(p.name for p in dumps.iterdir())
    assert names[0] == "01-naive-trees.txt" and any("hdd" in n for n in names)


def test_missing_oracle_is_usage_error(seeds_dir):
    with pytest.raises(SystemExit) as err:
        main(["infer", "--seeds", str(seeds_dir)])
    assert err.value.code == 2


def test_missing_seeds_flag_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["infer", "--oracle", "builtin:while"])
    assert err.value.code == 2


def test_replay_without_store_is_usage_error(seeds_dir):
    with pytest.raises(SystemExit) as err:
        main(["infer", "--seeds", str(seeds_dir), "--oracle", "builtin:while", "--llm", "replay"])
    assert err.value.code == 2


def test_rejected_seed_is_inference_error(tmp_path, capsys):
    d = tmp_path / "bad"
    d.mkdir()
    (d / "s.txt").write_text("skip skip")
    rc = main(["infer", "--seeds", str(d), "--oracle", "builtin:while"])
    assert rc == 1
    assert "stage tokenize" in capsys.readouterr().err


def test_eval_golden_against_itself(tmp_path, capsys):
    assert main(["seeds", "while", "--test", "-n", "30", "--out", str(tmp_path / "t")]) == 0
    from gramforge.bench import get_language
    from gramforge.grammar import serialize
    g = tmp_path / "while.bnf"
    g.write_text(serialize(get_language("while").grammar))
    capsys.readouterr()
    rc = main(["eval", str(g), "--oracle", "builtin:while", "--test-set", str(tmp_path / "t"),
               "--samples", "200"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"precision", "recall", "f1", "oracle_calls", "t", "nt", "rhs",
                           "mcc_total", "mcc_avg", "runtime_s"}
    assert report["precision"] == report["recall"] == report["f1"] == 1.0


def test_eval_malformed_grammar(tmp_path, capsys):
    g = tmp_path / "bad.bnf"
    g.write_text("start: (\n")
    (tmp_path / "t").mkdir()
    rc = main(["eval", str(g), "--oracle", "builtin:while", "--test-set", str(tmp_path / "t")])
    assert rc == 1
    assert "syntax" in capsys.readouterr().err


def test_stats(tmp_path, capsys):
    g = tmp_path / "g.bnf"
    g.write_text('start: "a" | "b"\n')
    assert main(["stats", str(g)]) == 0
    assert json.loads(capsys.readouterr().out)["mcc_total"] == 1


def test_seeds_command(tmp_path):
    assert main(["seeds", "json", "-n", "5", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.iterdir())) == 5


def test_zero_shot_mode(seeds_dir, tmp_path, capsys):
    rc = main(["infer", "--zero-shot", "--seeds", str(seeds_dir), "--oracle", "builtin:while",
               "--llm", "stub"])
    assert rc == 0
    assert "stmt:" in capsys.readouterr().out


def test_external_oracle_command(tmp_path, capsys):
    d = tmp_path / "s"
    d.mkdir()
    (d / "a.txt").write_text("skip")
    (d / "b.txt").write_text("L = n")
    oracle = f"{sys.executable} -m gramforge.cli oracle-serve while"
    rc = main(["infer", "--seeds", str(d), "--oracle", oracle, "--no-treevada", "--no-hdd",
               "--no-lexinfer", "--no-llm-bubbles"])
    assert rc == 0


def test_oracle_serve_exit_codes(tmp_path):
    cmd = [sys.executable, "-m", "gramforge.cli", "oracle-serve"]
    assert subprocess.run(cmd + ["while"], input=b"skip").returncode == 0
    assert subprocess.run(cmd + ["while"], input=b"if").returncode == 1
    assert subprocess.run(cmd + [str(tmp_path / "none.bnf")], input=b"").returncode == 2
