"""Command-line entry points, driven through main() in-process."""

import json

import pytest

from text2vis.cli import main
from text2vis.dataset import load_corpus, write_corpus
from text2vis.neural import generate_synthetic_corpus, toy_schemas


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_emits_json_ast(capsys):
    code, out, err = run(capsys, "parse",
                         "Visualize BAR SELECT a , COUNT(a) FROM t")
    assert code == 0
    doc = json.loads(out)
    assert doc["chart"] == "BAR" and doc["from_table"] == "t"


def test_parse_error_exit_1(capsys):
    code, out, err = run(capsys, "parse", "not vql")
    assert code == 1 and "error" in err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense-command"])
    assert exc.value.code == 2


def test_compile_to_stdout_and_file(capsys, data_dir, tmp_path):
    vql = "Visualize BAR SELECT genre , COUNT(name) FROM movies GROUP BY genre"
    code, out, _ = run(capsys, "compile", vql, "--db-id", "cinema",
                       "--data-dir", str(data_dir))
    assert code == 0
    doc = json.loads(out)
    assert doc["mark"] == "bar"
    target = tmp_path / "spec.json"
    code, _, _ = run(capsys, "compile", vql, "--db-id", "cinema",
                     "--data-dir", str(data_dir), "--out", str(target))
    assert code == 0 and json.loads(target.read_text()) == doc


def test_compile_bad_vql_exit_1(capsys, data_dir):
    code, _, err = run(capsys, "compile", "garbage", "--db-id", "cinema",
                       "--data-dir", str(data_dir))
    assert code == 1 and "[parse]" in err


def test_synth_split_stats_round_trip(capsys, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    code, out, _ = run(capsys, "synth", "-n", "60", "--seed", "3",
                       "--out", str(corpus))
    assert code == 0 and corpus.exists()
    assert len(load_corpus(corpus)) == 60

    outdir = tmp_path / "splits"
    code, out, _ = run(capsys, "split", "--corpus", str(corpus),
                       "--mode", "question", "--out", str(outdir))
    assert code == 0
    parts = [load_corpus(outdir / f"{n}.jsonl") for n in ("train", "dev", "test")]
    assert sum(len(p) for p in parts) == 60

    code, out, _ = run(capsys, "stats", "--corpus", str(corpus))
    assert code == 0
    doc = json.loads(out)
    assert doc["total"] == 60


def test_split_infeasible_exit_1(capsys, tmp_path):
    samples = generate_synthetic_corpus(toy_schemas(), 40, seed=0)
    only_one_db = [s for s in samples if s.db_id == samples[0].db_id]
    corpus = tmp_path / "one_db.jsonl"
    write_corpus(only_one_db, corpus)
    code, _, err = run(capsys, "split", "--corpus", str(corpus),
                       "--mode", "database")
    assert code == 1 and "error" in err


def test_eval_reports_metrics(capsys, tmp_path, data_dir):
    samples = generate_synthetic_corpus(toy_schemas(), 20, seed=4)
    gold = tmp_path / "gold.jsonl"
    write_corpus(samples, gold)
    preds = tmp_path / "preds.jsonl"
    with open(preds, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps({"id": s.id, "candidates": [s.vql_text]}) + "\n")
    code, out, _ = run(capsys, "eval", "--gold", str(gold),
                       "--pred", str(preds),
                       "--schemas", str(data_dir / "schemas.json"))
    assert code == 0 and "Tree matching accuracy" in out
    code, out, _ = run(capsys, "eval", "--gold", str(gold),
                       "--pred", str(preds),
                       "--schemas", str(data_dir / "schemas.json"), "--json")
    assert code == 0
    assert json.loads(out)["tree_acc"]["overall"] == 1.0


def test_train_writes_checkpoint_and_lexicon(capsys, tmp_path, data_dir):
    samples = generate_synthetic_corpus(toy_schemas(), 2, seed=6)
    corpus = tmp_path / "c.jsonl"
    write_corpus(samples, corpus)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"d_model": 16, "n_layers": 1, "n_heads": 2,
                               "d_ngram": 8, "d_lstm": 16}))
    model = tmp_path / "m.bin"
    code, out, _ = run(capsys, "train", "--corpus", str(corpus),
                       "--schemas", str(data_dir / "schemas.json"),
                       "--config", str(cfg), "--epochs", "2",
                       "--out", str(model))
    assert code == 0
    assert model.exists() and model.with_suffix(".lexicon").exists()
    from text2vis.neural import load_checkpoint
    _, loaded_cfg = load_checkpoint(model)
    assert loaded_cfg.d_model == 16
