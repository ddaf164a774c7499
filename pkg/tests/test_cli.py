import json

import pytest

from vizrec.cli import main
from vizrec.evaluator import generate_synthetic_corpus
from vizrec.tabular import save_corpus


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "corpus.jsonl"
    save_corpus(generate_synthetic_corpus(14, seed=41), path)
    return path


def test_corpus_stats_and_validate(corpus_path, capsys):
    assert main(["corpus", "stats", "--corpus", str(corpus_path)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["datasets"] == 14
    assert main(["corpus", "validate", "--corpus", str(corpus_path)]) == 0
    assert "OK" in capsys.readouterr().out


def test_synth_writes_corpus(tmp_path, capsys):
    out = tmp_path / "synth.jsonl"
    assert main(["synth", "--out", str(out), "--n-datasets", "5", "--seed", "3"]) == 0
    assert out.exists()
    assert len(out.read_text().strip().splitlines()) == 5


def test_metafeatures_prints_named_vector(tmp_path, capsys):
    csv_path = tmp_path / "data.csv"
    csv_path.write_text("a,b\n1,x\n2,y\n3,x\n")
    assert main(["metafeatures", str(csv_path), "--attribute", "a"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    from vizrec.metafeatures import default_schema

    assert len(lines) == default_schema().k
    assert lines[0].startswith("raw/whole/num_instances")


def test_train_evaluate_recommend_round_trip(corpus_path, tmp_path, capsys):
    model_path = tmp_path / "model.bin"
    code = main(
        [
            "train",
            "--corpus",
            str(corpus_path),
            "--out",
            str(model_path),
            "--neg",
            "5",
            "--lr",
            "0.05",
            "--epochs",
            "2",
            "--seed",
            "1",
            "--val-frac",
            "0.2",
        ]
    )
    assert code == 0
    assert model_path.exists()
    report = json.loads((tmp_path / "model.bin.report.json").read_text())
    assert len(report["train_loss"]) <= 2
    capsys.readouterr()

    report_path = tmp_path / "report.json"
    code = main(
        [
            "evaluate",
            "--model",
            str(model_path),
            "--corpus",
            str(corpus_path),
            "--negatives",
            "20",
            "--seed",
            "1",
            "--report",
            str(report_path),
            "--with-baselines",
        ]
    )
    assert code == 0
    payload = json.loads(report_path.read_text())
    assert set(payload["summary"]) == {"Random", "ConfigPop", "Model"}
    assert "nDCG@1" in payload["summary"]["Model"]
    capsys.readouterr()

    csv_path = tmp_path / "probe.csv"
    csv_path.write_text(
        "u,v,w\n" + "\n".join(f"{i},{i * 2},{'ab'[i % 2]}" for i in range(100)) + "\n"
    )
    code = main(
        [
            "recommend",
            "--model",
            str(model_path),
            "--dataset",
            str(csv_path),
            "--top-k",
            "3",
            "--emit-specs",
        ]
    )
    assert code == 0
    results = json.loads(capsys.readouterr().out)
    assert len(results) == 3
    assert results[0]["rank"] == 1
    assert "chart_spec" in results[0]


def test_error_paths_exit_nonzero(tmp_path, capsys):
    missing_model = tmp_path / "nope.bin"
    missing_model.write_bytes(b"garbage")
    csv_path = tmp_path / "d.csv"
    csv_path.write_text("a\n1\n")
    code = main(
        ["recommend", "--model", str(missing_model), "--dataset", str(csv_path)]
    )
    assert code == 1
    assert "CorruptFile" in capsys.readouterr().err
