import json

import pytest

from hinhyper.cli import main
from hinhyper.pipeline import STAGES, IntegrityError, PipelineConfig, PipelineError, run_pipeline
from hinhyper.synth import SynthConfig, generate_synthetic_hin, write_dataset

SMALL_RUN = {
    "nodes": "nodes.tsv", "edges": "edges.tsv", "schema": "schema.json", "corpus": "corpus.jsonl",
    "labels": "labels.tsv", "output_dir": "out",
    "contexts": ["simplest", "groupby:author", "cluster:4"],
    "embedding_dim": 8, "embedding": {"walks_per_node": 2, "walk_length": 10},
    "train": {"epochs": 10, "h_node": 16},
    "ks": [10, 100], "top_terms": 20, "top_edges": 40, "seed": 3,
}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    write_dataset(generate_synthetic_hin(SynthConfig(depth=2, branching=3, n_docs=200, n_groups=20,
                                                     hearst_fraction=0.5, seed=1)), d)
    return d


def config_in(directory, dataset, **overrides):
    doc = dict(SMALL_RUN, **overrides)
    for key in ("nodes", "edges", "schema", "corpus", "labels"):
        doc[key] = str(dataset / doc[key])
    doc["output_dir"] = str(directory / "out")
    path = directory / "pipeline.json"
    path.write_text(json.dumps(doc))
    return path


def test_end_to_end_smoke(tmp_path, dataset):
    cfg = PipelineConfig.from_file(config_in(tmp_path, dataset))
    log = run_pipeline(cfg)
    assert [s for s, _ in log] == list(STAGES) and all(st == "ran" for _, st in log)
    out = tmp_path / "out"
    for name in ("seeds.tsv", "embedding.txt", "pairwise.tsv", "model.json", "ranked.tsv", "metrics.json",
                 "taxonomy.dot", "taxonomy.json", "removed_edges.tsv", "manifest.json"):
        assert (out / name).exists(), name
    metrics = json.loads((out / "metrics.json").read_text())
    assert 0 <= metrics["MaMARR"] <= 1 and metrics["P@10"] is not None
    assert (out / "pairwise.tsv").read_text().split("\n", 1)[0].count("|") == 12
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["stages"]) == set(STAGES) and "versions" in manifest


def test_resume_skips_finished_stages(tmp_path, dataset):
    cfg = PipelineConfig.from_file(config_in(tmp_path, dataset))
    run_pipeline(cfg, STAGES[:4])
    before = (tmp_path / "out" / "pairwise.tsv").stat().st_mtime_ns
    log = run_pipeline(cfg)
    assert dict(log)["compute-features"] == "skipped" and dict(log)["train"] == "ran"
    assert (tmp_path / "out" / "pairwise.tsv").stat().st_mtime_ns == before
    assert all(st == "skipped" for _, st in run_pipeline(cfg))


def test_param_change_reruns_downstream_only(tmp_path, dataset):
    run_pipeline(PipelineConfig.from_file(config_in(tmp_path, dataset)))
    cfg = PipelineConfig.from_file(config_in(tmp_path, dataset, top_edges=5))
    status = dict(run_pipeline(cfg))
    assert status["train"] == "skipped" and status["build-taxonomy"] == "ran"


def test_corrupted_intermediate_is_refused(tmp_path, dataset):
    cfg = PipelineConfig.from_file(config_in(tmp_path, dataset))
    run_pipeline(cfg, STAGES[:4])
    with open(tmp_path / "out" / "pairwise.tsv", "a") as fh:
        fh.write("junk\n")
    with pytest.raises(IntegrityError, match="hash mismatch"):
        run_pipeline(cfg)


def test_stage_failure_names_the_stage(tmp_path, dataset):
    cfg = PipelineConfig.from_file(config_in(tmp_path, dataset))
    with pytest.raises(PipelineError, match="stage train: missing input"):
        run_pipeline(cfg, ["train"])


def test_config_validation(tmp_path, dataset):
    with pytest.raises(ValueError, match="unknown config keys"):
        PipelineConfig.from_file(config_in(tmp_path, dataset, colour="red"))
    with pytest.raises(ValueError):
        PipelineConfig.from_file(config_in(tmp_path, dataset, contexts=["cluster:0"]))


def test_cli_run_and_resume(tmp_path, dataset, capsys):
    path = config_in(tmp_path, dataset)
    assert main(["run", "--config", str(path), "--deterministic", "--until", "compute-features"]) == 0
    assert main(["--config", str(path), "run"]) == 0
    out = capsys.readouterr().out
    assert "compute-features: skipped" in out and "build-taxonomy: ran" in out
    assert main(["train", "--config", str(path)]) == 0
    assert "train: skipped" in capsys.readouterr().out


def test_cli_errors(tmp_path, dataset, capsys):
    assert main(["run"]) == 2
    assert main(["evaluate", "--ranked", "x.tsv"]) == 2
    assert "missing --labels" in capsys.readouterr().err
    assert main(["evaluate", "--ranked", str(tmp_path / "nope.tsv"), "--labels", "x"]) == 1
    with pytest.raises(SystemExit):
        main(["bogus"])


def test_cli_standalone_stages(tmp_path, dataset, capsys):
    g = ["--graph", str(dataset)]
    o = tmp_path
    steps = [
        ["extract-seeds", *g, "--corpus", str(dataset / "corpus.jsonl"), "--out", str(o / "seeds.tsv")],
        ["embed", *g, "--dim", "8", "--walks-per-node", "2", "--walk-length", "8", "--out", str(o / "emb.txt")],
        ["build-contexts", *g, "--context", "simplest", "--context", "cluster:3",
         "--embedding", str(o / "emb.txt"), "--out-dir", str(o / "ctx")],
        ["compute-features", *g, "--contexts", str(o / "ctx" / "00.jsonl"), str(o / "ctx" / "01.jsonl"),
         "--seeds", str(o / "seeds.tsv"), "--out", str(o / "pw.tsv")],
        ["train", *g, "--seeds", str(o / "seeds.tsv"), "--embedding", str(o / "emb.txt"),
         "--features", str(o / "pw.tsv"), "--epochs", "3", "--out", str(o / "model.json")],
        ["score", *g, "--model", str(o / "model.json"), "--embedding", str(o / "emb.txt"),
         "--features", str(o / "pw.tsv"), "--out", str(o / "ranked.tsv")],
        ["evaluate", "--ranked", str(o / "ranked.tsv"), "--labels", str(dataset / "labels.tsv"),
         "--k", "5", "--out", str(o / "metrics.json")],
        ["build-taxonomy", "--ranked", str(o / "ranked.tsv"), "--top-terms", "10", "--out-prefix", str(o / "tax")],
    ]
    for argv in steps:
        assert main(argv + ["--seed", "2"]) == 0, argv
    assert json.loads((o / "metrics.json").read_text())["P@5"] is not None
    assert (o / "tax.dot").exists() and (o / "tax.removed.tsv").exists()
    assert main(["embed", "--import", str(o / "emb.txt"), "--out", str(o / "emb2.txt")]) == 0
    assert (o / "emb2.txt").read_bytes() == (o / "emb.txt").read_bytes()


def test_cli_synth_writes_runnable_config(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "d"), "--depth", "2", "--docs", "100", "--groups", "10"]) == 0
    cfg = PipelineConfig.from_file(tmp_path / "d" / "pipeline.json")
    assert len(cfg.contexts) == 6 and cfg.labels.exists()
