import json

import pytest

from clusterprune.cli import main
from clusterprune.core import read_embeddings, read_keeplist, read_labels
from clusterprune.probe import read_curve
from clusterprune.runner import run_experiment, verify_report
from clusterprune.scaling import read_fit_summary


@pytest.fixture()
def dataset(tmp_path):
    """Small synthetic train/test pair written through the CLI."""
    train = tmp_path / "train"
    test = tmp_path / "test"
    common = ["--classes", "3", "--dims", "8", "--radius", "6", "--sigma", "1"]
    assert main(["synth", *common, "--per-class", "150", "--seed", "1",
                 "--means-seed", "77", "--out", str(train)]) == 0
    assert main(["synth", *common, "--per-class", "40", "--seed", "2",
                 "--means-seed", "77", "--out", str(test)]) == 0
    return tmp_path


def test_synth_outputs_parse(dataset):
    X = read_embeddings(dataset / "train.emb")
    y = read_labels(dataset / "train.lbl")
    assert (X.n_samples, X.n_dims) == (450, 8)
    assert y.n_classes == 3
    assert y.class_names == ("class_00", "class_01", "class_02")


def test_synth_deterministic(dataset, capsys):
    emb = (dataset / "train.emb").read_bytes()
    assert main(["synth", "--classes", "3", "--dims", "8", "--radius", "6",
                 "--sigma", "1", "--per-class", "150", "--seed", "1",
                 "--means-seed", "77", "--out", str(dataset / "again")]) == 0
    assert (dataset / "again.emb").read_bytes() == emb
    capsys.readouterr()


def test_stage_pipeline(dataset, capsys):
    d = dataset
    assert main(["pca", "--embeddings", str(d / "train.emb"), "--components", "4",
                 "--out", str(d / "pca")]) == 0
    proj = read_embeddings(d / "pca.proj.emb")
    assert proj.values.shape == (450, 4)

    assert main(["cluster", "--embeddings", str(d / "train.emb"), "--k", "3",
                 "--n-init", "4", "--seed", "5", "--out", str(d / "km")]) == 0
    out = capsys.readouterr().out
    assert "inertia=" in out

    assert main(["prune", "--scores", str(d / "km.dist.emb"), "--method", "simple",
                 "--fraction", "0.4", "--labels", str(d / "train.lbl"),
                 "--out", str(d / "kl.keep")]) == 0
    out = capsys.readouterr().out
    assert "kept=270/450" in out and "balance=" in out
    kl = read_keeplist(d / "kl.keep")
    assert kl.n_kept == 270
    assert kl.parent_digest != ""

    assert main(["balance", "--labels", str(d / "train.lbl"),
                 "--keep", str(d / "kl.keep")]) == 0
    printed = capsys.readouterr().out.strip()
    assert 0.0 <= float(printed) <= 1.0
    assert len(printed.split(".")[1]) == 3  # three decimals

    assert main(["train", "--embeddings", str(d / "train.emb"),
                 "--labels", str(d / "train.lbl"), "--keep", str(d / "kl.keep"),
                 "--test-embeddings", str(d / "test.emb"),
                 "--test-labels", str(d / "test.lbl"),
                 "--n-grid", "30,60,120", "--repeats", "2", "--epochs", "5",
                 "--seed", "3", "--out", str(d / "simple.csv")]) == 0
    curve = read_curve(d / "simple.csv")
    assert [p.n for p in curve.points] == [30, 60, 120]
    capsys.readouterr()

    assert main(["scale-fit", str(d / "simple.csv"), "--out", str(d / "fits.csv")]) == 0
    rows = read_fit_summary(d / "fits.csv")
    assert rows[0][0] == "simple" and rows[0][4] == 3
    assert "strategy" in capsys.readouterr().out


def test_prune_per_cluster_needs_assignments(dataset, capsys):
    d = dataset
    assert main(["cluster", "--embeddings", str(d / "train.emb"), "--k", "3",
                 "--n-init", "2", "--seed", "5", "--out", str(d / "km")]) == 0
    capsys.readouterr()
    code = main(["prune", "--scores", str(d / "km.dist.emb"), "--method", "simple",
                 "--fraction", "0.2", "--scope", "per_cluster",
                 "--out", str(d / "kl.keep")])
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error:contract:")

    assert main(["prune", "--scores", str(d / "km.dist.emb"), "--method", "simple",
                 "--fraction", "0.2", "--scope", "per_cluster",
                 "--clusters", str(d / "km.assign.lbl"),
                 "--out", str(d / "kl.keep")]) == 0
    assert read_keeplist(d / "kl.keep").scope == "per_cluster"


def test_missing_file_gives_io_error(tmp_path, capsys):
    code = main(["balance", "--labels", str(tmp_path / "nope.lbl")])
    assert code == 1
    assert capsys.readouterr().err.startswith("error:io:")


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["balance", "--no-such-flag"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_bad_format_gives_format_error(tmp_path, capsys):
    bad = tmp_path / "bad.emb"
    bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNK")
    code = main(["pca", "--embeddings", str(bad), "--components", "2",
                 "--out", str(tmp_path / "p")])
    assert code == 1
    assert capsys.readouterr().err.startswith("error:format:")


MANIFEST = """\
seed: 7
inputs:
  train_embeddings: train.emb
  train_labels: train.lbl
  test_embeddings: test.emb
  test_labels: test.lbl
cluster:
  k: 3
  n_init: 4
prune:
  scope: global
  specs:
    - {method: random, fraction: 0.4}
    - {method: simple, fraction: 0.4}
    - {method: hard, fraction: 0.4}
curve:
  n_grid: [30, 60, 120]
  repeats: 2
probe:
  epochs: 5
"""


def test_run_end_to_end(dataset, capsys):
    d = dataset
    (d / "manifest.yaml").write_text(MANIFEST)
    assert main(["run", str(d / "manifest.yaml"), "--out", str(d / "out")]) == 0
    out = capsys.readouterr().out
    assert "nu=" in out

    report = json.loads((d / "out" / "report.json").read_text())
    strategies = {"identity", "random_0.4", "simple_0.4", "hard_0.4"}
    assert set(report["keep_digests"]) == strategies
    assert {row["strategy"] for row in report["fits"]} == strategies
    assert {row["strategy"] for row in report["balance"]} == strategies
    verify_report(d / "out")

    # identical manifest -> identical artifact digests
    report2 = run_experiment(d / "manifest.yaml", d / "out2")
    assert report2["artifacts"] == report["artifacts"]


def test_run_rejects_oversized_grid(dataset, capsys):
    d = dataset
    (d / "manifest.yaml").write_text(MANIFEST.replace("[30, 60, 120]", "[30, 60, 400]"))
    code = main(["run", str(d / "manifest.yaml"), "--out", str(d / "out")])
    assert code == 1
    err = capsys.readouterr().err
    # aborts naming the (strategy, N) pair that cannot be satisfied
    assert "random_0.4" in err and "400" in err
    assert err.startswith("error:contract: stage curves")


def test_run_with_pca_section(dataset):
    d = dataset
    (d / "manifest.yaml").write_text(MANIFEST + "pca:\n  components: 4\n")
    report = run_experiment(d / "manifest.yaml", d / "outp")
    assert "pca.components.emb" in report["artifacts"]
    assert read_embeddings(d / "outp" / "pca.components.emb").values.shape == (4, 8)
