"""Command-line subcommands, exit codes and reproducibility."""

import json

import numpy as np
import pytest

from fleetgroup.cli import EXIT_ERROR, EXIT_OK, EXIT_RECORD_FAILURES, main
from fleetgroup.fleet_data import EntityDataset, FleetDataset, write_fleet_csv

from conftest import line_fleet


@pytest.fixture(scope="module")
def clear_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("clear")
    assert main(["generate", "--kind", "clear", "--seed", "7", "--out", str(d)]) == EXIT_OK
    assert main(["sweep", "--in", str(d / "fleet.csv"), "--out", str(d)]) == EXIT_OK
    return d


def test_generate_writes_files(clear_run):
    for name in ("fleet.csv", "labels.csv", "meta.json"):
        assert (clear_run / name).is_file()
    assert len((clear_run / "labels.csv").read_text().splitlines()) == 31


def test_generate_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["generate", "--kind", "fuzzy", "--seed", "3", "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a/fleet.csv").read_bytes() == (tmp_path / "b/fleet.csv").read_bytes()
    assert (tmp_path / "a/labels.csv").read_bytes() == (tmp_path / "b/labels.csv").read_bytes()
    meta = [json.loads((tmp_path / d / "meta.json").read_text()) for d in "ab"]
    for m in meta:
        m.pop("generated_at")
    assert meta[0] == meta[1]


def test_generate_bad_kind(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--kind", "bogus", "--out", "x"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_an_error():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--in", "a", "--out", "b", "--frobnicate"])
    assert exc.value.code != 0


def test_sweep_outputs(clear_run):
    elbow = json.loads((clear_run / "elbow.json").read_text())
    assert elbow["verdict"] == "clear_grouping" and elbow["k_star"] == 5
    assert len(elbow["membership"]) == 5
    rows = (clear_run / "sweep.csv").read_text().splitlines()
    assert rows[0] == "lambda,k,eta,failed"
    from fleetgroup.fleet_data import load_fleet_csv
    from fleetgroup.graph import read_matrix_csv
    from fleetgroup.meta_validation import lambda_grid

    assert len(rows) - 1 == len(lambda_grid(read_matrix_csv(clear_run / "rprime.csv")))
    assert (clear_run / "curve.csv").read_text().startswith("k,eta\n")
    part = (clear_run / "partition.csv").read_text().splitlines()
    assert part[0] == "entity_id,community_index" and len(part) == 31
    assert len(load_fleet_csv(clear_run / "fleet.csv")) == 30


def test_sweep_is_reproducible(clear_run, tmp_path):
    assert main(["sweep", "--in", str(clear_run / "fleet.csv"), "--out", str(tmp_path)]) == EXIT_OK
    for name in ("sweep.csv", "curve.csv", "elbow.json", "rprime.csv", "partition.csv"):
        assert (tmp_path / name).read_bytes() == (clear_run / name).read_bytes()


def test_report_with_labels(clear_run, capsys):
    assert main(["report", "--in", str(clear_run), "--labels", str(clear_run / "labels.csv")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "verdict: clear_grouping" in out
    assert "adjusted Rand index vs labels: 1.0000" in out


def test_report_without_sweep(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path)]) == EXIT_ERROR
    assert "elbow.json" in capsys.readouterr().err


def test_cluster_below_min_gives_singletons(clear_run, tmp_path):
    assert main(["cluster", "--in", str(clear_run / "fleet.csv"), "--out", str(tmp_path), "--lambda", "1e-6"]) == EXIT_OK
    labels = [r.split(",")[1] for r in (tmp_path / "partition.csv").read_text().splitlines()[1:]]
    assert len(set(labels)) == 30
    assert (tmp_path / "edges.csv").read_text() == "source,target\n"


def test_cluster_two_noise_free_populations(tmp_path):
    fleet = line_fleet([1.0, 1.0, 1.0, 4.0, 4.0, 4.0])
    write_fleet_csv(fleet, tmp_path / "f.csv")
    assert main(["cluster", "--in", str(tmp_path / "f.csv"), "--out", str(tmp_path), "--lambda", "0.5"]) == EXIT_OK
    info = json.loads((tmp_path / "cluster.json").read_text())
    assert info["k"] == 2 and info["modularity"] == pytest.approx(0.5)


def test_missing_input(tmp_path, capsys):
    code = main(["cluster", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path), "--lambda", "1"])
    assert code == EXIT_ERROR
    assert "NoSuchFile" in capsys.readouterr().err


def test_sweep_with_failed_records_exits_nonzero(tmp_path):
    rng = np.random.default_rng(0)
    ents = [EntityDataset(f"e{i}", rng.uniform(0, 1, (2, 1)), rng.standard_normal(2)) for i in range(4)]
    write_fleet_csv(FleetDataset(tuple(ents)), tmp_path / "f.csv")
    assert main(["sweep", "--in", str(tmp_path / "f.csv"), "--out", str(tmp_path)]) == EXIT_RECORD_FAILURES
    assert "1" in (tmp_path / "sweep.csv").read_text().splitlines()[1].split(",")[-1]


def test_show_config(capsys):
    assert main(["--show-config"]) == EXIT_OK
    defaults = json.loads(capsys.readouterr().out)
    assert defaults["quantiles"] == 40 and defaults["split"] == 0.7 and defaults["degree"] == 1
    assert defaults["elbow_clear"] == 0.5 and defaults["elbow_fuzzy"] == 0.15
    assert main(["sweep", "--in", "a", "--out", "b", "--show-config"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["input"] == "a"
