import json

import pytest

from gridlab.cli import main
from gridlab.fixtures import bar_chart, blank
from gridlab.raster import save_png


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    save_png(blank(256, 256), d / "blank.png")
    save_png(bar_chart(), d / "bar.png")
    return d


def _run(*argv):
    return main([str(a) for a in argv])


def test_grid_static_blank(workdir, capsys):
    out = workdir / "static.json"
    assert _run("grid", workdir / "blank.png", "--mode", "static", "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["mode"] == "static" and len(doc["blocks"]) == 64
    assert "64 blocks" in capsys.readouterr().out


def test_grid_adaptive_blank_single_block(workdir):
    out = workdir / "adaptive.json"
    assert _run("grid", workdir / "blank.png", "--mode", "adaptive", "--budget-ms", 300, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["mode"] == "adaptive" and len(doc["blocks"]) == 1


def test_grid_adaptive_chart_beats_static(workdir):
    out = workdir / "bar.json"
    overlay = workdir / "bar_overlay.png"
    assert _run(
        "grid", workdir / "bar.png", "--mode", "adaptive", "--budget-ms", 400,
        "--out", out, "--overlay", overlay, "--edges-out", workdir / "bar_edges.png",
    ) == 0
    doc = json.loads(out.read_text())
    assert len(doc["blocks"]) < 64
    assert overlay.exists() and (workdir / "bar_edges.png").exists()


def test_grid_reruns_byte_identical(workdir):
    a, b = workdir / "rerun_a.json", workdir / "rerun_b.json"
    _run("grid", workdir / "bar.png", "--mode", "adaptive", "--budget-ms", 400, "--out", a)
    _run("grid", workdir / "bar.png", "--mode", "adaptive", "--budget-ms", 400, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_cli_matches_store_pipeline(workdir):
    """CLI and service share the grid core: identical inputs, identical blocks."""
    from gridlab.store import AnnotationStore

    spec_doc = json.loads((workdir / "bar.json").read_text())
    store = AnnotationStore(workdir / "data")
    meta = store.create_stimulus((workdir / "bar.png").read_bytes(), task_prompt="t", budget_ms=400)
    assert meta["grid_specs"]["adaptive"]["blocks"] == spec_doc["blocks"]


def test_exit_code_2_on_validation(workdir, capsys):
    rc = _run("grid", workdir / "blank.png", "--mode", "static", "--static-n", 0, "--out", workdir / "x.json")
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InputError"


def test_exit_code_3_on_missing_file(workdir, capsys):
    rc = _run("grid", workdir / "nope.png", "--out", workdir / "x.json")
    assert rc == 3
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


def test_synth_aggregate_converge_roundtrip(workdir, capsys):
    anns = workdir / "anns"
    spec = workdir / "static.json"
    assert _run(
        "synth", "--spec", spec, "--truth", "cell-0-0,cell-1-1", "--flip-in", 0.1,
        "--flip-out", 0.05, "--count", 8, "--seed", 5, "--out", anns,
    ) == 0
    files = sorted(anns.glob("*.json"))
    assert len(files) == 8
    doc = json.loads(files[0].read_text())
    assert set(doc) == {
        "participant_id", "stimulus_id", "grid_mode", "selected_block_ids",
        "duration_ms", "click_count", "mouse_travel_px", "events",
    }

    map_out = workdir / "map.json"
    assert _run("aggregate", anns, "--spec", spec, "--out", map_out) == 0
    assert map_out.exists() and map_out.with_suffix(".png").exists()

    report = workdir / "report.json"
    svg = workdir / "curves.svg"
    assert _run(
        "converge", anns, "--spec", spec, "--metric", "all", "--orders", 3,
        "--seed", 11, "--out", report, "--svg", svg,
    ) == 0
    doc = json.loads(report.read_text())
    assert set(doc) == {"spearman", "ssim", "dice", "jaccard", "kl"}
    assert svg.read_text().startswith("<svg")

    # byte-identical reruns with identical flags
    report2 = workdir / "report2.json"
    _run("converge", anns, "--spec", spec, "--metric", "all", "--orders", 3, "--seed", 11, "--out", report2)
    assert report.read_bytes() == report2.read_bytes()


def test_synth_rejects_unknown_truth_ids(workdir, capsys):
    rc = _run("synth", "--spec", workdir / "static.json", "--truth", "nope-9", "--out", workdir / "zz")
    assert rc == 2
    assert "nope-9" in json.loads(capsys.readouterr().err)["message"]


def test_metrics_command_self_comparison(workdir, capsys):
    map_out = workdir / "map.json"
    rc = _run("metrics", "--a", map_out, "--b", map_out, "--metric", "all")
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    for name in ("ssim", "dice", "jaccard", "kl"):
        assert doc[name]["similarity01"] == pytest.approx(1.0, abs=1e-9)


def test_metrics_command_png_input(workdir, capsys):
    rc = _run("metrics", "--a", workdir / "map.png", "--b", workdir / "map.png", "--metric", "dice")
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["similarity01"] == pytest.approx(1.0)


def test_aggregate_errors_on_empty_dir(workdir, tmp_path, capsys):
    empty = tmp_path / "none"
    empty.mkdir()
    rc = _run("aggregate", empty, "--spec", workdir / "static.json", "--out", tmp_path / "m.json")
    assert rc == 2
