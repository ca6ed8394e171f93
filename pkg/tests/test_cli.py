import dataclasses
import json

from fastapi.testclient import TestClient

from metaglyph import cli
from metaglyph.config import EngineConfig, SearchConfig
from metaglyph.service import create_app

from conftest import BURGER_CSV, many_elements_svg, stacked_svg, svg_doc


def run(argv):
    return cli.main(argv)


def test_generate_writes_outputs_and_reports(tmp_path, corpus_dir, burger_csv_path, capsys):
    out = tmp_path / "out"
    code = run(["generate", str(burger_csv_path), "--corpus", str(corpus_dir),
                "--out", str(out), "--seed", "7", "--iterations", "400"])
    assert code == 0
    assert (out / "rank1.svg").exists()
    assert (out / "rank1.legend.svg").exists()
    assert (out / "rank1.mapping.json").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["topic"] == "burger"
    assert report["seed"] == 7
    assert report["results"]
    statuses = {c["candidate_id"]: c["status"] for c in report["candidates"]}
    assert statuses["burger.svg"] == "ok"
    assert "files" in report
    printed = capsys.readouterr().out
    assert "result(s)" in printed


def test_generate_deterministic_bytes(tmp_path, corpus_dir, burger_csv_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run(["generate", str(burger_csv_path), "--corpus", str(corpus_dir),
                    "--out", str(out), "--seed", "7", "--iterations", "400"]) == 0
    assert (out1 / "rank1.svg").read_bytes() == (out2 / "rank1.svg").read_bytes()
    assert (out1 / "rank1.mapping.json").read_text() == \
        (out2 / "rank1.mapping.json").read_text()


def test_generate_parallel_jobs_matches_sequential(tmp_path, corpus_dir,
                                                   burger_csv_path):
    seq, par = tmp_path / "seq", tmp_path / "par"
    for out, jobs in ((seq, "1"), (par, "3")):
        assert run(["generate", str(burger_csv_path), "--corpus", str(corpus_dir),
                    "--out", str(out), "--seed", "7", "--iterations", "400",
                    "--jobs", jobs]) == 0
    assert (seq / "rank1.svg").read_bytes() == (par / "rank1.svg").read_bytes()
    seq_report = json.loads((seq / "report.json").read_text())
    par_report = json.loads((par / "report.json").read_text())
    assert [r["candidate_id"] for r in seq_report["results"]] == \
        [r["candidate_id"] for r in par_report["results"]]


def test_generate_missing_inputs_exit_1(tmp_path, burger_csv_path):
    assert run(["generate", str(burger_csv_path), "--corpus",
                str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 1
    assert run(["generate", str(tmp_path / "missing.csv"), "--corpus",
                str(tmp_path), "--out", str(tmp_path / "o")]) == 1


def test_generate_no_results_exit_2(tmp_path, burger_csv_path):
    empty = tmp_path / "empty-corpus"
    empty.mkdir()
    out = tmp_path / "out"
    assert run(["generate", str(burger_csv_path), "--corpus", str(empty),
                "--out", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["results"] == []


def test_cli_matches_service_results(tmp_path, corpus_dir, burger_csv_path):
    out = tmp_path / "out"
    assert run(["generate", str(burger_csv_path), "--corpus", str(corpus_dir),
                "--out", str(out), "--seed", "7", "--iterations", "400"]) == 0
    cfg = dataclasses.replace(
        EngineConfig(), corpus_dir=str(corpus_dir), seed=7,
        search=SearchConfig(iterations=400, time_budget_ms=None))
    client = TestClient(create_app(config=cfg))
    session = client.post("/sessions", files={
        "file": ("burger.csv", BURGER_CSV, "text/csv")}).json()
    g = client.post(f"/sessions/{session['session_id']}/generate",
                    json={"revision": session["revision"]}).json()
    cli_svg = (out / "rank1.svg").read_bytes()
    assert g["results"][0]["svg"].encode() == cli_svg


def test_oracle_prints_optimum(tmp_path, capsys):
    csv_path = tmp_path / "pair.csv"
    csv_path.write_text("alpha,beta\n1,2\n3,4\n")
    svg_path = tmp_path / "img.svg"
    svg_path.write_bytes(stacked_svg())
    assert run(["oracle", str(csv_path), str(svg_path)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["space_size"] == 64
    assert 0.0 <= payload["max_reward"] <= 1.0
    assert len(payload["argmax"]["pairs"]) == 2


def test_oracle_space_guard(tmp_path, capsys):
    csv_path = tmp_path / "wide.csv"
    header = ",".join(f"col{i}" for i in range(10))
    csv_path.write_text(header + "\n" + ",".join("1" for _ in range(10)) + "\n"
                        + ",".join("2" for _ in range(10)) + "\n")
    svg_path = tmp_path / "img.svg"
    svg_path.write_bytes(many_elements_svg(8))
    assert run(["oracle", str(csv_path), str(svg_path)]) == 1
    assert "space_too_large" in capsys.readouterr().err


def test_corpus_add_validates(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    good = tmp_path / "good.svg"
    good.write_bytes(stacked_svg())
    raster = tmp_path / "raster.svg"
    raster.write_bytes(svg_doc('<image href="x.png"/>'))
    assert run(["corpus", "--corpus", str(corpus), "add", str(good),
                str(raster)]) == 0
    printed = capsys.readouterr().out
    assert "good.svg: accepted" in printed
    assert "raster.svg: rejected [svg_unsupported_feature]" in printed
    assert (corpus / "good.svg").exists()
    assert not (corpus / "raster.svg").exists()
    # all-invalid add exits nonzero
    assert run(["corpus", "--corpus", str(corpus), "add", str(raster)]) == 1


def test_corpus_tag_and_list(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    good = tmp_path / "burger.svg"
    good.write_bytes(stacked_svg())
    run(["corpus", "--corpus", str(corpus), "add", str(good)])
    assert run(["corpus", "--corpus", str(corpus), "tag", "burger.svg",
                "burger", "food"]) == 0
    assert run(["corpus", "--corpus", str(corpus), "list"]) == 0
    printed = capsys.readouterr().out
    assert "burger, food" in printed
    assert "4 essential" in printed


def test_strict_axis_gate_flag(tmp_path, corpus_dir, burger_csv_path):
    out = tmp_path / "strict"
    code = run(["generate", str(burger_csv_path), "--corpus", str(corpus_dir),
                "--out", str(out), "--seed", "7", "--iterations", "400",
                "--strict-axis-gate"])
    assert code in (0, 2)
    report = json.loads((out / "report.json").read_text())
    for r in report["results"]:
        assert r["reward_breakdown"]["n_axes"] <= 1
