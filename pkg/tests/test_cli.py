import json
from pathlib import Path as FsPath

import pytest

from nullgvn.cli import main
from nullgvn.corpus import bundled_sources

REPO = FsPath(__file__).resolve().parents[1]
CORPUS = REPO / "corpus"


@pytest.fixture()
def chained(tmp_path):
    path = tmp_path / "chained.ir"
    path.write_text(bundled_sources()["chained_field_equiv"], encoding="utf-8")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_json_schema(capsys, chained):
    code, out, _ = run(capsys, "analyze", chained, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["asserts_total"] == 1
    assert data["asserts_unproved"] == 0
    assert set(data["timings_ms"]) == {"parse", "lift", "ssa", "gvn", "solve"}


def test_analyze_levels_flip_verdict(capsys, chained):
    code, out, _ = run(capsys, "analyze", chained, "--transform", "ssa", "--format", "json")
    assert code == 0 and json.loads(out)["asserts_unproved"] == 1
    code, out, _ = run(capsys, "analyze", chained, "--transform", "ssa+gvn", "--format", "json")
    assert code == 0 and json.loads(out)["asserts_unproved"] == 0


def test_analyze_check_semantics(capsys, chained):
    code, _, err = run(capsys, "analyze", chained, "--check-semantics", "--depth", "64")
    assert code == 0, err


def test_emit_transformed_decouples(capsys, tmp_path, chained):
    emitted = tmp_path / "out.ir"
    code, out, _ = run(
        capsys, "analyze", chained, "--format", "json", "--emit-transformed", emitted
    )
    assert code == 0
    one_shot = json.loads(out)
    code, out, _ = run(capsys, "analyze", emitted, "--transform", "none", "--format", "json")
    assert code == 0
    reanalyzed = json.loads(out)
    assert reanalyzed["asserts_total"] == one_shot["asserts_total"]
    assert reanalyzed["asserts_unproved"] == one_shot["asserts_unproved"]
    verdicts = lambda d: [a["verdict"] for a in d["per_assert"]]
    assert verdicts(reanalyzed) == verdicts(one_shot)


def test_transform_round_trips(capsys, chained):
    code, out, _ = run(capsys, "transform", chained, "--level", "ssa+gvn")
    assert code == 0
    assert "gvnTmp__gvn1" in out


def test_gen_deterministic(capsys):
    code, first, _ = run(capsys, "gen", "--seed", "11")
    assert code == 0
    code, second, _ = run(capsys, "gen", "--seed", "11")
    assert first == second


def test_gen_config_file(capsys, tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("seed=3\nloop_prob=0.0\nnull_check_density=1.0\n", encoding="utf-8")
    code, out, _ = run(capsys, "gen", "--config", cfg)
    assert code == 0
    assert "procedure main()" in out


def test_check_semantics_subcommand(capsys):
    code, out, _ = run(
        capsys, "check-semantics", CORPUS / "loop_multi_exit.ir", "--depth", "64"
    )
    assert code == 0
    assert "equivalent" in out


def test_check_semantics_dump(capsys, tmp_path, chained):
    dump = tmp_path / "traces.jsonl"
    code, _, _ = run(capsys, "check-semantics", chained, "--dump-traces", dump)
    assert code == 0
    lines = dump.read_text(encoding="utf-8").splitlines()
    assert lines and all(json.loads(l) for l in lines)


def test_report_table(capsys):
    code, out, _ = run(capsys, "report", CORPUS, "--jobs", "4")
    assert code == 0
    assert "bench" in out and "total" in out
    assert "chained_field_equiv" in out


def test_report_json(capsys):
    code, out, _ = run(capsys, "report", CORPUS, "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert len(rows) >= 17
    row = {r["bench"]: r for r in rows}["guarded_copy"]
    assert row["ssa_unproved"] == 1 and row["gvn_unproved"] == 0


def test_reports_identical_modulo_timings(capsys, chained):
    def strip(d):
        return {k: v for k, v in d.items() if k != "timings_ms"}

    _, first, _ = run(capsys, "analyze", chained, "--format", "json")
    _, second, _ = run(capsys, "analyze", chained, "--format", "json")
    assert strip(json.loads(first)) == strip(json.loads(second))


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.ir"
    bad.write_text("procedure main() {", encoding="utf-8")
    code, _, err = run(capsys, "analyze", bad)
    assert code == 1
    assert "error" in err


def test_missing_corpus_dir(capsys, tmp_path):
    code, _, err = run(capsys, "report", tmp_path / "nothing")
    assert code == 1


def test_programmatic_run(chained):
    from nullgvn.cli import run as cli_run
    from nullgvn.pipeline import PipelineConfig

    code, reports = cli_run(
        PipelineConfig(inputs=[str(chained)], transform="ssa+gvn", check_semantics=True)
    )
    assert code == 0
    assert reports[0]["asserts_total"] == 1
    assert reports[0]["asserts_unproved"] == 0
