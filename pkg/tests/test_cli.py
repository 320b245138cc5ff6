import json
import subprocess
import sys

import pytest

from deftopo.cli import EXIT_FAILURE, EXIT_INVALID, EXIT_OK, RunConfig, fixture_dir, main

from helpers import FIXTURES


def path(name):
    return str(fixture_dir() / f"{name}.top")


def run_json(tmp_path, *argv):
    out = tmp_path / "out.json"
    code = main([*argv, "--json", str(out)])
    return code, json.loads(out.read_text(encoding="utf-8"))


@pytest.mark.parametrize("name", FIXTURES)
def test_check_valid_fixtures(name, capsys):
    assert main(["check", path(name)]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "valid"


def test_check_invalid_reports_witness(capsys, tmp_path):
    code, data = run_json(tmp_path, "check", path("broken_membership"))
    assert code == EXIT_INVALID
    out = capsys.readouterr().out
    assert "membership: a=1/2, eps=1/4" in out
    assert data["failures"][0]["witness"] == {"a": "1/2", "eps": "1/4"}


def test_syntax_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.top"
    bad.write_text("space { (0,1) }\ntopology {\n  on (0,1) at a: { (a - eps, ) };\n}\n", encoding="utf-8")
    assert main(["analyze", str(bad)]) == EXIT_INVALID
    assert "syntax error" in capsys.readouterr().out


def test_missing_file_exit_code(tmp_path):
    assert main(["analyze", str(tmp_path / "nope.top")]) == EXIT_FAILURE


def test_analyze_paper42(tmp_path):
    code, data = run_json(tmp_path, "analyze", path("paper42"))
    assert code == EXIT_OK
    v = data["verdict"]
    assert v["hausdorff"] is True and v["regular"] is False and v["affinizable"] is False


def test_decide_nonhaus(capsys):
    assert main(["decide", path("nonhaus")]) == EXIT_OK
    assert "hausdorff" in capsys.readouterr().out.lower()


def test_shadows_lex(capsys):
    assert main(["shadows", path("lex")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "{a, a + 2}" in out and "{a, a - 2}" in out


def test_shadows_at_point(tmp_path):
    code, data = run_json(tmp_path, "shadows", path("infty"), "--at", "2")
    assert code == EXIT_OK
    assert "{0} ∪ {2} ∪ {4}" in json.dumps(data, ensure_ascii=False)


def test_closure(capsys):
    assert main(["closure", path("infty"), "(0,1/8)"]) == EXIT_OK
    assert "(0,1/8] ∪ {2}" in capsys.readouterr().out


def test_embed_infty(tmp_path):
    code, data = run_json(tmp_path, "embed", path("infty"))
    assert code == EXIT_OK
    assert len(data["anchors"]) == 1 and len(data["curves"]) == 2


def test_embed_not_affinizable_is_not_an_error(capsys):
    assert main(["embed", path("lex")]) == EXIT_OK
    assert "not affinizable" in capsys.readouterr().out


def test_oracle_command(tmp_path):
    code, data = run_json(tmp_path, "oracle", path("chain"), "--resolution", "6", "--depth", "8")
    assert code == EXIT_OK
    assert data["discrepancies"] == [] and data["resolution"] == 6


def test_json_is_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    main(["analyze", path("chain"), "--json", str(a)])
    main(["analyze", path("chain"), "--json", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_bad_resolution():
    assert main(["oracle", path("affine"), "--resolution", "0"]) == EXIT_FAILURE


def test_run_config_validates():
    with pytest.raises(ValueError):
        RunConfig(path("affine"), "nonsense", None)


def test_suite_passes(capsys):
    assert main(["suite"]) == EXIT_OK
    assert "MISMATCH" not in capsys.readouterr().out


@pytest.mark.slow
def test_suite_with_oracle(capsys):
    assert main(["suite", "--with-oracle"]) == EXIT_OK


def flipped_manifest(tmp_path):
    m = json.loads((fixture_dir() / "expected.json").read_text(encoding="utf-8"))
    for entry in m["fixtures"].values():
        entry["file"] = str(fixture_dir() / entry["file"])
    m["fixtures"]["lex"]["expect"]["affinizable"] = True
    p = tmp_path / "flipped.json"
    p.write_text(json.dumps(m), encoding="utf-8")
    return p


def test_flipped_manifest_fails(tmp_path, capsys):
    report = tmp_path / "suite.json"
    assert main(["suite", "--manifest", str(flipped_manifest(tmp_path)), "--json", str(report)]) == EXIT_FAILURE
    out = capsys.readouterr().out
    assert "MISMATCH" in out and "affinizable: expected true, got false" in out
    data = json.loads(report.read_text(encoding="utf-8"))
    assert data["mismatches"] == 1


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "deftopo.cli", "check", path("affine")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "valid"
