"""Command-line surface: subcommands, output shapes, exit codes."""

import json

import pytest

from conftest import FIXTURES

from intentgap.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main


def test_validate_accepts_bundled_suite(capsys):
    code = main(["validate", str(FIXTURES / "suite")])
    assert code == EXIT_OK
    assert "suite ok: 6 tasks" in capsys.readouterr().out


def test_validate_flags_broken_app_reference(tmp_path, capsys):
    suite_dir = tmp_path / "suite"
    (suite_dir / "tasks").mkdir(parents=True)
    source = json.loads(
        (FIXTURES / "suite" / "tasks" / "coffee_latte.json").read_text())
    source["mock_app"] = "apps/missing.json"
    (suite_dir / "tasks" / "coffee_latte.json").write_text(json.dumps(source))
    (suite_dir / "manifest.json").write_text(json.dumps(
        {"tasks": ["coffee_latte"], "tags": {}}))

    code = main(["validate", str(suite_dir)])
    assert code == EXIT_INVALID
    assert "APP_LOAD" in capsys.readouterr().out


def test_derive_prints_all_levels(capsys):
    code = main([
        "derive", str(FIXTURES / "suite" / "tasks" / "coffee_latte.json"),
        "--hypernyms", str(FIXTURES / "suite" / "hypernyms.json")])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"Detailed", "Standard", "Incomplete", "Ambiguous"}
    assert doc["Standard"]["text"] == (
        "Get the Latte in BeanBar; choose Large for the size.")
    assert doc["Incomplete"]["text"] == "Get the Latte in BeanBar."
    assert doc["Ambiguous"]["text"] == "Get a hot drink in BeanBar."
    assert doc["Detailed"]["includes_path"] is True
    assert doc["Ambiguous"]["covered_ids"] == []


def test_derive_without_hypernyms_skips_ambiguous(capsys):
    code = main([
        "derive", str(FIXTURES / "suite" / "tasks" / "coffee_latte.json")])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"Detailed", "Standard", "Incomplete"}


def test_derive_honours_mask(capsys):
    code = main([
        "derive", str(FIXTURES / "suite" / "tasks" / "mcd_filet_meal.json"),
        "--mask", "ice"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["Incomplete"]["text"] == (
        "Get the Filet-O-Fish Meal in BurgerHub; "
        "choose Medium Coke Zero for the beverage.")
    assert doc["Incomplete"]["covered_ids"] == ["beverage", "item"]


def test_derive_rejects_anchor_in_mask(capsys):
    code = main([
        "derive", str(FIXTURES / "suite" / "tasks" / "mcd_filet_meal.json"),
        "--mask", "item"])
    assert code == EXIT_INVALID
    assert "invalid input" in capsys.readouterr().err


def run_config_file(tmp_path, **overrides) -> str:
    doc = {
        "suite": str(FIXTURES / "suite"),
        "output_dir": str(tmp_path / "runs"),
        "run_id": "cli",
        "clarity_filter": ["Detailed"],
        "agent": {"kind": "plan", "asking": True},
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_run_adjudicate_replay_report_pipeline(tmp_path, capsys):
    config = run_config_file(tmp_path)

    assert main(["run", config]) == EXIT_OK
    run_dir = capsys.readouterr().out.strip()
    assert run_dir.endswith("cli")

    assert main(["adjudicate", run_dir]) == EXIT_OK
    table = capsys.readouterr().out
    assert "Overall" in table and "TSR" in table

    assert main(["replay", run_dir]) == EXIT_OK
    assert "replay clean" in capsys.readouterr().out

    assert main(["report", run_dir, "--by", "domain"]) == EXIT_OK
    sectioned = capsys.readouterr().out
    assert "Domain:E-commerce" in sectioned
    assert "Clarity:" not in sectioned


def test_run_twice_fails_at_runtime(tmp_path, capsys):
    config = run_config_file(tmp_path)
    assert main(["run", config]) == EXIT_OK
    capsys.readouterr()
    assert main(["run", config]) == EXIT_RUNTIME
    assert "RUN_EXISTS" in capsys.readouterr().err


def test_run_with_unknown_oracle_kind(tmp_path, capsys):
    config = run_config_file(tmp_path, oracle={"kind": "psychic"})
    assert main(["run", config]) == EXIT_RUNTIME
    assert "ORACLE_KIND" in capsys.readouterr().err


def test_report_with_annotations_appendix(tmp_path, capsys):
    config = run_config_file(tmp_path)
    main(["run", config])
    run_dir = capsys.readouterr().out.strip()
    main(["adjudicate", run_dir])
    capsys.readouterr()

    code = main(["report", run_dir,
                 "--annotations", str(FIXTURES / "annotations" / "ratings.json")])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "fill_agreement" in out
    body = out.split("\n\n", 1)[1]
    agreement = json.loads(body)
    assert 0.0 < agreement["kappa"]["overall"] < 1.0


def test_replay_detects_tampered_packet(tmp_path, capsys):
    config = run_config_file(tmp_path)
    main(["run", config])
    run_dir = capsys.readouterr().out.strip()
    main(["adjudicate", run_dir])
    capsys.readouterr()

    from pathlib import Path

    packet = Path(run_dir) / "packets" / "coffee_latte_Detailed"
    trace = packet / "trace.jsonl"
    trace.write_text(trace.read_text() + "{\"type\": \"forged\"}\n")

    assert main(["replay", run_dir]) == EXIT_RUNTIME
    err = capsys.readouterr().err
    assert "TRACE_TAMPERED" in err
    # The packet was quarantined, not left in place.
    assert not packet.exists()
    assert (Path(run_dir) / "quarantine" / "coffee_latte_Detailed").exists()


def test_missing_run_dir_is_runtime_failure(tmp_path, capsys):
    assert main(["adjudicate", str(tmp_path / "nope")]) == EXIT_RUNTIME
    assert "runtime failure" in capsys.readouterr().err
