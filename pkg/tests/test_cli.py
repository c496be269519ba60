import csv
import io
import json
import subprocess
import sys

import pytest
from conftest import SCENARIOS

from consentify.cli import main
from consentify.commands import EXIT_FAIL, EXIT_INPUT, EXIT_OK, EXIT_REFUSED, run_laws
from consentify.scenario import ScenarioError, load
from consentify.towers import closure


def scenario(name):
    return str(SCENARIOS / name)


# -- validate ------------------------------------------------------------


def test_validate_minimal_abstract(capsys):
    assert main(["validate", "--scenario", scenario("dominance_2x2.json")]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "ok"


def test_negative_endowment_names_the_field(capsys):
    assert main(["validate", "--scenario", scenario("invalid/negative_endowment.json")]) == EXIT_FAIL
    assert "agents[0].endowment[1]" in capsys.readouterr().err


def test_depth0_with_non_aggression_fails(capsys):
    assert main(["validate", "--scenario", scenario("invalid/depth0_non_aggression.json")]) == EXIT_FAIL
    assert "non_aggression" in capsys.readouterr().err


def test_parse_error_and_missing_file_are_input_errors(tmp_path):
    assert main(["validate", "--scenario", scenario("invalid/truncated.json")]) == EXIT_INPUT
    assert main(["validate", "--scenario", str(tmp_path / "absent.json")]) == EXIT_INPUT


def test_unknown_fields_rejected(tmp_path, capsys):
    doc = json.loads((SCENARIOS / "dominance_2x2.json").read_text())
    doc["colour"] = "blue"
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", "--scenario", str(path)]) == EXIT_FAIL
    assert "colour" in capsys.readouterr().err


def test_run_commands_treat_invalid_scenarios_as_input_errors():
    assert main(["laws", "--scenario", scenario("invalid/negative_endowment.json")]) == EXIT_INPUT


def test_scenario_error_lists_paths():
    with pytest.raises(ScenarioError) as err:
        load((SCENARIOS / "invalid" / "negative_endowment.json").read_bytes())
    assert any(path == "agents[0].endowment[1]" for path, _ in err.value.issues)


# -- laws ----------------------------------------------------------------


def test_laws_pass_on_the_abstract_instance():
    built = load((SCENARIOS / "abstract_2x2_d1.json").read_bytes())
    report = run_laws(built, 7)
    assert report.exit_code == EXIT_OK
    assert report.summary()["PASS"] == len(report.checks)


def test_corrupted_closure_fails_with_witness():
    def lossy(R, n, universe):
        # drops one member, breaking extensivity
        return universe.subset(list(closure(R, n, universe))[1:])

    built = load((SCENARIOS / "abstract_2x2_d1.json").read_bytes())
    report = run_laws(built, 7, closure_fn=lossy)
    failed = [c for c in report.checks if c.verdict == "FAIL"]
    assert failed and report.exit_code == EXIT_FAIL
    assert all(c.witness for c in failed)


def test_depth2_exhaustive_is_refused_with_estimate(capsys):
    assert main(["laws", "--scenario", scenario("abstract_2x2_d2.json")]) == EXIT_REFUSED
    doc = json.loads(capsys.readouterr().out)
    refused = [c for c in doc["checks"] if c["verdict"] == "REFUSED"]
    assert refused
    assert any("2^" in c["detail"]["reason"] for c in refused)


def test_budget_flag_forces_refusal(capsys):
    assert main(["laws", "--scenario", scenario("abstract_2x2_d1.json"), "--budget", "10"]) == EXIT_REFUSED
    assert main(["laws", "--scenario", scenario("abstract_2x2_d1.json"), "--budget", "0"]) == EXIT_INPUT


# -- prices and equilibria -----------------------------------------------


def test_prices_refused_for_abstract_scenarios():
    assert main(["prices", "--scenario", scenario("dominance_2x2.json")]) == EXIT_REFUSED


def test_empty_dictionary_is_vacuous_everywhere(capsys):
    assert main(["prices", "--scenario", scenario("exchange_empty_dictionary.json")]) == EXIT_FAIL
    doc = json.loads(capsys.readouterr().out)
    verdicts = {c["verdict"] for c in doc["checks"] if c["name"].startswith("prices_are_good")}
    assert verdicts == {"VACUOUS-FAIL"}


def test_zero_price_dictionary_records_verdicts(capsys):
    main(["prices", "--scenario", scenario("exchange_zero_price.json")])
    doc = json.loads(capsys.readouterr().out)
    rows = [c for c in doc["checks"] if c["name"].startswith("prices_are_good")]
    assert len(rows) == 8
    assert {c["verdict"] for c in rows} <= {"PASS", "FAIL", "VACUOUS-FAIL"}


def test_dominance_equilibria(capsys):
    assert main(["equilibria", "--scenario", scenario("dominance_2x2.json")]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    (eq,) = doc["tables"]["equilibria"]["equilibria"]
    assert eq["profile"] == {"alpha": "d", "beta": "d"}


def test_enumerate_dumps_towers(capsys):
    assert main(["enumerate", "--scenario", scenario("abstract_2x2_d1.json"), "--agent", "alpha"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["tables"]["alpha"]) == 32
    assert main(["enumerate", "--scenario", scenario("abstract_2x2_d1.json"), "--agent", "nobody"]) == EXIT_INPUT


# -- report output -------------------------------------------------------


def test_csv_report(tmp_path):
    out = tmp_path / "r.csv"
    main(["laws", "--scenario", scenario("abstract_2x2_d1.json"), "--format", "csv", "--report", str(out)])
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["kind", "name", "verdict", "detail", "witness"]
    assert {r[0] for r in rows[1:]} == {"meta", "check"}
    assert all(r[2] == "PASS" for r in rows if r[0] == "check")


def test_reports_are_byte_identical(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        main(["equilibria", "--scenario", scenario("abstract_2x2_d1.json"), "--report", str(p)])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_report_binds_scenario_digest(tmp_path, capsys):
    import hashlib

    main(["equilibria", "--scenario", scenario("dominance_2x2.json")])
    doc = json.loads(capsys.readouterr().out)
    assert doc["scenario_sha256"] == hashlib.sha256((SCENARIOS / "dominance_2x2.json").read_bytes()).hexdigest()
    assert "wall_time_seconds" not in doc
    main(["equilibria", "--scenario", scenario("dominance_2x2.json"), "--timing"])
    assert "wall_time_seconds" in json.loads(capsys.readouterr().out)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "consentify.cli", "validate", "--scenario", scenario("dominance_2x2.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "ok"
