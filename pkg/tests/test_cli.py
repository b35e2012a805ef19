import json

import pytest

from handlers.error_handlers import EXIT_ABORT, EXIT_USAGE, EXIT_VERIFICATION
from lib.verify import estimate_pcc_times
from main import main

CROWDFUND_RUN = ["run", "--contract", "crowdfund", "--inputs", "600", "500", "--seed", "7"]


def test_run_crowdfund(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main([*CROWDFUND_RUN, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["result"] == [1100]
    assert report["matches_reference"] is True
    assert report["verification"]["accepted"] is True
    assert report["block"]["height"] == 0
    assert "timings" not in report
    assert "result" in capsys.readouterr().out


def test_same_seed_same_report(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert main([*CROWDFUND_RUN, "--out", str(first)]) == 0
    assert main([*CROWDFUND_RUN, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_outsourced_run(tmp_path):
    out = tmp_path / "report.json"
    assert main(["run", "--contract", "millionaire", "--inputs", "3", "5", "--seed", "7", "--outsourced", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["result"] == [1]
    assert report["uploads"] == 2
    assert report["party_messages_during_seccomp"] == 0


def test_mandatory_signer_missing(tmp_path, capsys):
    policy = tmp_path / "policy.json"
    policy.write_text(json.dumps({"mandatory_signers": ["auditor"]}))
    out = tmp_path / "report.json"
    assert main([*CROWDFUND_RUN, "--policy", str(policy), "--out", str(out)]) == EXIT_VERIFICATION
    assert not out.exists()
    assert "error:" in capsys.readouterr().err


def test_engine_disagreement_aborts():
    assert main([*CROWDFUND_RUN, "--engine", "yao_semi_honest,none"]) == EXIT_ABORT


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--seed", "1"],
        ["run", "--contract", "crowdfund", "--seed", "1"],
        ["run", "--contract", "lottery", "--inputs", "1", "--seed", "1"],
        ["run", "--contract", "millionaire", "--inputs", "3", "5", "8", "--seed", "1"],
        ["run", "--contract", "crowdfund", "--inputs", "600", "lots", "--seed", "1"],
        ["run", "--contract", "crowdfund", "--inputs", "600", "500", "--engine", "a,b,c", "--seed", "1"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_unknown_command_exits_with_usage():
    with pytest.raises(SystemExit) as info:
        main(["launch"])
    assert info.value.code == EXIT_USAGE


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"contract": "crowdfund", "inputs": ["400", "500"], "seed": 3}))
    out = tmp_path / "report.json"
    assert main(["run", "--config", str(config), "--inputs", "700", "500", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["seed"] == 3
    assert report["result"] == [1200]


def test_config_file_with_unknown_key(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"colour": "blue"}))
    assert main(["run", "--config", str(config)]) == EXIT_USAGE


def test_cover_point(tmp_path):
    out = tmp_path / "cover.json"
    argv = ["cover", "--n-e", "4", "--n-o", "2", "--t-e", "3", "--t-o", "1", "-l", "2", "--trials", "4000", "--seed", "3"]
    assert main([*argv, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["formula"] == pytest.approx(0.5)
    assert report["exact"] == pytest.approx(0.5)
    assert report["agrees"] is True
    assert report["fallback"] is False


def test_estimate(tmp_path):
    out = tmp_path / "estimate.json"
    assert main(["estimate", "--bytecode-size", "1500", "--seed", "1", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    estimate = estimate_pcc_times(1500)
    assert report["generation_seconds"] == pytest.approx(estimate.gen_seconds)
    assert report["verification_seconds"] == pytest.approx(estimate.verify_seconds)


def test_negative_bytecode_size_aborts():
    assert main(["estimate", "--bytecode-size", "-1", "--seed", "1"]) == EXIT_ABORT
