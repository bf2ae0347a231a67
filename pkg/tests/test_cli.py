import json
import os

import pytest

from ccm.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


@pytest.fixture
def config_file(temp_dir):
    path = os.path.join(temp_dir, "experiment.json")
    config = {
        "scenario": "env1",
        "seeds": [0],
        "budget": 100,
        "eval_episodes": 1,
        "hyperparams": {"C": 5, "hidden": [8], "fcr_hidden": 4, "fcr_window": 5},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config, f)
    return path


def test_cuts_check(capsys):
    assert main(["cuts", "env1", "--check"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "dis" in out


def test_env_info(capsys):
    assert main(["env", "info", "env3"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "scenario: env3" in out
    assert "modifiable" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["cuts"],
        ["cuts", "env9"],
        ["env", "info", "env9"],
        ["train", "absent.json"],
        ["eval", "run", "--noise", "loud"],
    ],
)
def test_configuration_errors(argv):
    assert main(argv) == EXIT_CONFIG


def test_train_verify_and_compare(config_file, temp_dir, capsys):
    run_dir = os.path.join(temp_dir, "run")
    assert main(["train", config_file, "--output-dir", run_dir]) == EXIT_OK
    assert "reward" in capsys.readouterr().out
    assert main(["verify-report", run_dir]) == EXIT_OK
    assert main(["compare", run_dir, run_dir]) == EXIT_OK
    assert "p_value" in capsys.readouterr().out
    assert main(["eval", run_dir, "--episodes", "1"]) == EXIT_OK


def test_train_rejects_bad_worker_count(config_file):
    assert main(["train", config_file, "--workers", "0"]) == EXIT_CONFIG


def test_runtime_failure(temp_dir):
    assert main(["verify-report", temp_dir]) == EXIT_RUNTIME
