import json

import numpy as np
import pytest

from cli import EXIT_ERROR, EXIT_MAX_EPOCHS, EXIT_OK, main
from infrastructure.repositories.run_repository import EPOCHS, EVAL_SAMPLES, samples_filename


@pytest.fixture
def tiny_config(tmp_path, tiny_run_keys):
    path = tmp_path / "tiny.cfg"
    path.write_text("".join(f"{key} = {value}\n" for key, value in tiny_run_keys.items()))
    return path


def _stdout_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_finite_matching_pennies(tmp_path, capsys):
    path = tmp_path / "pennies.csv"
    path.write_text("1,-1\n-1,1\n")

    assert main(["finite", str(path)]) == EXIT_OK
    report = _stdout_json(capsys)
    assert report["do_value"] == pytest.approx(0.0, abs=1e-9)
    assert report["lp_value"] == pytest.approx(0.0, abs=1e-9)


def test_finite_random_game(tmp_path, capsys):
    grid = np.random.default_rng(20).uniform(-1, 1, size=(20, 20))
    path = tmp_path / "random.csv"
    path.write_text("\n".join(",".join(repr(float(x)) for x in row) for row in grid) + "\n")

    assert main(["finite", str(path), "--epsilon", "1e-6"]) == EXIT_OK
    assert _stdout_json(capsys)["difference"] <= 1e-6


def test_finite_non_numeric_cell(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("1,abc\n0,1\n")

    assert main(["finite", str(path)]) == EXIT_ERROR
    assert "row 0, column 1" in capsys.readouterr().err


def test_finite_missing_matrix(tmp_path):
    assert main(["finite", str(tmp_path / "absent.csv")]) == EXIT_ERROR


def test_train_missing_config_leaves_no_directory(output_root, tmp_path, capsys):
    code = main(["train", "--config", str(tmp_path / "absent.cfg"), "--run-name", "ghost"])

    assert code == EXIT_ERROR
    assert not (output_root / "ghost").exists()
    assert "usage:" in capsys.readouterr().err


def test_train_rejects_invalid_override(output_root, tiny_config):
    assert main(["train", "--config", str(tiny_config), "--s", "1", "--run-name", "bad"]) == EXIT_ERROR
    assert not (output_root / "bad").exists()


def test_train_one_epoch_then_eval_and_rerun(output_root, tiny_config, capsys):
    code = main(["train", "--config", str(tiny_config), "--variant", "plain", "--max-epochs", "1", "--run-name", "one"])
    summary = _stdout_json(capsys)

    assert code in (EXIT_OK, EXIT_MAX_EPOCHS)
    assert summary["epochs"] == 1
    assert summary["coverage"]["modes"] == 8
    run = output_root / "one"
    records = [json.loads(line) for line in (run / EPOCHS).read_text().splitlines()]
    assert [record["t"] for record in records] == [0, 1]
    assert {"genInc", "disInc", "snapshots_on_disk"} <= set(records[1])
    assert (run / samples_filename(0)).is_file()
    assert (run / samples_filename(1)).is_file()
    assert (run / "manifest.json").is_file()
    assert (run / "summary.json").is_file()

    assert main(["eval", str(run), "--seed", "3"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["eval", str(run), "--seed", "3"]) == EXIT_OK
    assert capsys.readouterr().out == first
    assert (run / EVAL_SAMPLES).is_file()

    assert main(["train", "--manifest", str(run / "manifest.json"), "--run-name", "again"]) == code
    assert (output_root / "again" / EPOCHS).read_text() == (run / EPOCHS).read_text()


def test_eval_missing_run(output_root):
    assert main(["eval", str(output_root / "absent")]) == EXIT_ERROR


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--no-such-key", "1"],
        ["train", "--config", "a.cfg", "--manifest", "manifest.json"],
        ["finite"],
        ["bogus"],
    ],
)
def test_usage_errors_exit_one(argv, output_root, capsys):
    assert main(argv) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "usage:" in err
    assert not output_root.exists() or not any(output_root.iterdir())
