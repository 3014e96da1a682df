import json

import pytest

from iiot_offload.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(
        "seeds: [0]\neval_interval: 4\neval_episodes: 2\n"
        "env: {t_max: 8}\n"
        "ppo: {episodes: 4, hidden: [8], episodes_per_update: 2, minibatch: 16, epochs: 1}\n"
    )
    return path


def test_train_eval_replay(capsys, tmp_path, small_config):
    out = tmp_path / "run"
    code, text, _ = run(capsys, "train", "--config", str(small_config), "--scheme", "remote-comm", "--out", str(out))
    assert code == 0
    assert json.loads(text)["scheme"] == "remote-comm"
    ckpt = out / "remote-comm" / "checkpoints" / "seed_0.npz"
    assert ckpt.is_file()

    code, text, _ = run(capsys, "eval", "--config", str(small_config), "--checkpoint", str(ckpt), "--out", str(tmp_path / "ev"))
    assert code == 0
    evaluated = json.loads(text)
    trace = tmp_path / "ev" / "remote-comm_seed_0.jsonl"

    code, text, _ = run(capsys, "replay", str(trace))
    assert code == 0
    assert json.loads(text)["mean"] == pytest.approx(evaluated["mean"])


def test_eval_fixed_scheme(capsys, small_config):
    code, text, _ = run(capsys, "eval", "--config", str(small_config), "--scheme", "local", "--seeds", "1,2", "--episodes", "3")
    assert code == 0
    result = json.loads(text)
    assert result["mean"]["success_rate"] == 0.0
    assert sorted(result["per_seed"]) == ["1", "2"]


def test_train_episode_override(capsys, small_config):
    code, text, _ = run(capsys, "train", "--config", str(small_config), "--scheme", "contention-free", "--episodes", "8")
    assert code == 0 and json.loads(text)["episodes"] == 8


@pytest.mark.parametrize(
    "argv",
    [
        ["eval", "--scheme", "combined"],
        ["train", "--config", "/nonexistent.yaml"],
        ["replay", "/nonexistent.jsonl"],
    ],
)
def test_config_errors_exit_nonzero(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "configuration error" in err


def test_bad_file_contents(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("ppo: {lr: -1}\n")
    code, _, err = run(capsys, "train", "--config", str(bad))
    assert code == 2 and "lr" in err


@pytest.mark.parametrize("argv", [["train", "--scheme", "aloha"], ["train", "--seeds", "a,b"], []])
def test_argument_errors_exit_nonzero(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2
