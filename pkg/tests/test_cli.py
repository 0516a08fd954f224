import filecmp
import json
from importlib import resources

import numpy as np
import pytest

from wbopt.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_bundled_model_and_sample_dataset(capsys):
    data = resources.files("wbopt.data")
    code, out, err = run_cli(
        capsys, "validate",
        "--data", str(data / "sample_dataset.jsonl"),
        "--params", str(data / "sample_params.json"))
    assert code == 0
    doc = json.loads(out)
    assert doc["model"] == "ok"
    assert doc["dataset"]["ok"]
    assert doc["params"] == "ok"


def test_validate_missing_file_fails_with_error_line(capsys):
    code, out, err = run_cli(capsys, "validate", "--data", "/nonexistent.jsonl")
    assert code == 1
    assert err.strip().startswith("error:")


def test_gen_dataset_deterministic(tmp_path, capsys):
    a = str(tmp_path / "a.jsonl")
    b = str(tmp_path / "b.jsonl")
    code1, out1, _ = run_cli(capsys, "gen-dataset", "--n", "6", "--seed", "7",
                             "--out", a, "--workers", "1")
    code2, out2, _ = run_cli(capsys, "gen-dataset", "--n", "6", "--seed", "7",
                             "--out", b, "--workers", "1")
    assert code1 == 0 and code2 == 0
    assert filecmp.cmp(a, b, shallow=False)
    report = json.loads(out1)
    assert report["n"] == 6


def test_train_amo_on_sample_dataset(tmp_path, capsys):
    data = resources.files("wbopt.data")
    out = str(tmp_path / "params.json")
    code, stdout, _ = run_cli(capsys, "train-amo",
                              "--data", str(data / "sample_dataset.jsonl"),
                              "--epochs", "5", "--seed", "1",
                              "--hidden", "16", "--out", out)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["best_epoch"] >= 0
    from wbopt.net import load_params
    load_params(out)


def test_ik_solve_cli(tmp_path, capsys, humanoid):
    from wbopt.ik import default_targets
    t = default_targets(humanoid)
    doc = {}
    for name, pose in (("head", t.head), ("left", t.left), ("right", t.right)):
        doc[name] = {"position": pose[0].tolist(), "rotation": pose[1].tolist()}
    path = tmp_path / "targets.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run_cli(capsys, "ik-solve", "--targets", str(path))
    assert code == 0
    sol = json.loads(out)
    assert sol["converged"]
    assert max(sol["pos_residuals"].values()) < 1e-4


def test_retarget_cli(tmp_path, capsys, hand):
    from wbopt.kinematics import fk
    from wbopt.model import BasePose
    res = fk(hand, BasePose.identity(), 0.5 * (hand.limits_lower + hand.limits_upper))
    doc = {name: res.frames[name][0].tolist()
           for name in ("wrist", "thumb_tip", "index_tip", "middle_tip")}
    path = tmp_path / "kp.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run_cli(capsys, "retarget", "--keypoints", str(path),
                           "--hand", "right")
    assert code == 0
    q = json.loads(out)["q_hand"]
    assert len(q) == 7
    assert np.all(np.asarray(q) >= hand.limits_lower)
    assert np.all(np.asarray(q) <= hand.limits_upper)


def test_sweep_workspace_amo(tmp_path, capsys):
    data = resources.files("wbopt.data")
    out = str(tmp_path / "curve.json")
    code, stdout, _ = run_cli(capsys, "sweep-workspace", "--axis", "yaw",
                              "--resolver", "amo",
                              "--params", str(data / "sample_params.json"),
                              "--out", out, "--step", "0.05")
    assert code == 0
    curve = json.loads(open(out).read())
    assert curve["axis"] == "yaw"
    assert curve["id_range"] == [-1.57, 1.57]
    assert len(curve["commanded"]) == len(curve["achieved"])
    assert np.all(np.isfinite(curve["achieved"]))
    summary = json.loads(stdout)
    assert summary["points"] == len(curve["commanded"])


def test_curriculum_eval_cli(capsys):
    code, out, _ = run_cli(capsys, "curriculum-eval", "--s", "7500")
    assert code == 0
    doc = json.loads(out)
    assert doc["gait_frequency"] == 1.15
    assert doc["stance_rate"] == 0.5


def test_amo_resolver_requires_params(tmp_path, capsys):
    code, out, err = run_cli(capsys, "sweep-workspace", "--axis", "yaw",
                             "--resolver", "amo", "--out", str(tmp_path / "c.json"))
    assert code == 1
    assert "error:" in err
