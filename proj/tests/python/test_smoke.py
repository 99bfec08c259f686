import json
import math
import os
import subprocess

import numpy as np
import pytest

import caif


def test_info_nce_examples():
    assert caif.info_nce(np.array([[2.0]])) == pytest.approx(0.0, abs=1e-12)
    assert caif.info_nce(np.full((4, 4), 3.0)) == pytest.approx(0.0, abs=1e-12)
    two = np.array([[10.0, -10.0], [-10.0, 10.0]])
    assert caif.info_nce(two) == pytest.approx(math.log(2.0), abs=1e-6)
    rng = np.random.default_rng(0)
    for k in (1, 3, 17):
        assert caif.info_nce(rng.normal(size=(k, k)) * 5) <= math.log(k)


def test_kl_and_lambda_returns():
    zeros = np.zeros(3)
    ones = np.ones(3)
    assert caif.kl_gaussian(zeros, ones, zeros, ones) == pytest.approx(0.0)
    assert caif.kl_gaussian(zeros, ones, zeros + 0.5, ones) == pytest.approx(3 * 0.125)
    u = np.array([1.0, 2.0, 0.0])
    v = np.array([0.0, 0.5, 4.0])
    g = caif.lambda_returns(u, v, 0.9, 0.0)
    assert g[0] == pytest.approx(1.0 + 0.9 * 0.5)
    assert g[-1] == pytest.approx(4.0)


def test_grid_world_episode():
    env = caif.GridWorld(6)
    obs = env.reset()
    assert obs.shape == (64, 64, 3) and obs.dtype == np.uint8
    assert env.agent_pos == (1, 1) and env.goal_pos == (4, 4)
    assert env.max_episode_steps == 144
    # Forward three times, turn right, forward three times reaches the goal.
    reward = 0.0
    for action in (2, 2, 2, 1, 2, 2, 2):
        _, reward, done = env.step(action)
    assert done and 0.0 < reward <= 1.0
    with pytest.raises(RuntimeError):
        env.step(0)


def test_reacher_and_goal_images():
    env = caif.Reacher("easy", distraction=True, seed=3, max_episode_steps=4)
    env.reset()
    steps = 0
    while not env.done:
        _, reward, _ = env.step([0.5, -0.5])
        assert reward in (0.0, 1.0)
        steps += 1
    assert steps == 4
    easy = caif.make_goal_image("reacher", difficulty="easy")
    hard = caif.make_goal_image("reacher", difficulty="hard")
    assert not np.array_equal(easy, hard)
    grid = caif.make_goal_image("grid", grid_size=8)
    assert grid.shape == (64, 64, 3)


def test_efficiency_and_config():
    report = caif.efficiency_report()
    assert report["mac_ratio"] >= 5.0 and report["param_ratio"] >= 2.5
    filled = json.loads(caif.validate_config('{"agent": {"agent_kind": "contrastive-aif"}}'))
    assert filled["training"]["batch_size"] == 50
    with pytest.raises(ValueError, match="agent.agent_kind"):
        caif.validate_config("{}")


@pytest.mark.skipif("CAIF_CLI" not in os.environ, reason="CLI binary path not provided")
def test_cli_exit_codes(tmp_path):
    cli = os.environ["CAIF_CLI"]
    bad = tmp_path / "bad.json"
    bad.write_text('{"agent": {"agent_kind": "contrastive-aif", "bogus": 1}}')
    result = subprocess.run([cli, "train", "-c", str(bad)], capture_output=True, text=True)
    assert result.returncode == 2
    assert "agent.bogus" in result.stderr + result.stdout

    good = tmp_path / "good.json"
    good.write_text(json.dumps({"agent": {"agent_kind": "contrastive-aif"}, "output": {"run_dir": str(tmp_path / "run")}}))
    result = subprocess.run(
        [cli, "analyze", "--report", "efficiency", "-c", str(good), "-o", str(tmp_path / "out")],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "out" / "efficiency.txt").exists()
