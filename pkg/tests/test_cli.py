import json
import subprocess
import sys

import pytest

from memnav.cli import main
from memnav.masks import read_rle
from memnav.metrics import parse_metrics_csv
from memnav.scenario import ScenarioConfig, builtin_suite


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_run_writes_layout(tmp_path):
    out = tmp_path / "r"
    assert main(["run", "--scenario", "long_occlusion", "--policy", "pool",
                 "--seed", "7", "--out", str(out)]) == 0
    meta = json.loads((out / "run.json").read_text())
    assert meta["objects"] == [0, 1]
    assert meta["sessions"][0]["policy"] == "pool"
    assert meta["scenario"]["seed"] == 7
    for oid in (0, 1):
        files = sorted((out / "masks" / f"obj{oid}").iterdir())
        assert [f.name for f in files] == [f"frame_{t:04d}.rle" for t in range(2, 49)]
        rep = parse_metrics_csv((out / f"metrics_obj{oid}.csv").read_text())
        assert 0.0 <= rep.jf <= 1.0
    assert read_rle(out / "masks/obj0/frame_0002.rle").shape == (32, 32)


def test_reruns_are_byte_identical(tmp_path):
    args = ["run", "--scenario", "crowded_distractors", "--policy", "dam", "--seed", "3"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_replay_reproduces_run(tmp_path):
    main(["run", "--scenario", "long_occlusion", "--policy", "tree", "--pathways", "2",
          "--seed", "4", "--out", str(tmp_path / "a")])
    assert main(["run", "--replay", str(tmp_path / "a/run.json"), "--out", str(tmp_path / "b")]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MEMNAV_SEED", "9")
    main(["run", "--scenario", "short_clean", "--policy", "fifo", "--out", str(tmp_path)])
    assert json.loads((tmp_path / "run.json").read_text())["scenario"]["seed"] == 9


def test_bogus_policy_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "short_clean", "--policy", "lstm", "--out", str(tmp_path)])
    assert exc.value.code == 2
    assert "{fifo,dam,tree,pool}" in capsys.readouterr().err


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["run", "--scenario", "short_clean", "--policy", "tree", "--pathways", "0",
                 "--out", str(tmp_path)]) == 2
    assert "pathways" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    d = builtin_suite("short_clean").to_dict()
    d["objects"][0]["colour"] = "red"
    bad.write_text(json.dumps(d))
    assert main(["run", "--scenario", str(bad), "--policy", "fifo", "--out", str(tmp_path / "o")]) == 2
    assert "objects[0].colour" in capsys.readouterr().err


def test_compare_degenerate_tree_matches_fifo(tmp_path):
    assert main(["compare", "--scenario", "long_occlusion", "--policy", "fifo",
                 "--policy", "tree", "--pathways", "1", "--k", "1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "compare_long_occlusion.csv").read_text().splitlines()
    assert lines[0] == "policy,j,f,jf"
    fifo, tree = (line.split(",") for line in lines[1:])
    assert fifo[0] == "fifo" and tree[0] == "tree"
    assert fifo[1:] == tree[1:]
    assert "J&F" in (tmp_path / "compare.txt").read_text()


def test_compare_needs_two_policies(tmp_path):
    assert main(["compare", "--scenario", "short_clean", "--policy", "fifo",
                 "--out", str(tmp_path)]) == 2


def test_generate_and_metrics_round_trip(tmp_path):
    g = tmp_path / "g"
    assert main(["generate", "--scenario", "short_clean", "--out", str(g)]) == 0
    cfg = ScenarioConfig.load(g / "scenario.json")
    assert cfg == builtin_suite("short_clean")
    out = tmp_path / "m.csv"
    gt = g / "gt" / "obj0"
    assert main(["metrics", "--pred", str(gt), "--gt", str(gt), "--out", str(out)]) == 0
    rep = parse_metrics_csv(out.read_text())
    assert rep.jf == 1.0 and len(rep.per_frame) == 19


def test_metrics_against_run(tmp_path):
    main(["generate", "--scenario", "long_occlusion", "--seed", "2", "--out", str(tmp_path / "g")])
    main(["run", "--scenario", "long_occlusion", "--policy", "fifo", "--seed", "2",
          "--object", "0", "--out", str(tmp_path / "r")])
    main(["metrics", "--pred", str(tmp_path / "r/masks/obj0"), "--gt", str(tmp_path / "g/gt/obj0"),
          "--out", str(tmp_path / "m.csv")])
    assert (tmp_path / "m.csv").read_text() == (tmp_path / "r/metrics_obj0.csv").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "memnav", "run", "--scenario", "short_clean",
                           "--policy", "nope", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
