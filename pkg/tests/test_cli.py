import json
import subprocess
import sys

import numpy as np
import pytest

from gafzeros import cli
from gafzeros.core import PointSet


def _cfg(tmp_path, text):
    p = tmp_path / "exp.yaml"
    p.write_text(text)
    return str(p)


SAMPLE = """kind: sample
generator: {family: det-pencil, domain: sphere, n: 3}
M: 2
seed: 7
"""


def test_sample_csv_rows(tmp_path):
    rep = cli.run(_cfg(tmp_path, SAMPLE), out=str(tmp_path / "o"))
    lines = (tmp_path / "o" / "points.csv").read_text().splitlines()
    assert lines[0] == "sample_id,re,im,multiplicity,at_infinity"
    assert len(lines) == 1 + 2 * 3
    assert [l.split(",")[0] for l in lines[1:]] == ["0"] * 3 + ["1"] * 3
    assert rep.metrics[0]["points_total"] == 6
    assert set(json.loads((tmp_path / "o" / "report.json").read_text())) == {
        "config", "metrics", "shards", "outputs"}


def test_csv_formatting(tmp_path):
    p = tmp_path / "p.csv"
    cli.emit_points([PointSet("plane", [0.0]), PointSet("plane", [-0.0 + 0.1j])], p)
    lines = p.read_bytes().split(b"\n")
    assert lines[1] == b"0,0,0,1,false"
    assert lines[2] == b"1,0,0.10000000000000001,1,false"
    back = cli.read_points(p)
    assert back[1].points[0] == 0.1j


def test_jsonl_round_trip(tmp_path):
    z = np.array([1 / 3 + 2j, -np.pi, 1e-300j])
    ps = PointSet("sphere", z, [1, 2, 1], [False, False, True], {"index": 3, "tol": 1e-9})
    p = tmp_path / "p.jsonl"
    cli.emit_points([ps], p, "jsonl")
    back = cli.read_points(p)[0]
    assert np.array_equal(back.points, ps.points)
    assert back.multiplicity.tolist() == [1, 2, 1]
    assert back.at_infinity.tolist() == [False, False, True]
    assert back.meta == {"index": 3, "tol": 1e-9}


def test_reruns_byte_identical(tmp_path):
    cfg = _cfg(tmp_path, SAMPLE.replace("M: 2", "M: 2500"))
    cli.run(cfg, out=str(tmp_path / "a"))
    cli.run(cfg, out=str(tmp_path / "b"), shards=4)
    assert (tmp_path / "a" / "points.csv").read_bytes() == (tmp_path / "b" / "points.csv").read_bytes()
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    assert ra["metrics"] == rb["metrics"]
    assert len(rb["shards"]) == 4


def test_large_sphere_sample(tmp_path):
    cfg = _cfg(tmp_path, "kind: sample\ngenerator: {family: det-pencil, domain: sphere, n: 5}\n"
                         "M: 10000\nseed: 1\nformat: jsonl\n")
    cli.run(cfg, out=str(tmp_path / "o"))
    recs = cli.read_points(tmp_path / "o" / "points.jsonl")
    assert len(recs) == 10000
    assert sum(len(r) for r in recs) == 50000


@pytest.mark.parametrize("text,loc", [
    ("kind: sample\n", "generator"),
    ("kind: sample\ngenerator: {family: gaf, domain: plane}\n", "generator"),
    ("kind: intensity\ngenerator: {family: ginibre, n: 3}\nedges: [1, 0]\n", "edges"),
    ("kind: sample\ngenerator: {family: ginibre}\nbogus: 1\n", "bogus"),
    ("kind: wick\nq: zap\n", "q"),
])
def test_invalid_configs(tmp_path, text, loc):
    with pytest.raises(cli.ConfigError) as e:
        cli.load_config(_cfg(tmp_path, text))
    assert any(err["loc"].startswith(loc) for err in e.value.errors)


def test_main_exit_codes(tmp_path, capsys):
    assert cli.main(["--config", _cfg(tmp_path, "kind: sample\n")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "invalid config"
    cfg = _cfg(tmp_path, "kind: intensity\ngenerator: {family: gaf, domain: plane, window: 2}\n"
                         "M: 10000\nedges: [0, 0.5, 1, 1.5, 2]\nseed: 3\n")
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["metrics"][0]["verdict"] == "pass"
    assert "wall_clock_s" in out


def test_module_errors_carry_context(tmp_path):
    cfg = _cfg(tmp_path, "kind: intensity\ngenerator: {family: gaf, domain: plane, window: 1}\n"
                         "edges: [0, 2]\n")
    with pytest.raises(RuntimeError, match="seed=0"):
        cli.run(cfg)


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "gafzeros", "--config", _cfg(tmp_path, SAMPLE)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["metrics"][0]["points_total"] == 6
