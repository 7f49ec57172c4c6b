import numpy as np
import pytest

from gafzeros import experiments as ex
from gafzeros.core import RngStream


def test_spec_validation():
    with pytest.raises(ValueError):
        ex.GeneratorSpec("gaf", "plane")
    with pytest.raises(ValueError):
        ex.GeneratorSpec("gaf", "disk", window=1.0)
    with pytest.raises(ValueError):
        ex.GeneratorSpec("det-pencil", "plane")
    with pytest.raises(ValueError):
        ex.GeneratorSpec("nope")
    assert ex.GeneratorSpec("gaf", "sphere", L=3).window is None


def test_shard_plan_covers_blocks():
    plan = ex.shard_plan(RngStream(1), 2500, 2, 1000)
    assert [p["blocks"] for p in plan] == [[0, 2], [1]]
    assert sum(p["replications"] for p in plan) == 2500
    assert plan[0]["paths"][1] == [2]


@pytest.mark.parametrize("shards", [1, 3, 16])
def test_samples_independent_of_shards(shards):
    spec = ex.GeneratorSpec("ginibre", n=4)
    ref = ex.sample_points(spec, RngStream(2), 25, 1, block_size=4)
    got = ex.sample_points(spec, RngStream(2), 25, shards, block_size=4)
    assert [ps.meta["index"] for ps in got] == list(range(25))
    for a, b in zip(ref, got):
        assert np.array_equal(a.points, b.points)


def test_process_pool_path(monkeypatch):
    spec = ex.GeneratorSpec("det-pencil", "sphere", n=2)
    ref = ex.sample_points(spec, RngStream(3), 12, 1, block_size=3)
    monkeypatch.setattr(ex.os, "cpu_count", lambda: 2)
    got = ex.sample_points(spec, RngStream(3), 12, 2, block_size=3)
    for a, b in zip(ref, got):
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.at_infinity, b.at_infinity)


def test_counts_agree_with_points_in_law():
    spec = ex.GeneratorSpec("gaf", "plane", L=1, window=1.5)
    pts = ex.sample_points(spec, RngStream(4), 2000)
    cnt = ex.build_generator(spec).counts(RngStream(4), 2000, 1.0)
    direct = np.array([np.sum(np.abs(ps.points) <= 1.0) for ps in pts])
    assert abs(cnt.mean() - 1.0) < 0.06 and abs(direct.mean() - 1.0) < 0.06
    assert abs(np.mean(cnt == 0) - np.mean(direct == 0)) < 0.04


def test_annulus_average_exact():
    got = ex.annulus_average(lambda z: np.abs(z) ** 2, [0, 1, 2])
    assert got == pytest.approx([0.5, 2.5])


def test_intensity_experiment_planar():
    spec = ex.GeneratorSpec("gaf", "plane", L=1, window=2.0)
    res = ex.intensity_experiment(spec, RngStream(5), 2000, [0, 1, 2])
    assert res["verdict"] == "pass"
    with pytest.raises(ValueError):
        ex.intensity_experiment(spec, RngStream(5), 10, [0, 3])


def test_paircorr_poisson_and_ginibre():
    res = ex.paircorr_experiment(ex.GeneratorSpec("poisson", window=2.0, rate=3.0),
                                 RngStream(6), 2000, [0.1, 0.5, 1.0], erosion=None)
    assert res["verdict"] == "pass"
    res = ex.paircorr_experiment(ex.GeneratorSpec("ginibre", n=20), RngStream(7), 1000,
                                 [0.05, 0.3, 0.6, 1.0, 1.5], window=3.0, erosion=None)
    assert res["verdict"] == "pass"
    assert res["reference"][0] < 0.2 and 0.7 < res["reference"][-1] < 0.9


def test_named_helpers():
    assert ex.named_poly("det2").k == 4
    with pytest.raises(ValueError):
        ex.named_poly("zap")
    assert ex.named_bump("smoothstep:0.5:1.5").support_radius == 1.5
    m = ex.named_map("disk", {"a": [0.3, 0], "theta": 0.0})
    circle = np.exp(1j * np.linspace(0, 6, 7))
    assert np.allclose(np.abs(m(circle)), 1)
    assert np.all(np.abs(m(0.5 * circle)) < 1)


def test_wick_experiment_zeta():
    res = ex.wick_experiment("zeta", 2, RngStream(8), 100000)
    assert res["verdict"] == "pass"
    assert res["n_offdiagonal"] > 0


def test_overcrowding_exact_and_tilted():
    res = ex.overcrowding_run(ex.GeneratorSpec("hyperbolic1", "disk"), RngStream(9),
                              100000, 0.5, 4)
    assert res["verdict"] == "pass"
    res = ex.overcrowding_run(ex.GeneratorSpec("gaf", "plane", window=1.0), RngStream(10),
                              100000, 1.0, 4, tilt_sigma=0.5, tilt_M=100000)
    assert "tilted" in res["method"]
    assert res["verdict"] == "pass"


def test_invariance_run_small():
    triple = (ex.GeneratorSpec("ginibre", n=30), {"rotation": 1.0}, {"radius": 2.0})
    res = ex.invariance_run([triple], RngStream(11), 300)
    assert res["verdict"] == "pass"
