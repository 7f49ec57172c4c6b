import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from gafzeros.core import PointSet, RngStream, disk, split_stream
from gafzeros.dpp import ginibre_samples
from gafzeros.gaf import GafSpec, MobiusMap, gaf_zero_samples, sample_gaf_batch
from gafzeros.polygaf import HomPoly
from gafzeros.stats import (WickCoeffs, clt_experiment, deviation_slope_experiment,
                            estimate_intensity, estimate_pair_correlation, estimate_wick_coeffs,
                            invariance_test, jensen_check, kappa_identity, overcrowding_curve,
                            pair_domain_integral, poly_bump, smooth_statistic, smoothstep_bump,
                            tilted_overcrowding, two_point_from_formula, wick_polynomial,
                            wilson_interval, TruncationWarning)


def test_intensity_trivial():
    samples = [PointSet("plane", [0.0]) for _ in range(3)]
    est = estimate_intensity(samples, [0, 1])
    assert est.value[0] == pytest.approx(1 / np.pi)
    assert est.se[0] == 0
    with pytest.raises(ValueError):
        estimate_intensity([], [0, 1])


def test_se_halves_with_quadrupled_work():
    s = ginibre_samples(10, RngStream(1), 8000)
    a = estimate_intensity(s[:4000], [0, 1, 2, 3])
    b = estimate_intensity(s, [0, 1, 2, 3])
    ratio = a.se / b.se
    assert np.all((ratio > 1.30) & (ratio < 1.55))


def test_pair_domain_total_measure():
    R = 1.3
    assert pair_domain_integral([0, 2 * R], R, n_r=96, n_s=96, n_t=96).sum() == pytest.approx(
        (np.pi * R * R) ** 2, rel=1e-5)


def test_pair_correlation_poisson_control():
    rng = RngStream(2).generator()
    samples = []
    for _ in range(3000):
        k = rng.poisson(4 * np.pi)
        z = 2 * np.sqrt(rng.random(k)) * np.exp(2j * np.pi * rng.random(k))
        samples.append(PointSet("plane", z))
    est = estimate_pair_correlation(samples, [0.1, 0.4, 0.8, 1.2], window=2.0, erosion=0,
                                    rho1=lambda z: np.ones(np.shape(z)))
    assert np.all(np.abs(est.extra["g"] - 1) < 3 * est.extra["g_se"])


def test_pair_correlation_default_erosion():
    samples = [PointSet("plane", [0.0, 0.1]), PointSet("plane", [0.0, 0.3])]
    est = estimate_pair_correlation(samples, [0.05, 0.2, 0.4], window=1.0)
    assert est.extra["window"] == pytest.approx(0.6)
    assert est.extra["pair_counts_mean"].tolist() == [1.0, 1.0]
    with pytest.raises(ValueError):
        estimate_pair_correlation(samples, [0.0, 2.0], window=1.0)


def test_wick_polynomial_orthogonality():
    a = RngStream(3).generator().standard_normal((400000, 2)) @ np.array([1, 1j]) / math.sqrt(2)
    w11 = wick_polynomial(a, 1, 1)
    w21 = wick_polynomial(a, 2, 1)
    assert abs(w11.mean()) < 0.01
    assert abs(np.mean(np.abs(w21) ** 2) - 2) < 0.05
    assert np.allclose(wick_polynomial(np.array([2.0]), 1, 1), [3.0])


def test_wick_zeta():
    w = estimate_wick_coeffs(HomPoly.identity(), 2, RngStream(4), 200000, antithetic=False)
    assert abs(w.C00 - (-np.euler_gamma / 2)) < 3 * w.C00_se
    assert abs(w.C00.imag) <= 3 * w.C00_se
    for (m, n), (c, se) in w.coeffs.items():
        if sum(m) != sum(n):
            assert abs(c) < 3 * se
        c2, se2 = w.coeffs[(n, m)]
        assert abs(c - np.conj(c2)) <= 3 * math.hypot(se, se2) + 1e-15
    assert w.tilde2[1] == pytest.approx(0.25, abs=4 * w.tilde2_se[1] + 0.01)


def test_wick_antithetic_kills_off_diagonal():
    w = estimate_wick_coeffs(HomPoly.product(2), 1, RngStream(5), 20000, antithetic=True)
    for (m, n), (c, se) in w.coeffs.items():
        if sum(m) != sum(n):
            assert abs(c) < 1e-12


def test_exact_identity_coeffs():
    w = WickCoeffs.exact_identity(400)
    assert w.kappa() == pytest.approx(kappa_identity(), rel=1e-5)
    assert w.C00.real == pytest.approx(-0.288608, abs=1e-6)


def test_two_point_far_apart_vanishes():
    w = WickCoeffs.exact_identity(60)
    assert abs(two_point_from_formula(w, GafSpec("plane", 1), 0, 6.0)) < 1e-8


def test_two_point_disk_bergman():
    w = WickCoeffs.exact_identity(200)
    spec = GafSpec("disk", 1)
    for z, v in [(0.1, -0.3), (0.2 + 0.1j, 0.5j), (0.0, 0.4)]:
        got = two_point_from_formula(w, spec, z, v)
        want = -abs(1 / (np.pi * (1 - z * np.conj(v)) ** 2)) ** 2
        assert got == pytest.approx(want, rel=1e-4)


def test_two_point_sphere_det1():
    w = WickCoeffs.exact_identity(200)
    z, v = 0.0, 1.0 + 0.5j
    got = two_point_from_formula(w, GafSpec("sphere", 1), z, v)
    want = -1 / np.pi ** 2 / ((1 + abs(z) ** 2) ** 2 * (1 + abs(v) ** 2) ** 2)
    assert got == pytest.approx(want, rel=1e-4)


def test_two_point_truncation_flagged():
    w = WickCoeffs.exact_identity(3)
    with pytest.warns(TruncationWarning):
        two_point_from_formula(w, GafSpec("disk", 1), 0.1, 0.3)
    with pytest.raises(ValueError):
        two_point_from_formula(w, GafSpec("disk", 1), 0.1, 0.1 + 1e-3)


def test_bump_laplacian_and_norm():
    phi = smoothstep_bump(1.2, 0.3)
    z0 = 0.5 + 0.4j
    h = 1e-4
    fd = (phi(z0 + h) + phi(z0 - h) + phi(z0 + 1j * h) + phi(z0 - 1j * h) - 4 * phi(z0)) / h ** 2
    assert phi.laplacian(z0) == pytest.approx(fd, rel=1e-4)
    num = quad(lambda r: phi.laplacian(r) ** 2 * 2 * np.pi * r, 0, 1.2, points=[0.3])[0]
    assert phi.laplacian_norm2() == pytest.approx(num, rel=1e-8)
    numd = quad(lambda r: phi.laplacian(r) ** 2 * (1 - r * r) ** 2 * 2 * np.pi * r, 0, 1.2,
                points=[0.3])[0]
    assert phi.laplacian_norm2("disk") == pytest.approx(numd, rel=1e-8)
    assert phi.integral() == pytest.approx(quad(lambda r: phi(r) * 2 * np.pi * r, 0, 1.2)[0])
    assert phi(0) == 1 and phi(1.3) == 0
    with pytest.raises(ValueError):
        poly_bump(1.0, 2)


def test_smooth_statistic_examples():
    ps = PointSet("plane", [0.0, 0.5])
    assert smooth_statistic(ps, lambda z: np.zeros(np.shape(z))) == 0
    assert smooth_statistic(ps, lambda z: np.abs(z) ** 2) == pytest.approx(0.25)
    ps.meta["window"] = 1.0
    with pytest.raises(ValueError):
        smooth_statistic(ps, smoothstep_bump(2.0))


def test_smooth_statistic_mean_bounds():
    phi = smoothstep_bump(1.5, 1.0)
    samples = gaf_zero_samples(GafSpec("plane", 4), RngStream(6), 2000, 1.5)
    v = np.array([smooth_statistic(ps, phi) for ps in samples])
    assert 4 * 1.0 <= v.mean() <= 4 * 1.5 ** 2
    assert v.mean() == pytest.approx(4 / np.pi * phi.integral(), abs=3 * v.std() / math.sqrt(v.size))


def test_clt_report_fields():
    rng = np.random.default_rng(7)
    vals = {L: rng.normal(0, 1 / math.sqrt(L), 20000) for L in (10, 20, 40)}
    rep = clt_experiment(vals, smoothstep_bump(1.0), kappa_identity())
    assert np.all(np.abs(rep.ratios - 1) < 0.1)
    assert rep.predicted_var[0] == pytest.approx(kappa_identity() / 10 * rep.lap_norm2)


def test_overcrowding_curve_bounds_and_exact():
    counts = np.array([0] * 900 + [1] * 90 + [2] * 10)
    c = overcrowding_curve(counts, 1.0, 3, exact_pmf=[0.9, 0.09, 0.01])
    assert c.estimate.tolist() == [1.0, 0.1, 0.01, 0.0]
    assert c.resolved.tolist() == [True, True, False, False]
    assert c.hi[3] > 0 and c.exact[3] == 0
    assert np.all(np.diff(c.estimate) <= 0)
    lo, hi = wilson_interval(0, 1000)
    assert lo == 0 and 0 < hi < 0.005


def test_tilted_matches_plain():
    spec = GafSpec("plane", 1)
    t = tilted_overcrowding(spec, RngStream(8), 1.0, 3, 200000, sigma=0.5)
    assert t["estimate"] == pytest.approx(0.0077, abs=3 * t["se"] + 5e-4)


def test_deviation_table_monotone():
    spec = GafSpec("plane", 1)

    def counts(r):
        from gafzeros.roots import winding_numbers
        c, _ = sample_gaf_batch(spec, RngStream(9).generator(), 20000, r)
        return winding_numbers(c, r)[0]
    rows = deviation_slope_experiment(counts, [1.5, 2.0], 2.0, 1.0)
    assert rows[0]["estimate"] >= rows[1]["estimate"]
    assert rows[0]["threshold"] == 5 and rows[1]["threshold"] == 8


def test_invariance_identity_and_translation():
    samples = gaf_zero_samples(GafSpec("plane", 1), RngStream(10), 2000, 2.0)
    res = invariance_test(samples, MobiusMap.identity("plane"), disk(0, 1))
    assert res["pvalue"] == 1.0
    res = invariance_test(samples, MobiusMap.translation(1.0), disk(0, 1))
    assert res["verdict"] == "pass"


def test_jensen_on_samples():
    c, _ = sample_gaf_batch(GafSpec("plane", 1), RngStream(11).generator(), 50, 2.0)
    for row in c:
        assert jensen_check(row, 1.0, 2.0)["ok"]


def test_invariance_detects_scaling():
    class Scale:
        def apply(self, ps):
            return PointSet("plane", ps.points * 0.9)
    samples = gaf_zero_samples(GafSpec("plane", 1), RngStream(12), 2000, 2.5)
    res = invariance_test(samples, Scale(), disk(0, 1))
    assert res["verdict"] == "fail" and res["pvalue"] < 1e-6
