import math

import numpy as np
import pytest
from scipy import stats as sps

from gafzeros.core import RngStream, split_stream
from gafzeros.gaf import GafSpec, TruncatedSeries, sample_gaf, zeros_in_disk
from gafzeros.polygaf import (HomPoly, MatrixGafSpec, det_pencil_samples, det_pencil_zeros,
                              det_series_coeffs, eval_polygaf, matrix_poly_zeros,
                              matrix_series_samples, pencil_eigenvalues, polygaf_series)
from gafzeros.roots import horner


def test_hompoly_validation():
    with pytest.raises(ValueError):
        HomPoly(2, 2, (((1, 0), 1.0),))
    with pytest.raises(ValueError):
        HomPoly(1, 1, (((1,), 0.0),))


def test_eval_examples():
    one = TruncatedSeries([1.0], np.inf)
    assert eval_polygaf(HomPoly.identity(), [one], 0.7) == 1
    f1 = TruncatedSeries([0, 1], np.inf)
    f2 = TruncatedSeries([1, 1], np.inf)
    assert eval_polygaf(HomPoly.product(2), [f1, f2], 1.0) == 2
    with pytest.raises(ValueError):
        eval_polygaf(HomPoly.product(2), [f1], 1.0)


def test_det_fast_path_matches_terms():
    q = HomPoly.det(3)
    x = np.random.default_rng(0).normal(size=(9, 5)) + 0j
    slow = HomPoly(q.k, q.d, q.terms, "generic")
    assert np.allclose(q(x), slow(x))


def test_det2_eval_equals_ad_minus_bc():
    rng = np.random.default_rng(1)
    series = [TruncatedSeries(rng.normal(size=3) + 1j * rng.normal(size=3), np.inf)
              for _ in range(4)]
    z = rng.normal(size=100) + 1j * rng.normal(size=100)
    a, b, c, d = (horner(s.coeffs, z) for s in series)
    assert np.allclose(eval_polygaf(HomPoly.det(2), series, z), a * d - b * c, rtol=1e-12)


def test_series_square():
    s = polygaf_series(HomPoly.power(2), [TruncatedSeries([0, 1], np.inf)])
    assert np.allclose(s.coeffs, [0, 0, 1])


def test_det_series_matches_eval():
    rng = np.random.default_rng(2)
    series = [TruncatedSeries(rng.normal(size=2) + 1j * rng.normal(size=2), np.inf)
              for _ in range(4)]
    s = polygaf_series(HomPoly.det(2), series)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    assert np.allclose(horner(s.coeffs, z), eval_polygaf(HomPoly.det(2), series, z), rtol=1e-10)


def test_product_zeros_are_union():
    f1 = sample_gaf(GafSpec("plane", 1), RngStream(1), 1.5)
    f2 = sample_gaf(GafSpec("plane", 1), RngStream(2), 1.5)
    prod = polygaf_series(HomPoly.product(2), [f1, f2])
    z = np.sort_complex(zeros_in_disk(prod, 1.2).finite)
    parts = np.sort_complex(np.concatenate([zeros_in_disk(f, 1.2).finite for f in (f1, f2)]))
    assert z.size == parts.size and np.allclose(z, parts, atol=1e-8)


def test_tail_cap():
    f = sample_gaf(GafSpec("plane", 1), RngStream(1), 1.0)
    with pytest.raises(ValueError):
        polygaf_series(HomPoly.power(2), [f], tail_cap=0.0)


def test_pencil_counts_and_uniformity():
    spec = MatrixGafSpec(1, GafSpec("sphere", 1))
    samples = det_pencil_samples(spec, RngStream(3), 10 ** 5)
    z = np.array([ps.points[0] for ps in samples if not ps.at_infinity[0]])
    u = np.abs(z) ** 2 / (1 + np.abs(z) ** 2)  # uniform for the normalised area on the sphere
    h = np.histogram2d(u, np.angle(z) % (2 * np.pi), bins=[10, 8],
                       range=[[0, 1], [0, 2 * np.pi]])[0]
    assert sps.chisquare(h.ravel()).pvalue > 0.01
    three = det_pencil_zeros(MatrixGafSpec(3, GafSpec("sphere", 1)), RngStream(4))
    assert len(three) == 3


def test_pencil_mean_count():
    samples = det_pencil_samples(MatrixGafSpec(4, GafSpec("sphere", 1)), RngStream(5), 10 ** 5)
    n = np.array([np.sum(np.abs(ps.points[~ps.at_infinity]) < 1) for ps in samples])
    assert abs(n.mean() - 2.0) < 3 * n.std(ddof=1) / math.sqrt(n.size)


def test_pencil_requires_sphere():
    with pytest.raises(ValueError):
        det_pencil_zeros(MatrixGafSpec(2, GafSpec("plane", 1)), RngStream(1))


def test_singular_pencil_gives_infinity():
    A = np.array([[1, 0], [0, 0]], dtype=complex)
    B = np.eye(2, dtype=complex)
    fin, n_inf = pencil_eigenvalues(A, B)
    assert n_inf == 1 and np.allclose(fin, [1.0])


def test_pencil_det_vanishes_at_eigenvalues():
    rng = np.random.default_rng(6)
    for _ in range(20):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        fin, _ = pencil_eigenvalues(A, B)
        for z in fin:
            scale = np.linalg.norm(z * A) ** 3 + np.linalg.norm(B) ** 3
            assert abs(np.linalg.det(z * A - B)) < 1e-8 * scale


def test_matrix_poly_deterministic():
    coeffs = np.array([np.eye(2), -2 * np.eye(2)], dtype=complex)
    ps = matrix_poly_zeros(coeffs, 0.9)
    assert np.allclose(ps.points, [0.5]) and ps.multiplicity.tolist() == [2]


def test_det_series_coeffs_exact():
    rng = np.random.default_rng(7)
    C = rng.normal(size=(4, 2, 2)) + 1j * rng.normal(size=(4, 2, 2))
    d = det_series_coeffs(C, 0.7)
    z = 0.3 - 0.2j
    direct = np.linalg.det(np.tensordot(z ** np.arange(4), C, axes=1))
    assert horner(d, z / 0.7) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("n,expect", [(1, 1 / 3), (2, 2 / 3)])
def test_matrix_series_mean_count(n, expect):
    spec = MatrixGafSpec(n, GafSpec("disk", 1))
    samples = matrix_series_samples(spec, RngStream(8 + n), 20000, 0.5)
    c = np.array([len(ps) for ps in samples])
    assert abs(c.mean() - expect) < 3 * c.std(ddof=1) / math.sqrt(c.size)


def test_linearization_agrees_with_det_method():
    spec = MatrixGafSpec(2, GafSpec("disk", 1))
    a = matrix_series_samples(spec, RngStream(12), 30, 0.6, method="det")
    b = matrix_series_samples(spec, RngStream(12), 30, 0.6, method="linearization")
    same = 0
    for x, y in zip(a, b):
        if len(x) == len(y):
            same += np.allclose(np.sort_complex(x.finite), np.sort_complex(y.finite), atol=1e-7)
    assert same >= 28


def test_series_radius_rejected():
    with pytest.raises(ValueError):
        matrix_series_samples(MatrixGafSpec(2, GafSpec("disk", 1)), RngStream(1), 1, 1.0)
