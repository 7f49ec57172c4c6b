import math

import numpy as np
import pytest
from scipy import stats as sps
from scipy.special import gammainc

from gafzeros.core import RngStream, split_stream
from gafzeros.dpp import (DppKernelSpec, RadialLaw, count_distribution_exact, det_sphere_samples,
                          expected_count, ginibre_samples, hyperbolic1_counts, intensity,
                          kernel_eval, monomial_basis, poisson_binomial,
                          projection_dpp_samples, reference_density, sample_ginibre_n,
                          sample_radii_hyperbolic1, truncation_rank)
from gafzeros.stats import total_variation


def test_kernel_examples():
    assert kernel_eval(DppKernelSpec("plane", 1), 0, 0) == pytest.approx(1 / np.pi)
    assert kernel_eval(DppKernelSpec("sphere", 2), 1, 1) == pytest.approx(4 / np.pi)
    for n in (1, 3):
        s = DppKernelSpec("disk", n)
        assert kernel_eval(s, 0, 0) * reference_density(s, 0) == pytest.approx(n / np.pi)
    with pytest.raises(ValueError):
        kernel_eval(DppKernelSpec("disk", 1), 1.0, 0)
    with pytest.raises(ValueError):
        DppKernelSpec("sphere", 2.5)


@pytest.mark.parametrize("domain,alpha", [("plane", 2.0), ("sphere", 3), ("disk", 1.5)])
def test_kernel_diagonal_gives_intensity(domain, alpha):
    s = DppKernelSpec(domain, alpha)
    z = np.array([0, 0.3 + 0.2j, -0.5j])
    assert np.allclose(kernel_eval(s, z, z).real * reference_density(s, z), intensity(s, z))


@pytest.mark.parametrize("domain,alpha", [("plane", 1.0), ("sphere", 2), ("disk", 1.0)])
def test_negative_pair_correlation(domain, alpha):
    s = DppKernelSpec(domain, alpha)
    g = np.linspace(-0.6, 0.6, 9)
    z = (g[:, None] + 1j * g[None, :]).ravel()
    K = kernel_eval(s, z[:, None], z[None, :])
    rho2 = K.diagonal()[:, None].real * K.diagonal()[None, :].real - np.abs(K) ** 2
    assert np.all(rho2 <= K.diagonal()[:, None].real * K.diagonal()[None, :].real + 1e-12)


def test_ginibre_small_cases():
    ps = sample_ginibre_n(1, RngStream(1))
    assert len(ps) == 1
    samples = ginibre_samples(20, RngStream(2), 10 ** 4)
    assert all(len(ps) == 20 for ps in samples)
    c = np.array([np.sum(np.abs(ps.points) ** 2 < 1) for ps in samples])
    expect = gammainc(np.arange(1, 21), 1.0).sum()
    assert abs(c.mean() - expect) < 3 * c.std(ddof=1) / math.sqrt(c.size)
    ang = np.concatenate([np.angle(ps.points) for ps in samples[:2000]]) % (2 * np.pi)
    assert sps.chisquare(np.histogram(ang, bins=24, range=(0, 2 * np.pi))[0]).pvalue > 0.01


def test_det_sphere_mean_count():
    samples = det_sphere_samples(3, RngStream(3), 20000)
    c = np.array([np.sum(np.abs(ps.points[~ps.at_infinity]) < 1.5) for ps in samples])
    expect = expected_count(DppKernelSpec("sphere", 3), 1.5)
    assert abs(c.mean() - expect) < 3 * c.std(ddof=1) / math.sqrt(c.size)


def test_hyperbolic_radii():
    # frequency of rho_2 < 0.8 is 0.8^4
    rng = RngStream(4).generator()
    u = rng.random(10 ** 5)
    p = np.mean(u ** (1 / 4) < 0.8)
    assert abs(p - 0.4096) < 3 * math.sqrt(0.4096 * 0.5904 / 1e5)
    r = sample_radii_hyperbolic1(RngStream(5), 0.5)
    assert np.all(r < 0.5)
    c = hyperbolic1_counts(RngStream(6), 0.5, 10 ** 5)
    assert abs(c.mean() - 1 / 3) < 3 * c.std(ddof=1) / math.sqrt(c.size)
    hole = np.prod(1 - 0.25 ** np.arange(1, 60))
    assert abs(np.mean(c == 0) - hole) < 3 * math.sqrt(hole * (1 - hole) / c.size)
    with pytest.raises(ValueError):
        sample_radii_hyperbolic1(RngStream(5), 0.99, count_cap=10)


def test_radii_sampler_matches_counts():
    counts = [sample_radii_hyperbolic1(split_stream(RngStream(7), i), 0.5).size
              for i in range(3000)]
    pmf = count_distribution_exact(RadialLaw.hyperbolic1(), 0.5)
    assert total_variation(np.array(counts), pmf) < 0.04


def test_count_distribution_examples():
    assert np.allclose(poisson_binomial([0.3]), [0.7, 0.3])
    pmf = count_distribution_exact(DppKernelSpec("disk", 1), 0.5)
    assert 1 - pmf[0] == pytest.approx(0.3115, abs=1e-4)
    g = count_distribution_exact(RadialLaw.ginibre(5), 1.0)
    assert np.dot(np.arange(g.size), g) == pytest.approx(gammainc(np.arange(1, 6), 1.0).sum())
    with pytest.raises(NotImplementedError):
        count_distribution_exact(DppKernelSpec("disk", 2), 0.5)


def test_projection_sampler_sphere_uniform():
    b = monomial_basis(DppKernelSpec("sphere", 1))
    samples = projection_dpp_samples(b, RngStream(8), 20000)
    z = np.array([ps.points[0] for ps in samples])
    u = np.abs(z) ** 2 / (1 + np.abs(z) ** 2)
    assert sps.kstest(u, "uniform").pvalue > 0.01


def test_projection_matches_pencil():
    b = monomial_basis(DppKernelSpec("sphere", 3))
    proj = projection_dpp_samples(b, RngStream(9), 10 ** 4)
    pen = det_sphere_samples(3, RngStream(10), 10 ** 4)
    for r in (0.5, 1.0, 2.0):
        a = [np.sum(np.abs(ps.finite) <= r) for ps in proj]
        c = [np.sum(np.abs(ps.finite) <= r) for ps in pen]
        assert sps.ks_2samp(a, c).pvalue > 0.01 / 3


def test_projection_plane_repulsion():
    spec = DppKernelSpec("plane", 1.0)
    b = monomial_basis(spec, 20)
    samples = projection_dpp_samples(b, RngStream(11), 2000)
    assert all(len(ps) == 20 for ps in samples)
    from gafzeros.stats import estimate_pair_correlation
    est = estimate_pair_correlation(samples, [0.05, 0.3, 0.6, 0.9], window=2.5, erosion=0,
                                    rho1=lambda z: intensity(spec, z))
    assert np.all(est.extra["g"] < 1 + 3 * est.extra["g_se"])


def test_truncation_rank():
    assert truncation_rank(DppKernelSpec("sphere", 4), 10) == 4
    N = truncation_rank(DppKernelSpec("plane", 1.0), 2.0)
    assert 10 < N < 40
