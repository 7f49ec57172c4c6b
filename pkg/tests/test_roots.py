import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gafzeros.roots import (companion_roots, horner, newton_polish, poly_roots,
                            winding_number, winding_numbers)


def _sorted(z):
    z = np.asarray(z)
    return z[np.lexsort((np.round(z.imag, 8), np.round(z.real, 8)))]


def test_quadratic():
    assert np.allclose(_sorted(poly_roots([-0.25, 0, 1])), [-0.5, 0.5])


def test_zero_roots_factored():
    r = poly_roots([0, 0, 1, -1])
    assert np.allclose(_sorted(r), [0, 0, 1])


def test_zero_polynomial_rejected():
    with pytest.raises(ValueError):
        poly_roots([0, 0])


@pytest.mark.parametrize("method", ["aberth", "companion"])
def test_known_roots(method):
    roots = np.exp(2j * np.pi * np.arange(7) / 7) * 0.8
    c = np.poly(roots)[::-1]
    got = poly_roots(c, method=method)
    assert np.allclose(_sorted(got), _sorted(roots), atol=1e-12)


def test_high_degree_gaf_like_backward_error():
    rng = np.random.default_rng(0)
    n = np.arange(300)
    from scipy.special import gammaln
    c = (rng.standard_normal(300) + 1j * rng.standard_normal(300)) * np.exp(-0.5 * gammaln(n + 1))
    z = poly_roots(c)
    assert z.size == 299
    small = z[np.abs(z) < 3]
    scale = np.sum(np.abs(c)[None, :] * np.abs(small)[:, None] ** n, axis=1)
    assert np.max(np.abs(horner(c, small)) / scale) < 1e-12


def test_polish_never_merges_roots():
    c = np.poly([0.1, 0.1001, 2.0])[::-1]
    z = newton_polish(c, np.array([0.1, 0.1001, 2.0]) + 1e-6)
    assert np.min(np.abs(z[0] - z[1])) > 5e-5


def test_winding_counts_match_roots():
    rng = np.random.default_rng(3)
    for _ in range(50):
        c = rng.standard_normal(12) + 1j * rng.standard_normal(12)
        r = 0.9
        inside = np.sum(np.abs(poly_roots(c)) <= r)
        assert winding_number(c, r) == inside


def test_winding_batch_shapes():
    c = np.array([[1, -2, 1], [0.25, 0, 1]], dtype=complex)
    n, m, ok = winding_numbers(c, 0.9)
    assert ok.all()
    assert n.tolist() == [0, 2]
    assert np.all(m > 0)


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=8))
@settings(max_examples=60, deadline=None)
def test_roots_reconstruct_polynomial(roots):
    roots = np.array(roots)
    c = np.poly(roots)[::-1]
    got = poly_roots(c)
    assert got.size == roots.size
    # each computed root is a near-zero of the polynomial
    scale = np.sum(np.abs(c)[None, :] * (1 + np.abs(got)[:, None]) ** np.arange(c.size), axis=1)
    assert np.all(np.abs(horner(c, got)) <= 1e-8 * scale)


def test_companion_matches_numpy():
    c = np.array([2, -3, 0.5, 1], dtype=complex)
    assert np.allclose(_sorted(companion_roots(c)), _sorted(np.roots(c[::-1])))
