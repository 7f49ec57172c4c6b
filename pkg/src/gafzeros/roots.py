"""Polynomial root extraction and argument-principle counting.

Roots come from an Aberth-Ehrlich iteration (compiled with numba) started
on the Newton-polygon circles of the coefficient moduli, with companion
matrix eigenvalues as the fallback and for low degrees.  Every count inside
a circle can be cross-checked against the winding number of the polynomial
along that circle, computed from an FFT of the scaled coefficients.
"""
from __future__ import annotations

import numba
import numpy as np

__all__ = [
    "poly_roots",
    "companion_roots",
    "newton_polish",
    "horner",
    "circle_values",
    "winding_number",
    "winding_numbers",
]

#: degree up to which companion eigenvalues are the default method
COMPANION_MAX_DEGREE = 48


@numba.njit(cache=True)
def _initial_guesses(c):
    # Newton polygon: upper convex hull of (k, log|c_k|) gives one circle
    # per hull edge carrying as many starting points as the edge is long.
    n = c.shape[0] - 1
    la = np.empty(n + 1)
    for k in range(n + 1):
        a = abs(c[k])
        la[k] = np.log(a) if a > 0 else -np.inf
    hull = np.empty(n + 1, np.int64)
    h = 0
    for k in range(n + 1):
        if la[k] == -np.inf:
            continue
        while h >= 2:
            i, j = hull[h - 2], hull[h - 1]
            if (la[j] - la[i]) * (k - i) <= (la[k] - la[i]) * (j - i):
                h -= 1
            else:
                break
        hull[h] = k
        h += 1
    z = np.empty(n, np.complex128)
    idx = 0
    for s in range(h - 1):
        i, j = hull[s], hull[s + 1]
        m = j - i
        r = np.exp((la[i] - la[j]) / m)
        for t in range(m):
            ang = 2 * np.pi * t / m + 2 * np.pi * s / n + 0.4
            z[idx] = r * np.exp(1j * ang)
            idx += 1
    return z


@numba.njit(cache=True)
def _aberth(c, maxit, tol):
    n = c.shape[0] - 1
    z = _initial_guesses(c)
    done = np.zeros(n, np.bool_)
    for it in range(maxit):
        ndone = 0
        for i in range(n):
            if done[i]:
                ndone += 1
                continue
            zi = z[i]
            if abs(zi) <= 1.0:
                p = c[n]
                dp = 0j
                for k in range(n - 1, -1, -1):
                    dp = dp * zi + p
                    p = p * zi + c[k]
                ratio = p / dp if dp != 0 else p
            else:
                # p(z) = z^n q(1/z); evaluating q keeps Horner stable for |z| > 1
                w = 1.0 / zi
                q = c[0]
                dq = 0j
                for k in range(1, n + 1):
                    dq = dq * w + q
                    q = q * w + c[k]
                den = n * w - w * w * dq / q if q != 0 else 0j
                ratio = 1.0 / den if den != 0 else 0j
            s = 0j
            for j in range(n):
                if j != i:
                    d = zi - z[j]
                    if d != 0:
                        s += 1.0 / d
            den = 1.0 - ratio * s
            step = ratio / den if den != 0 else ratio
            z[i] = zi - step
            if abs(step) <= tol * abs(z[i]) or step == 0:
                done[i] = True
        if ndone == n:
            return z, True
    return z, False


def _trim(c: np.ndarray):
    """Drop vanishing top coefficients and factor out zeros at the origin."""
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise ValueError("the zero polynomial has no isolated roots")
    lo, hi = nz[0], nz[-1]
    return c[lo:hi + 1], int(lo)


def horner(c: np.ndarray, z, deriv: bool = False):
    """Evaluate sum c_k z^k (and optionally its derivative), vectorised in z."""
    z = np.asarray(z, dtype=complex)
    p = np.full(z.shape, c[-1], dtype=complex)
    dp = np.zeros(z.shape, dtype=complex)
    for a in c[-2::-1]:
        if deriv:
            dp = dp * z + p
        p = p * z + a
    return (p, dp) if deriv else p


def companion_roots(c: np.ndarray) -> np.ndarray:
    """Roots of sum c_k z^k from the companion matrix of the reversed polynomial.

    Normalising by the constant term makes the small roots, which are the
    ones the package cares about, the large eigenvalues of the matrix; these
    are computed with the best relative accuracy after balancing.
    """
    c, k0 = _trim(np.asarray(c, dtype=complex))
    n = c.size - 1
    if n == 0:
        return np.zeros(k0, complex)
    d = c[::-1]
    comp = np.zeros((n, n), dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        comp[0, :] = -d[-2::-1] / d[-1]
    if not np.all(np.isfinite(comp[0])):
        # callers fall back to another method on non-finite roots
        return np.concatenate([np.full(n, np.nan + 0j), np.zeros(k0, complex)])
    comp[np.arange(1, n), np.arange(n - 1)] = 1.0
    mu = np.linalg.eigvals(comp)
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = 1.0 / mu
    return np.concatenate([roots, np.zeros(k0, complex)])


@numba.njit(cache=True)
def _polish(c, z0, reach, steps):
    n = c.shape[0] - 1
    z = z0.copy()
    for i in range(z.shape[0]):
        zi = z0[i]
        best = np.inf
        for _ in range(steps + 1):
            p = c[n]
            dp = 0j
            for k in range(n - 1, -1, -1):
                dp = dp * zi + p
                p = p * zi + c[k]
            ap = abs(p)
            if not ap < best:
                break
            best = ap
            z[i] = zi
            if dp == 0:
                break
            trial = zi - p / dp
            if not abs(trial - z0[i]) <= reach[i]:
                break
            zi = trial
    return z


def newton_polish(c: np.ndarray, z: np.ndarray, steps: int = 20) -> np.ndarray:
    """At most ``steps`` Newton iterations per root.

    A step is accepted only if it lowers |p| and keeps the root within a
    quarter of its initial distance to the nearest other root, so polishing
    can never move one root onto another.
    """
    z0 = np.array(z, dtype=complex).reshape(-1)
    c = np.asarray(c, dtype=complex)
    if z0.size < 1 or len(c) < 2:
        return z0
    if z0.size > 1:
        gap = np.abs(z0[:, None] - z0[None, :])
        np.fill_diagonal(gap, np.inf)
        reach = 0.25 * gap.min(axis=1)
    else:
        reach = np.full(1, np.inf)
    return _polish(c, z0, reach, int(steps))


def _backward_error(c: np.ndarray, roots: np.ndarray) -> float:
    """Largest |p(z)| / sum |c_k| |z|^k over the roots; nan if any root is not finite."""
    if not np.all(np.isfinite(roots)):
        return np.nan
    with np.errstate(over="ignore", invalid="ignore"):
        den = np.abs(horner(np.abs(c), np.abs(roots)))
        return float(np.max(np.abs(horner(c, roots)) / den))


def poly_roots(c, method: str = "auto", polish: bool = True) -> np.ndarray:
    """All roots of the polynomial sum c_k z^k, repeated by multiplicity.

    Parameters
    ----------
    c : array_like of complex
        Coefficients in increasing degree.  Vanishing top coefficients
        lower the degree.
    method : {"auto", "aberth", "companion"}
        ``auto`` uses companion eigenvalues up to degree
        :data:`COMPANION_MAX_DEGREE` and Aberth iteration above it.
    polish : bool
        Apply :func:`newton_polish` to the result.
    """
    c = np.asarray(c, dtype=complex)
    trimmed, k0 = _trim(c)
    n = trimmed.size - 1
    if n == 0:
        roots = np.zeros(0, complex)
    elif n == 1:
        roots = np.array([-trimmed[0] / trimmed[1]])
    else:
        if method == "auto":
            method = "companion" if n <= COMPANION_MAX_DEGREE else "aberth"
        if method == "aberth":
            roots, ok = _aberth(trimmed, 100, 4e-16)
            if not ok or not np.all(np.isfinite(roots)):
                roots = companion_roots(trimmed)
        elif method == "companion":
            roots = companion_roots(trimmed)
            err = _backward_error(trimmed, roots)
            if not err <= 1e-10:
                # root moduli spread over too many decades for one matrix
                alt, _ = _aberth(trimmed, 200, 4e-16)
                if not _backward_error(trimmed, alt) >= err:
                    roots = alt
        else:
            raise ValueError(f"unknown method {method!r}")
        if not np.all(np.isfinite(roots)):
            roots = np.roots(trimmed[::-1])
        if polish:
            roots = newton_polish(trimmed, roots)
    return np.concatenate([roots, np.zeros(k0, complex)])


def circle_values(c: np.ndarray, r: float, K: int, return_log_scale: bool = False):
    """Values of the polynomial at r*exp(2*pi*i*j/K), j < K, up to a positive scale.

    Coefficients are folded modulo K so any K works.  Each row is divided by
    its largest term modulus to avoid overflow; with ``return_log_scale``
    the logarithm of that factor is returned as well.
    """
    c = np.asarray(c, dtype=complex)
    n = c.shape[-1]
    with np.errstate(divide="ignore"):
        logr = np.log(r)
    k = np.arange(n)
    absc = np.abs(c)
    with np.errstate(divide="ignore"):
        logs = np.where(absc > 0, np.log(np.where(absc > 0, absc, 1.0)) + k * logr, -np.inf)
    shift = np.max(logs, axis=-1, keepdims=True)
    scaled = c * np.exp(np.where(np.isfinite(logs), k * logr - shift, -np.inf))
    scaled = np.where(absc > 0, scaled, 0)
    pad = -n % K
    if pad:
        scaled = np.concatenate([scaled, np.zeros(scaled.shape[:-1] + (pad,), complex)], axis=-1)
    folded = scaled.reshape(scaled.shape[:-1] + (-1, K)).sum(axis=-2)
    values = np.fft.ifft(folded, axis=-1) * K
    if return_log_scale:
        return values, shift[..., 0]
    return values


def winding_numbers(c: np.ndarray, r: float, K: int = 64, K_max: int = 1 << 23):
    """Winding numbers of a batch of polynomials (rows of ``c``) around |z| = r.

    Returns ``(counts, min_modulus, ok)``.  ``min_modulus`` is the smallest
    sampled modulus of the polynomial on the circle; ``ok`` is false for rows
    whose phase could not be resolved at ``K_max`` points.
    """
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    B = c.shape[0]
    counts = np.zeros(B, dtype=np.int64)
    minmod = np.zeros(B)
    ok = np.zeros(B, dtype=bool)
    todo = np.arange(B)
    K = max(int(K), 8)
    while todo.size:
        v, logscale = circle_values(c[todo], r, K, return_log_scale=True)
        inc = np.angle(np.roll(v, -1, axis=-1) / v)
        good = np.all(np.abs(inc) <= np.pi / 2, axis=-1) & np.all(v != 0, axis=-1)
        idx = todo[good]
        counts[idx] = np.rint(inc[good].sum(axis=-1) / (2 * np.pi)).astype(np.int64)
        minmod[idx] = np.abs(v[good]).min(axis=-1) * np.exp(logscale[good])
        ok[idx] = True
        todo = todo[~good]
        K *= 8 if K < 4096 else 2
        if K > K_max:
            break
    return counts, minmod, ok


def winding_number(c: np.ndarray, r: float, K: int = 64) -> int:
    """Number of zeros inside |z| = r by the argument principle; raises if unresolved."""
    counts, _, ok = winding_numbers(c, r, K)
    if not ok[0]:
        raise ArithmeticError("phase along the contour could not be resolved")
    return int(counts[0])
