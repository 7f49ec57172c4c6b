"""Polynomials of independent GAFs and matrix-valued analytic functions.

A polygaf is F(z) = Q(f_1(z), ..., f_k(z)) for a homogeneous polynomial Q
of degree d and iid copies f_j of one canonical GAF.  Its zero set is
stationary under the same isometries as the GAF and has d times the GAF's
first intensity.  The central example is Q = det on n x n matrices, whose
zeros are the points where a random matrix function becomes singular:
det(zA - B) for the spherical GAF with L = 1 and det(A_0 + z A_1 + ...) in
general.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .core import DomainTag, PointSet, RngStream, standard_complex_normal
from .gaf import (BOUNDARY_MARGIN, GafSpec, TruncatedSeries, _extract, _realized_tail_ok,
                  evaluate, log_scale, truncation_order)

__all__ = [
    "HomPoly",
    "MatrixGafSpec",
    "eval_polygaf",
    "polygaf_series",
    "det_pencil_zeros",
    "det_pencil_samples",
    "pencil_eigenvalues",
    "matrix_series_zeros",
    "matrix_series_samples",
    "matrix_series_coeffs",
    "matrix_poly_eigenvalues",
    "matrix_poly_zeros",
    "det_series_coeffs",
]

#: pencils whose A has a larger condition number go through the QZ algorithm
PENCIL_COND_MAX = 1e12
#: homogeneous eigenvalues with |beta| below this (relative) are infinite
INFINITE_BETA_TOL = 1e-12
#: largest truncation order accepted for matrix series
MAX_SERIES_ORDER = 256


@dataclass(frozen=True)
class HomPoly:
    """Homogeneous polynomial sum_t coef_t prod_j x_j**e_tj.

    Parameters
    ----------
    k : int
        Number of variables.
    d : int
        Total degree of every term.
    terms : tuple of (tuple of int, complex)
        Exponent vectors with their coefficients.
    name : str
        Identifier used in reports.
    """

    k: int
    d: int
    terms: tuple
    name: str = "Q"

    def __post_init__(self):
        terms = tuple((tuple(int(e) for e in exps), complex(coef)) for exps, coef in self.terms)
        if not terms or all(coef == 0 for _, coef in terms):
            raise ValueError("a polynomial needs at least one nonzero coefficient")
        for exps, _ in terms:
            if len(exps) != self.k:
                raise ValueError("exponent vector length must equal the arity k")
            if any(e < 0 for e in exps) or sum(exps) != self.d:
                raise ValueError("every exponent vector must be non-negative and sum to d")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def identity(cls) -> "HomPoly":
        """Q(x) = x."""
        return cls(1, 1, (((1,), 1.0),), "zeta")

    @classmethod
    def product(cls, k: int) -> "HomPoly":
        """Q(x_1, ..., x_k) = x_1 ... x_k."""
        return cls(k, k, (((1,) * k, 1.0),), f"prod{k}")

    @classmethod
    def power(cls, d: int) -> "HomPoly":
        """Q(x) = x**d."""
        return cls(1, d, (((d,), 1.0),), f"pow{d}")

    @classmethod
    def det(cls, n: int) -> "HomPoly":
        """Determinant of the n x n matrix of variables, taken row-major."""
        terms = []
        for perm in itertools.permutations(range(n)):
            exps = [0] * (n * n)
            for i, j in enumerate(perm):
                exps[i * n + j] = 1
            sign = _perm_sign(perm)
            terms.append((tuple(exps), float(sign)))
        return cls(n * n, n, tuple(terms), f"det{n}")

    @property
    def det_size(self) -> Optional[int]:
        """n if this polynomial is det on n x n, else None."""
        if not self.name.startswith("det"):
            return None
        n = int(self.name[3:])
        return n if n * n == self.k else None

    def __call__(self, values):
        """Evaluate on an array whose leading axis runs over the k variables."""
        x = np.asarray(values, dtype=complex)
        if x.shape[0] != self.k:
            raise ValueError(f"expected {self.k} variables, got {x.shape[0]}")
        n = self.det_size
        if n is not None:
            mats = np.moveaxis(x, 0, -1).reshape(x.shape[1:] + (n, n))
            return np.linalg.det(mats)
        out = np.zeros(x.shape[1:], dtype=complex)
        for exps, coef in self.terms:
            term = np.full(x.shape[1:], coef, dtype=complex)
            for j, e in enumerate(exps):
                if e:
                    term = term * x[j] ** e
            out = out + term
        return out


def _perm_sign(perm) -> int:
    sign, seen = 1, [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class MatrixGafSpec:
    """n x n matrix whose entries are iid copies of the base GAF."""

    n: int
    base: GafSpec

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("matrix size must be at least 1")
        object.__setattr__(self, "n", int(self.n))


def eval_polygaf(q: HomPoly, series: Sequence[TruncatedSeries], z):
    """F(z) = Q(f_1(z), ..., f_k(z))."""
    if len(series) != q.k:
        raise ValueError(f"Q takes {q.k} functions, got {len(series)}")
    vals = np.stack([np.asarray(evaluate(s, z)) for s in series])
    out = q(vals)
    return complex(out) if np.ndim(out) == 0 else out


def _sup_bound(s: TruncatedSeries, r: float) -> float:
    k = np.arange(s.coeffs.size)
    if np.isinf(r):
        return np.inf
    return float(np.sum(np.abs(s.coeffs) * r ** k))


def polygaf_series(q: HomPoly, series: Sequence[TruncatedSeries],
                   tail_cap: float = np.inf) -> TruncatedSeries:
    """Coefficients of Q(f_1, ..., f_k) from products of the truncated series.

    With |f_j| <= M_j on the common disk and tails t_j, each monomial's error
    is at most prod (M_j + t_j)**e_j - prod M_j**e_j; the sum over terms is the
    propagated ``tail_bound``.  Raises if that exceeds ``tail_cap``.
    """
    if len(series) != q.k:
        raise ValueError(f"Q takes {q.k} functions, got {len(series)}")
    radius = min(s.radius for s in series)
    exact = all(s.tail_bound == 0 for s in series)
    if not exact and np.isinf(radius):
        raise ValueError("series do not share a finite certified radius")
    out = np.zeros(1, dtype=complex)
    tail = 0.0
    M = [_sup_bound(s, radius) for s in series] if not exact else None
    for exps, coef in q.terms:
        prod = np.array([coef], dtype=complex)
        for j, e in enumerate(exps):
            for _ in range(e):
                prod = np.convolve(prod, series[j].coeffs)
        if prod.size > out.size:
            out = np.concatenate([out, np.zeros(prod.size - out.size, complex)])
        out[:prod.size] += prod
        if not exact:
            hi = lo = 1.0
            for j, e in enumerate(exps):
                hi *= (M[j] + series[j].tail_bound) ** e
                lo *= M[j] ** e
            tail += abs(coef) * (hi - lo)
    if tail > tail_cap:
        raise ValueError(f"propagated tail bound {tail:.3g} exceeds the cap {tail_cap:.3g}")
    conf = min(s.confidence for s in series)
    if not exact:
        conf = max(0.0, 1 - sum(1 - s.confidence for s in series))
    return TruncatedSeries(out, radius, float(tail), conf, {"polynomial": q.name})


def pencil_eigenvalues(A: np.ndarray, B: np.ndarray):
    """Generalised eigenvalues of z A - B for one pencil.

    Returns ``(finite, n_infinite)``.  A well-conditioned A gives the
    eigenvalues of A^{-1} B directly; otherwise the QZ algorithm is used and
    eigenvalues whose homogeneous beta part is below ``INFINITE_BETA_TOL``
    times the pencil scale count as infinite.
    """
    if np.linalg.cond(A) < PENCIL_COND_MAX:
        return np.linalg.eigvals(np.linalg.solve(A, B)), 0
    w = scipy.linalg.eig(B, A, right=False, homogeneous_eigvals=True)
    alpha, beta = w[0], w[1]
    scale = max(np.linalg.norm(A), np.linalg.norm(B))
    inf = np.abs(beta) < INFINITE_BETA_TOL * scale
    return alpha[~inf] / beta[~inf], int(inf.sum())


def _check_pencil_spec(spec: MatrixGafSpec) -> None:
    if spec.base.domain is not DomainTag.SPHERE or spec.base.L != 1:
        raise ValueError("det(zA - B) needs the spherical base GAF with L = 1")


def det_pencil_samples(spec: MatrixGafSpec, stream: RngStream, M: int,
                       batch: int = 4096) -> list:
    """``M`` zero sets of det(zA - B) with iid standard complex Gaussian A, B."""
    _check_pencil_spec(spec)
    n = spec.n
    rng = stream.generator()
    name = f"det-pencil-n{n}"
    out = []
    while len(out) < M:
        size = min(batch, M - len(out))
        A = standard_complex_normal(rng, (size, n, n))
        B = standard_complex_normal(rng, (size, n, n))
        cond = np.linalg.cond(A)
        good = cond < PENCIL_COND_MAX
        eig = np.empty((size, n), dtype=complex)
        if good.any():
            eig[good] = np.linalg.eigvals(np.linalg.solve(A[good], B[good]))
        for i in range(size):
            meta = {"generator": name, "stream": stream.to_dict(), "index": len(out)}
            if good[i]:
                ps = PointSet(DomainTag.SPHERE, eig[i], meta=meta)
            else:
                fin, n_inf = pencil_eigenvalues(A[i], B[i])
                meta["qz"] = True
                ps = PointSet.from_roots(DomainTag.SPHERE, fin, n_infinite=n_inf,
                                         meta=meta, tol=0.0)
            out.append(ps)
    return out


def det_pencil_zeros(spec: MatrixGafSpec, stream: RngStream) -> PointSet:
    """Zeros of det(zA - B), the generalised eigenvalues, for one draw of A, B."""
    return det_pencil_samples(spec, stream, 1)[0]


def matrix_series_coeffs(spec: MatrixGafSpec, rng: np.random.Generator, r: float,
                         eps: float = 1e-9, size: Optional[int] = None):
    """Coefficient matrices A_0..A_N of a truncated matrix GAF.

    Entry (i, j) of sum_k A_k z^k is an iid copy of the base GAF; N follows
    the scalar truncation rule and grows in steps of six until every entry's
    last six realised terms are below the tail tolerance.  Returns an array
    of shape ``(size, N+1, n, n)`` (no leading axis if ``size`` is None) and
    the tail tolerance.
    """
    base, n = spec.base, spec.n
    lead = () if size is None else (size,)
    if base.domain is DomainTag.SPHERE:
        N, tol = int(base.L), 0.0
    else:
        N = truncation_order(base, r, eps)
        tol = eps * math.exp(log_scale(base, r))
    if N > MAX_SERIES_ORDER:
        raise ValueError(f"truncation order {N} exceeds the cap {MAX_SERIES_ORDER}")
    top = N if base.domain is DomainTag.SPHERE else N + 5
    w = base.weights(top)
    c = standard_complex_normal(rng, lead + (n, n, top + 1)) * w
    if base.domain is not DomainTag.SPHERE:
        while not np.all(_realized_tail_ok(c, r, tol, N)):
            N += 6
            if N > MAX_SERIES_ORDER:
                raise ValueError(f"truncation order {N} exceeds the cap {MAX_SERIES_ORDER}")
            w = np.exp(base.log_weights(np.arange(c.shape[-1], c.shape[-1] + 6)))
            c = np.concatenate([c, standard_complex_normal(rng, lead + (n, n, 6)) * w], axis=-1)
    return np.moveaxis(c, -1, -3), tol


def matrix_poly_eigenvalues(coeffs: np.ndarray) -> np.ndarray:
    """Finite zeros of det(sum_k A_k z^k), batched over leading axes.

    The reversed polynomial mu^N P(1/mu) is made monic with A_0^{-1} and
    linearised by its block companion matrix; z = 1/mu.  A_0 must be
    invertible.  Returns an array with N*n eigenvalues per polynomial; zero
    mu (infinite z) appear as ``inf``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    *lead, N1, n, _ = coeffs.shape
    N = N1 - 1
    if N == 0:
        return np.zeros(tuple(lead) + (0,), complex)
    A0 = coeffs[..., 0, :, :]
    rest = np.linalg.solve(A0[..., None, :, :], coeffs[..., 1:, :, :])  # A0^{-1} A_k
    size = n * N
    comp = np.zeros(tuple(lead) + (size, size), dtype=complex)
    # mu^N I + sum_{k=1}^N A0^{-1} A_k mu^{N-k}: first block row holds -A0^{-1} A_k
    for k in range(1, N + 1):
        comp[..., :n, (k - 1) * n:k * n] = -rest[..., k - 1, :, :]
    idx = np.arange(n, size)
    comp[..., idx, idx - n] = 1.0
    mu = np.linalg.eigvals(comp)
    with np.errstate(divide="ignore"):
        return 1.0 / mu


def _det_polish(coeffs: np.ndarray, z: np.ndarray, steps: int = 20) -> np.ndarray:
    """Newton steps z <- z - 1/tr(P(z)^{-1} P'(z)) on det P, accepted while |det| drops."""
    z = np.array(z, dtype=complex)
    if z.size == 0:
        return z
    N = coeffs.shape[0] - 1
    k = np.arange(N + 1)

    def pd(x):
        pw = x[:, None] ** k
        P = np.einsum("mk,kij->mij", pw, coeffs)
        dpw = np.where(k > 0, k * x[:, None] ** np.maximum(k - 1, 0), 0)
        dP = np.einsum("mk,kij->mij", dpw, coeffs)
        return P, dP

    P, dP = pd(z)
    d = np.abs(np.linalg.det(P))
    for _ in range(steps):
        with np.errstate(all="ignore"):
            try:
                tr = np.trace(np.linalg.solve(P, dP), axis1=-2, axis2=-1)
            except np.linalg.LinAlgError:
                break
            trial = z - 1.0 / tr
        ok = np.isfinite(trial) & (np.abs(trial - z) < 1e-3 * np.maximum(1, np.abs(z)))
        if not ok.any():
            break
        Pt, dPt = pd(np.where(ok, trial, z))
        dt = np.abs(np.linalg.det(Pt))
        better = ok & (dt < d)
        if not better.any():
            break
        z = np.where(better, trial, z)
        P = np.where(better[:, None, None], Pt, P)
        dP = np.where(better[:, None, None], dPt, dP)
        d = np.where(better, dt, d)
    return z


def det_winding(coeffs: np.ndarray, r: float, K: int = 128, K_max: int = 1 << 16):
    """Winding number of det(sum A_k z^k) around |z| = r, or None if unresolved."""
    N = coeffs.shape[0] - 1
    scaled = coeffs * (r ** np.arange(N + 1))[:, None, None]
    while K <= K_max:
        pad = -(N + 1) % K
        c = np.concatenate([scaled, np.zeros((pad,) + scaled.shape[1:], complex)])
        folded = c.reshape((-1, K) + scaled.shape[1:]).sum(axis=0)
        vals = np.linalg.det(np.fft.ifft(folded, axis=0) * K)
        if np.all(vals != 0):
            inc = np.angle(np.roll(vals, -1) / vals)
            if np.all(np.abs(inc) <= np.pi / 2):
                return int(np.rint(inc.sum() / (2 * np.pi)))
        K *= 4
    return None


def _series_pointset(coeffs, eig, r, domain, meta) -> PointSet:
    finite = eig[np.isfinite(eig)]
    near = finite[np.abs(finite) <= 1.5 * r]
    near = _det_polish(coeffs, near)
    inside = near[np.abs(near) <= r]
    flags = []
    if np.any(np.abs(np.abs(near) - r) < BOUNDARY_MARGIN * r):
        flags.append("boundary")
    w = det_winding(coeffs, r)
    if w is None:
        flags.append("unresolved")
    elif w != inside.size:
        flags.append("winding")
    meta = dict(meta)
    meta["flagged"] = bool(flags)
    if flags:
        meta["flags"] = flags
    return PointSet.from_roots(domain, inside, meta=meta)


def matrix_poly_zeros(coeffs, r: float, domain=DomainTag.PLANE) -> PointSet:
    """Zeros of det(sum_k A_k z^k) with |z| <= r for given coefficient matrices.

    ``coeffs`` has shape ``(N+1, n, n)``; ``meta["flagged"]`` reports
    boundary or winding problems as in :func:`matrix_series_samples`.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    eig = matrix_poly_eigenvalues(coeffs)
    return _series_pointset(coeffs, eig, r, DomainTag.parse(domain), {})


def det_series_coeffs(coeffs: np.ndarray, r: float) -> np.ndarray:
    """Scaled coefficients d_k = c_k r^k of det(sum_k A_k z^k), batched.

    det is sampled at K > nN points of |z| = r (entries by FFT) and
    transformed back, which is exact up to rounding because the degree is
    at most nN.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    N1, n = coeffs.shape[-3], coeffs.shape[-1]
    deg = n * (N1 - 1)
    K = 1 << int(np.ceil(np.log2(deg + 1)))
    scaled = coeffs * (r ** np.arange(N1))[:, None, None]
    pad = np.zeros(coeffs.shape[:-3] + (K - N1,) + coeffs.shape[-2:], complex)
    vals = np.fft.ifft(np.concatenate([scaled, pad], axis=-3), axis=-3) * K
    d = np.fft.fft(np.linalg.det(vals), axis=-1) / K
    return d[..., :deg + 1]


def _det_series_pointset(coeffs, r, domain, meta) -> PointSet:
    d = det_series_coeffs(coeffs, r)
    ps = _extract(d, 1.0, 0.0, domain, meta)
    return PointSet(domain, ps.points * r, ps.multiplicity, None, ps.meta)


def matrix_series_samples(spec: MatrixGafSpec, stream: RngStream, M: int, r: float,
                          eps: float = 1e-9, batch: int = 256,
                          method: str = "det") -> list:
    """``M`` unflagged zero sets of det(A_0 + z A_1 + ...) inside |z| <= r.

    ``method="det"`` recovers the scalar polynomial det P(z) by FFT on the
    circle and finds its roots in the scaled variable z/r;
    ``method="linearization"`` takes the eigenvalues of the block companion
    matrix of the reversed matrix polynomial instead.  Flagged draws (roots
    near the contour, or root counts that disagree with the winding number
    of det along it) are replaced by fresh draws from the same generator.
    """
    if method not in ("det", "linearization"):
        raise ValueError(f"unknown method {method!r}")
    base = spec.base
    if base.domain is DomainTag.DISK and not r < 1:
        raise ValueError("disk matrix series need r < 1")
    rng = stream.generator()
    name = f"det-series-{base.domain.value}-L{base.L}-n{spec.n}"
    out, resampled = [], 0
    while len(out) < M:
        size = min(batch, M - len(out))
        C, _ = matrix_series_coeffs(spec, rng, r, eps, size)
        if method == "linearization":
            eig = matrix_poly_eigenvalues(C)
        for i in range(size):
            meta = {"generator": name, "stream": stream.to_dict(), "index": len(out)}
            if method == "linearization":
                ps = _series_pointset(C[i], eig[i], r, base.domain, meta)
            else:
                ps = _det_series_pointset(C[i], r, base.domain, meta)
            if ps.meta.pop("flagged"):
                resampled += 1
                continue
            out.append(ps)
    for ps in out:
        ps.meta["resampled_in_run"] = resampled
    return out


def matrix_series_zeros(spec: MatrixGafSpec, stream: RngStream, r: float,
                        eps: float = 1e-9, method: str = "det") -> PointSet:
    """Zeros inside |z| <= r of det of a truncated random matrix power series."""
    return matrix_series_samples(spec, stream, 1, r, eps, method=method)[0]
