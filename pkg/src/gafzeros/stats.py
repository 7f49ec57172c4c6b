"""Estimators and experiments on sampled point sets.

Everything here consumes lists of :class:`~gafzeros.core.PointSet` or
count vectors and returns plain dataclasses holding estimates with their
standard errors.  Experiments that draw their own samples take an
:class:`~gafzeros.core.RngStream` and split it into fixed-size blocks (see
:func:`block_streams`), so results do not depend on how blocks are later
distributed over workers.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import stats as sps
from scipy.special import comb, factorial, zeta

from .core import DomainTag, PointSet, Region, RngStream, count_in_region, split_stream
from .core import standard_complex_normal
from .gaf import GafSpec, covariance, sample_gaf_batch
from .polygaf import HomPoly
from .roots import horner, poly_roots, winding_numbers

__all__ = [
    "BinnedEstimate",
    "WickCoeffs",
    "DeviationCurve",
    "CltReport",
    "RadialBump",
    "block_streams",
    "estimate_intensity",
    "estimate_pair_correlation",
    "pair_domain_integral",
    "wick_polynomial",
    "estimate_wick_coeffs",
    "two_point_from_formula",
    "smooth_statistic",
    "smoothstep_bump",
    "poly_bump",
    "clt_experiment",
    "wilson_interval",
    "overcrowding_curve",
    "tilted_overcrowding",
    "deviation_slope_experiment",
    "invariance_test",
    "jensen_check",
    "total_variation",
    "chi2_uniform",
]

#: replications per substream block; fixed so results are shard-count invariant
BLOCK_SIZE = 1000


def block_streams(stream: RngStream, M: int, block_size: int = BLOCK_SIZE):
    """Split ``M`` replications into blocks ``(child stream, size)`` in order."""
    out = []
    for b, start in enumerate(range(0, M, block_size)):
        out.append((split_stream(stream, b), min(block_size, M - start)))
    return out


# ------------------------------------------------------------- estimators

@dataclass
class BinnedEstimate:
    """Per-bin estimates with standard errors.

    ``edges`` are radii (annuli |z| in [e_i, e_{i+1})) or separations
    (|z - w| in [e_i, e_{i+1})) according to ``kind``.
    """

    kind: str
    edges: np.ndarray
    value: np.ndarray
    se: np.ndarray
    n_samples: int
    extra: dict = field(default_factory=dict)

    def zscores(self, reference) -> np.ndarray:
        ref = np.asarray(reference, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.value - ref) / self.se


def _finite_points(samples: Sequence[PointSet]):
    pts, mult = [], []
    for ps in samples:
        keep = ~ps.at_infinity
        pts.append(ps.points[keep])
        mult.append(ps.multiplicity[keep])
    return pts, mult


def estimate_intensity(samples: Sequence[PointSet], edges, center: complex = 0.0) -> BinnedEstimate:
    """First intensity per annulus: mean count divided by the annulus area."""
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    if len({ps.domain for ps in samples}) != 1:
        raise ValueError("samples must share one domain")
    edges = np.asarray(edges, dtype=float)
    pts, mult = _finite_points(samples)
    counts = np.zeros((len(samples), edges.size - 1))
    for i, (p, m) in enumerate(zip(pts, mult)):
        counts[i] = np.histogram(np.abs(p - center), bins=edges, weights=m)[0]
    # histogram's last bin is closed; annuli are half open except the outer edge
    area = np.pi * np.diff(edges ** 2)
    M = len(samples)
    value = counts.mean(axis=0) / area
    se = counts.std(axis=0, ddof=1) / math.sqrt(M) / area
    return BinnedEstimate("annulus", edges, value, se, M, {"counts_mean": counts.mean(axis=0)})


def _gauss(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def pair_domain_integral(edges, R: float, f: Optional[Callable] = None,
                         n_r: int = 64, n_s: int = 24, n_t: int = 64) -> np.ndarray:
    """Integrals of f(x, y) over ordered pairs in |x|, |y| <= R with |x - y| in each bin.

    ``f`` defaults to 1.  It must be invariant under joint rotations, so the
    angle of x integrates out; the remaining triple integral over |x|, the
    separation and its direction is done by Gauss-Legendre quadrature on the
    exact angular range where y stays in the disk.
    """
    edges = np.asarray(edges, dtype=float)
    out = np.zeros(edges.size - 1)
    rx, wx = _gauss(n_r, 0.0, R)
    for b in range(edges.size - 1):
        s, ws = _gauss(n_s, edges[b], edges[b + 1])
        X, S = np.meshgrid(rx, s, indexing="ij")
        # y = x + s e^{i t}, |y| <= R  <=>  cos t <= (R^2 - x^2 - s^2) / (2 x s)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (R * R - X * X - S * S) / (2 * X * S)
        tmin = np.arccos(np.clip(np.nan_to_num(c, nan=1.0, posinf=1.0, neginf=-1.0), -1, 1))
        u, wu = np.polynomial.legendre.leggauss(n_t)
        # allowed directions: t in [tmin, 2 pi - tmin]
        half = (np.pi - tmin)[..., None]
        T = np.pi + u[None, None, :] * half
        WT = wu[None, None, :] * half
        if f is None:
            inner = WT.sum(axis=-1)
        else:
            x = X[..., None] + 0j
            y = x + S[..., None] * np.exp(1j * T)
            # zero-weight nodes of empty ranges may sit outside the domain
            y = np.where(half > 0, y, x)
            inner = np.sum(WT * f(x, y), axis=-1)
        # dx = 2 pi |x| d|x| ;  dy = s ds dt
        out[b] = np.sum(2 * np.pi * X * wx[:, None] * S * ws[None, :] * inner)
    return out


def estimate_pair_correlation(samples: Sequence[PointSet], edges, window: float,
                              erosion: Optional[float] = None,
                              rho1: Optional[Callable] = None,
                              kernel_ratio: Optional[Callable] = None) -> BinnedEstimate:
    """Second intensity by separation, from ordered distinct pairs.

    Pairs count only if both points lie in the disk |z| <= window - erosion
    (``erosion`` defaults to the largest separation edge).  ``value`` is the
    mean pair count over the Lebesgue measure of that pair domain.  With a
    first intensity ``rho1`` (a function of z) the ratio of the pair count to
    the integral of rho1(x) rho1(y) over the same pair domain is returned as
    ``extra["g"]`` with its standard error ``extra["g_se"]``; for a
    stationary process this is rho2 / rho1^2 in the bin.  If
    ``kernel_ratio(x, y)`` gives the predicted rho2 / (rho1 rho1), its
    rho1 rho1-weighted bin average is stored as ``extra["g_oracle"]``.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    edges = np.asarray(edges, dtype=float)
    if erosion is None:
        erosion = float(edges[-1])
    R = window - erosion
    if R <= 0:
        raise ValueError("erosion leaves an empty window")
    pts, mult = _finite_points(samples)
    M = len(samples)
    counts = np.zeros((M, edges.size - 1))
    for i, (p, m) in enumerate(zip(pts, mult)):
        keep = np.abs(p) <= R
        p, m = p[keep], m[keep]
        if p.size == 0:
            continue
        d = np.abs(p[:, None] - p[None, :])
        wgt = m[:, None] * m[None, :] - np.diag(m)  # ordered distinct pairs incl. coincident copies
        iu = ~np.eye(p.size, dtype=bool)
        h = np.histogram(d[iu], bins=edges, weights=wgt[iu])[0]
        # copies of a multiple point sit at separation 0
        h[0] += np.sum(m * (m - 1)) if edges[0] <= 0 else 0
        counts[i] = h
    mean = counts.mean(axis=0)
    sd = counts.std(axis=0, ddof=1) / math.sqrt(M)
    area = pair_domain_integral(edges, R)
    extra = {"window": R, "pair_counts_mean": mean}
    if rho1 is not None:
        denom = pair_domain_integral(edges, R, lambda x, y: rho1(x) * rho1(y))
        extra["g"] = mean / denom
        extra["g_se"] = sd / denom
        if kernel_ratio is not None:
            num = pair_domain_integral(edges, R, lambda x, y: rho1(x) * rho1(y) * kernel_ratio(x, y))
            extra["g_oracle"] = num / denom
    return BinnedEstimate("separation", edges, mean / area, sd / area, M, extra)


# ------------------------------------------------------------------- Wick

def wick_polynomial(a: np.ndarray, m: int, n: int) -> np.ndarray:
    """:a^m conj(a)^n: = sum_r (-1)^r r! C(m,r) C(n,r) a^(m-r) conj(a)^(n-r)."""
    a = np.asarray(a, dtype=complex)
    ab = np.conj(a)
    out = np.zeros(a.shape, dtype=complex)
    for r in range(min(m, n) + 1):
        c = (-1) ** r * math.factorial(r) * comb(m, r, exact=True) * comb(n, r, exact=True)
        out = out + c * a ** (m - r) * ab ** (n - r)
    return out


def _multi_indices(k: int, total: int):
    if k == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _multi_indices(k - 1, total - first):
            yield (first,) + rest


@dataclass
class WickCoeffs:
    """Monte Carlo Wick expansion of log|Q(a_1, ..., a_k)|.

    ``coeffs`` maps ``(m, n)`` multi-index pairs to ``(estimate, se)`` of
    C_{m,n} = E[log|Q| prod_j :conj(a_j)^m_j a_j^n_j:] / sqrt(m! n!), with the
    standard error of a complex estimate, sqrt(E|C_hat - C|^2).
    ``tilde2[p]`` estimates |C~_p|^2 = sum_{|m|=|n|=p} |C_{m,n}|^2 with the
    squared standard errors subtracted (unbiased), ``tilde2_se`` its error.
    """

    q_name: str
    P: int
    M: int
    C00: complex
    C00_se: float
    tilde2: np.ndarray
    tilde2_se: np.ndarray
    coeffs: dict = field(default_factory=dict)
    exact: bool = False

    @classmethod
    def exact_identity(cls, P: int = 60) -> "WickCoeffs":
        """Exact coefficients for Q(x) = x: C_00 = -gamma/2, |C~_p|^2 = 1/(4 p^2)."""
        p = np.arange(1, P + 1)
        return cls("zeta", P, 0, complex(-np.euler_gamma / 2), 0.0,
                   np.concatenate([[0.0], 1 / (4.0 * p ** 2)]), np.zeros(P + 1), {}, True)

    def kappa(self) -> float:
        """kappa(Q) = sum_p |C~_p|^2 / (4 pi p) over the available orders."""
        p = np.arange(1, self.P + 1)
        return float(np.sum(self.tilde2[1:] / (4 * np.pi * p)))


def kappa_identity() -> float:
    """kappa for Q(x) = x: zeta(3) / (16 pi)."""
    return float(zeta(3) / (16 * np.pi))


def estimate_wick_coeffs(q: HomPoly, P: int, stream: RngStream, M: int,
                         antithetic: bool = True, orders=None,
                         batch: int = 250000) -> WickCoeffs:
    """Monte Carlo estimates of the Wick coefficients of log|Q|.

    Parameters
    ----------
    q : HomPoly
    P : int
        Largest total order |m|, |n| estimated.
    stream : RngStream
    M : int
        Number of Gaussian vectors.
    antithetic : bool
        Average each draw over the 8 rotations a -> e^{2 pi i j/8} a.  Since
        log|Q| is unchanged by a common rotation this removes every
        coefficient with |n| - |m| not divisible by 8 exactly.
    orders : iterable of (int, int), optional
        Total orders (|m|, |n|) to estimate; defaults to all pairs up to P.
    """
    if M < 2:
        raise ValueError("need M >= 2")
    k = q.k
    if orders is None:
        orders = [(i, j) for i in range(P + 1) for j in range(P + 1)]
    pairs = []
    for mi, ni in orders:
        for m in _multi_indices(k, mi):
            for n in _multi_indices(k, ni):
                pairs.append((m, n))
    sums = np.zeros(len(pairs), dtype=complex)
    sq = np.zeros(len(pairs))
    rng = stream.generator()
    phases = np.exp(2j * np.pi * np.arange(8) / 8) if antithetic else np.ones(1)
    done = 0
    while done < M:
        size = min(batch, M - done)
        a = standard_complex_normal(rng, (k, size))
        logq = np.log(np.abs(q(a)))
        wick_cache = {}
        for idx, (m, n) in enumerate(pairs):
            acc = np.zeros(size, dtype=complex)
            for lam in phases:
                term = np.ones(size, dtype=complex)
                for j in range(k):
                    key = (j, m[j], n[j], complex(lam))
                    if key not in wick_cache:
                        # :conj(a)^m a^n: is :a^n conj(a)^m:
                        wick_cache[key] = wick_polynomial(lam * a[j], n[j], m[j])
                    term = term * wick_cache[key]
                acc += term
            vals = logq * acc / len(phases)
            norm = math.sqrt(np.prod([math.factorial(x) for x in m + n]))
            vals = vals / norm
            sums[idx] += vals.sum()
            sq[idx] += np.sum(np.abs(vals) ** 2)
        done += size
    mean = sums / M
    var = np.maximum(sq / M - np.abs(mean) ** 2, 0.0) * M / (M - 1)
    se = np.sqrt(var / M)
    coeffs = {pair: (mean[i], float(se[i])) for i, pair in enumerate(pairs)}
    zero = ((0,) * k, (0,) * k)
    C00, C00_se = coeffs.get(zero, (complex(np.mean(np.nan)), np.nan))
    tilde2 = np.zeros(P + 1)
    tilde2_se = np.zeros(P + 1)
    for p in range(1, P + 1):
        sel = [(c, s) for (m, n), (c, s) in coeffs.items() if sum(m) == p and sum(n) == p]
        if sel:
            c = np.array([x[0] for x in sel])
            s = np.array([x[1] for x in sel])
            tilde2[p] = np.sum(np.abs(c) ** 2 - s ** 2)
            tilde2_se[p] = math.sqrt(np.sum(4 * np.abs(c) ** 2 * s ** 2 / 2 + s ** 4))
    return WickCoeffs(q.name, P, M, complex(C00), float(C00_se), tilde2, tilde2_se, coeffs)


class TruncationWarning(UserWarning):
    """The Wick series was cut where its next term still matters."""


def _khat2(spec: GafSpec, z, w):
    kzw = covariance(spec, z, w)
    kzz = covariance(spec, z, z).real
    kww = covariance(spec, w, w).real
    return np.abs(kzw) ** 2 / (kzz * kww)


def two_point_from_formula(wick: WickCoeffs, spec: GafSpec, z: complex, w: complex,
                           h: float = 1e-2, tol: float = 1e-8) -> float:
    """rho_2(z, w) - rho_1(z) rho_1(w) for the polygaf zero set.

    Evaluates (1/4 pi^2) Lap_z Lap_w sum_p |C~_p|^2 |K^(z, w)|^{2p} with
    K^ the normalised covariance, using five-point Laplacians with step h
    and one Richardson extrapolation to h/2.  A :class:`TruncationWarning`
    is issued when the first omitted term may exceed ``tol``.
    """
    z, w = complex(z), complex(w)
    if abs(z - w) <= 10 * h:
        raise ValueError("points must be separated by more than 10 h")
    t2 = wick.tilde2
    p = np.arange(len(t2))

    def series(x, y):
        x2 = _khat2(spec, x, y)
        return np.sum(t2[None, :] * x2[..., None] ** p[None, :], axis=-1)

    x0 = _khat2(spec, z, w)
    bound = abs(t2[-1]) * (x0 + 4 * h) ** (wick.P + 1)
    if bound > tol:
        warnings.warn(f"Wick series cut at P={wick.P} with next term ~{bound:.2e}",
                      TruncationWarning, stacklevel=2)
    offs = np.array([0, 1, -1, 1j, -1j])
    wts = np.array([-4, 1, 1, 1, 1], dtype=float)

    def lap2(step):
        X = z + step * offs
        Y = w + step * offs
        vals = series(X[:, None], Y[None, :])
        return float(np.real(wts @ vals @ wts)) / step ** 4

    d = (4 * lap2(h / 2) - lap2(h)) / 3
    return d / (4 * np.pi ** 2)


# ------------------------------------------------------- smooth statistics

@dataclass(frozen=True)
class RadialBump:
    """Radial test function phi(z) = g(|z - c|^2) with compact support.

    ``g`` is 1 on [0, a2], the polynomial ``poly`` on [a2, b2] and 0 beyond
    b2; the pieces join with two continuous derivatives.  Its Laplacian is
    4 (t g'' + g') with t = |z - c|^2, available in closed form.
    """

    poly: Polynomial
    a2: float
    b2: float
    center: complex = 0.0
    name: str = "bump"

    @property
    def support_radius(self) -> float:
        return math.sqrt(self.b2)

    def _t(self, z):
        return np.abs(np.asarray(z, dtype=complex) - self.center) ** 2

    def __call__(self, z):
        t = self._t(z)
        v = np.where(t <= self.a2, 1.0, np.where(t < self.b2, self.poly(t), 0.0))
        return v[()] if v.ndim == 0 else v

    def _lap_poly(self) -> Polynomial:
        g1 = self.poly.deriv()
        g2 = g1.deriv()
        return 4 * (Polynomial([0, 1]) * g2 + g1)

    def laplacian(self, z):
        t = self._t(z)
        lp = self._lap_poly()
        v = np.where((t > self.a2) & (t < self.b2), lp(t), 0.0)
        return v[()] if v.ndim == 0 else v

    def integral(self) -> float:
        """Integral of phi against Lebesgue measure."""
        P = self.poly.integ()
        return math.pi * (self.a2 + P(self.b2) - P(self.a2))

    def laplacian_norm2(self, domain=DomainTag.PLANE) -> float:
        """||Lap* phi||^2 in L^2 of the invariant measure.

        On the plane this is the integral of (Lap phi)^2 dm; on the sphere
        and disk the invariant Laplacian (1 +- |z|^2)^2 Lap and the measure
        dm/(1 +- |z|^2)^2 combine into the weight (1 +- |z|^2)^2.  Radial
        integrals are exact polynomial integrals in t (dm = pi dt).
        """
        domain = DomainTag.parse(domain)
        lp = self._lap_poly()
        sq = lp * lp
        if domain is not DomainTag.PLANE:
            if self.center != 0:
                raise ValueError("weighted norms need a bump centred at the origin")
            sign = 1 if domain is DomainTag.SPHERE else -1
            sq = sq * Polynomial([1, sign]) ** 2
        I = sq.integ()
        return float(math.pi * (I(self.b2) - I(self.a2)))


def _smoothstep_poly(a2: float, b2: float) -> Polynomial:
    # 1 - S(x), S(x) = 10x^3 - 15x^4 + 6x^5, x = (t - a2)/(b2 - a2)
    x = Polynomial([-a2 / (b2 - a2), 1 / (b2 - a2)])
    return 1 - (10 * x ** 3 - 15 * x ** 4 + 6 * x ** 5)


def smoothstep_bump(b: float, a: float = 0.0, center: complex = 0.0) -> RadialBump:
    """phi = 1 on |z - c| <= a, 0 beyond b, quintic smoothstep in |z - c|^2 between."""
    if not 0 <= a < b:
        raise ValueError("need 0 <= a < b")
    return RadialBump(_smoothstep_poly(a * a, b * b), a * a, b * b, complex(center),
                      f"smoothstep(a={a},b={b})")


def poly_bump(b: float, k: int = 3, center: complex = 0.0) -> RadialBump:
    """phi = (1 - |z - c|^2 / b^2)^k on the disk of radius b (k >= 3 for C^2)."""
    if k < 3:
        raise ValueError("k >= 3 is needed for two continuous derivatives")
    return RadialBump(Polynomial([1, -1 / (b * b)]) ** k, 0.0, b * b, complex(center),
                      f"poly(k={k},b={b})")


def smooth_statistic(ps: PointSet, phi: Callable, window: Optional[float] = None) -> float:
    """Sum of phi over the finite points of ``ps``, counted with multiplicity.

    When ``phi`` has a ``support_radius`` it must fit inside the certified
    ``window`` (taken from ``ps.meta["window"]`` if not given).
    """
    if window is None:
        window = ps.meta.get("window")
    supp = getattr(phi, "support_radius", None)
    if supp is not None and window is not None:
        reach = supp + abs(getattr(phi, "center", 0.0))
        if reach > window * (1 + 1e-12):
            raise ValueError("support of phi exceeds the certified window")
    keep = ~ps.at_infinity
    if not keep.any():
        return 0.0
    return float(np.sum(np.asarray(phi(ps.points[keep]), dtype=float) * ps.multiplicity[keep]))


@dataclass
class CltReport:
    """Moments of the smooth statistic for each L, with the predicted variance."""

    L: list
    mean: np.ndarray
    var: np.ndarray
    skew: np.ndarray
    excess_kurtosis: np.ndarray
    predicted_var: np.ndarray
    var_times_L: np.ndarray
    ratios: np.ndarray
    kappa: float
    lap_norm2: float
    M: int


def moments(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    return (float(x.mean()), float(x.var(ddof=1)), float(sps.skew(x)),
            float(sps.kurtosis(x)))


def clt_experiment(values_by_L: dict, phi: RadialBump, kappa: float,
                   domain=DomainTag.PLANE) -> CltReport:
    """Summarise smooth-statistic samples per L against kappa/L ||Lap* phi||^2.

    ``values_by_L`` maps each L to the array of Z_L(phi) values; see
    :func:`gafzeros.experiments.clt_values` for the sampler.
    """
    Ls = sorted(values_by_L)
    mom = np.array([moments(values_by_L[L]) for L in Ls])
    norm2 = phi.laplacian_norm2(domain)
    Ls_arr = np.array(Ls, dtype=float)
    pred = kappa / Ls_arr * norm2
    vl = mom[:, 1] * Ls_arr
    ratios = vl[1:] / vl[:-1]
    M = min(len(values_by_L[L]) for L in Ls)
    return CltReport(Ls, mom[:, 0], mom[:, 1], mom[:, 2], mom[:, 3], pred, vl, ratios,
                     float(kappa), norm2, M)


# -------------------------------------------------------------- deviations

def wilson_interval(k: int, n: int, level: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    ci = sps.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class DeviationCurve:
    """Estimates of P[n(r) >= m] for m = 0..m_max.

    ``resolved`` is false where fewer than 30 exceedances were seen; the
    estimate is then only an upper bound (``hi``).  ``exact`` holds the
    exact curve when an oracle exists.
    """

    r: float
    m: np.ndarray
    estimate: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    resolved: np.ndarray
    M: int
    exact: Optional[np.ndarray] = None
    method: str = "monte carlo"


def overcrowding_curve(counts: np.ndarray, r: float, m_max: int,
                       exact_pmf: Optional[np.ndarray] = None,
                       min_events: int = 30) -> DeviationCurve:
    """Tail probabilities P[n(r) >= m] from a vector of counts, with Wilson intervals."""
    counts = np.asarray(counts)
    M = counts.size
    ms = np.arange(m_max + 1)
    hits = np.array([np.sum(counts >= m) for m in ms])
    est = hits / M
    lo, hi = zip(*(wilson_interval(h, M) for h in hits))
    exact = None
    if exact_pmf is not None:
        pmf = np.asarray(exact_pmf, dtype=float)
        tail = np.cumsum(pmf[::-1])[::-1]
        exact = np.array([tail[m] if m < tail.size else 0.0 for m in ms])
    return DeviationCurve(r, ms, est, np.array(lo), np.array(hi), hits >= min_events, M, exact)


def tilted_overcrowding(spec: GafSpec, stream: RngStream, r: float, m: int, M: int,
                        sigma=0.25, batch: int = 100000) -> dict:
    """Importance-sampling estimate of P[n(r) >= m] for GAF zeros.

    The first m standardised coefficients a_0..a_{m-1} are drawn with
    variance sigma_k^2 < 1, which makes m zeros near the origin common, and
    each draw is weighted by the likelihood ratio
    prod_k sigma_k^2 exp(-|a_k|^2 (1 - 1/sigma_k^2)).  Counts come from the
    winding number on |z| = r.  Meant for probabilities far below the reach
    of plain Monte Carlo; returns the estimate, its standard error and the
    fraction of weighted draws that hit the event.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (m,)).copy()
    if np.any(sig <= 0):
        raise ValueError("sigma must be positive")
    w = spec.weights(m - 1)
    total = total2 = 0.0
    hits = 0
    for child, size in block_streams(stream, M, batch):
        rng = child.generator()
        c, _ = sample_gaf_batch(spec, rng, size, r)
        c[:, :m] *= sig
        a2 = np.abs(c[:, :m] / w) ** 2
        logw = np.sum(2 * np.log(sig) - a2 * (1 - 1 / sig ** 2), axis=1)
        n, _, ok = winding_numbers(c, r)
        val = np.where(ok & (n >= m), np.exp(logw), 0.0)
        total += val.sum()
        total2 += np.sum(val ** 2)
        hits += int(np.count_nonzero(val))
    est = total / M
    se = math.sqrt(max(total2 / M - est * est, 0.0) / (M - 1)) if M > 1 else float("nan")
    return {"m": m, "estimate": est, "se": se, "hit_fraction": hits / M, "M": M,
            "sigma": sig.tolist()}


def total_variation(counts: np.ndarray, pmf: np.ndarray) -> float:
    """Total variation distance between the empirical law of counts and pmf."""
    counts = np.asarray(counts)
    size = max(int(counts.max()) + 1 if counts.size else 1, len(pmf))
    emp = np.bincount(counts, minlength=size) / counts.size
    ref = np.zeros(size)
    ref[:len(pmf)] = pmf
    return 0.5 * float(np.abs(emp - ref).sum())


def deviation_slope_experiment(count_fn: Callable, r_list, alpha: float, gamma: float,
                               mean_fn: Callable = lambda r: r * r) -> list:
    """P[n(r) >= mean(r) + gamma r^alpha] for each r with a log-log slope column.

    ``count_fn(r)`` returns a vector of sampled counts in |z| <= r.  Rows are
    dicts with the threshold, estimate, Wilson interval, whether at least one
    exceedance was seen, and log(log(1/p))/log(r) where defined.  The table is
    qualitative: it is meant for inspection of monotonicity and slope.
    """
    rows = []
    for r in r_list:
        thr = int(math.ceil(mean_fn(r) + gamma * r ** alpha - 1e-12))
        counts = np.asarray(count_fn(r))
        k = int(np.sum(counts >= thr))
        lo, hi = wilson_interval(k, counts.size)
        p = k / counts.size
        slope = (math.log(math.log(1 / p)) / math.log(r)
                 if 0 < p < 1 and r > 1 and math.log(1 / p) > 0 else float("nan"))
        rows.append({"r": float(r), "threshold": thr, "estimate": p, "lo": lo, "hi": hi,
                     "resolved": k > 0, "M": int(counts.size), "loglog_slope": slope})
    return rows


# -------------------------------------------------------------- invariance

def invariance_test(samples: Sequence[PointSet], map_, region: Region,
                    level: float = 0.01) -> dict:
    """Two-sample KS test of counts in ``region`` before and after the isometry.

    The counts #(X in D) and #(phi(X) in D) = #(X in phi^{-1}(D)) are taken
    from the same samples; the verdict is "pass" when the p-value is at
    least ``level``.
    """
    raw = np.array([count_in_region(ps, region) for ps in samples])
    mapped = np.array([count_in_region(map_.apply(ps), region) for ps in samples])
    if np.array_equal(raw, mapped):
        stat, p = 0.0, 1.0
    else:
        res = sps.ks_2samp(raw, mapped)
        stat, p = float(res.statistic), float(res.pvalue)
    return {"statistic": stat, "pvalue": p, "level": level,
            "verdict": "pass" if p >= level else "fail",
            "mean_raw": float(raw.mean()), "mean_mapped": float(mapped.mean()),
            "M": len(samples)}


def chi2_uniform(angles: np.ndarray, bins: int) -> float:
    """p-value of a chi-square test of uniformity for angles on [0, 2 pi)."""
    h = np.histogram(np.mod(angles, 2 * np.pi), bins=bins, range=(0, 2 * np.pi))[0]
    return float(sps.chisquare(h).pvalue)


def jensen_check(coeffs: np.ndarray, r: float, R: float, n_points: int = 512,
                 tol: float = 1e-6) -> dict:
    """Jensen's inequality n(r) log(R/r) <= mean log|g| on |z|=R minus that on |z|=r.

    Circle means use the ``n_points``-point trapezoid rule; n(r) counts
    roots of the polynomial in |z| <= r.
    """
    th = 2 * np.pi * np.arange(n_points) / n_points
    e = np.exp(1j * th)
    mR = float(np.mean(np.log(np.abs(horner(coeffs, R * e)))))
    mr = float(np.mean(np.log(np.abs(horner(coeffs, r * e)))))
    n = int(np.sum(np.abs(poly_roots(coeffs)) <= r))
    lhs = n * math.log(R / r)
    return {"n": n, "lhs": lhs, "rhs": mR - mr, "ok": lhs <= mR - mr + tol}
