"""The three canonical Gaussian analytic functions and their zero sets.

A GAF here is

    f(z) = sum_n a_n w_n z^n,    a_n iid standard complex Gaussian,

with weights w_n**2 equal to L**n/n! on the plane, binom(L, n) on the sphere
and binom(L+n-1, n) on the unit disk, so that the covariance kernel is
exp(L z conj(w)), (1 + z conj(w))**L or (1 - z conj(w))**(-L).  Each zero
set is invariant in distribution under the isometries of its domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .core import DomainTag, PointSet, RngStream, standard_complex_normal
from .roots import horner, poly_roots, winding_numbers

__all__ = [
    "GafSpec",
    "TruncatedSeries",
    "MobiusMap",
    "covariance",
    "truncation_order",
    "sample_gaf",
    "sample_gaf_batch",
    "evaluate",
    "zeros_in_disk",
    "gaf_zero_samples",
    "edelman_kostlan_intensity",
    "fd_laplacian",
    "expected_count",
    "log_scale",
    "mobius_cocycle",
]

#: relative distance to the contour below which a root flags the sample
BOUNDARY_MARGIN = 1e-6
#: confidence attached to the Markov-inequality tail bound
TAIL_CONFIDENCE = 0.99


@dataclass(frozen=True)
class GafSpec:
    """Domain and intensity parameter of a canonical GAF."""

    domain: DomainTag
    L: float

    def __post_init__(self):
        object.__setattr__(self, "domain", DomainTag.parse(self.domain))
        L = float(self.L)
        if not (L > 0 and math.isfinite(L)):
            raise ValueError("L must be a positive finite number")
        if self.domain is DomainTag.SPHERE:
            if L != int(L):
                raise ValueError("the spherical GAF needs an integer L")
            L = int(L)
        object.__setattr__(self, "L", L)

    def log_weights(self, n: np.ndarray) -> np.ndarray:
        """log w_n, with -inf beyond the degree of the spherical polynomial."""
        n = np.asarray(n, dtype=float)
        L = float(self.L)
        if self.domain is DomainTag.PLANE:
            return 0.5 * (n * math.log(L) - gammaln(n + 1))
        if self.domain is DomainTag.SPHERE:
            out = np.full(n.shape, -np.inf)
            ok = n <= L
            m = n[ok]
            out[ok] = 0.5 * (gammaln(L + 1) - gammaln(m + 1) - gammaln(L - m + 1))
            return out
        return 0.5 * (gammaln(L + n) - gammaln(L) - gammaln(n + 1))

    def weights(self, N: int) -> np.ndarray:
        """w_0, ..., w_N."""
        return np.exp(self.log_weights(np.arange(N + 1)))

    def check_point(self, z) -> None:
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise ValueError("points must be finite")
        if self.domain is DomainTag.DISK and np.any(np.abs(z) >= 1):
            raise ValueError("disk GAF points must satisfy |z| < 1")


@dataclass
class TruncatedSeries:
    """Polynomial c_0 + ... + c_N z^N standing for an analytic function on |z| <= radius.

    ``tail_bound`` bounds the omitted tail uniformly on the disk, with
    probability at least ``confidence`` over the omitted coefficients.
    ``radius`` may be infinite for exact polynomials (``tail_bound == 0``).
    """

    coeffs: np.ndarray
    radius: float
    tail_bound: float = 0.0
    confidence: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if c.size == 0:
            raise ValueError("a series needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not (0 <= self.tail_bound < np.inf):
            raise ValueError("tail_bound must be finite and non-negative")
        if np.isinf(self.radius) and self.tail_bound != 0:
            raise ValueError("an infinite radius needs an exact polynomial")
        self.coeffs = c

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1


def covariance(spec: GafSpec, z, w):
    """Covariance kernel E[f(z) conj(f(w))]."""
    spec.check_point(z)
    spec.check_point(w)
    zw = np.asarray(z, dtype=complex) * np.conj(np.asarray(w, dtype=complex))
    if spec.domain is DomainTag.PLANE:
        out = np.exp(spec.L * zw)
    elif spec.domain is DomainTag.SPHERE:
        out = (1 + zw) ** spec.L
    else:
        out = (1 - zw) ** (-spec.L)
    return out[()] if np.ndim(out) == 0 else out


def log_scale(spec: GafSpec, r: float) -> float:
    """log sqrt(K(z, z)) on |z| = r: the typical modulus of f on that circle."""
    if np.isinf(r):
        return 0.0
    return 0.5 * float(_log_kernel_diag(spec, r))


def truncation_order(spec: GafSpec, r: float, eps: float) -> int:
    """Smallest N with sqrt(pi)/2 * sum_{n>N} w_n r^n <= eps * s / 100.

    The left side bounds E[sup_{|z|<=r} |tail|] because E|a_n| = sqrt(pi)/2;
    ``s = sqrt(K(r, r))`` makes ``eps`` relative to the size of f on the
    circle, so the same ``eps`` works for every L.
    """
    if spec.domain is DomainTag.SPHERE:
        return int(spec.L)
    if not (eps > 0):
        raise ValueError("eps must be positive")
    if spec.domain is DomainTag.DISK and not r < 1:
        raise ValueError("disk GAFs can only be certified on radius < 1")
    if r == 0:
        return 0
    target = math.log(eps * 1e-2 / (math.sqrt(math.pi) / 2)) + log_scale(spec, r)
    # scan terms until they are negligible for good, then sum tails backwards
    chunk = 256
    n_hi = chunk
    while True:
        n = np.arange(n_hi + 1)
        lt = spec.log_weights(n) + n * math.log(r)
        peak = int(np.argmax(lt))
        if lt[-1] < target - 40 and n_hi > 2 * peak + 10:
            break
        n_hi *= 2
        if n_hi > 1 << 22:
            raise ValueError("truncation order too large for this radius")
    terms = np.exp(lt - target)
    tails = np.cumsum(terms[::-1])[::-1]  # tails[k] = sum_{n>=k}
    ok = np.flatnonzero(tails <= 1.0)
    first = int(ok[0]) if ok.size else n_hi
    # N is the last kept index: the tail starts at N + 1
    return max(first - 1, 0)


def _draw(spec: GafSpec, rng: np.random.Generator, size, N: int) -> np.ndarray:
    shape = (size, N + 1) if size is not None else (N + 1,)
    return standard_complex_normal(rng, shape) * spec.weights(N)


def _realized_tail_ok(c: np.ndarray, r: float, tol: float, N: int) -> np.ndarray:
    k = np.arange(N, c.shape[-1])
    return np.all(np.abs(c[..., N:]) * r ** k < tol, axis=-1)


def sample_gaf(spec: GafSpec, stream: RngStream, radius: float, eps: float = 1e-9,
               rng: Optional[np.random.Generator] = None) -> TruncatedSeries:
    """Sample a GAF truncated for use on |z| <= radius.

    Coefficients up to N + 5 are drawn, where N comes from
    :func:`truncation_order`; while any of the last six realised terms
    exceeds the tail bound ``eps * sqrt(K(radius, radius))`` on the circle,
    six more are drawn.  The spherical GAF is returned exactly as its
    degree-L polynomial.

    Parameters
    ----------
    rng : numpy.random.Generator, optional
        Draw from this generator instead of a fresh one for ``stream``.
    """
    if spec.domain is DomainTag.DISK and not radius < 1:
        raise ValueError("disk GAFs need radius < 1")
    if rng is None:
        rng = stream.generator()
    meta = {"generator": f"gaf-{spec.domain.value}-L{spec.L}", "stream": stream.to_dict()}
    if spec.domain is DomainTag.SPHERE:
        c = _draw(spec, rng, None, int(spec.L))
        return TruncatedSeries(c, np.inf, 0.0, 1.0, meta)
    N = truncation_order(spec, radius, eps)
    tol = eps * math.exp(log_scale(spec, radius))
    c = _draw(spec, rng, None, N + 5)
    while not _realized_tail_ok(c, radius, tol, N):
        N += 6
        more = standard_complex_normal(rng, 6) * np.exp(spec.log_weights(np.arange(N, N + 6)))
        c = np.concatenate([c, more])
    return TruncatedSeries(c, float(radius), tol, TAIL_CONFIDENCE, meta)


def sample_gaf_batch(spec: GafSpec, rng: np.random.Generator, size: int,
                     radius: float, eps: float = 1e-9) -> tuple[np.ndarray, float]:
    """Coefficient matrix of ``size`` independent truncated samples.

    Returns ``(coeffs, tail_bound)``; all rows share one truncation order,
    extended by six columns while any row fails the realised-tail check.
    """
    if spec.domain is DomainTag.SPHERE:
        return _draw(spec, rng, size, int(spec.L)), 0.0
    if spec.domain is DomainTag.DISK and not radius < 1:
        raise ValueError("disk GAFs need radius < 1")
    N = truncation_order(spec, radius, eps)
    tol = eps * math.exp(log_scale(spec, radius))
    c = _draw(spec, rng, size, N + 5)
    while not np.all(_realized_tail_ok(c, radius, tol, N)):
        N += 6
        w = np.exp(spec.log_weights(np.arange(N, N + 6)))
        c = np.concatenate([c, standard_complex_normal(rng, (size, 6)) * w], axis=1)
    return c, tol


def evaluate(s: TruncatedSeries, z):
    """Horner evaluation of the stored polynomial at |z| <= radius."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > s.radius * (1 + 1e-12)):
        raise ValueError("evaluation point outside the certified radius")
    out = horner(s.coeffs, z)
    return complex(out) if out.ndim == 0 else out


def _extract(c: np.ndarray, r: float, tail_bound: float, domain, meta: dict,
             n_expected: Optional[int] = None) -> PointSet:
    """Roots of one polynomial inside |z| <= r with validity flags in meta."""
    if not np.any(c):
        raise ValueError("the zero polynomial has no isolated zeros")
    meta = dict(meta)
    flags = []
    roots = poly_roots(c)
    if np.isinf(r):
        n_inf = 0 if n_expected is None else n_expected - roots.size
        ps = PointSet.from_roots(domain, roots, n_infinite=n_inf, meta=meta)
        ps.meta["flagged"] = False
        return ps
    mod = np.abs(roots)
    inside = roots[mod <= r]
    if np.any(np.abs(mod - r) < BOUNDARY_MARGIN * r):
        flags.append("boundary")
    counts, minmod, ok = winding_numbers(c[None, :], r)
    if ok[0] and counts[0] != inside.size:
        # second opinion from the companion matrix before giving up
        roots = poly_roots(c, method="companion")
        mod = np.abs(roots)
        inside = roots[mod <= r]
    if not ok[0]:
        flags.append("unresolved")
    elif counts[0] != inside.size:
        flags.append("winding")
    if tail_bound > 0 and ok[0] and minmod[0] <= 10 * tail_bound:
        flags.append("tail")
    meta["flagged"] = bool(flags)
    if flags:
        meta["flags"] = flags
    return PointSet.from_roots(domain, inside, meta=meta)


def zeros_in_disk(s: TruncatedSeries, r: float, domain=DomainTag.PLANE) -> PointSet:
    """Zeros of the truncated series with |z| <= r, counted with multiplicity.

    The result carries ``meta["flagged"]``; it is true when a root lies within
    ``BOUNDARY_MARGIN * r`` of the circle, when the root count disagrees with
    the winding number along |z| = r, or when the modulus on the circle is not
    well above the tail bound.  Callers resample flagged draws.  ``r`` may be
    infinite for exact polynomials.
    """
    if r > s.radius:
        raise ValueError("r exceeds the certified radius of the series")
    domain = DomainTag.parse(domain)
    n_expected = s.degree if np.isinf(r) else None
    return _extract(s.coeffs, r, s.tail_bound, domain, s.meta, n_expected)


def gaf_zero_samples(spec: GafSpec, stream: RngStream, M: int, r: float,
                     eps: float = 1e-9, batch: int = 2048) -> list:
    """``M`` unflagged zero sets of ``spec`` inside |z| <= r.

    Flagged draws are replaced by fresh draws from the same generator, so the
    output is a deterministic function of ``stream``.  ``r = inf`` is allowed
    for the sphere.
    """
    rng = stream.generator()
    domain = spec.domain
    radius = r
    n_expected = int(spec.L) if domain is DomainTag.SPHERE else None
    name = f"gaf-{domain.value}-L{spec.L}"
    out = []
    resampled = 0
    while len(out) < M:
        size = min(batch, M - len(out))
        c, tb = sample_gaf_batch(spec, rng, size, radius, eps)
        for row in c:
            meta = {"generator": name, "stream": stream.to_dict(), "index": len(out)}
            if domain is DomainTag.SPHERE:
                ps = _extract(row, np.inf, 0.0, domain, meta, n_expected)
                if not np.isinf(r):
                    keep = ~ps.at_infinity & (np.abs(ps.points) <= r)
                    ps = PointSet(domain, ps.points[keep], ps.multiplicity[keep], None, ps.meta)
            else:
                ps = _extract(row, r, tb, domain, meta)
            if ps.meta.get("flagged"):
                resampled += 1
                continue
            ps.meta.pop("flagged", None)
            out.append(ps)
    for ps in out:
        ps.meta["resampled_in_run"] = resampled
    return out


def _log_kernel_diag(spec: GafSpec, z):
    t = np.abs(np.asarray(z, dtype=complex)) ** 2
    if spec.domain is DomainTag.PLANE:
        return spec.L * t
    if spec.domain is DomainTag.SPHERE:
        return spec.L * np.log1p(t)
    return -spec.L * np.log1p(-t)


def fd_laplacian(fun, z, h: float = 1e-3):
    """Five-point Laplacian of a real function of z, Richardson-extrapolated once."""
    z = np.asarray(z, dtype=complex)

    def lap(step):
        return (fun(z + step) + fun(z - step) + fun(z + 1j * step)
                + fun(z - 1j * step) - 4 * fun(z)) / step ** 2

    return (4 * lap(h / 2) - lap(h)) / 3


def edelman_kostlan_intensity(spec: GafSpec, z, method: str = "closed"):
    """First intensity (1/4pi) Laplacian log K(z, z) of the zero set.

    ``method="closed"`` returns L/pi, L/(pi(1+|z|^2)^2) or L/(pi(1-|z|^2)^2);
    ``method="fd"`` evaluates the same quantity with :func:`fd_laplacian`.
    """
    spec.check_point(z)
    if method == "fd":
        out = fd_laplacian(lambda u: _log_kernel_diag(spec, u), z) / (4 * np.pi)
    elif method == "closed":
        t = np.abs(np.asarray(z, dtype=complex)) ** 2
        if spec.domain is DomainTag.PLANE:
            out = np.full(t.shape, spec.L / np.pi)
        elif spec.domain is DomainTag.SPHERE:
            out = spec.L / (np.pi * (1 + t) ** 2)
        else:
            out = spec.L / (np.pi * (1 - t) ** 2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out) if np.ndim(out) == 0 else out


def expected_count(spec: GafSpec, r: float, d: int = 1) -> float:
    """Mean number of zeros in |z| <= r (times d for a degree-d polygaf)."""
    t = r * r
    if spec.domain is DomainTag.PLANE:
        m = spec.L * t
    elif spec.domain is DomainTag.SPHERE:
        m = spec.L if np.isinf(r) else spec.L * t / (1 + t)
    else:
        m = spec.L * t / (1 - t)
    return d * m


@dataclass(frozen=True)
class MobiusMap:
    """Isometry of the plane, sphere or disk.

    Plane: z -> lam z + beta with |lam| = 1.  Sphere:
    z -> (alpha z + beta)/(-conj(beta) z + conj(alpha)) with
    |alpha|^2 + |beta|^2 = 1.  Disk: z -> (alpha z + beta)/(conj(beta) z + conj(alpha))
    with |alpha|^2 - |beta|^2 = 1.  For the plane ``alpha`` holds lam.
    """

    domain: DomainTag
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "domain", DomainTag.parse(self.domain))
        a, b = complex(self.alpha), complex(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if self.domain is DomainTag.PLANE:
            bad = abs(abs(a) - 1) > 1e-12
        elif self.domain is DomainTag.SPHERE:
            bad = abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-12
        else:
            bad = abs(abs(a) ** 2 - abs(b) ** 2 - 1) > 1e-12
        if bad:
            raise ValueError(f"parameters violate the {self.domain.value} normalisation")

    @classmethod
    def identity(cls, domain) -> "MobiusMap":
        return cls(domain, 1.0, 0.0)

    @classmethod
    def translation(cls, beta: complex, lam: complex = 1.0) -> "MobiusMap":
        return cls(DomainTag.PLANE, lam, beta)

    @classmethod
    def disk_automorphism(cls, a: complex, theta: float = 0.0) -> "MobiusMap":
        """z -> e^{i theta} (z + a)/(1 + conj(a) z), |a| < 1."""
        a = complex(a)
        if abs(a) >= 1:
            raise ValueError("|a| must be < 1")
        s = 1 / math.sqrt(1 - abs(a) ** 2)
        u = complex(math.cos(theta / 2), math.sin(theta / 2))
        return cls(DomainTag.DISK, u * s, u * a * s)

    def _num_den(self, z):
        a, b = self.alpha, self.beta
        if self.domain is DomainTag.PLANE:
            return a * z + b, np.ones_like(z)
        if self.domain is DomainTag.SPHERE:
            return a * z + b, -np.conj(b) * z + np.conj(a)
        return a * z + b, np.conj(b) * z + np.conj(a)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        num, den = self._num_den(z)
        out = num / den
        return out[()] if out.ndim == 0 else out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        _, den = self._num_den(z)
        out = np.full(z.shape, self.alpha) if self.domain is DomainTag.PLANE else 1 / den ** 2
        return out[()] if out.ndim == 0 else out

    def image_of_infinity(self):
        """phi(inf) on the sphere, or None when it is inf itself."""
        if self.domain is not DomainTag.SPHERE:
            raise ValueError("only sphere maps act on the point at infinity")
        if self.beta == 0:
            return None
        return -self.alpha / np.conj(self.beta)

    def apply(self, ps: PointSet) -> PointSet:
        """Image of a point set, with points sent to or from infinity as needed."""
        if ps.domain is not self.domain:
            raise ValueError("map and point set live on different domains")
        pts, mult, inf = ps.points.copy(), ps.multiplicity.copy(), ps.at_infinity.copy()
        new_inf = np.zeros_like(inf)
        out = np.zeros_like(pts)
        fin = ~inf
        num, den = self._num_den(pts[fin])
        tiny = np.abs(den) <= 1e-300
        vals = np.where(tiny, 0, num / np.where(tiny, 1, den))
        out[fin] = vals
        new_inf[np.flatnonzero(fin)[tiny]] = True
        if inf.any():
            img = self.image_of_infinity()
            if img is None:
                new_inf[inf] = True
            else:
                out[inf] = img
        meta = dict(ps.meta)
        meta["mapped"] = True
        return PointSet(ps.domain, out, mult, new_inf, meta)


def mobius_cocycle(map_: MobiusMap, spec: GafSpec, z):
    """Non-vanishing factor Delta with |Delta(z)|^2 K(phi z, phi z) = K(z, z).

    Plane: exp(-L lam z conj(beta) - L |beta|^2 / 2).  Sphere:
    (-conj(beta) z + conj(alpha))**L.  Disk: (conj(beta) z + conj(alpha))**(-L),
    evaluated as conj(alpha)**(-L) (1 + conj(beta) z / conj(alpha))**(-L)
    with principal powers, which is continuous on the whole disk.
    """
    if map_.domain is not spec.domain:
        raise ValueError("map and GAF live on different domains")
    spec.check_point(z)
    z = np.asarray(z, dtype=complex)
    a, b, L = map_.alpha, map_.beta, spec.L
    if spec.domain is DomainTag.PLANE:
        out = np.exp(-L * a * z * np.conj(b) - 0.5 * L * abs(b) ** 2)
    elif spec.domain is DomainTag.SPHERE:
        out = (-np.conj(b) * z + np.conj(a)) ** int(L)
    else:
        ca = np.conj(a)
        out = ca ** (-L) * (1 + np.conj(b) * z / ca) ** (-L)
    return complex(out) if out.ndim == 0 else out
