"""Stationary determinantal point processes on the plane, sphere and disk.

Det-C-alpha, Det-S2-alpha and Det-D-alpha have kernels

    (alpha/pi) exp(alpha z conj(w))            w.r.t. exp(-alpha |z|^2) dm
    (alpha/pi) (1 + z conj(w))**(alpha-1)      w.r.t. (1 + |z|^2)**(-alpha-1) dm
    (alpha/pi) (1 - z conj(w))**(-alpha-1)     w.r.t. (1 - |z|^2)**(alpha-1) dm

and first intensities alpha/pi, alpha/(pi (1+|z|^2)^2), alpha/(pi (1-|z|^2)^2)
with respect to Lebesgue measure m.  Exact samplers are provided for the
Ginibre ensemble (finite n), the sphere family (via det(zA - B)), the disk
family at alpha = 1 (through its independent radii) and any finite-rank
projection kernel with monomial basis (sequential sampling).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gammainc, gammaln

from .core import DomainTag, PointSet, RngStream, standard_complex_normal

__all__ = [
    "DppKernelSpec",
    "RadialLaw",
    "ProjectionBasis",
    "kernel_eval",
    "reference_density",
    "intensity",
    "expected_count",
    "monomial_basis",
    "truncation_rank",
    "sample_ginibre_n",
    "ginibre_samples",
    "sample_det_sphere",
    "det_sphere_samples",
    "sample_radii_hyperbolic1",
    "hyperbolic1_counts",
    "sample_projection_dpp",
    "projection_dpp_samples",
    "poisson_binomial",
    "count_distribution_exact",
]

#: radial laws and radius samplers stop once the remaining mass is below this
RADIAL_TAIL = 1e-12
#: sequential sampling gives up below this acceptance rate
MIN_ACCEPTANCE = 1e-3


@dataclass(frozen=True)
class DppKernelSpec:
    """Domain and parameter alpha of a stationary determinantal process."""

    domain: DomainTag
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "domain", DomainTag.parse(self.domain))
        a = float(self.alpha)
        if not (a > 0 and math.isfinite(a)):
            raise ValueError("alpha must be positive and finite")
        if self.domain is DomainTag.SPHERE:
            if a != int(a):
                raise ValueError("the sphere family needs an integer alpha")
            a = int(a)
        object.__setattr__(self, "alpha", a)

    def check_point(self, z) -> None:
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise ValueError("points must be finite")
        if self.domain is DomainTag.DISK and np.any(np.abs(z) >= 1):
            raise ValueError("disk points must satisfy |z| < 1")


def _out(x):
    return x[()] if np.ndim(x) == 0 else x


def kernel_eval(spec: DppKernelSpec, z, w):
    """Kernel K(z, w) with respect to the family's reference measure."""
    spec.check_point(z)
    spec.check_point(w)
    a = spec.alpha
    zw = np.asarray(z, dtype=complex) * np.conj(np.asarray(w, dtype=complex))
    if spec.domain is DomainTag.PLANE:
        k = a / np.pi * np.exp(a * zw)
    elif spec.domain is DomainTag.SPHERE:
        k = a / np.pi * (1 + zw) ** (a - 1)
    else:
        k = a / np.pi * (1 - zw) ** (-(a + 1))
    return _out(k)


def reference_density(spec: DppKernelSpec, z):
    """Density of the reference measure with respect to Lebesgue measure."""
    spec.check_point(z)
    t = np.abs(np.asarray(z, dtype=complex)) ** 2
    a = spec.alpha
    if spec.domain is DomainTag.PLANE:
        d = np.exp(-a * t)
    elif spec.domain is DomainTag.SPHERE:
        d = (1 + t) ** (-(a + 1))
    else:
        d = (1 - t) ** (a - 1)
    return _out(d)


def intensity(spec: DppKernelSpec, z):
    """First intensity with respect to Lebesgue measure."""
    t = np.abs(np.asarray(z, dtype=complex)) ** 2
    spec.check_point(z)
    a = spec.alpha
    if spec.domain is DomainTag.PLANE:
        out = np.full(t.shape, a / np.pi)
    elif spec.domain is DomainTag.SPHERE:
        out = a / (np.pi * (1 + t) ** 2)
    else:
        out = a / (np.pi * (1 - t) ** 2)
    return _out(out)


def expected_count(spec: DppKernelSpec, r: float) -> float:
    """Mean number of points in |z| <= r."""
    t = r * r
    if spec.domain is DomainTag.PLANE:
        return spec.alpha * t
    if spec.domain is DomainTag.SPHERE:
        return spec.alpha if np.isinf(r) else spec.alpha * t / (1 + t)
    return spec.alpha * t / (1 - t)


# ---------------------------------------------------------------- samplers

def ginibre_samples(n: int, stream: RngStream, M: int, batch: int = 2048) -> list:
    """Eigenvalues of ``M`` independent n x n standard complex Gaussian matrices."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = stream.generator()
    out = []
    while len(out) < M:
        size = min(batch, M - len(out))
        eig = np.linalg.eigvals(standard_complex_normal(rng, (size, n, n)))
        for row in eig:
            meta = {"generator": f"ginibre-n{n}", "stream": stream.to_dict(), "index": len(out)}
            out.append(PointSet(DomainTag.PLANE, row, meta=meta))
    return out


def sample_ginibre_n(n: int, stream: RngStream) -> PointSet:
    """Eigenvalues of one n x n matrix with iid standard complex Gaussian entries."""
    return ginibre_samples(n, stream, 1)[0]


def det_sphere_samples(n: int, stream: RngStream, M: int) -> list:
    """``M`` samples of Det-S2-n as generalised eigenvalues of zA - B."""
    from .gaf import GafSpec
    from .polygaf import MatrixGafSpec, det_pencil_samples
    return det_pencil_samples(MatrixGafSpec(n, GafSpec(DomainTag.SPHERE, 1)), stream, M)


def sample_det_sphere(n: int, stream: RngStream) -> PointSet:
    """One sample of Det-S2-n (the zeros of det(zA - B))."""
    return det_sphere_samples(n, stream, 1)[0]


def _hyperbolic_terms(r_max: float) -> int:
    """Number of radii n with sum_{m>n} r_max^{2m} >= RADIAL_TAIL."""
    q = r_max * r_max
    # sum_{m>n} q^m = q^{n+1}/(1-q)
    n = math.log(RADIAL_TAIL * (1 - q)) / math.log(q) - 1
    return max(1, int(math.ceil(n)))


def sample_radii_hyperbolic1(stream: RngStream, r_max: float,
                             count_cap: int = 100000) -> np.ndarray:
    """Moduli below ``r_max`` of the zeros of the hyperbolic GAF with L = 1.

    The moduli are distributed as {U_n^(1/(2n)) : n >= 1} with U_n iid
    uniform; radii are drawn for n up to the point where the chance of any
    later one falling below ``r_max`` is under ``RADIAL_TAIL``.
    """
    if not 0 < r_max < 1:
        raise ValueError("r_max must lie in (0, 1)")
    n_terms = _hyperbolic_terms(r_max)
    if n_terms > count_cap:
        raise ValueError(f"{n_terms} radii needed, above count_cap={count_cap}")
    u = stream.generator().random(n_terms)
    rho = u ** (1.0 / (2 * np.arange(1, n_terms + 1)))
    return np.sort(rho[rho < r_max])


def hyperbolic1_counts(stream: RngStream, r: float, M: int) -> np.ndarray:
    """Counts #{n : U_n^(1/(2n)) < r} for ``M`` independent copies."""
    n_terms = _hyperbolic_terms(r)
    rng = stream.generator()
    out = np.empty(M, dtype=np.int64)
    k = 2 * np.arange(1, n_terms + 1)
    for start in range(0, M, 65536):
        size = min(65536, M - start)
        u = rng.random((size, n_terms))
        # U^(1/2n) < r  <=>  U < r^(2n)
        out[start:start + size] = np.sum(u < r ** k, axis=1)
    return out


# ------------------------------------------------------- projection kernels

@dataclass(frozen=True)
class ProjectionBasis:
    """Orthonormal functions phi_0..phi_{N-1} in L^2 of a reference measure.

    Parameters
    ----------
    domain : DomainTag
    evaluate : callable
        Maps an array of points z to an array of shape ``z.shape + (N,)``.
    sample_component : callable
        ``sample_component(k, rng, size)`` draws points with density
        |phi_k|^2 with respect to the reference measure.
    certificate : str
        How orthonormality is known (for instance "analytic").
    """

    domain: DomainTag
    size: int
    evaluate: Callable
    sample_component: Callable
    certificate: str = "analytic"
    name: str = "projection"


def _log_norms(spec: DppKernelSpec, k: np.ndarray) -> np.ndarray:
    """log of c_k^2 where phi_k = c_k z^k."""
    a = spec.alpha
    if spec.domain is DomainTag.PLANE:
        return (k + 1) * math.log(a) - gammaln(k + 1) - math.log(math.pi)
    if spec.domain is DomainTag.SPHERE:
        return (math.log(a) - math.log(math.pi) + gammaln(a) - gammaln(k + 1)
                - gammaln(a - k))
    return (math.log(a) - math.log(math.pi) + gammaln(a + k + 1) - gammaln(k + 1)
            - gammaln(a + 1))


def monomial_basis(spec: DppKernelSpec, N: Optional[int] = None) -> ProjectionBasis:
    """The first N normalised monomials c_k z^k spanning the family's kernel.

    The sphere kernel has exactly alpha of them; the plane and disk kernels
    are truncated to rank N, which is exact in windows chosen with
    :func:`truncation_rank`.
    """
    a = spec.alpha
    if spec.domain is DomainTag.SPHERE:
        if N is not None and N != a:
            raise ValueError("the sphere kernel has rank alpha exactly")
        N = int(a)
    if N is None or N < 1:
        raise ValueError("plane and disk bases need a positive rank N")
    k = np.arange(N)
    half = 0.5 * _log_norms(spec, k)

    def evaluate(z):
        z = np.asarray(z, dtype=complex)[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            logabs = np.log(np.abs(z))
            mod = np.exp(half + k * logabs)
        mod = np.where(k == 0, np.exp(half), mod)
        return mod * np.exp(1j * k * np.angle(z))

    def sample_component(kk, rng, size):
        kk = np.asarray(kk)
        if spec.domain is DomainTag.PLANE:
            t = rng.gamma(kk + 1.0, size=size) / a
        elif spec.domain is DomainTag.SPHERE:
            s = rng.beta(kk + 1.0, a - kk, size=size)
            t = s / (1 - s)
        else:
            t = rng.beta(kk + 1.0, a, size=size)
        theta = rng.random(size) * 2 * np.pi
        return np.sqrt(t) * np.exp(1j * theta)

    return ProjectionBasis(spec.domain, int(N), evaluate, sample_component, "analytic",
                           f"monomial-{spec.domain.value}-{a}-N{N}")


def truncation_rank(spec: DppKernelSpec, R: float, tol: float = 1e-6) -> int:
    """Smallest N whose rank-N truncation misses < ``tol`` expected points in |z| <= R."""
    if spec.domain is DomainTag.SPHERE:
        return int(spec.alpha)
    t = R * R
    a = spec.alpha
    N = 1
    while True:
        k = np.arange(N, N + 4000)
        if spec.domain is DomainTag.PLANE:
            miss = gammainc(k + 1.0, a * t).sum()
        else:
            from scipy.special import betainc
            if not R < 1:
                raise ValueError("disk windows need R < 1")
            miss = betainc(k + 1.0, a, t).sum()
        if miss < tol:
            return N
        N += 1


def projection_dpp_samples(basis: ProjectionBasis, stream: RngStream, M: int,
                           max_proposals: int = 10 ** 6) -> list:
    """``M`` samples of the determinantal process of a finite projection kernel.

    Points are added one at a time.  Given the first m points, the next has
    density ||P v(x)||^2 / (N - m) with respect to the reference measure, where
    v(x) = (phi_k(x))_k and P projects away from the span of the earlier
    v(x_j).  Proposals come from ||v(x)||^2 / N, a uniform mixture of the
    component laws |phi_k|^2, and are accepted with probability
    ||P v(x)||^2 / ||v(x)||^2.
    """
    rng = stream.generator()
    N = basis.size
    out = []
    for index in range(M):
        pts = np.empty(N, dtype=complex)
        E = np.zeros((0, N), dtype=complex)  # orthonormal rows spanning used directions
        for m in range(N):
            need = N / (N - m)
            chunk = int(min(max(8, 4 * need), 4096))
            tried = 0
            while True:
                comps = rng.integers(0, N, size=chunk)
                x = basis.sample_component(comps, rng, chunk)
                v = basis.evaluate(x)
                norm2 = np.sum(np.abs(v) ** 2, axis=-1)
                if E.shape[0]:
                    proj = v @ E.conj().T
                    res2 = norm2 - np.sum(np.abs(proj) ** 2, axis=-1)
                else:
                    res2 = norm2
                accept = rng.random(chunk) * norm2 < np.maximum(res2, 0)
                tried += chunk
                hit = np.flatnonzero(accept)
                if hit.size:
                    j = hit[0]
                    break
                if tried >= min(max_proposals, 10 / MIN_ACCEPTANCE):
                    raise RuntimeError("sequential sampler acceptance rate fell below "
                                       f"{MIN_ACCEPTANCE}; the configuration is rejected")
            pts[m] = x[j]
            e = v[j] - (E.T @ (E.conj() @ v[j]) if E.shape[0] else 0)
            e = e - (E.T @ (E.conj() @ e) if E.shape[0] else 0)
            E = np.vstack([E, (e / np.linalg.norm(e))[None, :]])
        meta = {"generator": basis.name, "stream": stream.to_dict(), "index": index}
        out.append(PointSet(basis.domain, pts, meta=meta))
    return out


def sample_projection_dpp(basis: ProjectionBasis, stream: RngStream) -> PointSet:
    """One sample of the projection DPP with the given orthonormal basis."""
    return projection_dpp_samples(basis, stream, 1)[0]


# ----------------------------------------------------------- exact oracles

@dataclass(frozen=True)
class RadialLaw:
    """Independent moduli |z_n| whose count below r is Poisson-binomial.

    ``kind="ginibre"``: |z_k|^2 ~ Gamma(k, 1) for k = 1..n (finite Ginibre).
    ``kind="hyperbolic1"``: |z_n| = U_n^(1/(2n)), n >= 1 (Det-D-1).
    """

    kind: str
    n: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("ginibre", "hyperbolic1"):
            raise ValueError(f"unknown radial law {self.kind!r}")
        if self.kind == "ginibre" and (self.n is None or self.n < 1):
            raise ValueError("the Ginibre law needs n >= 1")

    @classmethod
    def ginibre(cls, n: int) -> "RadialLaw":
        return cls("ginibre", int(n))

    @classmethod
    def hyperbolic1(cls) -> "RadialLaw":
        return cls("hyperbolic1")

    @property
    def domain(self) -> DomainTag:
        return DomainTag.PLANE if self.kind == "ginibre" else DomainTag.DISK

    def probabilities(self, r: float) -> np.ndarray:
        """P[|z_n| < r] for every index that matters at tail level RADIAL_TAIL."""
        if self.kind == "ginibre":
            return gammainc(np.arange(1, self.n + 1), r * r)
        if not 0 <= r < 1:
            raise ValueError("hyperbolic radii need 0 <= r < 1")
        if r == 0:
            return np.zeros(1)
        return (r * r) ** np.arange(1, _hyperbolic_terms(r) + 1)

    def cdf(self, index: int, r: float) -> float:
        """P[|z_index| <= r] (indices start at 1)."""
        if r <= 0:
            return 0.0
        if self.kind == "ginibre":
            return float(gammainc(index, r * r))
        return float(min(1.0, r ** (2 * index)))

    def mean(self, r: float) -> float:
        return float(self.probabilities(r).sum())


def poisson_binomial(p) -> np.ndarray:
    """Distribution of a sum of independent Bernoulli(p_i) variables."""
    pmf = np.ones(1)
    for q in np.asarray(p, dtype=float):
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] += pmf * (1 - q)
        nxt[1:] += pmf * q
        pmf = nxt
    return pmf


def count_distribution_exact(law, r: float) -> np.ndarray:
    """Exact law of the number of points in |z| < r.

    ``law`` is a :class:`RadialLaw` or ``DppKernelSpec(Disk, 1)``.  Other
    determinantal families have no independent-radii description here and
    are rejected.
    """
    if isinstance(law, DppKernelSpec):
        if law.domain is DomainTag.DISK and law.alpha == 1:
            law = RadialLaw.hyperbolic1()
        else:
            raise NotImplementedError(f"no radial law available for {law}")
    if not isinstance(law, RadialLaw):
        raise TypeError("expected a RadialLaw or DppKernelSpec")
    pmf = poisson_binomial(law.probabilities(r))
    # drop the negligible far tail left by the truncated index set
    last = np.flatnonzero(pmf > 0)
    return pmf[:last[-1] + 1] if last.size else pmf
