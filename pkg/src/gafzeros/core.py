"""Randomness, substream addressing and the point-set data model.

Every random quantity in the package is drawn from an :class:`RngStream`,
an immutable ``(seed, path)`` address resolved through
:class:`numpy.random.SeedSequence` spawn keys.  Two streams with the same
address produce the same numbers on every platform; streams with different
paths are statistically independent.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "DomainTag",
    "RngStream",
    "split_stream",
    "sample_complex_gaussian",
    "PointSet",
    "Region",
    "disk",
    "outside_disk",
    "everywhere",
    "count_in_region",
]

_MASK64 = (1 << 64) - 1


class DomainTag(str, enum.Enum):
    PLANE = "plane"
    SPHERE = "sphere"
    DISK = "disk"

    @classmethod
    def parse(cls, value: "DomainTag | str") -> "DomainTag":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown domain {value!r}; expected one of "
                             f"{[d.value for d in cls]}") from None


@dataclass(frozen=True)
class RngStream:
    """Addressable random stream.

    Parameters
    ----------
    seed : int
        Root 64-bit seed.
    path : tuple of int
        Hierarchical substream address, one 64-bit index per level.
    """

    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        path = tuple(int(i) for i in self.path)
        if any(i < 0 or i > _MASK64 for i in path):
            raise ValueError("path entries must be 64-bit unsigned integers")
        object.__setattr__(self, "path", path)

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        return split_stream(self, index)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "path": list(self.path)}


def split_stream(parent: RngStream, index: int) -> RngStream:
    """Deterministic child stream ``parent.path + (index,)``."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return RngStream(parent.seed, parent.path + (int(index),))


def standard_complex_normal(rng: np.random.Generator, size=None) -> np.ndarray:
    """X + iY with X, Y iid N(0, 1/2), i.e. density exp(-|z|^2)/pi."""
    x = rng.standard_normal(size)
    y = rng.standard_normal(size)
    return (x + 1j * y) * np.sqrt(0.5)


def sample_complex_gaussian(stream: RngStream, size=None):
    """Draw standard complex Gaussians from ``stream``.

    With ``size=None`` a single Python complex is returned, otherwise an
    array of the requested shape.
    """
    out = standard_complex_normal(stream.generator(), size)
    if size is None:
        return complex(out)
    return out


@dataclass
class PointSet:
    """A finite sample of a point process.

    ``points`` holds finite locations.  Entries flagged in ``at_infinity``
    stand for the point at infinity of the Riemann sphere; their entry in
    ``points`` is ignored (stored as 0).
    """

    domain: DomainTag
    points: np.ndarray
    multiplicity: Optional[np.ndarray] = None
    at_infinity: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.domain = DomainTag.parse(self.domain)
        pts = np.asarray(self.points, dtype=complex).reshape(-1)
        if self.multiplicity is None:
            mult = np.ones(pts.shape, dtype=np.int64)
        else:
            mult = np.asarray(self.multiplicity, dtype=np.int64).reshape(-1)
        if self.at_infinity is None:
            inf = np.zeros(pts.shape, dtype=bool)
        else:
            inf = np.asarray(self.at_infinity, dtype=bool).reshape(-1)
        if mult.shape != pts.shape or inf.shape != pts.shape:
            raise ValueError("points, multiplicity and at_infinity must align")
        if np.any(mult < 1):
            raise ValueError("multiplicities must be >= 1")
        pts = np.where(inf, 0.0, pts)
        if not np.all(np.isfinite(pts)):
            raise ValueError("finite points must not contain NaN or Inf")
        if inf.any() and self.domain is not DomainTag.SPHERE:
            raise ValueError("only sphere samples may contain the point at infinity")
        self.points, self.multiplicity, self.at_infinity = pts, mult, inf

    def __len__(self) -> int:
        return int(self.multiplicity.sum())

    @property
    def finite(self) -> np.ndarray:
        """Finite points repeated according to multiplicity."""
        keep = ~self.at_infinity
        return np.repeat(self.points[keep], self.multiplicity[keep])

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.domain == other.domain
                and np.array_equal(self.points, other.points)
                and np.array_equal(self.multiplicity, other.multiplicity)
                and np.array_equal(self.at_infinity, other.at_infinity)
                and self.meta == other.meta)

    @classmethod
    def from_roots(cls, domain, roots, *, n_infinite: int = 0, meta=None,
                   tol: float = 1e-8) -> "PointSet":
        """Build a PointSet merging roots closer than ``tol`` into multiplicities."""
        pts, mult = cluster_roots(np.asarray(roots, dtype=complex), tol)
        if n_infinite:
            pts = np.concatenate([pts, np.zeros(1, complex)])
            mult = np.concatenate([mult, [n_infinite]])
            inf = np.zeros(pts.shape, bool)
            inf[-1] = True
        else:
            inf = None
        return cls(domain, pts, mult, inf, dict(meta or {}))


def cluster_roots(roots: np.ndarray, tol: float = 1e-8):
    """Group roots within ``tol`` of each other; returns (centres, counts)."""
    roots = np.asarray(roots, dtype=complex).reshape(-1)
    if roots.size == 0:
        return roots, np.zeros(0, dtype=np.int64)
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    centres, counts = [], []
    used = np.zeros(roots.size, dtype=bool)
    for i in range(roots.size):
        if used[i]:
            continue
        close = (~used) & (np.abs(roots - roots[i]) <= tol)
        used |= close
        centres.append(roots[close].mean())
        counts.append(int(close.sum()))
    return np.asarray(centres, dtype=complex), np.asarray(counts, dtype=np.int64)


class Region:
    """Closed region predicate on the extended plane.

    ``contains(z)`` is vectorised over finite points; ``includes_infinity``
    decides membership of the point at infinity.
    """

    def __init__(self, contains: Callable[[np.ndarray], np.ndarray],
                 includes_infinity: bool = False, description: str = "region"):
        self._contains = contains
        self.includes_infinity = includes_infinity
        self.description = description

    def __call__(self, z) -> np.ndarray:
        return np.asarray(self._contains(np.asarray(z, dtype=complex)), dtype=bool)

    def __repr__(self) -> str:
        return f"Region({self.description})"


def disk(center: complex = 0.0, radius: float = 1.0) -> Region:
    """Closed disk |z - center| <= radius (boundary counts as inside)."""
    c, r = complex(center), float(radius)
    return Region(lambda z: np.abs(z - c) <= r, False, f"|z-{c}|<={r}")


def outside_disk(center: complex = 0.0, radius: float = 1.0) -> Region:
    """Closed complement |z - center| >= radius, including infinity (a spherical cap)."""
    c, r = complex(center), float(radius)
    return Region(lambda z: np.abs(z - c) >= r, True, f"|z-{c}|>={r}")


def everywhere() -> Region:
    return Region(lambda z: np.ones(np.shape(z), dtype=bool), True, "C u {inf}")


def count_in_region(ps: PointSet, region) -> int:
    """Number of points of ``ps`` in ``region``, counted with multiplicity.

    ``region`` is a :class:`Region` or any vectorised predicate on complex
    arrays (the latter never contains the point at infinity).
    """
    finite = ~ps.at_infinity
    total = 0
    if finite.any():
        inside = np.asarray(region(ps.points[finite]), dtype=bool)
        total += int(ps.multiplicity[finite][inside].sum())
    if ps.at_infinity.any() and getattr(region, "includes_infinity", False):
        total += int(ps.multiplicity[ps.at_infinity].sum())
    return total


def count_many(samples: Iterable[PointSet], region) -> np.ndarray:
    return np.fromiter((count_in_region(ps, region) for ps in samples), dtype=np.int64)
