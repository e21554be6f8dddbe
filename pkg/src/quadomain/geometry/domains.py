import math
import logging
import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.special import gamma

from quadomain.errors import DomainError

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

DEFAULT_MARGIN = 0.05


def as_points(z, dimension: int) -> Tuple[np.ndarray, bool]:
    """Coerce ``z`` to a ``(N, dimension)`` complex array.

    Returns:
        Tuple of (points, single) where ``single`` is True when a lone point
        was passed in.
    """
    arr = np.asarray(z, dtype=complex)
    single = arr.ndim == 0 or (arr.ndim == 1 and dimension > 1)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dimension == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise DomainError(f"Expected points of dimension {dimension}, got shape {np.shape(z)}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("Point coordinates must be finite")
    return arr, single


def multi_index(alpha, dimension: int) -> MultiIndex:
    """Validate a multi-index; ``None`` means the zero index."""
    if alpha is None:
        return (0,) * dimension
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != dimension or any(a < 0 for a in alpha):
        raise DomainError(f"Invalid multi-index {alpha} for dimension {dimension}")
    return alpha


def multi_indices(dimension: int, max_order: int) -> List[MultiIndex]:
    """All multi-indices with ``|alpha| <= max_order``, graded then lexicographic."""
    result = []
    for total in range(max_order + 1):
        for alpha in itertools.product(range(total + 1), repeat=dimension):
            if sum(alpha) == total:
                result.append(tuple(alpha))
    return result


def index_factorial(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def _unwrap(single: bool, values: np.ndarray):
    return bool(values[0]) if single else values


class Domain(ABC):
    """Bounded model domain in C^n."""

    kind: str = 'domain'

    @property
    @abstractmethod
    def dimension(self) -> int:
        ...

    @property
    def is_planar(self) -> bool:
        return self.dimension == 1

    @abstractmethod
    def _contains(self, pts: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _within_margin(self, pts: np.ndarray, margin: float) -> np.ndarray:
        ...

    @abstractmethod
    def volume(self) -> float:
        """Analytic volume (Lebesgue measure on R^{2n})."""

    @abstractmethod
    def describe(self) -> Dict:
        ...

    def contains(self, z) -> Union[bool, np.ndarray]:
        """True where ``z`` lies in the open domain."""
        pts, single = as_points(z, self.dimension)
        return _unwrap(single, self._contains(pts))

    def within_margin(self, z, margin: float = DEFAULT_MARGIN) -> Union[bool, np.ndarray]:
        """True where ``z`` lies in the domain shrunk by ``margin``."""
        if not 0 <= margin < 1:
            raise DomainError(f"Margin must lie in [0, 1), got {margin}")
        pts, single = as_points(z, self.dimension)
        return _unwrap(single, self._within_margin(pts, margin))


@dataclass(frozen=True)
class Disc(Domain):
    center: complex = 0j
    radius: float = 1.0
    kind = 'disc'

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"Disc radius must be positive, got {self.radius}")
        object.__setattr__(self, 'center', complex(self.center))
        object.__setattr__(self, 'radius', float(self.radius))

    @property
    def dimension(self) -> int:
        return 1

    def _contains(self, pts):
        return np.abs(pts[:, 0] - self.center) < self.radius

    def _within_margin(self, pts, margin):
        return np.abs(pts[:, 0] - self.center) <= (1 - margin) * self.radius

    def volume(self) -> float:
        return math.pi * self.radius ** 2

    def radial_range(self, margin: float = 0.0) -> Tuple[float, float]:
        return 0.0, (1 - margin) * self.radius

    def describe(self):
        return {'kind': self.kind, 'center': [self.center.real, self.center.imag], 'radius': self.radius}


@dataclass(frozen=True)
class Annulus(Domain):
    """Annulus ``inner < |z - center| < outer``.

    Stored normalized: ``ratio = inner / outer`` is the model inner radius of
    the unit-outer annulus, and ``scale``/``center`` record the affine map
    ``z = center + scale * zeta``.
    """
    inner: float = 0.5
    outer: float = 1.0
    center: complex = 0j
    kind = 'annulus'

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise DomainError(f"Annulus requires 0 < inner < outer, got {self.inner}, {self.outer}")
        object.__setattr__(self, 'center', complex(self.center))

    @property
    def dimension(self) -> int:
        return 1

    @property
    def ratio(self) -> float:
        return self.inner / self.outer

    @property
    def scale(self) -> float:
        return self.outer

    def to_model(self, z: np.ndarray) -> np.ndarray:
        return (z - self.center) / self.scale

    def _contains(self, pts):
        rho = np.abs(self.to_model(pts[:, 0]))
        return (rho > self.ratio) & (rho < 1.0)

    def _within_margin(self, pts, margin):
        lo, hi = self.radial_range(margin)
        rho = np.abs(pts[:, 0] - self.center)
        return (rho >= lo) & (rho <= hi)

    def radial_range(self, margin: float = 0.0) -> Tuple[float, float]:
        return self.inner * (1 + margin), self.outer * (1 - margin)

    def volume(self) -> float:
        return math.pi * (self.outer ** 2 - self.inner ** 2)

    def describe(self):
        return {'kind': self.kind, 'inner': self.inner, 'outer': self.outer,
                'center': [self.center.real, self.center.imag]}


@dataclass(frozen=True)
class Ball(Domain):
    """Unit ball in C^n."""
    n: int = 2
    kind = 'ball'

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"Ball dimension must be >= 1, got {self.n}")

    @property
    def dimension(self) -> int:
        return self.n

    def _contains(self, pts):
        return np.sum(np.abs(pts) ** 2, axis=1) < 1.0

    def _within_margin(self, pts, margin):
        return np.sqrt(np.sum(np.abs(pts) ** 2, axis=1)) <= 1 - margin

    def volume(self) -> float:
        return math.pi ** self.n / math.factorial(self.n)

    def describe(self):
        return {'kind': self.kind, 'n': self.n}


@dataclass(frozen=True)
class Product(Domain):
    factors: Tuple[Domain, ...] = ()
    kind = 'product'

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise DomainError("Product needs at least one factor")
        object.__setattr__(self, 'factors', factors)

    @property
    def dimension(self) -> int:
        return sum(f.dimension for f in self.factors)

    def blocks(self) -> List[slice]:
        """Coordinate slices of the factors."""
        slices, start = [], 0
        for factor in self.factors:
            slices.append(slice(start, start + factor.dimension))
            start += factor.dimension
        return slices

    def _contains(self, pts):
        inside = np.ones(len(pts), dtype=bool)
        for factor, block in zip(self.factors, self.blocks()):
            inside &= factor._contains(pts[:, block])
        return inside

    def _within_margin(self, pts, margin):
        inside = np.ones(len(pts), dtype=bool)
        for factor, block in zip(self.factors, self.blocks()):
            inside &= factor._within_margin(pts[:, block], margin)
        return inside

    def volume(self) -> float:
        return math.prod(f.volume() for f in self.factors)

    def describe(self):
        return {'kind': self.kind, 'factors': [f.describe() for f in self.factors]}


class Polydisc(Product):
    """Product of discs centered at the origin."""
    kind = 'polydisc'

    def __init__(self, radii: Sequence[float]):
        super().__init__(tuple(Disc(0j, r) for r in radii))

    @property
    def radii(self) -> Tuple[float, ...]:
        return tuple(f.radius for f in self.factors)

    def describe(self):
        return {'kind': self.kind, 'radii': list(self.radii)}


class FiberedDomain(Domain):
    """Complete Hartogs domain ``{|z1| < base_radius, |z2| < R(|z1|^2)}`` in C^2.

    The base squared modulus is parametrized as ``t = base_radius^2 (1 - s^k)``
    with ``k = base_power``; subclasses pick ``k`` so that the fiber radius is
    smooth in ``s``.
    """

    base_radius: float
    base_power: int = 1

    @property
    def dimension(self) -> int:
        return 2

    @abstractmethod
    def fiber_radius_sq(self, t: np.ndarray) -> np.ndarray:
        """Squared fiber radius over base points with ``|z1|^2 = t``."""

    def base_t(self, s: np.ndarray) -> np.ndarray:
        return self.base_radius ** 2 * (1.0 - s ** self.base_power)

    def base_dt(self, s: np.ndarray) -> np.ndarray:
        return self.base_radius ** 2 * self.base_power * s ** (self.base_power - 1)

    def fiber_radius_sq_at(self, s: np.ndarray) -> np.ndarray:
        """Squared fiber radius as a function of the base parameter."""
        return self.fiber_radius_sq(self.base_t(s))

    def fiber_radius(self, z1: np.ndarray) -> np.ndarray:
        t = np.abs(z1) ** 2
        return np.sqrt(np.clip(self.fiber_radius_sq(np.minimum(t, self.base_radius ** 2)), 0.0, None))

    def _contains(self, pts):
        base = np.abs(pts[:, 0]) < self.base_radius
        return base & (np.abs(pts[:, 1]) < self.fiber_radius(pts[:, 0]))

    def _within_margin(self, pts, margin):
        base = np.abs(pts[:, 0]) <= (1 - margin) * self.base_radius
        return base & (np.abs(pts[:, 1]) <= (1 - margin) * self.fiber_radius(pts[:, 0]))

    def fiber_domain(self, z1: complex) -> Disc:
        radius = float(self.fiber_radius(np.array([z1]))[0])
        if radius <= 0:
            raise DomainError(f"Empty fiber over z1={z1}")
        return Disc(0j, radius)


@dataclass(frozen=True)
class HartogsOverDisc(FiberedDomain):
    """Hartogs domain whose fiber radius is a polynomial in ``|z1|^2``.

    ``profile`` holds the coefficients of ``R(t)`` in increasing degree.
    """
    profile: Tuple[float, ...] = (1.0, -0.5)
    base_radius: float = math.sqrt(2.0)
    kind = 'hartogs'
    base_power = 1

    def __post_init__(self):
        object.__setattr__(self, 'profile', tuple(float(c) for c in self.profile))
        if not self.base_radius > 0:
            raise DomainError(f"Base radius must be positive, got {self.base_radius}")
        samples = np.linspace(0.0, self.base_radius ** 2, 257)[:-1]
        if np.any(np.polynomial.polynomial.polyval(samples, self.profile) <= 0):
            raise DomainError(f"Fiber profile {self.profile} is not positive over the base disc")

    def fiber_radius_sq(self, t):
        return np.polynomial.polynomial.polyval(t, self.profile) ** 2

    def volume(self) -> float:
        square = np.polynomial.polynomial.polypow(self.profile, 2)
        integral = np.polynomial.polynomial.polyint(square)
        return math.pi ** 2 * float(np.polynomial.polynomial.polyval(self.base_radius ** 2, integral))

    def describe(self):
        return {'kind': self.kind, 'profile': list(self.profile), 'base_radius': self.base_radius}


@dataclass(frozen=True)
class Reinhardt(FiberedDomain):
    """Complex ellipsoid ``|z1|^(2 m1) + |z2|^(2 m2) < 1`` in C^2."""
    exponents: Tuple[int, int] = (1, 2)
    kind = 'reinhardt'
    base_radius = 1.0

    def __post_init__(self):
        exponents = tuple(int(m) for m in self.exponents)
        if len(exponents) != 2 or any(m < 1 for m in exponents):
            raise DomainError(f"Ellipsoid exponents must be two positive integers, got {self.exponents}")
        object.__setattr__(self, 'exponents', exponents)

    @property
    def base_power(self) -> int:
        return self.exponents[1]

    def fiber_radius_sq(self, t):
        m1, m2 = self.exponents
        return np.clip(1.0 - np.asarray(t, dtype=float) ** m1, 0.0, None) ** (1.0 / m2)

    def fiber_radius_sq_at(self, s):
        # 1 - (1 - s^m2)^m1 without cancellation near s = 0
        m1, m2 = self.exponents
        x = np.asarray(s, dtype=float) ** m2
        return (-np.expm1(m1 * np.log1p(-np.minimum(x, np.nextafter(1.0, 0.0))))) ** (1.0 / m2)

    def volume(self) -> float:
        m1, m2 = self.exponents
        return math.pi ** 2 * gamma(1 + 1 / m1) * gamma(1 + 1 / m2) / gamma(1 + 1 / m1 + 1 / m2)

    def describe(self):
        return {'kind': self.kind, 'exponents': list(self.exponents)}


def fiber_domain_of(domain: Domain) -> Domain:
    """The planar domain traversed by the last coordinate (product domains only)."""
    if isinstance(domain, Product):
        last = domain.factors[-1]
        if not last.is_planar:
            raise DomainError("Last product factor must be planar")
        return last
    if domain.is_planar:
        return domain
    raise DomainError(f"{domain.kind} has no fixed planar fiber")


def domain_from_spec(spec: Dict) -> Domain:
    """Build a domain from its JSON description (see ``describe``)."""
    try:
        kind = spec['kind']
        if kind == 'disc':
            center = spec.get('center', [0.0, 0.0])
            return Disc(complex(center[0], center[1]), spec.get('radius', 1.0))
        if kind == 'annulus':
            center = spec.get('center', [0.0, 0.0])
            return Annulus(spec['inner'], spec.get('outer', 1.0), complex(center[0], center[1]))
        if kind == 'ball':
            return Ball(int(spec.get('n', 2)))
        if kind == 'polydisc':
            return Polydisc(spec['radii'])
        if kind == 'product':
            return Product(tuple(domain_from_spec(f) for f in spec['factors']))
        if kind == 'hartogs':
            return HartogsOverDisc(tuple(spec['profile']), float(spec['base_radius']))
        if kind == 'reinhardt':
            return Reinhardt(tuple(spec['exponents']))
    except (KeyError, TypeError, IndexError) as e:
        raise DomainError(f"Malformed domain description {spec!r}: {e}") from e
    raise DomainError(f"Unsupported domain kind: {spec.get('kind')!r}")
