import math
import logging

import numpy as np

from quadomain.errors import KernelError, PathError
from quadomain.geometry.domains import DEFAULT_MARGIN, Annulus, multi_index
from quadomain.geometry.paths import angular_increment
from quadomain.kernels.closed_form import InnerProductKernel

logger = logging.getLogger(__name__)

TAIL_TARGET = 1e-14
MAX_TRUNCATION = 2000
# derivative orders the tail bound accounts for
TAIL_ORDER = 8


def _falling(n: np.ndarray, k: int) -> np.ndarray:
    out = np.ones(len(n))
    for i in range(k):
        out = out * (n - i)
    return out


class AnnulusKernel(InnerProductKernel):
    """Bergman kernel of ``r < |zeta| < 1`` as a resummed Laurent series.

    The Laurent coefficients ``1 / ||zeta^n||^2`` split into the disc kernel,
    its reflection in the inner circle and the logarithmic ``n = -1`` term,
    all in closed form, plus remainders decaying like ``r^(2|n|)`` that are
    summed up to the truncation order ``T``.
    """
    form = 'series_annulus'

    def __init__(self, domain: Annulus, margin: float = DEFAULT_MARGIN, tail: float = TAIL_TARGET):
        super().__init__(domain, domain.center, domain.scale, margin)
        r = domain.ratio
        self.r = r
        self.log_ratio = math.log(1.0 / r)
        self.truncation = self._choose_truncation(r, tail)
        n = np.arange(self.truncation + 1, dtype=float)
        self.positive = (n + 1) * r ** (2 * n + 2) / (math.pi * (1.0 - r ** (2 * n + 2)))
        m = np.arange(2, self.truncation + 1, dtype=float)
        self.negative_powers = m
        self.negative = (m - 1) * r ** (4 * m - 4) / (math.pi * (1.0 - r ** (2 * m - 2)))
        logger.debug(f"Annulus kernel r={r:.4f} truncated at T={self.truncation}")

    @staticmethod
    def _choose_truncation(r: float, tail: float) -> int:
        # remainder terms on the closed annulus are bounded by (n + k)^(k+1) r^(2n - 4) / (pi (1 - r^2))
        for T in range(8, MAX_TRUNCATION + 1, 4):
            n = np.arange(T + 1, T + 400, dtype=float)
            bound = np.sum((n + TAIL_ORDER) ** (TAIL_ORDER + 1) * r ** (2 * n - 4)) / (math.pi * (1 - r ** 2))
            if bound < tail:
                return T
        raise KernelError(f"Annulus ratio {r} needs more than {MAX_TRUNCATION} series terms")

    def profile(self, x, m):
        r2 = self.r ** 2
        sign = (-1.0) ** m
        value = math.factorial(m + 1) / (math.pi * (1.0 - x) ** (m + 2))
        value = value + sign * r2 * math.factorial(m + 1) / (math.pi * (x - r2) ** (m + 2))
        value = value + sign * math.factorial(m) / (2.0 * math.pi * self.log_ratio * x ** (m + 1))

        n = np.arange(m, self.truncation + 1)
        if len(n):
            coef = self.positive[m:] * _falling(n.astype(float), m)
            value = value + self._power_sum(x, coef, n - m)
        mm = self.negative_powers
        rising = np.ones(len(mm))
        for i in range(m):
            rising = rising * (mm + i)
        coef = sign * self.negative * rising
        value = value + self._power_sum(1.0 / x, coef, mm + m)
        return value

    @staticmethod
    def _power_sum(x: np.ndarray, coef: np.ndarray, powers: np.ndarray) -> np.ndarray:
        """``sum_k coef[k] x^powers[k]`` for consecutive integer powers."""
        full = np.zeros(int(powers[-1]) + 1, dtype=complex)
        full[powers.astype(int)] = coef
        return np.polynomial.polynomial.polyval(x, full)

    def antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        """Exact primitive along the canonical path; see ``_primitive_along``."""
        return self._primitive_along(z, w, base, alpha, beta, tol, alternate=False)

    def alternate_antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        return self._primitive_along(z, w, base, alpha, beta, tol, alternate=True)

    def _primitive_along(self, z, w, base, alpha, beta, tol, alternate: bool) -> np.ndarray:
        # single-valued part plus the logarithmic n = -1 term, whose branch follows the path
        alpha = multi_index(alpha, 1)
        beta = multi_index(beta, 1)
        if beta[0] > 0:
            if alternate:
                return super().alternate_antiderivative_last(z, w, base, alpha, beta, tol)
            return super().antiderivative_last(z, w, base, alpha, beta, tol)
        zs, ws = self._check(z, w)
        if not self.domain.contains(complex(base)):
            raise PathError(f"Base point {base} lies outside the annulus")
        k = alpha[0]
        zeta = (zs[:, 0] - self.center[0]) / self.scale
        zeta_a = (complex(base) - self.center[0]) / self.scale
        sigma = np.conj((ws[:, 0] - self.center[0]) / self.scale)
        values = self._regular_primitive(zeta, sigma, k) - self._regular_primitive(np.array([zeta_a]), sigma, k)
        turn = angular_increment(self.domain, base, zs[:, 0], alternate)
        log_zeta = np.log(np.abs(zeta) / abs(zeta_a)) + 1j * turn
        values = values + ((-1.0) ** k * math.factorial(k) / (2.0 * math.pi * self.log_ratio)
                           * np.outer(log_zeta, sigma ** (-k - 1)))
        return values * self.scale ** (-1 - k)

    def _regular_primitive(self, zeta: np.ndarray, sigma: np.ndarray, k: int) -> np.ndarray:
        """``zeta^(k+1) Q(zeta sigma)``, a primitive in ``zeta`` of the non-logarithmic terms of ``zeta^k F^(k)``.

        Terms constant in ``zeta`` are dropped; only differences are used.
        """
        x = np.outer(zeta, sigma)
        sign = (-1.0) ** k
        value = math.factorial(k) / (math.pi * (1.0 - x) ** (k + 1))
        value = value - sign * math.factorial(k) / (math.pi * (x - self.r ** 2) ** (k + 1))
        n = np.arange(k, self.truncation + 1)
        if len(n):
            coef = self.positive[k:] * _falling(n.astype(float), k) / (n + 1.0)
            value = value + self._power_sum(x, coef, n - k)
        m = self.negative_powers
        rising = np.ones(len(m))
        for i in range(k):
            rising = rising * (m + i)
        coef = sign * self.negative * rising / (1.0 - m)
        value = value + self._power_sum(1.0 / x, coef, m + k)
        return zeta[:, None] ** (k + 1) * value

    def period_oracle(self, w: complex) -> complex:
        """Exact contour integral of ``K(., w)`` around the hole."""
        sigma = np.conj((w - self.center[0]) / self.scale)
        return 1j / (self.scale * sigma * self.log_ratio)

    def describe(self):
        info = super().describe()
        info.update({'inner_ratio': self.r, 'truncation': self.truncation})
        return info
