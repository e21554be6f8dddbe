import math
import itertools
import logging
from abc import abstractmethod

import numpy as np

from quadomain.errors import KernelError
from quadomain.geometry.domains import DEFAULT_MARGIN, Ball, Disc, Domain, MultiIndex, as_points
from quadomain.kernels.base import KernelFunction

logger = logging.getLogger(__name__)


class InnerProductKernel(KernelFunction):
    """Kernel of the form ``scale^(-2n) F(<zeta, sigma>)``.

    ``zeta = (z - center) / scale`` and ``sigma = conj((w - center) / scale)``.
    Subclasses supply the derivatives ``F^(m)`` of the profile.
    """

    def __init__(self, domain: Domain, center, scale: float, margin: float = DEFAULT_MARGIN):
        super().__init__(domain, margin)
        self.center = np.broadcast_to(np.asarray(center, dtype=complex), (domain.dimension,)).copy()
        self.scale = float(scale)

    @abstractmethod
    def profile(self, x: np.ndarray, m: int) -> np.ndarray:
        """m-th derivative of the profile function at ``x``."""

    def _cross(self, z, w, alpha: MultiIndex, beta: MultiIndex) -> np.ndarray:
        zeta = (z - self.center) / self.scale
        sigma = np.conj((w - self.center) / self.scale)
        x = zeta @ sigma.T
        total = np.zeros(x.shape, dtype=complex)
        # d_zeta^beta d_sigma^alpha F(zeta . sigma), summed over shared orders gamma
        for gamma in itertools.product(*(range(min(a, b) + 1) for a, b in zip(alpha, beta))):
            coef = 1.0
            zpow = np.ones(len(zeta), dtype=complex)
            spow = np.ones(len(sigma), dtype=complex)
            for i, (a, b, g) in enumerate(zip(alpha, beta, gamma)):
                coef *= math.comb(b, g) * math.factorial(a) / math.factorial(a - g)
                zpow = zpow * zeta[:, i] ** (a - g)
                spow = spow * sigma[:, i] ** (b - g)
            order = sum(alpha) + sum(beta) - sum(gamma)
            total += coef * np.outer(zpow, spow) * self.profile(x, order)
        return total * self.scale ** (-2 * self.dimension - sum(alpha) - sum(beta))

    def describe(self):
        info = super().describe()
        info.update({'center': [[c.real, c.imag] for c in self.center], 'scale': self.scale})
        return info


class DiscKernel(InnerProductKernel):
    """``K(z, w) = R^2 / (pi (R^2 - (z - c) conj(w - c))^2)``."""
    form = 'closed_form_disc'

    def __init__(self, domain: Disc, margin: float = DEFAULT_MARGIN):
        super().__init__(domain, domain.center, domain.radius, margin)

    def profile(self, x, m):
        return math.factorial(m + 1) / (math.pi * (1.0 - x) ** (m + 2))

    def antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        alpha_k = 0 if alpha is None else int(alpha[0])
        beta_k = 0 if beta is None else int(beta[0])
        if beta_k > 0:
            return super().antiderivative_last(z, w, base, alpha, beta, tol)
        zs, ws = self._check(z, w)
        start, _ = as_points(np.atleast_1d(base), 1)
        return self._primitive(zs, ws, alpha_k) - self._primitive(start, ws, alpha_k)

    def _primitive(self, zs, ws, k: int) -> np.ndarray:
        # int_c^z of d_wbar^k K: k! zeta^(k+1) / (pi (1 - zeta sigma)^(k+1)), rescaled
        zeta = (zs[:, 0] - self.center[0]) / self.scale
        sigma = np.conj((ws[:, 0] - self.center[0]) / self.scale)
        x = np.outer(zeta, sigma)
        values = math.factorial(k) * zeta[:, None] ** (k + 1) / (math.pi * (1.0 - x) ** (k + 1))
        return values * self.scale ** (-1 - k)


class BallKernel(InnerProductKernel):
    """``K(z, w) = n! / (pi^n (1 - <z, w>)^(n+1))`` on the unit ball."""
    form = 'closed_form_ball'

    def __init__(self, domain: Ball, margin: float = DEFAULT_MARGIN):
        super().__init__(domain, 0j, 1.0, margin)
        self.n = domain.n

    def profile(self, x, m):
        return math.factorial(self.n + m) / (math.pi ** self.n * (1.0 - x) ** (self.n + 1 + m))

    def antiderivative_last(self, z, w, base, alpha=None, beta=None, tol=1e-12):
        raise KernelError("Ball kernels have no fixed fiber to integrate along")
