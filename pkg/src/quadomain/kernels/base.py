import logging
from abc import ABC, abstractmethod
from typing import Dict

import numpy as np

from quadomain.differentiation import cauchy_stencil
from quadomain.errors import DomainError, KernelError
from quadomain.geometry.domains import (
    DEFAULT_MARGIN, Domain, MultiIndex, as_points, fiber_domain_of, multi_index,
)
from quadomain.geometry.paths import canonical_path, integrate_path
from quadomain.parallel import map_chunks, split_rows

logger = logging.getLogger(__name__)

MAX_CLOSED_FORM_ORDER = 4
MAX_ORDER = 8
FALLBACK_RADIUS = 0.1
ROW_CHUNK = 4096


class KernelFunction(ABC):
    """Bergman kernel ``K(z, w)`` of a domain with mixed derivatives.

    ``evaluate`` returns the cross matrix ``d_z^beta d_wbar^alpha K(z_i, w_j)``
    for every row ``z_i`` of ``z`` and ``w_j`` of ``w``. Orders above
    ``MAX_CLOSED_FORM_ORDER`` go through Cauchy-integral differentiation.
    """

    form: str = 'kernel'
    row_chunk: int = ROW_CHUNK

    def __init__(self, domain: Domain, margin: float = DEFAULT_MARGIN):
        self.domain = domain
        self.margin = margin

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @abstractmethod
    def _cross(self, z: np.ndarray, w: np.ndarray, alpha: MultiIndex, beta: MultiIndex) -> np.ndarray:
        """Unchecked cross evaluation; ``z`` is ``(N, n)``, ``w`` is ``(M, n)``."""

    def describe(self) -> Dict:
        return {'form': self.form, 'domain': self.domain.describe(), 'certified_margin': self.margin}

    def _check(self, z, w):
        zs, _ = as_points(z, self.dimension)
        ws, _ = as_points(w, self.dimension)
        for name, pts in (('z', zs), ('w', ws)):
            inside = np.asarray(self.domain.contains(pts))
            if not np.all(inside):
                raise DomainError(f"Kernel argument {name}={pts[~inside][0]} lies outside the {self.domain.kind}")
        return zs, ws

    def evaluate(self, z, w, alpha=None, beta=None) -> np.ndarray:
        """Cross matrix of ``d_z^beta d_wbar^alpha K`` with shape ``(len(z), len(w))``."""
        zs, ws = self._check(z, w)
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        order = sum(alpha) + sum(beta)
        if order > MAX_ORDER:
            raise KernelError(f"Derivative order {order} exceeds the supported maximum {MAX_ORDER}")
        if order > MAX_CLOSED_FORM_ORDER:
            return self._cauchy_cross(zs, ws, alpha, beta)

        def rows(block: slice) -> np.ndarray:
            return self._cross(zs[block], ws, alpha, beta)

        return np.vstack(map_chunks(rows, split_rows(len(zs), self.row_chunk)))

    def _cauchy_cross(self, zs, ws, alpha, beta) -> np.ndarray:
        zero = (0,) * self.dimension
        z_off, z_wt = cauchy_stencil(beta, FALLBACK_RADIUS)
        s_off, s_wt = cauchy_stencil(alpha, FALLBACK_RADIUS)
        zsamples = (zs[:, None, :] + z_off[None, :, :]).reshape(-1, self.dimension)
        out = np.empty((len(zs), len(ws)), dtype=complex)
        for j, wj in enumerate(ws):
            wsamples = np.conj(np.conj(wj)[None, :] + s_off)
            block = self._cross(zsamples, wsamples, zero, zero).reshape(len(zs), len(z_wt), len(s_wt))
            out[:, j] = np.einsum('nab,a,b->n', block, z_wt, s_wt)
        logger.debug(f"Cauchy fallback for alpha={alpha} beta={beta} on {out.shape} pairs")
        return out

    def eval_kernel(self, z, w) -> complex:
        return complex(self.evaluate(np.atleast_1d(z), np.atleast_1d(w))[0, 0])

    def eval_kernel_deriv(self, alpha, z, w, beta=None) -> complex:
        return complex(self.evaluate(np.atleast_1d(z), np.atleast_1d(w), alpha, beta)[0, 0])

    def antiderivative_last(self, z, w, base: complex, alpha=None, beta=None,
                            tol: float = 1e-12) -> np.ndarray:
        """Cross matrix of ``int_base^{z_n} d_z^beta d_wbar^alpha K((z', lam), w) d lam``.

        The integral runs along the canonical path of the fiber domain. A
        positive last z-order reduces to a difference of kernel values.
        """
        zs, ws = self._check(z, w)
        alpha = multi_index(alpha, self.dimension)
        beta = multi_index(beta, self.dimension)
        if beta[-1] > 0:
            lower = beta[:-1] + (beta[-1] - 1,)
            start = zs.copy()
            start[:, -1] = base
            return self.evaluate(zs, ws, alpha, lower) - self.evaluate(start, ws, alpha, lower)
        return self._path_antiderivative(zs, ws, base, alpha, beta, tol)

    def _path_antiderivative(self, zs, ws, base, alpha, beta, tol, alternate: bool = False) -> np.ndarray:
        fiber = fiber_domain_of(self.domain)
        segments = canonical_path(fiber, base, zs[:, -1], alternate)
        n = self.dimension
        out = np.empty((len(zs), len(ws)), dtype=complex)
        for j, wj in enumerate(ws):
            def integrand(lam: np.ndarray) -> np.ndarray:
                pts = np.repeat(zs, lam.shape[1], axis=0)
                pts[:, n - 1] = lam.ravel()
                return self.evaluate(pts, wj[None, :], alpha, beta)[:, 0].reshape(lam.shape)

            out[:, j], _ = integrate_path(integrand, segments, tol)
        return out

    def alternate_antiderivative_last(self, z, w, base: complex, alpha=None, beta=None,
                                      tol: float = 1e-12) -> np.ndarray:
        """Same integral along the alternate path (path-independence check)."""
        zs, ws = self._check(z, w)
        return self._path_antiderivative(zs, ws, base, multi_index(alpha, self.dimension),
                                         multi_index(beta, self.dimension), tol, alternate=True)

