"""Derivatives of holomorphic functions from samples.

Cauchy's integral formula on small polycircles, discretized by the
trapezoid rule, gives derivatives to near machine precision for the
analytic expressions used throughout the package.
"""
import math
import logging
from typing import Callable, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_RADIUS = 0.05
DEFAULT_SAMPLES = 32


def cauchy_stencil(beta: Sequence[int], radius: float = DEFAULT_RADIUS,
                   samples: int = DEFAULT_SAMPLES) -> Tuple[np.ndarray, np.ndarray]:
    """Offsets and weights with ``f^(beta)(p) ~ sum(w * f(p + offsets))``.

    Returns:
        Tuple of (offsets of shape ``(S, n)``, complex weights of shape ``(S,)``)
    """
    beta = [int(b) for b in beta]
    n = len(beta)
    theta = 2.0 * np.pi * np.arange(samples) / samples
    offsets = np.zeros((1, n), dtype=complex)
    weights = np.ones(1, dtype=complex)
    for i, k in enumerate(beta):
        if k == 0:
            continue
        if k >= samples // 2:
            raise ValueError(f"Derivative order {k} too high for {samples} samples")
        circle = radius * np.exp(1j * theta)
        w1 = math.factorial(k) * np.exp(-1j * k * theta) / (samples * radius ** k)
        step = np.zeros((samples, n), dtype=complex)
        step[:, i] = circle
        offsets = (offsets[:, None, :] + step[None, :, :]).reshape(-1, n)
        weights = np.outer(weights, w1).ravel()
    return offsets, weights


def cauchy_derivative(func: Callable[[np.ndarray], np.ndarray], points, beta: Sequence[int],
                      radius: float = DEFAULT_RADIUS, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    """Evaluate ``d^beta func`` at each row of ``points``.

    Args:
        func: Holomorphic function, vectorized over an ``(K, n)`` array
        points: ``(P, n)`` evaluation points
        beta: Derivative multi-index
        radius: Polycircle radius; ``func`` must be holomorphic on the closed polydisc
        samples: Trapezoid points per active coordinate

    Returns:
        Array of shape ``(P,)``
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    offsets, weights = cauchy_stencil(beta, radius, samples)
    shifted = (points[:, None, :] + offsets[None, :, :]).reshape(-1, points.shape[1])
    values = np.asarray(func(shifted)).reshape(len(points), len(weights))
    return values @ weights


def cauchy_riemann_residual(func: Callable[[np.ndarray], np.ndarray], points,
                            step: float = 1e-5) -> np.ndarray:
    """Largest Cauchy-Riemann defect ``|df/dx - (1/i) df/dy|`` per point over all coordinates.

    Uses central differences in the real and imaginary directions.
    """
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    defect = np.zeros(len(points))
    for i in range(points.shape[1]):
        e = np.zeros(points.shape[1], dtype=complex)
        e[i] = step
        dx = (func(points + e) - func(points - e)) / (2 * step)
        dy = (func(points + 1j * e) - func(points - 1j * e)) / (2 * step)
        defect = np.maximum(defect, np.abs(dx + 1j * dy))
    return defect
