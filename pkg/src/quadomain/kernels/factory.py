import logging
from typing import Optional

from quadomain.errors import KernelError
from quadomain.geometry.domains import (
    DEFAULT_MARGIN, Annulus, Ball, Disc, Domain, FiberedDomain, Product,
)
from quadomain.kernels.annulus import AnnulusKernel
from quadomain.kernels.base import KernelFunction
from quadomain.kernels.closed_form import BallKernel, DiscKernel
from quadomain.kernels.product import ProductKernel
from quadomain.kernels.reinhardt import build_reinhardt_kernel

logger = logging.getLogger(__name__)

DEFAULT_SERIES_DEGREE = 40


def kernel_for(domain: Domain, margin: float = DEFAULT_MARGIN, series_degree: int = DEFAULT_SERIES_DEGREE,
               rule_order: Optional[int] = None) -> KernelFunction:
    """Pick the kernel representation for a domain.

    Closed forms for discs and balls, the resummed Laurent series for annuli,
    factorwise products for product domains and numerically normed monomial
    series for Hartogs domains and ellipsoids.
    """
    if isinstance(domain, Disc):
        return DiscKernel(domain, margin)
    if isinstance(domain, Annulus):
        return AnnulusKernel(domain, margin)
    if isinstance(domain, Ball):
        return BallKernel(domain, margin)
    if isinstance(domain, Product):
        factors = [kernel_for(f, margin, series_degree, rule_order) for f in domain.factors]
        return ProductKernel(domain, factors, margin)
    if isinstance(domain, FiberedDomain):
        return build_reinhardt_kernel(domain, series_degree, rule_order, margin)
    raise KernelError(f"No kernel available for domain kind {domain.kind!r}")
