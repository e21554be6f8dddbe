import logging
import time
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from quadomain.differentiation import cauchy_derivative
from quadomain.errors import ConfigError
from quadomain.geometry.domains import (
    DEFAULT_MARGIN, Annulus, Ball, Disc, Domain, Polydisc,
)
from quadomain.geometry.lattices import random_points
from quadomain.geometry.rules import VolumeRule, volume_rule
from quadomain.kernels.base import KernelFunction
from quadomain.kernels.factory import kernel_for

logger = logging.getLogger(__name__)

SUITES = ('symmetry', 'reproducing', 'derivative')
SYMMETRY_TOL = 1e-12
REPRODUCING_TOL = 1e-8
DERIVATIVE_TOL = 1e-6

TestFunction = Callable[[np.ndarray], np.ndarray]


@dataclass
class CheckResult:
    suite: str
    domain: str
    max_error: float
    tolerance: float
    certified: bool = True
    detail: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)

    def to_dict(self) -> Dict:
        info = asdict(self)
        info['passed'] = self.passed
        return info


def reproducing_check(kernel: KernelFunction, h: TestFunction, a, rule: VolumeRule, alpha=None) -> complex:
    """``<h, K^(alpha)(., a)>`` over the domain by the volume rule."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    nodes = rule.nodes
    sections = kernel.evaluate(nodes, a, alpha)[:, 0]
    return complex(np.dot(rule.weights, h(nodes) * np.conj(sections)))


def _planar_battery(annular: bool) -> List[Tuple[str, TestFunction]]:
    battery = [(f'z^{k}', (lambda k: lambda p: p[:, 0] ** k)(k)) for k in range(7)]
    battery.append(('exp(z)', lambda p: np.exp(p[:, 0])))
    if annular:
        battery += [('1/z', lambda p: 1.0 / p[:, 0]), ('1/z^2', lambda p: p[:, 0] ** -2)]
    else:
        battery += [('1/(2-z)', lambda p: 1.0 / (2.0 - p[:, 0])), ('(1+z)^3', lambda p: (1.0 + p[:, 0]) ** 3)]
    return battery


def _pair_battery() -> List[Tuple[str, TestFunction]]:
    return [
        ('1', lambda p: np.ones(len(p), dtype=complex)),
        ('z1', lambda p: p[:, 0]),
        ('z2', lambda p: p[:, 1]),
        ('z1 z2', lambda p: p[:, 0] * p[:, 1]),
        ('z1^2', lambda p: p[:, 0] ** 2),
        ('z2^2', lambda p: p[:, 1] ** 2),
        ('z1^2 z2', lambda p: p[:, 0] ** 2 * p[:, 1]),
        ('z1 z2^3', lambda p: p[:, 0] * p[:, 1] ** 3),
        ('exp(z1 + z2)', lambda p: np.exp(p[:, 0] + p[:, 1])),
        ('1/(2 - z1 - z2)', lambda p: 1.0 / (2.0 - p[:, 0] - p[:, 1])),
    ]


@dataclass(frozen=True)
class SelftestCase:
    name: str
    domain: Domain
    rule_order: int
    angular_order: int
    node: Tuple[complex, ...]
    battery: Tuple[Tuple[str, TestFunction], ...]
    alphas: Tuple[Tuple[int, ...], ...]


def default_cases() -> List[SelftestCase]:
    pair = tuple(_pair_battery())
    pair_alphas = ((1, 0), (0, 1), (1, 1), (2, 0))
    return [
        SelftestCase('disc', Disc(0j, 1.0), 64, 64, (0.3 + 0.2j,), tuple(_planar_battery(False)), ((1,), (2,))),
        SelftestCase('annulus', Annulus(0.5, 1.0), 64, 128, (0.5 + 0.5j,), tuple(_planar_battery(True)),
                     ((1,), (2,))),
        SelftestCase('ball', Ball(2), 16, 20, (0.2, 0.1j), pair, pair_alphas),
        SelftestCase('polydisc', Polydisc((1.0, 1.0)), 24, 24, (0.3, -0.2j), pair, pair_alphas),
    ]


def _symmetry(kernel: KernelFunction, rng: np.random.Generator, margin: float, count: int = 100) -> float:
    z = random_points(kernel.domain, count, rng, margin)
    w = random_points(kernel.domain, count, rng, margin)
    forward = np.array([kernel.evaluate(z[i:i + 1], w[i:i + 1])[0, 0] for i in range(count)])
    backward = np.array([kernel.evaluate(w[i:i + 1], z[i:i + 1])[0, 0] for i in range(count)])
    return float(np.max(np.abs(forward - np.conj(backward)) / np.maximum(1.0, np.abs(forward))))


def run_selftest(suites: Sequence[str] = SUITES, margin: float = DEFAULT_MARGIN, seed: int = 0,
                 cases: Optional[List[SelftestCase]] = None) -> Dict:
    """Run the kernel invariant suite and return a machine-readable report.

    Args:
        suites: Any of ``symmetry``, ``reproducing`` and ``derivative``
        margin: Margin used when sampling evaluation points
        seed: Seed for the random symmetry pairs
        cases: Domains to check; defaults to disc, annulus, ball and polydisc

    Returns:
        Dict with ``status`` (PASS, DEGRADED or FAIL) and per-check results
    """
    suites = list(suites)
    if not suites:
        raise ConfigError("Empty selftest suite selection")
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"Unknown selftest suites: {unknown}")

    rng = np.random.default_rng(seed)
    cases = default_cases() if cases is None else cases
    results: List[CheckResult] = []
    started = time.monotonic()
    for case in cases:
        kernel = kernel_for(case.domain, margin=DEFAULT_MARGIN)
        certified = margin >= kernel.margin
        if 'symmetry' in suites:
            results.append(CheckResult('symmetry', case.name, _symmetry(kernel, rng, margin), SYMMETRY_TOL, certified))
        if 'reproducing' in suites or 'derivative' in suites:
            rule = volume_rule(case.domain, case.rule_order, case.angular_order)
            node = np.array([case.node], dtype=complex)
        if 'reproducing' in suites:
            errors = {name: abs(reproducing_check(kernel, h, node, rule) - complex(h(node)[0]))
                      for name, h in case.battery}
            results.append(CheckResult('reproducing', case.name, max(errors.values()), REPRODUCING_TOL,
                                       certified, {'errors': errors}))
        if 'derivative' in suites:
            errors = {}
            for alpha in case.alphas:
                for name, h in case.battery:
                    exact = complex(cauchy_derivative(h, node, alpha)[0])
                    errors[f'{name} {alpha}'] = abs(reproducing_check(kernel, h, node, rule, alpha) - exact)
            results.append(CheckResult('derivative', case.name, max(errors.values()), DERIVATIVE_TOL,
                                       certified, {'errors': errors}))

    for result in results:
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, f"{result.suite} on {result.domain}: max error {result.max_error:.2e} "
                          f"(tolerance {result.tolerance:.0e})")

    if not all(r.passed for r in results):
        status = 'FAIL'
    elif not all(r.certified for r in results):
        status = 'DEGRADED'
        logger.warning(f"Selftest margin {margin} is below the certified kernel margin; results are uncertified")
    else:
        status = 'PASS'
    return {'status': status, 'margin': margin, 'seed': seed, 'suites': suites,
            'checks': [r.to_dict() for r in results],
            'timing': {'seconds': time.monotonic() - started}}
