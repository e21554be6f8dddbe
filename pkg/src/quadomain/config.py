import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from quadomain.errors import ConfigError, DomainError
from quadomain.geometry.domains import DEFAULT_MARGIN, Domain, domain_from_spec

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ('construct', 'onepoint')
AUTOMORPHISM_KINDS = ('henon', 'shiftlike')


@dataclass(frozen=True)
class Tolerances:
    period: float = 1e-10
    jacobian: float = 1e-8
    path: float = 1e-10
    quadrature: float = 1e-12
    identity: float = 1e-6
    method_agreement: float = 1e-8
    roundtrip: float = 1e-8
    condition_limit: float = 1e6

    def scaled(self, factor: float) -> 'Tolerances':
        """Every tolerance multiplied by ``factor``; the condition limit is not a tolerance."""
        values = {f.name: getattr(self, f.name) * factor for f in fields(self) if f.name != 'condition_limit'}
        return replace(self, **values)


@dataclass(frozen=True)
class DomainSpec:
    raw: Dict[str, Any]

    def build(self) -> Domain:
        return domain_from_spec(self.raw)


@dataclass(frozen=True)
class FitSpec:
    lattice: Tuple[int, ...] = (1, 24)
    max_order: int = 0
    epsilon: float = 0.05
    exact: bool = False
    series_degree: int = 40
    rule_order: Optional[int] = None
    inner_ring: Optional[float] = None


@dataclass(frozen=True)
class AutomorphismSpec:
    kind: str
    coefficients: Tuple[complex, ...]
    inject_jacobian_error: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    kind: str
    domain: Optional[DomainSpec] = None
    fit: FitSpec = field(default_factory=FitSpec)
    automorphism: Optional[AutomorphismSpec] = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    battery_version: int = 1
    seed: int = 0
    margin: float = DEFAULT_MARGIN
    contour_samples: int = 512
    mc_samples: int = 1_000_000
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.automorphism is not None:
            data['automorphism']['coefficients'] = [[c.real, c.imag] for c in self.automorphism.coefficients]
        return data


def _number(value, name: str, positive: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"Invalid {name}: {value!r} is not a number")
    if positive and not value > 0:
        raise ConfigError(f"Invalid {name}: {value!r} must be positive")
    return float(value)


def _integer(value, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"Invalid {name}: {value!r} must be an integer >= {minimum}")
    return value


def _complex(value, name: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_number(value[0], name, False), _number(value[1], name, False))
    return complex(_number(value, name, False))


def _reject_unknown(data: Dict, allowed, where: str):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"Unknown {where} keys: {sorted(unknown)}")


def _tolerances(data: Dict) -> Tolerances:
    if not isinstance(data, dict):
        raise ConfigError("tolerances must be an object")
    _reject_unknown(data, [f.name for f in fields(Tolerances)], 'tolerance')
    return Tolerances(**{k: _number(v, f"tolerance {k}") for k, v in data.items()})


def _fit(data: Dict) -> FitSpec:
    if not isinstance(data, dict):
        raise ConfigError("fit must be an object")
    _reject_unknown(data, [f.name for f in fields(FitSpec)], 'fit')
    lattice = data.get('lattice', FitSpec.lattice)
    if isinstance(lattice, int):
        lattice = [lattice]
    if not isinstance(lattice, (list, tuple)) or not lattice:
        raise ConfigError(f"Invalid fit lattice: {lattice!r}")
    rule_order = data.get('rule_order')
    inner_ring = data.get('inner_ring')
    if inner_ring is not None and not 0.0 < _number(inner_ring, 'fit inner_ring') < 1.0:
        raise ConfigError(f"Invalid fit inner_ring: {inner_ring!r} must lie in (0, 1)")
    max_order = _integer(data.get('max_order', 0), 'fit max_order')
    if max_order > 4:
        raise ConfigError(f"Invalid fit max_order: {max_order} exceeds the jet cap of 4")
    return FitSpec(
        lattice=tuple(_integer(c, 'lattice count', 1) for c in lattice),
        max_order=max_order,
        epsilon=_number(data.get('epsilon', 0.05), 'fit epsilon'),
        exact=bool(data.get('exact', False)),
        series_degree=_integer(data.get('series_degree', 40), 'series_degree', 1),
        rule_order=None if rule_order is None else _integer(rule_order, 'rule_order', 4),
        inner_ring=None if inner_ring is None else float(inner_ring),
    )


def _automorphism(data: Dict) -> AutomorphismSpec:
    if not isinstance(data, dict):
        raise ConfigError("automorphism must be an object")
    _reject_unknown(data, ('kind', 'coefficients', 'inject_jacobian_error'), 'automorphism')
    kind = data.get('kind')
    if kind not in AUTOMORPHISM_KINDS:
        raise ConfigError(f"Invalid automorphism kind: {kind!r}")
    coefficients = data.get('coefficients')
    if not isinstance(coefficients, list):
        raise ConfigError("automorphism coefficients must be a list (ascending powers)")
    return AutomorphismSpec(kind, tuple(_complex(c, 'coefficient') for c in coefficients),
                            _number(data.get('inject_jacobian_error', 0.0), 'inject_jacobian_error', False))


def parse_config(data: Dict[str, Any], tolerance_scale: float = 1.0, seed: Optional[int] = None) -> RunConfig:
    """Validate a decoded configuration document.

    Raises:
        ConfigError: on any schema violation
    """
    if not isinstance(data, dict):
        raise ConfigError("Configuration must be a JSON object")
    _reject_unknown(data, ('schema_version', 'kind', 'domain', 'fit', 'automorphism', 'tolerances',
                           'battery_version', 'seed', 'margin', 'contour_samples', 'mc_samples'), 'top-level')
    version = data.get('schema_version')
    if version != SCHEMA_VERSION:
        raise ConfigError(f"Unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    kind = data.get('kind')
    if kind not in KINDS:
        raise ConfigError(f"Invalid kind: {kind!r}, expected one of {KINDS}")

    domain = None
    if kind == 'construct':
        if not isinstance(data.get('domain'), dict):
            raise ConfigError("construct runs need a domain object")
        domain = DomainSpec(data['domain'])
        try:
            domain.build()
        except DomainError as e:
            raise ConfigError(f"Invalid domain: {e}") from e
    automorphism = None
    if kind == 'onepoint':
        automorphism = _automorphism(data.get('automorphism'))

    scale = _number(tolerance_scale, 'tolerance scale')
    margin = _number(data.get('margin', DEFAULT_MARGIN), 'margin')
    if margin >= 0.5:
        raise ConfigError(f"Invalid margin: {margin} must be below 0.5")
    samples = _integer(data.get('contour_samples', 512), 'contour_samples', 16)
    if samples % 2:
        raise ConfigError(f"Invalid contour_samples: {samples} must be even")
    config = RunConfig(
        kind=kind,
        domain=domain,
        fit=_fit(data.get('fit', {})),
        automorphism=automorphism,
        tolerances=_tolerances(data.get('tolerances', {})).scaled(scale),
        battery_version=_integer(data.get('battery_version', 1), 'battery_version', 1),
        seed=_integer(data.get('seed', 0) if seed is None else seed, 'seed'),
        margin=margin,
        contour_samples=samples,
        mc_samples=_integer(data.get('mc_samples', 1_000_000), 'mc_samples', 1000),
    )
    logger.debug(f"Parsed {kind} configuration with seed {config.seed}")
    return config


def load_config(path, tolerance_scale: float = 1.0, seed: Optional[int] = None) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read configuration {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed JSON in {path}: {e}") from e
    config = parse_config(data, tolerance_scale, seed)
    logger.info(f"Loaded {config.kind} configuration from {path}")
    return config
