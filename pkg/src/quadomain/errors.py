"""Exception hierarchy shared by every quadomain stage."""


class QuadomainError(Exception):
    """Base class for all quadomain failures."""


class DomainError(QuadomainError, ValueError):
    """Bad domain description, dimension mismatch or point outside a domain."""


class KernelError(QuadomainError, ValueError):
    """Kernel cannot be built or evaluated as requested."""


class FitBudgetExceeded(QuadomainError):
    """The fitter missed its target; the best element found is attached."""

    def __init__(self, message, element=None, report=None):
        super().__init__(message)
        self.element = element
        self.report = report


class IllConditionedFit(QuadomainError):
    """Regularized normal equations are still numerically singular."""


class PeriodError(QuadomainError):
    """Contour integrals failed to converge or did not vanish."""


class PeriodMatrixSingular(PeriodError):
    """No well conditioned period matrix was found."""


class PathError(QuadomainError):
    """Path integration left the domain or disagreed between paths."""


class CertificateInconclusive(QuadomainError):
    """Injectivity could not be decided at the requested tolerance."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class JetError(QuadomainError, ValueError):
    """Jet order too high or jet system singular."""


class CollocationError(QuadomainError):
    """Collocation system for quadrature coefficients is singular."""


class IntegrationError(QuadomainError):
    """Volume integration did not converge or its map is not certified."""


class ConfigError(QuadomainError, ValueError):
    """Run configuration violates the schema."""


class StageError(QuadomainError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.detail = message
