"""Exception hierarchy shared by all sgdemu modules."""


class SgdemuError(Exception):
    """Base class for all toolkit errors."""


class FormatError(SgdemuError):
    """A file does not match the expected layout (e.g. bad CSV header)."""


class DataError(SgdemuError):
    """A file parses but its content is unusable (empty, non-monotone, ...)."""


class SpanError(SgdemuError):
    """Input series have no common time span."""


class SpecError(SgdemuError):
    """A synthesis specification is invalid (e.g. non-PSD correlations)."""


class StatisticError(SgdemuError):
    """A statistic is undefined for the given input (e.g. no valid samples)."""


class FrequencyDomainError(SgdemuError):
    """A frequency falls outside the scaling model's validity range."""


class ConfigError(SgdemuError):
    """A network or scenario configuration is inconsistent."""


class PlanError(SgdemuError):
    """A cluster plan does not partition the gateway roster."""


class ConfigValidationError(ConfigError):
    """Scenario config failed validation; carries a machine-readable list."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(e.get("message", str(e)) for e in self.errors))
