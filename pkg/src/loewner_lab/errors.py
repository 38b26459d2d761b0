class LoewnerLabError(Exception):
    """Base class for all errors raised by loewner_lab."""


class ParameterError(LoewnerLabError, ValueError):
    """An input parameter is outside its admissible range."""


class DomainError(LoewnerLabError, ValueError):
    """A point or exponent lies outside the domain of a map or formula."""


class RangeError(LoewnerLabError, ValueError):
    """A requested time window or exponent falls outside the supported range."""


class DegenerateArcError(LoewnerLabError):
    """Too few surviving circle samples to identify the tip arc."""


class ResourceError(LoewnerLabError):
    """A request exceeds a configured resource cap."""
