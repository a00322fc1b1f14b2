"""Exception types shared across the package."""


class SkillRecError(Exception):
    """Base class for all package errors."""


class ParseError(SkillRecError):
    """A document (catalog, snapshot, event line) could not be parsed."""


class CatalogValidationError(SkillRecError):
    """A catalog violated its structural invariants.

    Carries the full list of violation records so callers can report
    every problem at once instead of failing on the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"catalog validation failed: {lines}")


class EmptyRegistryError(SkillRecError):
    """Retrieval was asked to rank over a registry with no plugins."""


class UnknownPluginError(SkillRecError):
    """A plugin id was referenced that the registry does not contain."""


class UnknownSkillError(SkillRecError):
    """A skill id was referenced that the model or registry does not contain."""


class DimensionMismatchError(SkillRecError):
    """Two vectors of different dimensions were combined."""


class DuplicateEventIdError(SkillRecError):
    """An event with an already-logged event_id was appended."""


class StorageError(SkillRecError):
    """The event log could not be read or written."""


class GatewayError(SkillRecError):
    """Base class for completion-provider failures."""


class ProviderError(GatewayError):
    """The provider returned a non-success response."""


class ProviderTimeout(GatewayError):
    """The provider did not answer within the configured timeout."""


class MalformedResponse(GatewayError):
    """The provider answered, but not in the requested structure."""
