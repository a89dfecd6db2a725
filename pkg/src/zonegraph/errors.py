"""Exception hierarchy.

Validation problems with user input derive from :class:`ValidationError`
(the CLI maps those to exit code 2); everything else signals misuse or an
engine bug.
"""


class ZoneGraphError(Exception):
    pass


class ValidationError(ZoneGraphError):
    pass


class NonPlanarFace(ValidationError):
    pass


class NotWatertight(ValidationError):
    pass


class DegenerateFace(ValidationError):
    pass


class BadOrientation(ValidationError):
    pass


class TooManyZones(ValidationError):
    pass


class InvalidApplication(ZoneGraphError):
    pass


class ShapeMismatch(ValidationError):
    pass


class DomainError(ValueError, ZoneGraphError):
    pass


class EmptyEffectiveDataset(ZoneGraphError):
    pass


class GenerationExhausted(ZoneGraphError):
    pass


class UnsupportedResult(ZoneGraphError):
    pass
