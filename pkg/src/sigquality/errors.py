"""Exception hierarchy.

Every error raised by the library derives from :class:`SigQualityError` and,
where it makes sense, from the matching builtin (``ValueError``) so callers can
catch either.
"""


class SigQualityError(Exception):
    """Base class for all library errors."""


class InvalidParam(SigQualityError, ValueError):
    pass


# ingest

class ParseError(SigQualityError, ValueError):
    """Raised when raw signature or keystroke text cannot be parsed."""


class MalformedHeader(ParseError):
    pass


class RowArityError(ParseError):
    pass


class CountMismatch(ParseError):
    pass


class ColumnCountError(ParseError):
    pass


class NonNumericTiming(ParseError):
    pass


class SampleTooShort(SigQualityError, ValueError):
    pass


class ManifestError(SigQualityError, ValueError):
    pass


# features / quality / verify

class MissingPressure(SigQualityError, ValueError):
    pass


class FeatureCountMismatch(SigQualityError, ValueError):
    pass


class DegenerateSpread(SigQualityError, ValueError):
    pass


class NoEligibleFeatures(SigQualityError, ValueError):
    pass


class EmptyValidationSet(SigQualityError, ValueError):
    pass


class TooFewSamples(SigQualityError, ValueError):
    pass


# eval

class InsufficientSamples(SigQualityError, ValueError):
    pass


class EmptyScores(SigQualityError, ValueError):
    pass


class NoCrossing(SigQualityError, ValueError):
    pass


class TooFewTemplates(SigQualityError, ValueError):
    pass


class LengthMismatch(SigQualityError, ValueError):
    pass


class DegenerateInput(SigQualityError, ValueError):
    pass


class KTooLarge(SigQualityError, ValueError):
    pass


class InvalidFraction(SigQualityError, ValueError):
    pass


class OutOfRange(SigQualityError, ValueError):
    pass
