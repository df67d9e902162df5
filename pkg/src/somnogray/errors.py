"""Exception taxonomy shared across the toolkit.

Every somnogray-specific failure derives from SomnograyError so callers
can separate domain errors from programming errors. The CLI maps
SomnograyError to exit code 3 (data/schema) and NumericError subclasses
to exit code 4.
"""


class SomnograyError(Exception):
    """Base class for all somnogray domain errors."""


class NumericError(SomnograyError):
    """Base class for numeric failures (non-finite losses and friends)."""


# core type invariants

class InvariantViolation(SomnograyError):
    """A domain type's structural invariant was violated at construction."""


class SimplexViolation(InvariantViolation):
    """A probability row is outside [0, 1] or does not sum to 1."""


class GridMismatch(SomnograyError):
    """Two objects that must share an epoch grid do not."""


class EmptyEpoch(SomnograyError):
    """An epoch has no scoreable votes to aggregate."""


# uncertainty / gray selection

class EmptyInput(SomnograyError):
    """An operation requiring at least one series received none."""


class MetricMismatch(SomnograyError):
    """Uncertainty series with different metrics were pooled together."""


class InvalidGrayParams(SomnograyError):
    """Gray-area selection parameters outside their documented range."""


# evaluation

class EmptyMatrix(SomnograyError):
    """Agreement requested on a confusion matrix with zero total count."""


class AllExcluded(SomnograyError):
    """Every epoch was excluded; no retained set to evaluate."""


# EDF parsing and writing

class EdfError(SomnograyError):
    """Base class for EDF format errors."""


class TruncatedFile(EdfError):
    """File shorter than its declared header or data extent."""


class MalformedHeader(EdfError):
    """Header field is non-numeric, inconsistent, or out of range."""


class DegenerateCalibration(EdfError):
    """A signal declares physical_min = physical_max or digital_min = digital_max."""


class RangeOverflow(EdfError):
    """A physical sample maps outside the declared digital range."""


# preprocessing

class NyquistViolation(SomnograyError):
    """Sampling rate too low for the requested band edge."""


class DegenerateSignal(SomnograyError):
    """Signal statistics degenerate (zero IQR)."""


class TooShort(SomnograyError):
    """Signal shorter than one full epoch."""


# stager

class DegenerateLabels(SomnograyError):
    """Training labels contain fewer than two classes."""


class NonFiniteLoss(NumericError):
    """Training loss became NaN or infinite."""


class DimensionMismatch(SomnograyError):
    """Feature dimensionality does not match the model."""


class NoEligibleChannels(SomnograyError):
    """No channel passed the eligibility filter for staging."""


# synthetic generation

class InvalidConfig(SomnograyError):
    """Synthetic generator configuration violates its invariants."""


# file formats

class SchemaError(SomnograyError):
    """On-disk document does not match the expected schema."""


class NonContiguousEpochs(SchemaError):
    """Epoch indices in a CSV are not 0-based and contiguous."""


class UnknownStageToken(SchemaError):
    """Stage column contains a token outside W,N1,N2,N3,R,U."""


class VersionError(SchemaError):
    """Document schema version is not supported by this reader."""


class TooFewPoints(SomnograyError):
    """Curve emission requires at least two points per series."""


# review sessions

class UnknownRecording(SomnograyError):
    """Recording id not present in the data store."""


class UnknownSession(SomnograyError):
    """Session id not present in the session store."""


class EpochNotGray(SomnograyError):
    """Decision submitted for an epoch outside the session's gray queue."""


class SessionClosed(SomnograyError):
    """Mutation attempted on a completed session."""
