"""Exception hierarchy shared across the workbench.

Every error raised by romdx derives from RomdxError so callers (notably the
CLI) can map failures onto stable exit codes.
"""


class RomdxError(Exception):
    """Base class for all romdx errors."""


# --- manifest / case ingestion ------------------------------------------------

class ManifestError(RomdxError):
    """A case manifest could not be ingested."""


class MissingFile(ManifestError):
    pass


class EmptyManifest(ManifestError):
    pass


class DuplicateCaseId(ManifestError):
    pass


class UnknownLabel(ManifestError):
    pass


class InvalidRow(ManifestError):
    """A manifest row is malformed (bad duration, missing column, ...)."""


class UnresolvableVideoRef(RomdxError):
    pass


class InvalidFrameCount(RomdxError):
    pass


# --- rule files / prompts -----------------------------------------------------

class RuleFileError(RomdxError):
    """A rule file violates the rule-set schema or its invariants."""


class RuleParseError(RuleFileError):
    pass


class UnknownLandmark(RuleFileError):
    pass


class InvertedThreshold(RuleFileError):
    """normal_reach does not sit strictly above limited_if_at_or_below."""


class UnknownKind(RomdxError):
    pass


# --- model gateway --------------------------------------------------------------

class GatewayError(RomdxError):
    """An inference backend call failed."""


class PrivacyGateRejected(GatewayError):
    pass


class GatewayTimeout(GatewayError):
    """Request timed out (or kept failing retryably) after all retries."""


class RateLimited(GatewayError):
    pass


class MalformedResponse(GatewayError):
    pass


class EmptyDescription(GatewayError):
    pass


class EmptyFrameSet(GatewayError):
    pass


class NotSynthetic(GatewayError):
    """Operation requires a case generated by the simulated backend."""


# --- pipelines ------------------------------------------------------------------

class PipelineError(RomdxError):
    pass


class DescribeFailed(PipelineError):
    """The describe stage of the two-stage pipeline failed; no judge call ran."""


class JudgeFailed(PipelineError):
    pass


# --- grading --------------------------------------------------------------------

class GradingError(RomdxError):
    pass


class DuplicateRater(GradingError):
    pass


class GradingComplete(GradingError):
    """Both rater slots for the (case, framework) pair are already filled."""


class UnknownCase(GradingError):
    pass


class InvalidScore(GradingError):
    pass


class NotInDisagreement(GradingError):
    pass


class TooFewParticipants(GradingError):
    pass


# --- evaluation -------------------------------------------------------------------

class EvaluationError(RomdxError):
    pass


class MissingGrade(EvaluationError):
    pass


class MissingTruth(EvaluationError):
    pass


class CardinalityMismatch(EvaluationError):
    pass


class EmptyMatrix(EvaluationError):
    pass


class EmptySample(EvaluationError):
    pass


class IncompleteInputs(EvaluationError):
    pass


# --- workspace / CLI ----------------------------------------------------------------

class WorkspaceLocked(RomdxError):
    pass
