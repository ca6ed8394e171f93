"""Exception hierarchy shared across the engine.

Every error carries a stable ``code`` string so the HTTP layer and the CLI
can map failures without string-matching messages.
"""

from __future__ import annotations


class MetaglyphError(Exception):
    """Base class for all engine errors."""

    code = "internal"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.detail = detail


# --- dataset ingestion ---------------------------------------------------

class EmptyFile(MetaglyphError):
    code = "empty_file"


class RaggedRows(MetaglyphError):
    code = "ragged_rows"


class ZeroRows(MetaglyphError):
    code = "zero_rows"


class AllEmpty(MetaglyphError):
    code = "all_empty"


# --- metaphor acquisition / decomposition --------------------------------

class NoSource(MetaglyphError):
    code = "no_source"


class RemoteUnavailable(MetaglyphError):
    code = "remote_unavailable"


class ParseError(MetaglyphError):
    code = "svg_parse_error"


class UnsupportedFeature(MetaglyphError):
    code = "svg_unsupported_feature"


class CandidateRejected(MetaglyphError):
    """Candidate image is structurally unusable; carries a rejection reason."""

    code = "candidate_rejected"


class AllPruned(CandidateRejected):
    code = "all_pruned"


class TooSimple(CandidateRejected):
    code = "too_simple"


class TooComplex(CandidateRejected):
    code = "too_complex"


class DominantElement(CandidateRejected):
    """One element fills nearly the whole canvas (multi-layer image guard)."""

    code = "dominant_element"


# --- semantics ------------------------------------------------------------

class BackendUnavailable(MetaglyphError):
    code = "backend_unavailable"


class UnknownAllTokensWarning(UserWarning):
    """Table backend saw a phrase whose tokens are all out of vocabulary."""


# --- search ---------------------------------------------------------------

class TreeExhausted(MetaglyphError):
    code = "tree_exhausted"


class NoValidSolution(MetaglyphError):
    code = "no_valid_solution"


class SpaceTooLarge(MetaglyphError):
    code = "space_too_large"


# --- render ---------------------------------------------------------------

class ChannelExhausted(MetaglyphError):
    code = "channel_exhausted"


class UnknownRegion(MetaglyphError):
    code = "unknown_region"


# --- service --------------------------------------------------------------

class BadRequest(MetaglyphError):
    code = "bad_request"


class UnknownSession(MetaglyphError):
    code = "unknown_session"


class UnknownResult(MetaglyphError):
    code = "unknown_result"


class UnsatisfiablePin(MetaglyphError):
    code = "unsatisfiable_pin"


class StaleRevision(MetaglyphError):
    code = "stale_revision"


class NoCandidates(MetaglyphError):
    code = "no_candidates"
