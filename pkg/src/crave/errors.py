"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class CraveError(Exception):
    """Base class for every error raised by the engine."""


# -- input validation -------------------------------------------------------


class InvalidPost(CraveError, ValueError):
    pass


class EmptyClaimText(InvalidPost):
    pass


class MissingImage(InvalidPost):
    pass


class InvalidEvidence(CraveError, ValueError):
    pass


class InvalidConfig(CraveError, ValueError):
    pass


class UnserializableRequest(CraveError, TypeError):
    pass


# -- providers ---------------------------------------------------------------


class ProviderError(CraveError):
    """A capability provider failed to produce a usable response."""


class TransientProviderError(ProviderError):
    """Worth one more attempt with the same request."""


class ProviderTimeout(TransientProviderError):
    pass


class QuotaExhausted(ProviderError):
    pass


class SchemaViolation(ProviderError):
    pass


class DecodeFailure(ProviderError):
    pass


class ImageUnresolvable(ProviderError, ValueError):
    pass


class FixtureMiss(ProviderError):
    def __init__(self, provider_id: str, key: str):
        super().__init__(f"no recorded response for {provider_id}/{key}")
        self.provider_id = provider_id
        self.key = key


class FixturePackError(CraveError):
    pass


# -- numerics ----------------------------------------------------------------


class EmptyInput(CraveError, ValueError):
    pass


class ZeroVector(CraveError, ValueError):
    pass


# -- evaluation --------------------------------------------------------------


class DatasetError(CraveError, ValueError):
    pass


class MalformedRecord(DatasetError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class DuplicateId(DatasetError):
    pass


class UnknownLabel(DatasetError):
    pass


class EmptyDataset(DatasetError):
    pass
