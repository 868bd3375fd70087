"""Exception types shared by every module."""

from __future__ import annotations


class MonoidProgError(Exception):
    """Base class for all errors raised by this package."""


class InputError(MonoidProgError, ValueError):
    """An argument violates an operation's precondition."""


class ResourceError(MonoidProgError):
    """A configured size or enumeration cap would be exceeded."""


class Cancelled(MonoidProgError):
    """A long enumeration was interrupted through its cancellation token."""


class CertificateError(MonoidProgError):
    """A supplied certificate does not characterize the program's acceptance.

    ``witness`` holds an input word on which the certificate and the
    program disagree.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness
