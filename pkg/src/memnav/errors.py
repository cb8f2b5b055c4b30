"""Exception hierarchy shared across the package."""

from __future__ import annotations


class MemnavError(Exception):
    """Base class for all package errors."""


class DomainError(MemnavError, ValueError):
    """An argument lies outside the domain of an operation."""


class FormatError(DomainError):
    """Malformed serialized data. ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class ConfigError(MemnavError, ValueError):
    """Invalid configuration. ``field`` names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ContractViolation(MemnavError, RuntimeError):
    """An internal precondition or invariant was broken."""
