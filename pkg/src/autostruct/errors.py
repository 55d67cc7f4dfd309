"""Shared exception types."""

from __future__ import annotations


class CapExceeded(RuntimeError):
    """A construction exceeded its configured state or size budget."""


class CensusCapError(ValueError):
    """A class-size query exceeded the configured census cap."""


class AmbiguityError(ValueError):
    """A concatenation that must be unambiguous is not."""


class ShapeError(ValueError):
    """An automaton does not satisfy a required language-shape hypothesis."""
