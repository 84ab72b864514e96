"""Exception types shared across the package.

Config and usage problems map to CLI exit code 1, data and I/O problems
to exit code 2; the grouping below mirrors that split.
"""

from __future__ import annotations


class TwinfuseError(Exception):
    """Base class for all package-specific errors."""


# -- geometry ---------------------------------------------------------------

class BehindCamera(TwinfuseError):
    """Projection requested for a point at or behind the image plane."""


class NonPositiveRange(TwinfuseError):
    """Back-projection requested with a range that is not > 0."""


# -- fusion -----------------------------------------------------------------

class DegenerateRegion(TwinfuseError):
    """Sampling region is empty after clamping to the image."""


class AllSamplesInvalid(TwinfuseError):
    """Resample budget exhausted without enough valid depth readings."""


class LengthMismatch(TwinfuseError):
    """Parallel box / distance lists disagree in length."""


class UnknownTarget(TwinfuseError):
    """Frame carries no twin record for the requested vehicle id."""


# -- scenario / config ------------------------------------------------------

class ConfigInvalid(TwinfuseError):
    """Scenario configuration violates an invariant.

    ``field`` names the offending entry so CLI errors can point at it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NoEvent(TwinfuseError):
    """Scenario lacks the cut-in event required by the safety experiment."""


# -- data / I/O -------------------------------------------------------------

class ParseError(TwinfuseError):
    """Malformed record in an input stream; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidBox(TwinfuseError):
    """Bounding box with impossible coordinates; carries the frame index."""

    def __init__(self, frame: int, message: str):
        super().__init__(f"frame {frame}: {message}")
        self.frame = frame


class EmptyInput(TwinfuseError):
    """Metric requested over an empty record set."""


class RunDirectoryError(TwinfuseError):
    """Run directory is missing files or contains malformed ones."""
