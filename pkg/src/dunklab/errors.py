"""Error taxonomy shared across the package.

Every failure mode that callers are expected to catch gets its own class;
plain ``ValueError`` is reserved for malformed arguments detected at the
call boundary.
"""

from __future__ import annotations


class DunklabError(Exception):
    """Base class for all package-specific failures."""


class ClosureOverflow(DunklabError):
    """Group closure exceeded the configured element cap."""


class UnsupportedGroup(DunklabError):
    """The requested operation is not available for this reflection group."""


class NoConvergence(DunklabError):
    """Adaptive quadrature exhausted its refinement budget."""

    def __init__(self, message: str, last_estimate: float = float("nan"),
                 last_delta: float = float("nan")):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.last_delta = last_delta


class SeriesDivergenceGuard(DunklabError):
    """Series evaluation requested outside its guarded argument range."""


class RouteDisagreement(DunklabError):
    """Two independent evaluation routes disagreed beyond tolerance."""


class SingularPair(DunklabError):
    """Kernel evaluation requested at (or too near) a singular pair."""


class RejectedSample(DunklabError):
    """A sampled configuration violated a precondition and was rejected."""


class ExponentViolation(DunklabError):
    """Exponent bookkeeping left the admissible window."""


class EmptyFamily(DunklabError):
    """A ball-family query matched no balls."""


class BetaOutOfRange(DunklabError):
    """Fractional-maximal order outside [0, homogeneous dimension)."""


class DegenerateSplit(DunklabError):
    """Median level-set split left one side with too little measure."""


class ConfigError(DunklabError):
    """Experiment configuration could not be parsed or validated."""
