"""Error taxonomy shared across the package.

Four failure kinds are distinguished so callers (and the CLI) can map them to
exit codes and report text without string-matching messages:

* HypothesisViolation -- the input breaks a mathematical standing assumption
  (vanishing slope, degenerate geometry, inconsistent recursion, ...).
* CapabilityError -- the request exceeds a documented size/budget limit.
* AccuracyError -- a result failed its own certification (refinement
  disagreement, lost sign change, solvability residual too large, ...).
* ConfigError -- malformed experiment configuration.
"""


class AirylayerError(Exception):
    pass


class HypothesisViolation(AirylayerError):
    pass


class CapabilityError(AirylayerError):
    pass


class AccuracyError(AirylayerError):
    pass


class ConfigError(AirylayerError):
    pass


class SolvabilityError(AirylayerError):
    """Fredholm solvability condition violated: the right-hand side of a
    corrector solve has a kernel component beyond tolerance, signalling an
    inconsistent expansion recursion (mis-computed eigenvalue coefficient)."""

