"""Exception taxonomy shared across the package.

The command line front end maps these onto process exit codes:
configuration problems exit with 2, numerical failures with 3.
"""

from __future__ import annotations


class WavekinError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(WavekinError, ValueError):
    """Invalid grid counts, domain bounds, config keys or values."""


class DomainError(WavekinError, ValueError):
    """Evaluation outside the admissible domain (e.g. the cylinder axis)."""


class DegenerateFieldError(WavekinError, ValueError):
    """A field without the structure an algorithm relies on (e.g. a constant
    Hamiltonian where a stratification needs a nonempty value range)."""


class NumericalError(WavekinError, RuntimeError):
    """Loss of positivity, non-convergence of an implicit solve, or a
    conservation audit failure during time stepping."""
