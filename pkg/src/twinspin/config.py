"""Numerical tolerances shared by every module.

The defaults can be overridden for a block of code with :func:`override`,
which is how the CLI ``--tolerance`` flag is applied.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from typing import Iterator


@dataclasses.dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-10  # identities, norms, traces, reconstruction
    spectral: float = 1e-9  # smallest admissible eigenvalue is -spectral
    geometric: float = 1e-9  # frame orthogonality and unit directions
    coefficient: float = 1e-9  # decomposition coefficients treated as zero
    probability: float = 1e-12  # negative probabilities clamped to zero
    ray: float = 1e-6  # direction deduplication in KS sets


DEFAULT = Tolerances()

_current: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "twinspin_tolerances", default=DEFAULT
)


def tol() -> Tolerances:
    """Return the tolerances active in the current context."""
    return _current.get()


@contextlib.contextmanager
def override(**changes: float) -> Iterator[Tolerances]:
    """Temporarily replace some tolerance fields.

    >>> with override(algebraic=1e-8) as t:
    ...     t.algebraic
    1e-08
    """
    new = dataclasses.replace(_current.get(), **changes)
    token = _current.set(new)
    try:
        yield new
    finally:
        _current.reset(token)
