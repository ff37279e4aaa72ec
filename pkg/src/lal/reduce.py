"""Term-level reduction: the independent semantic oracle.

The strategy is the deterministic machine order of the kernel
(leftmost-outermost, with tensor patterns forcing just the argument
spine positions they inspect).  `step` performs one contraction in
that order; `reduce_term` iterates it efficiently without rescanning
from the root.

The kernel is selected at import: the Cython-compiled twin
`lal._termkernel_c` when the extension was built, else the pure-Python
`lal._termkernel`.  Both are compiled from the same source file, so
the choice can never change results, only speed.
"""

from __future__ import annotations

from lal import _termkernel as _pure

try:
    from lal import _termkernel_c as _fast  # compiled twin, optional

    _k = _fast
    KERNEL = "compiled"
except ImportError:  # pragma: no cover - depends on the build
    _fast = None
    _k = _pure
    KERNEL = "pure"

DEFAULT_FUEL = 1_000_000


class FuelExhausted(RuntimeError):
    """Raised when the step budget runs out; carries the last term."""

    def __init__(self, term, steps: int):
        super().__init__(f"no normal form within {steps} contractions")
        self.term = term
        self.steps = steps


def step(t):
    """One contraction, or None if t is normal."""
    return _k.step(t)


def normalize(t, fuel: int = DEFAULT_FUEL):
    """Reduce t, returning (term, steps, normal)."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    return _k.normalize(t, fuel)


def reduce_term(t, fuel: int = DEFAULT_FUEL):
    """Normal form of t; raises FuelExhausted (with the last term) otherwise."""
    out, steps, normal = normalize(t, fuel)
    if not normal:
        raise FuelExhausted(out, steps)
    return out


def reduce_count(t, fuel: int = DEFAULT_FUEL):
    """Normal form and the number of contractions taken."""
    out, steps, normal = normalize(t, fuel)
    if not normal:
        raise FuelExhausted(out, steps)
    return out, steps


def trace(t, limit: int = 10_000):
    """The sequence of terms produced by iterating `step`, t first."""
    out = [t]
    for _ in range(limit):
        t2 = _k.step(t)
        if t2 is None:
            return out
        out.append(t2)
        t = t2
    raise FuelExhausted(t, limit)


def kernels():
    """Mapping of kernel name to module, for the comparison benchmark."""
    out = {"pure": _pure}
    if _fast is not None:
        out["compiled"] = _fast
    return out
