"""Closed subintervals of [0,1] forming the annotation lower semilattice.

``[0,1]`` is the bottom element (no knowledge); point intervals such as
``[1,1]`` (true) and ``[0,0]`` (false) sit at the top and are mutually
incomparable.  ``a <= b`` in the lattice order means b's interval is
contained in a's, i.e. b carries at least as much information as a.
"""

from __future__ import annotations

from typing import Iterable


class InconsistencyError(Exception):
    """Raised when a least upper bound does not exist (empty intersection)."""

    def __init__(self, message: str, *, subject=None, t=None, rule=None):
        super().__init__(message)
        self.subject = subject
        self.t = t
        self.rule = rule


class Interval(tuple):
    """A closed subinterval of [0,1].  Value type; construction clamps to [0,1]."""

    __slots__ = ()

    def __new__(cls, lower: float, upper: float) -> "Interval":
        lo = 0.0 if lower < 0.0 else (1.0 if lower > 1.0 else float(lower))
        hi = 0.0 if upper < 0.0 else (1.0 if upper > 1.0 else float(upper))
        if lo > hi:
            raise ValueError(f"invalid interval [{lower},{upper}]: lower > upper")
        return tuple.__new__(cls, (lo, hi))

    @property
    def lower(self) -> float:
        return self[0]

    @property
    def upper(self) -> float:
        return self[1]

    def __repr__(self) -> str:
        return f"Interval({self[0]}, {self[1]})"

    def __str__(self) -> str:
        return f"[{self[0]},{self[1]}]"


BOTTOM = Interval(0.0, 1.0)
TRUE = Interval(1.0, 1.0)
FALSE = Interval(0.0, 0.0)


def leq(a: Interval, b: Interval) -> bool:
    """Lattice order: true iff b is contained in a (b refines a)."""
    return a[0] <= b[0] and b[1] <= a[1]


def sup(values: Iterable[Interval]) -> Interval:
    """Least upper bound of a nonempty collection: [max lowers, min uppers].

    Raises InconsistencyError when the intersection is empty, e.g. for
    {[1,1], [0,0]}.
    """
    lo = -1.0
    hi = 2.0
    n = 0
    for v in values:
        if v[0] > lo:
            lo = v[0]
        if v[1] < hi:
            hi = v[1]
        n += 1
    if n == 0:
        raise ValueError("sup of empty collection")
    if lo > hi:
        raise InconsistencyError(f"no upper bound: lowers exceed uppers ([{lo},{hi}])")
    return Interval(lo, hi)


def negate(a: Interval) -> Interval:
    """Complement bound: [1-upper, 1-lower].  Involution up to float rounding."""
    return Interval(1.0 - a[1], 1.0 - a[0])


def parse_interval(text: str) -> Interval:
    """Parse the textual form "[l,u]" with decimal reals."""
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ValueError(f"malformed interval: {text!r}")
    parts = s[1:-1].split(",")
    if len(parts) != 2:
        raise ValueError(f"malformed interval: {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ValueError(f"malformed interval: {text!r}") from exc
    if not (0.0 <= lo and hi <= 1.0):
        raise ValueError(f"interval out of [0,1]: {text!r}")
    return Interval(lo, hi)
