"""Objective values with a distinguished WORST marker.

An objective value is either a finite ``float`` or :data:`WORST`.  WORST ranks
above every finite value and never takes part in arithmetic; it encodes a
violated constraint (typically an unstable closed loop).
"""

import math

__all__ = ["WORST", "is_worst", "normalize", "rank", "better", "not_worse", "to_text", "from_text"]


class _Worst:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "WORST"

    def __reduce__(self):
        # keep the singleton across pickling (process pools)
        return (_Worst, ())


WORST = _Worst()


def is_worst(v) -> bool:
    return v is WORST


def normalize(v):
    """Map an objective return to a float or WORST; NaN and +inf become WORST."""
    if v is WORST:
        return WORST
    v = float(v)
    if math.isnan(v) or v == math.inf:
        return WORST
    return v


def rank(v):
    """Sort key implementing the total order: finite values ascending, then WORST."""
    return (1, 0.0) if v is WORST else (0, v)


def better(a, b) -> bool:
    """True when ``a`` ranks strictly ahead of ``b``."""
    return rank(a) < rank(b)


def not_worse(a, b) -> bool:
    return rank(a) <= rank(b)


def to_text(v) -> str:
    return "inf" if v is WORST else repr(float(v))


def from_text(s: str):
    s = s.strip()
    if s == "inf":
        return WORST
    return float(s)
