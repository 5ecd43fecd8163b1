"""Extended real numbers with an explicit tag.

Objective values that leave the domain are returned as ``POS_INF`` or
``NEG_INF`` rather than float sentinels, so a stray NaN can never sneak
into a nonmonotone reference window.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import total_ordering


class Kind(enum.IntEnum):
    NEG_INF = -1
    FINITE = 0
    POS_INF = 1


@total_ordering
@dataclass(frozen=True)
class ExtReal:
    kind: Kind
    value: float = 0.0

    @classmethod
    def finite(cls, value) -> "ExtReal":
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"finite ExtReal built from {value!r}")
        return cls(Kind.FINITE, value)

    @property
    def is_finite(self) -> bool:
        return self.kind is Kind.FINITE

    def __float__(self) -> float:
        if self.kind is Kind.FINITE:
            return self.value
        return math.inf if self.kind is Kind.POS_INF else -math.inf

    def _key(self):
        return (int(self.kind), self.value if self.kind is Kind.FINITE else 0.0)

    def __eq__(self, other):
        if isinstance(other, ExtReal):
            return self._key() == other._key()
        if isinstance(other, (int, float)):
            return float(self) == other
        return NotImplemented

    def __lt__(self, other):
        if isinstance(other, ExtReal):
            return self._key() < other._key()
        if isinstance(other, (int, float)):
            return float(self) < other
        return NotImplemented

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if self.kind is Kind.FINITE:
            return f"ExtReal({self.value!r})"
        return "+inf" if self.kind is Kind.POS_INF else "-inf"


POS_INF = ExtReal(Kind.POS_INF)
NEG_INF = ExtReal(Kind.NEG_INF)
