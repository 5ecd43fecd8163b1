import math

import pytest

from mpga.extended import NEG_INF, POS_INF, ExtReal, Kind


def test_ordering():
    assert NEG_INF < ExtReal.finite(-1e300) < ExtReal.finite(0.0) < ExtReal.finite(1e300) < POS_INF
    assert max([ExtReal.finite(2.0), POS_INF, NEG_INF]) is POS_INF


def test_compare_with_numbers():
    assert ExtReal.finite(2.5) == 2.5
    assert POS_INF > 1e308
    assert NEG_INF < -1e308
    assert float(POS_INF) == math.inf and float(NEG_INF) == -math.inf


def test_finite_rejects_nonfinite():
    for bad in (math.inf, -math.inf, math.nan):
        with pytest.raises(ValueError):
            ExtReal.finite(bad)


def test_hash_and_kind():
    assert len({ExtReal.finite(1.0), ExtReal.finite(1.0), POS_INF}) == 2
    assert POS_INF.kind is Kind.POS_INF and not POS_INF.is_finite
    assert ExtReal.finite(3).is_finite
