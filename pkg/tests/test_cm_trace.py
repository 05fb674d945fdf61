from fractions import Fraction

import pytest
from flint import acb, arb, ctx

from cmpart import cm_trace, partition
from cmpart.cm_trace import RecognitionFailure


def test_traces():
    assert cm_trace.trace(1).exact_trace == 23
    assert cm_trace.trace(2).exact_trace == 94
    assert cm_trace.trace(3).exact_trace == 213


@pytest.mark.parametrize("n", [4, 7, 10, 24])
def test_trace_oracle(n):
    ok, tr = cm_trace.check_against_oracle(n)
    assert ok, (n, tr.p_of_n, partition.euler_p(n))


def test_H1():
    H = cm_trace.class_polynomial(1)
    assert H.rational_coeffs == [Fraction(-419), Fraction(3592, 23), Fraction(-23), Fraction(1)]
    # monic integral version: roots Delta P = -23 P
    assert H.scaled_coeffs == [5097973, 82616, 529, 1]
    assert H.scaled_by_abs_delta() == [-9637, 3592, -529, 23]


def test_H2():
    H = cm_trace.class_polynomial(2)
    assert H.rational_coeffs[::-1] == [1, -94, Fraction(169659, 47), -65838, Fraction(1092873176, 2209),
                                        Fraction(1454023, 47)]


def test_values_conjugate_pairs():
    tr = cm_trace.trace(2)
    vals = tr.values
    reals = [v for v in vals if v.imag.contains(0)]
    assert len(reals) == 1
    nonreal = [v for v in vals if not v.imag.contains(0)]
    old = ctx.prec
    ctx.prec = 200
    try:
        for v in nonreal:
            assert any(abs(v - w.conjugate()) < 1e-40 for w in nonreal)
    finally:
        ctx.prec = old


def test_recognition():
    assert cm_trace.recognize_integer(arb(22.9999993, 1e-5)) == 23
    assert cm_trace.recognize_integer(acb(arb(7, 1e-9), arb(0, 1e-9))) == 7
    with pytest.raises(RecognitionFailure):
        cm_trace.recognize_integer(arb(0.5, 0.4))
    x = arb(3592) / 23 + arb(0, 1e-8)
    assert cm_trace.recognize_rational(x, 23) == Fraction(3592, 23)


def test_json_roundtrip():
    import json
    H = cm_trace.class_polynomial(2)
    s = H.to_json()
    assert json.dumps(json.loads(s), sort_keys=True) == s
    assert all(isinstance(v, str) for v in json.loads(s)["H_scaled"])
