"""Values of P at the Heegner points of discriminant 1-24n, the trace
(24n-1) p(n), and exact recovery of the class polynomial H_n."""
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from flint import acb, acb_poly, arb, ctx

from . import heegner
from .partition import euler_p
from .qseries import EvalContext, PrecisionFailure, eval_P


class RecognitionFailure(PrecisionFailure):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


def _exact_mid_rad(x):
    """midpoint and radius of a real ball as exact Fractions."""
    m, e = x.mid().man_exp()
    mid = Fraction(int(m)) * Fraction(2) ** int(e)
    r, e = x.rad().man_exp()
    rad = Fraction(int(r)) * Fraction(2) ** int(e)
    return mid, rad


def _real_part(ball):
    if isinstance(ball, acb):
        if not ball.imag.contains(0):
            raise RecognitionFailure("imaginary part excludes 0: %s" % ball.imag)
        if float(ball.imag.rad()) >= 0.5:
            raise RecognitionFailure("imaginary radius too large")
        ball = ball.real
    return arb(ball)


def recognize_integer(ball):
    """Unique integer in a real or complex ball (imaginary part must contain 0)."""
    mid, rad = _exact_mid_rad(_real_part(ball))
    if not rad < Fraction(1, 2):
        raise RecognitionFailure("radius %g >= 1/2" % float(rad))
    lo = math.ceil(mid - rad)
    hi = math.floor(mid + rad)
    if lo != hi:
        raise RecognitionFailure("ball around %g holds %d integers" % (float(mid), max(hi - lo + 1, 0)))
    return lo


def recognize_rational(ball, denom_bound):
    """Unique p/q with q <= denom_bound in the ball, via continued fraction
    convergents of the midpoint."""
    mid, rad = _exact_mid_rad(_real_part(ball))
    if not rad < Fraction(1, 2 * denom_bound * denom_bound):
        raise RecognitionFailure("radius %g too large for denominator bound %d" % (float(rad), denom_bound))
    best = mid.limit_denominator(denom_bound)
    if abs(best - mid) > rad:
        raise RecognitionFailure("no rational with denominator <= %d in the ball" % denom_bound)
    return best


def precision_plan(delta, h):
    return 128 + math.ceil(h * math.log2(abs(delta)))


def singular_moduli(n, ectx=None):
    """P(alpha_Q) for each class, ordered like heegner.enumerate_classes(d,
    primitive=False); for fundamental Delta that is the usual class list."""
    d = heegner.discriminant_for(n)
    forms = heegner.enumerate_classes(d, primitive=False)
    bits = ectx.bits if ectx else precision_plan(d.delta, len(forms))
    out = []
    terms = 0
    for f in forms:
        c = EvalContext(bits)
        out.append(eval_P(heegner.cm_point(f, bits).value, c))
        terms = max(terms, c.n_terms)
    if ectx is not None:
        ectx.n_terms = terms
    return out


@dataclass
class TraceResult:
    n: int
    delta: int
    h: int
    numeric_trace: acb
    exact_trace: int
    p_of_n: int
    bits_used: int = 0
    terms_used: int = 0


MAX_ROUNDS = 4


def trace(n, bits=None):
    d = heegner.discriminant_for(n)
    h = heegner.class_number(d, primitive=False)
    bits = bits or precision_plan(d.delta, h)
    last = None
    for _ in range(MAX_ROUNDS):
        ec = EvalContext(bits)
        old = ctx.prec
        ctx.prec = bits + 30
        try:
            vals = singular_moduli(n, ec)
            tot = sum(vals, acb(0))
        finally:
            ctx.prec = old
        try:
            T = recognize_integer(tot)
        except RecognitionFailure as e:
            last = e
            bits *= 2
            continue
        if T % (24 * n - 1):
            raise RecognitionFailure("trace %d not divisible by %d" % (T, 24 * n - 1))
        res = TraceResult(n, d.delta, h, tot, T, T // (24 * n - 1), bits, ec.n_terms)
        res.values = vals
        return res
    raise last


@dataclass
class ClassPolynomial:
    n: int
    delta: int
    rational_coeffs: list  # Fractions, constant term first
    scaled_coeffs: list    # ints, constant term first
    trace: int = 0
    p_of_n: int = 0
    bits_used: int = 0
    terms_used: int = 0

    @property
    def h(self):
        return len(self.scaled_coeffs) - 1

    def to_json_obj(self):
        # leading coefficient first, matching how the polynomials are usually displayed
        return {
            "n": str(self.n),
            "delta": str(self.delta),
            "h": str(self.h),
            "trace": str(self.trace),
            "p": str(self.p_of_n),
            "H_coeffs": [[str(c.numerator), str(c.denominator)] for c in reversed(self.rational_coeffs)],
            "H_scaled": [str(c) for c in reversed(self.scaled_coeffs)],
            "bits_used": str(self.bits_used),
            "terms_used": str(self.terms_used),
        }

    def to_json(self):
        return json.dumps(self.to_json_obj(), sort_keys=True)

    def scaled_by_abs_delta(self):
        """|Delta| H_n(x), the normalization used for reduction mod l."""
        D = abs(self.delta)
        return [c * D for c in self.rational_coeffs]


def class_polynomial(n, bits=None):
    """H_n with exact rational coefficients and the monic integral version
    prod (x - Delta P(alpha_Q))."""
    tr = trace(n, bits)
    d = heegner.discriminant_for(n)
    h = tr.h
    # coefficients of prod (x - r_i) are bounded by prod (1 + |r_i|)
    height = sum(math.log2(1 + abs(d.delta) * float(abs(v).mid())) for v in tr.values)
    bits = max(tr.bits_used, int(height) + 64)
    last = None
    for _ in range(MAX_ROUNDS):
        ec = EvalContext(bits)
        old = ctx.prec
        ctx.prec = bits + 30
        try:
            if bits == tr.bits_used:
                vals = tr.values
                ec.n_terms = tr.terms_used
            else:
                vals = singular_moduli(n, ec)
            roots = [v * d.delta for v in vals]
            poly = acb_poly.from_roots(roots)
            cs = [poly[k] for k in range(h + 1)]
        finally:
            ctx.prec = old
        try:
            scaled = []
            defect = Fraction(0)
            for k, c in enumerate(cs):
                try:
                    scaled.append(recognize_integer(c))
                except RecognitionFailure as e:
                    raise RecognitionFailure("coefficient %d: %s" % (k, e), index=k)
                mid, rad = _exact_mid_rad(_real_part(c))
                defect = max(defect, abs(mid - scaled[-1]) + rad)
        except RecognitionFailure as e:
            last = e
            bits *= 2
            continue
        if scaled[h] != 1:
            raise RecognitionFailure("scaled polynomial not monic")
        rat = [Fraction(scaled[k], d.delta ** (h - k)) for k in range(h + 1)]
        if -rat[h - 1] != tr.exact_trace:
            raise RecognitionFailure("x^(h-1) coefficient disagrees with the trace")
        out = ClassPolynomial(n, d.delta, rat, scaled, tr.exact_trace, tr.p_of_n, bits, ec.n_terms)
        # largest distance from a coefficient ball to its integer
        out.integrality_defect = defect
        return out
    raise last


def check_against_oracle(n):
    tr = trace(n)
    return tr.p_of_n == euler_p(n), tr
