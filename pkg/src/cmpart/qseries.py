"""Exact q-expansions (exponents in steps of 1/24) and certified evaluation.

A QSeries holds sum_k c_k q^(v+k) for the exponents v+k < order, where v is
a rational with denominator dividing 24.  Coefficients are python ints or
Fractions; products go through flint polynomials.
"""
import math
import threading
from fractions import Fraction
from math import gcd, lcm

from flint import acb, acb_poly, arb, ctx, fmpq_series, fmpz_poly, fmpz_series


class PrecisionFailure(ArithmeticError):
    pass


class ConsistencyFailure(RuntimeError):
    """two independent routes disagree."""


class ConfigurationError(RuntimeError):
    pass


def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def _int_or_frac(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


class QSeries:
    __slots__ = ("v", "coeffs")

    def __init__(self, v, coeffs):
        v = _frac(v)
        if (v * 24).denominator != 1:
            raise ValueError("leading exponent must lie in (1/24)Z")
        coeffs = [_int_or_frac(c) for c in coeffs]
        # strip leading zeros but keep at least one slot so order is kept
        i = 0
        while i < len(coeffs) - 1 and coeffs[i] == 0:
            i += 1
        self.v = v + i
        self.coeffs = coeffs[i:]

    # exponents >= order are unknown
    @property
    def order(self):
        return self.v + len(self.coeffs)

    @property
    def leading_exponent(self):
        return self.v

    @property
    def truncation_order(self):
        return self.order

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coeffs[:6]):
            if c:
                terms.append("%s*q^(%s)" % (c, self.v + k))
        return "QSeries(" + " + ".join(terms) + " + O(q^(%s)))" % self.order

    def coef(self, e):
        k = e - self.v
        if k.denominator != 1 if isinstance(k, Fraction) else False:
            return 0
        k = int(k)
        if k < 0:
            return 0
        if k >= len(self.coeffs):
            raise IndexError("exponent %s beyond truncation order %s" % (e, self.order))
        return self.coeffs[k]

    def is_integral(self):
        return all(isinstance(c, int) for c in self.coeffs)

    def truncate(self, order):
        n = order - self.v
        n = int(math.ceil(n))
        if n >= len(self.coeffs):
            return self
        return QSeries(self.v, self.coeffs[:max(n, 1)])

    # -- arithmetic --
    def __neg__(self):
        return QSeries(self.v, [-c for c in self.coeffs])

    def __add__(self, other):
        if not isinstance(other, QSeries):
            other = const(other, self.order)
        d = other.v - self.v
        if d.denominator != 1:
            raise ValueError("cannot add series with incompatible exponent classes")
        v = min(self.v, other.v)
        order = min(self.order, other.order)
        n = int(order - v)
        out = [0] * n
        for s in (self, other):
            off = int(s.v - v)
            for k, c in enumerate(s.coeffs[: n - off]):
                out[off + k] += c
        return QSeries(v, out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        return QSeries(self.v, [c * x for x in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(other)
        v = self.v + other.v
        order = min(self.order + other.v, other.order + self.v)
        n = int(order - v)
        if n <= 0:
            raise PrecisionFailure("product has no known coefficients")
        a, da = _clear(self.coeffs[:n])
        b, db = _clear(other.coeffs[:n])
        p = fmpz_poly(a).mul_low(fmpz_poly(b), n)
        out = [int(x) for x in p.coeffs()] + [0] * (n - p.length())
        if da * db != 1:
            out = [Fraction(x, da * db) for x in out]
        return QSeries(v, out)

    __rmul__ = __mul__

    def inverse(self):
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("series is zero to known order")
        n = len(self.coeffs)
        # flint series ops are silently capped at ctx.cap
        with _cap_lock:
            old = ctx.cap
            ctx.cap = n
            try:
                if self.is_integral() and c0 in (1, -1):
                    s = fmpz_series([1], prec=n) / fmpz_series(self.coeffs, prec=n)
                    out = [int(x) for x in s.coeffs()]
                else:
                    s = fmpq_series([1], prec=n) / fmpq_series(self.coeffs, prec=n)
                    out = [Fraction(int(x.p), int(x.q)) for x in s.coeffs()]
            finally:
                ctx.cap = old
        out += [0] * (n - len(out))
        return QSeries(-self.v, out)

    def __truediv__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(Fraction(1) / other)
        return self * other.inverse()

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        result = const(1, self.order - self.v)  # order matches the relative precision
        base = self
        first = True
        while e:
            if e & 1:
                result = base if first else result * base
                first = False
            e >>= 1
            if e:
                base = base * base
        return result

    def q_deriv(self):
        """q d/dq."""
        return QSeries(self.v, [(self.v + k) * c for k, c in enumerate(self.coeffs)])

    def subs(self, d):
        """q -> q^d."""
        out = [0] * (len(self.coeffs) * d - (d - 1))
        for k, c in enumerate(self.coeffs):
            out[k * d] = c
        # known up to (order)*d; fill the gap after the last coefficient
        out += [0] * (d - 1)
        return QSeries(self.v * d, out)


_cap_lock = threading.Lock()


def _clear(cs):
    den = 1
    for c in cs:
        if isinstance(c, Fraction):
            den = lcm(den, c.denominator)
    if den == 1:
        return [int(c) for c in cs], 1
    return [int(c * den) for c in cs], den


def const(c, order):
    n = int(math.ceil(order))
    return QSeries(0, [c] + [0] * max(n - 1, 0))


def n_terms_below(v, order):
    """number of coefficients with exponent v+k < order"""
    return max(int(math.ceil(_frac(order) - v)), 1)


# -- memo cache ------------------------------------------------------------

_cache = {}
_cache_lock = threading.Lock()


def _memo(key, build):
    s = _cache.get(key)
    if s is not None:
        return s
    s = build()
    with _cache_lock:
        _cache.setdefault(key, s)
    return _cache[key]


def clear_cache():
    with _cache_lock:
        _cache.clear()


# -- base series -----------------------------------------------------------

def sigma(n, k=1):
    s = 0
    r = math.isqrt(n)
    for d in range(1, r + 1):
        if n % d == 0:
            s += d ** k
            e = n // d
            if e != d:
                s += e ** k
    return s


def _divisor_sums(n, k):
    # sigma_k(m) for m < n by sieve
    out = [0] * n
    for d in range(1, n):
        dk = d ** k
        for m in range(d, n, d):
            out[m] += dk
    return out


def _euler_product(n):
    """prod_{m>=1} (1 - q^m) to n terms, by the pentagonal number theorem."""
    c = [0] * n
    k = 0
    c[0] = 1
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        if g1 >= n:
            break
        s = -1 if k % 2 else 1
        c[g1] += s
        g2 = k * (3 * k + 1) // 2
        if g2 < n:
            c[g2] += s
        k += 1
    return c


def eta_series(d, N):
    """eta(d tau) with all exponents < N."""
    if d < 1:
        raise ValueError("d must be >= 1")

    def build():
        v = Fraction(d, 24)
        n = n_terms_below(v, N)
        base = _euler_product((n + d - 1) // d + 1)
        out = [0] * n
        for k, c in enumerate(base):
            if k * d < n:
                out[k * d] = c
        return QSeries(v, out)

    return _memo(("eta", d, N), build)


def eisenstein_series(k, N):
    """Normalized E_k, k in {2,4,6}, exponents < N."""
    const_ = {2: -24, 4: 240, 6: -504}[k]

    def build():
        n = max(int(N), 1)
        s = _divisor_sums(n, k - 1)
        return QSeries(0, [1] + [const_ * s[m] for m in range(1, n)])

    return _memo(("E", k, N), build)


def e2_series(N):
    return eisenstein_series(2, N)


def e2_scaled(d, N):
    """E_2(d tau)."""
    return _memo(("E2", d, N), lambda: eisenstein_series(2, -(-N // d)).subs(d).truncate(N))


def e4_series(N):
    return eisenstein_series(4, N)


def e6_series(N):
    return eisenstein_series(6, N)


def eta_quotient(exps, N):
    """prod eta(d tau)^r_d for exps = {d: r_d}; exponents < N."""
    v = sum(Fraction(d * r, 24) for d, r in exps.items())
    # each factor needs relative precision N - v
    rel = N - v
    out = None
    for d, r in sorted(exps.items()):
        if r == 0:
            continue
        f = eta_series(d, rel + Fraction(d, 24))
        f = f ** r
        out = f if out is None else out * f
    return out.truncate(N)


def delta_series(N):
    """Delta = eta^24 = q - 24 q^2 + ..."""
    return _memo(("Delta", 1, N), lambda: eta_quotient({1: 24}, N))


def j_series(N):
    """j = E4^3/Delta = q^-1 + 744 + 196884 q + ..."""

    def build():
        E4 = e4_series(N + 2)
        D = delta_series(N + 2)
        return ((E4 ** 3) / D).truncate(N)

    return _memo(("j", 1, N), build)


def f_series(N):
    """The weight -2 form F = q^-1 - 10 - 29q - 104q^2 - ... on Gamma_0(6)."""

    def build():
        M = N + 2
        num = e2_series(M) - 2 * e2_scaled(2, M) - 3 * e2_scaled(3, M) + 6 * e2_scaled(6, M)
        den = eta_quotient({1: 2, 2: 2, 3: 2, 6: 2}, M + 1)
        s = (num / den).scale(Fraction(1, 2))
        return s.truncate(N)

    return _memo(("F", 1, N), build)


# -- Hauptmodul on X_0(6) --------------------------------------------------

CUSPS6 = (1, 2, 3, 6)  # cusp 1/c; c=6 is infinity


def ligozat_order(exps, c, N=6):
    """order of vanishing of the eta quotient at the cusp 1/c of X_0(N),
    measured in the local parameter at that cusp."""
    s = Fraction(0)
    for d, r in exps.items():
        s += Fraction(gcd(c, d) ** 2 * r, d)
    return s * Fraction(N, 24 * gcd(c, N // c) * c)


def is_modular_function(exps, N=6):
    if sum(exps.values()) != 0:
        return False
    if sum(d * r for d, r in exps.items()) % 24:
        return False
    if sum((N // d) * r for d, r in exps.items()) % 24:
        return False
    prod_num = 1
    prod_den = 1
    for d, r in exps.items():
        if r > 0:
            prod_num *= d ** r
        else:
            prod_den *= d ** (-r)
    x = prod_num * prod_den
    return math.isqrt(x) ** 2 == x


# first entry is the quotient (eta eta_3/(eta_2 eta_6))^12, second is the
# inverse-type candidate (eta_2 eta_3/(eta eta_6))^12; both fail below.
HAUPTMODUL_CATALOG = (
    {1: 12, 2: -12, 3: 12, 6: -12},
    {1: -12, 2: 12, 3: 12, 6: -12},
    {1: 5, 2: -1, 3: 1, 6: -5},
    {1: -3, 2: 3, 3: 9, 6: -9},
    {1: -4, 2: 8, 3: 4, 6: -8},
)


def valence_check(exps):
    """True iff the eta quotient is a modular function on X_0(6) with a single
    simple pole, located at infinity."""
    if not is_modular_function(exps):
        return False
    orders = {c: ligozat_order(exps, c) for c in CUSPS6}
    if orders[6] != -1:
        return False
    return all(orders[c] >= 0 for c in (1, 2, 3))


def choose_hauptmodul():
    for e in HAUPTMODUL_CATALOG:
        if valence_check(e):
            return dict(e)
    raise ConfigurationError("no catalog eta quotient passes the valence check")


def hauptmodul_exponents():
    return _memo(("haupt-exps", 0, 0), choose_hauptmodul)


def hauptmodul_series(N):
    """t6 = q^-1 + ..., integer coefficients."""
    return _memo(("t6", 1, N), lambda: eta_quotient(hauptmodul_exponents(), N))


# -- text dump ---------------------------------------------------------------

def dump_series(s, fh):
    for k, c in enumerate(s.coeffs):
        e = (s.v + k) * 24
        fh.write("%d/24\t%s\n" % (int(e), c))


def load_series(fh, order=None):
    pairs = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        e, c = line.split("\t")
        num, den = e.split("/")
        assert den == "24"
        pairs.append((Fraction(int(num), 24), Fraction(c)))
    v = pairs[0][0]
    return QSeries(v, [c for _, c in pairs])


# -- certified evaluation ---------------------------------------------------

ENVELOPE_TERMS = 50
SAFETY = 4


def envelope_log_constant(s):
    """log C with |c_k| <= C exp(4 pi sqrt(k+1)), fitted on the first 50 terms
    and inflated by the safety factor."""
    m = -math.inf
    for k, c in enumerate(s.coeffs[:ENVELOPE_TERMS]):
        if c:
            m = max(m, _log_abs(c) - 4 * math.pi * math.sqrt(k + 1))
    if m == -math.inf:
        m = 0.0
    return m + math.log(SAFETY)


def _log_abs(c):
    if isinstance(c, Fraction):
        return _log_abs(c.numerator) - _log_abs(c.denominator)
    c = abs(int(c))
    b = c.bit_length()
    if b < 1000:
        return math.log(c)
    return math.log(c >> (b - 60)) + (b - 60) * math.log(2)


def log_tail_bound(logC, K, logq, shift=0.0, power=0):
    """log of an upper bound for sum_{k>=K} (k+shift)^power C e^{4 pi sqrt(k+1)} |q|^k.

    inf when the geometric ratio bound is not < 1."""
    rho = 2 * math.pi / math.sqrt(K + 1) + logq
    if power:
        if K + shift <= 0:
            return math.inf
        rho += power * math.log((K + 1 + shift) / (K + shift))
    if rho >= 0:
        return math.inf
    first = logC + 4 * math.pi * math.sqrt(K + 1) + K * logq
    if power:
        first += power * math.log(max(K + shift, 1))
    return first - math.log1p(-math.exp(rho))


class EvalContext:
    """bits and n_terms for one evaluation; tail_bound (natural log of the
    certified truncation bound) is filled in after the call."""

    def __init__(self, bits=256, n_terms=None):
        self.bits = bits
        self.n_terms = n_terms
        self.tail_bound = None

    def __repr__(self):
        return "EvalContext(bits=%d, n_terms=%s, log_tail=%s)" % (self.bits, self.n_terms, self.tail_bound)


def _q_of(tau):
    return (2 * acb.pi() * acb(0, 1) * tau).exp()


def _logq_upper(tau):
    # log|q| = -2 pi Im tau, rounded up a little
    y = float(tau.imag.lower())
    return -2 * math.pi * y * (1 - 1e-12)


def needed_terms(logC, logq, bits, extra_power=0, shift=1.0):
    """K (roughly minimal) with tail below 2^-(bits+16)."""
    target = -(bits + 16) * math.log(2)
    K = 16
    while True:
        t = log_tail_bound(logC, K, logq, shift=shift, power=extra_power)
        if t < target:
            return K
        K = int(K * 1.25) + 8
        if K > 10 ** 6:
            raise PrecisionFailure("tail cannot be certified")


def _radius_ball_log(logr):
    r = arb(logr).exp() * arb(1.0001)
    r = arb(0, r.upper())
    return acb(r, r)


def evaluate(s, tau, ectx=None, deriv=False):
    """Value of s at tau (or of q d/dq s when deriv) as an acb ball whose radius
    includes the truncation tail.  ectx.n_terms None means: pick as many terms
    as needed for 2^-bits accuracy, limited by the stored length."""
    if ectx is None:
        ectx = EvalContext()
    old = ctx.prec
    ctx.prec = ectx.bits + 30
    try:
        tau = acb(tau)
        if not tau.imag > 0:
            raise ValueError("Im tau must be positive")
        logq = _logq_upper(tau)
        logC = envelope_log_constant(s)
        power = 1 if deriv else 0
        shift = abs(float(s.v))
        K = ectx.n_terms
        if K is None:
            K = needed_terms(logC, logq, ectx.bits, power, shift)
            if K > len(s.coeffs):
                raise PrecisionFailure("series of length %d too short, need %d terms" % (len(s.coeffs), K))
        K = min(K, len(s.coeffs))
        ltb = log_tail_bound(logC, K, logq, shift=shift, power=power)
        if ltb == math.inf:
            raise PrecisionFailure("tail bound not certifiable at K=%d" % K)
        cs = s.coeffs[:K]
        if deriv:
            cs = [_int_or_frac((s.v + k) * c) for k, c in enumerate(cs)]
        # Horner intermediates are as large as the coefficients themselves
        big = max((abs(Fraction(c).numerator).bit_length() for c in cs), default=0)
        ctx.prec = ectx.bits + 30 + big
        cs = [c if isinstance(c, int) else acb(c.numerator) / c.denominator for c in cs]
        q = _q_of(tau)
        val = acb_poly(cs)(q)
        lead = (2 * acb.pi() * acb(0, 1) * tau * acb(s.v.numerator) / s.v.denominator).exp()
        # |q^v| = exp(-2 pi v Im tau)
        lscale = -2 * math.pi * float(s.v) * float(tau.imag.mid()) + 1e-9 * (1 + abs(float(s.v)))
        val = val * lead + _radius_ball_log(ltb + lscale)
        ectx.n_terms = K
        ectx.tail_bound = ltb + lscale
        return val
    finally:
        ctx.prec = old


def series_for(builder, tau, bits, deriv=False):
    """builder(N) long enough to evaluate at tau to 2^-bits."""
    tau = acb(tau)
    probe = builder(60)
    K = needed_terms(envelope_log_constant(probe), _logq_upper(tau), bits,
                     1 if deriv else 0, abs(float(probe.v)))
    return builder(K + 8)


def _F_for(tau, bits):
    F = series_for(f_series, tau, bits, deriv=True)
    return F, len(F.coeffs)


def eval_F(tau, ectx):
    F, K = _F_for(tau, ectx.bits)
    return evaluate(F, tau, EvalContext(ectx.bits))


def eval_P(tau, ectx=None):
    """P = -(q d/dq) F - F/(2 pi Im tau)."""
    if ectx is None:
        ectx = EvalContext()
    F, K = _F_for(tau, ectx.bits)
    c1 = EvalContext(ectx.bits)
    c2 = EvalContext(ectx.bits)
    old = ctx.prec
    ctx.prec = ectx.bits + 30
    try:
        tau = acb(tau)
        Fv = evaluate(F, tau, c1)
        dF = evaluate(F, tau, c2, deriv=True)
        y = tau.imag
        out = -dF - Fv / (2 * arb.pi() * y)
    finally:
        ctx.prec = old
    ectx.n_terms = max(c1.n_terms, c2.n_terms)
    ectx.tail_bound = max(c1.tail_bound, c2.tail_bound) + math.log(2)
    return out


def serre_derivative_F(tau, ectx):
    """D_{-2}F = q F' + (1/6) E_2 F (Serre derivative in weight -2)."""
    F, K = _F_for(tau, ectx.bits)
    old = ctx.prec
    ctx.prec = ectx.bits + 30
    try:
        tau = acb(tau)
        Fv = evaluate(F, tau, EvalContext(ectx.bits))
        dF = evaluate(F, tau, EvalContext(ectx.bits), deriv=True)
        E2 = eval_e2(tau, ectx.bits)
        return dF + E2 * Fv / 6, Fv
    finally:
        ctx.prec = old


def eval_e2(tau, bits):
    return evaluate(series_for(e2_series, tau, bits), tau, EvalContext(bits))


def e2_star(tau, ectx=None):
    bits = ectx.bits if ectx else 256
    old = ctx.prec
    ctx.prec = bits + 30
    try:
        tau = acb(tau)
        return eval_e2(tau, bits) - 3 / (arb.pi() * tau.imag)
    finally:
        ctx.prec = old


def eval_P_split(tau, e2s, ectx=None):
    """P = -D_{-2}F + (1/6) e2s F with a supplied value e2s standing in for E_2*."""
    if ectx is None:
        ectx = EvalContext()
    D, Fv = serre_derivative_F(tau, ectx)
    old = ctx.prec
    ctx.prec = ectx.bits + 30
    try:
        return -D + e2s * Fv / 6
    finally:
        ctx.prec = old


def eval_modular(name, tau, bits=256):
    """Evaluate one of the named base series (j, t6, E4, E6) at tau."""
    builders = {"j": j_series, "t6": hauptmodul_series, "E4": e4_series, "E6": e6_series}
    return evaluate(series_for(builders[name], tau, bits), tau, EvalContext(bits))
