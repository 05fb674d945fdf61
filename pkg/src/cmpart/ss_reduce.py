"""Supersingular points of X_0(6) mod l, reduction of the class polynomials,
and the mod-l congruences for p(n) built from reduced CM values.

F_{l^2} is modelled as F_l[x]/(x^2 - r), r the least positive non-residue.
Reductions mod a prime lambda above l are taken on integer (or O_K-integral)
polynomials, so no number field embedding is ever fixed beyond the choice
of omega mod lambda.
"""
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from flint import acb, arb, ctx, nmod_poly

from . import brandt as _brandt
from . import heegner, modpoly, qseries
from .cm_trace import RecognitionFailure, class_polynomial, precision_plan, recognize_integer
from .heegner import InvalidInput, kronecker
from .partition import euler_p
from .qseries import ConsistencyFailure, EvalContext, eval_P


# ---------------------------------------------------------------------------
# F_{l^2}

class FiniteFieldModel:
    def __init__(self, ell):
        if not heegner.is_prime(ell) or ell < 3:
            raise InvalidInput("ell must be an odd prime")
        self.ell = ell
        r = 2
        while pow(r, (ell - 1) // 2, ell) == 1:
            r += 1
        self.r = r

    def __repr__(self):
        return "F_%d[x]/(x^2-%d)" % (self.ell, self.r)

    def __call__(self, a, b=0):
        return (a % self.ell, b % self.ell)

    def elements(self):
        p = self.ell
        return [(a, b) for b in range(p) for a in range(p)]

    def add(self, x, y):
        p = self.ell
        return ((x[0] + y[0]) % p, (x[1] + y[1]) % p)

    def sub(self, x, y):
        p = self.ell
        return ((x[0] - y[0]) % p, (x[1] - y[1]) % p)

    def neg(self, x):
        return ((-x[0]) % self.ell, (-x[1]) % self.ell)

    def mul(self, x, y):
        p = self.ell
        return ((x[0] * y[0] + self.r * x[1] * y[1]) % p, (x[0] * y[1] + x[1] * y[0]) % p)

    def norm(self, x):
        return (x[0] * x[0] - self.r * x[1] * x[1]) % self.ell

    def inv(self, x):
        n = self.norm(x)
        if n == 0:
            raise ZeroDivisionError("inverse of 0 in F_l^2")
        ni = pow(n, -1, self.ell)
        return (x[0] * ni % self.ell, (-x[1]) * ni % self.ell)

    def pow(self, x, e):
        out = (1, 0)
        while e:
            if e & 1:
                out = self.mul(out, x)
            x = self.mul(x, x)
            e >>= 1
        return out

    def frob(self, x):
        # x^l = a - b sqrt(r)
        return (x[0], (-x[1]) % self.ell)

    def in_prime_field(self, x):
        return x[1] == 0

    def is_square(self, x):
        n = self.norm(x)
        return n == 0 or pow(n, (self.ell - 1) // 2, self.ell) == 1

    def sqrt(self, x):
        for y in self.elements():
            if self.mul(y, y) == x:
                return y
        return None

    def from_rational(self, c):
        c = Fraction(c)
        p = self.ell
        if c.denominator % p == 0:
            raise ZeroDivisionError("denominator divisible by %d" % p)
        return (c.numerator * pow(c.denominator, -1, p) % p, 0)

    # polynomials: lists of elements, constant term first
    def peval(self, poly, x):
        acc = (0, 0)
        for c in reversed(poly):
            acc = self.add(self.mul(acc, x), c)
        return acc

    def pdivide_root(self, poly, x):
        """poly / (X - x) by synthetic division; returns (quotient, remainder)."""
        n = len(poly) - 1
        q = [None] * n
        acc = poly[n]
        for k in range(n - 1, -1, -1):
            q[k] = acc
            acc = self.add(poly[k], self.mul(acc, x))
        return q, acc

    def roots(self, poly):
        """{root: multiplicity} in F_{l^2}."""
        poly = list(poly)
        while len(poly) > 1 and poly[-1] == (0, 0):
            poly.pop()
        out = {}
        for x in self.elements():
            m = 0
            while len(poly) > 1:
                q, r = self.pdivide_root(poly, x)
                if r != (0, 0):
                    break
                poly = q
                m += 1
            if m:
                out[x] = m
        return out

    def label(self, x):
        a, b = x
        if b == 0:
            return str(a)
        return "%d+%d*s" % (a, b) if a else "%d*s" % b


# ---------------------------------------------------------------------------
# supersingular j-invariants by point counting

def _curve_for_j(F, j):
    p = F.ell
    if j == F(0):
        return F(0), F(1)
    if j == F(1728):
        return F(1), F(0)
    k = F.sub(F(1728), j)
    a = F.mul(F(3), F.mul(j, k))
    b = F.mul(F(2), F.mul(j, F.mul(k, k)))
    return a, b


def _char_sum(F, a, b):
    """sum over x in F_{l^2} of the quadratic character of x^3 + a x + b."""
    p = F.ell
    s = 0
    for x in F.elements():
        y = F.add(F.mul(F.add(F.mul(x, x), a), x), b)
        n = F.norm(y)
        if n:
            s += 1 if pow(n, (p - 1) // 2, p) == 1 else -1
    return s


def is_supersingular(F, j):
    """#E(F_{l^2}) = l^2 + 1 - t with t = 0 mod l."""
    a, b = _curve_for_j(F, j)
    t = -_char_sum(F, a, b)
    return t % F.ell == 0


def supersingular_js(ell):
    F = FiniteFieldModel(ell)
    return [j for j in F.elements() if is_supersingular(F, j)]


def eichler_deuring_count(ell):
    """number of supersingular j's: floor(l/12) + (0, 1, 1, 2) by l mod 12."""
    return ell // 12 + {1: 0, 5: 1, 7: 1, 11: 2}[ell % 12]


# ---------------------------------------------------------------------------
# j as a rational function of t6

_jt = {}


def j_in_t6(K=80):
    """integer polynomials (A, Bd), constant term first, with j = A(t6)/Bd(t6);
    deg A = 12, deg Bd = 11, both monic."""
    if "AB" in _jt:
        return _jt["AB"]
    N = K + 20
    t = qseries.hauptmodul_series(N)
    J = qseries.j_series(N)
    tp = [qseries.const(1, N)]
    for _ in range(12):
        tp.append(tp[-1] * t)
    # A(t) - J Bd(t) = 0 ; unknowns a_0..a_11, b_0..b_10 ; a_12 = b_11 = 1
    cols = [("a", i) for i in range(12)] + [("b", i) for i in range(11)]
    series = {}
    for kind, i in cols:
        series[(kind, i)] = tp[i] if kind == "a" else (J * tp[i]).scale(-1)
    rhs = tp[12] - J * tp[11]
    M, b = [], []
    for e in range(-12, K):
        M.append([modpoly._coef0(series[c], e) for c in cols])
        b.append(-modpoly._coef0(rhs, e))
    sol = modpoly._solve_integer(M, b)
    A = sol[:12] + [1]
    Bd = sol[12:] + [1]
    _jt["AB"] = (A, Bd)
    return A, Bd


@dataclass
class SupersingularPoint:
    ell: int
    t: tuple            # t6 value in F_{l^2}
    j_invariant: tuple
    point_id: int
    weight: int         # #Aut(E, C)
    frobenius_partner: int = -1


def supersingular_points_X06(ell, check_brandt=True):
    """supersingular (E, C) on X_0(6) mod l as t6-values: the roots of
    A(t) - j0 Bd(t) over the supersingular j0."""
    F = FiniteFieldModel(ell)
    A, Bd = j_in_t6()
    Af = [F.from_rational(c) for c in A]
    Bf = [F.from_rational(c) for c in Bd] + [F(0)]
    pts = []
    for j0 in supersingular_js(ell):
        poly = [F.sub(a, F.mul(j0, b)) for a, b in zip(Af, Bf)]
        autE = 6 if j0 == F(0) else 4 if j0 == F(1728) else 2
        for t, e in sorted(F.roots(poly).items()):
            if autE % e:
                raise ConsistencyFailure("ramification %d over j=%s" % (e, F.label(j0)))
            pts.append(SupersingularPoint(ell, t, j0, len(pts), autE // e))
    index = {p.t: p.point_id for p in pts}
    for p in pts:
        p.frobenius_partner = index.get(F.frob(p.t), -1)
        if p.frobenius_partner < 0:
            raise ConsistencyFailure("supersingular set not Frobenius stable")
    mass = sum(Fraction(1, p.weight) for p in pts)
    if mass != Fraction(ell - 1, 2):
        raise ConsistencyFailure("geometric mass %s != %s" % (mass, Fraction(ell - 1, 2)))
    if check_brandt:
        s = _brandt.classes_for(ell).s
        if s != len(pts):
            raise ConsistencyFailure("%d supersingular points but %d ideal classes" % (len(pts), s))
    return pts


# ---------------------------------------------------------------------------
# reduction of class polynomials

@dataclass
class Factorization:
    ell: int
    unit: int
    factors: list   # [(coeffs constant-first, multiplicity)]

    def degrees(self):
        return sorted(len(f) - 1 for f, e in self.factors for _ in range(e))

    def pretty(self):
        def sym(c):
            return c if c <= self.ell // 2 else c - self.ell
        parts = []
        for f, e in self.factors:
            terms = []
            for k in range(len(f) - 1, -1, -1):
                c = sym(f[k])
                if c == 0:
                    continue
                mon = "x^%d" % k if k > 1 else ("x" if k == 1 else "")
                coef = "" if (abs(c) == 1 and k > 0) else str(abs(c))
                terms.append(("-" if c < 0 else "+") + coef + mon)
            s = "".join(terms).lstrip("+")
            parts.append("(%s)%s" % (s, "^%d" % e if e > 1 else ""))
        return "%d%s" % (self.unit, "".join(parts))


def factor_mod(coeffs, ell):
    """factor a rational polynomial (constant term first, denominators prime
    to l) over F_l."""
    p = ell
    red = []
    for c in coeffs:
        c = Fraction(c)
        if c.denominator % p == 0:
            raise InvalidInput("denominator divisible by %d" % p)
        red.append(c.numerator * pow(c.denominator, -1, p) % p)
    P = nmod_poly(red, p)
    unit, facs = P.factor()
    out = [([int(x) for x in f.coeffs()], int(e)) for f, e in facs]
    out.sort(key=lambda fe: (len(fe[0]), fe[0]))
    return Factorization(ell, int(unit), out)


def scaled_class_polynomial(n, ell, bits=None):
    """|Delta| H_n when l does not divide Delta, else the monic integral
    prod (x - Delta P(alpha_Q))."""
    cp = class_polynomial(n, bits)
    if cp.delta % ell:
        return cp.scaled_by_abs_delta(), cp
    return [Fraction(c) for c in cp.scaled_coeffs], cp


def reduce_class_polynomial(n, ell, bits=None):
    coeffs, _ = scaled_class_polynomial(n, ell, bits)
    return factor_mod(coeffs, ell)


# ---------------------------------------------------------------------------
# joint reduction of (t6(alpha_Q), Delta P(alpha_Q))

def _cm_values(n, bits):
    d = heegner.discriminant_for(n)
    forms = heegner.enumerate_classes(d, primitive=False)
    ts, ps = [], []
    for f in forms:
        tau = heegner.cm_point(f, bits + 40).value
        ts.append(qseries.eval_modular("t6", tau, bits))
        ps.append(eval_P(tau, EvalContext(bits)) * d.delta)
    return d, forms, ts, ps


def _recognize_OK(c, delta):
    """c = u + v omega with omega = (1 + sqrt(delta))/2 (delta odd)."""
    sq = arb(-delta).sqrt()
    v = recognize_integer(acb(2 * c.imag / sq))
    u = recognize_integer(acb(c.real - arb(v) / 2))
    return u, v


def _poly_OK(roots, delta):
    P = acb_poly_from_roots(roots)
    return [_recognize_OK(P[k], delta) for k in range(len(roots) + 1)]


def acb_poly_from_roots(roots):
    from flint import acb_poly
    return acb_poly.from_roots(roots)


def omega_mod(F, delta):
    """a root of x^2 - x + (1 - delta)/4 in F_{l^2}, the smaller one in the
    (b, a) order.  This is the choice of lambda above l."""
    c = F.from_rational(Fraction(1 - delta, 4))
    cands = [x for x in F.elements()
             if F.add(F.sub(F.mul(x, x), x), c) == (0, 0)]
    if not cands:
        raise ConsistencyFailure("omega has no root mod %d" % F.ell)
    return min(cands, key=lambda x: (x[1], x[0]))


@dataclass
class ReductionReport:
    n: int
    ell: int
    delta: int
    factorization: Factorization
    points: list
    v_P: list            # per supersingular point, element of F_{l^2} or None
    h_fiber: list
    shifts: tuple
    verdict_ss_trace: bool = None
    verdict_dot_product: bool = None
    pairing: tuple = None
    extra: dict = field(default_factory=dict)

    def to_json_obj(self):
        return {
            "n": str(self.n),
            "ell": str(self.ell),
            "delta": str(self.delta),
            "factorization": [[[str(c) for c in f], str(e)] for f, e in self.factorization.factors],
            "unit": str(self.factorization.unit),
            "t_values": [[str(p.t[0]), str(p.t[1])] for p in self.points],
            "v_P": [None if v is None else [str(v[0]), str(v[1])] for v in self.v_P],
            "h_fiber": [str(h) for h in self.h_fiber],
            "verdict_ss_trace": self.verdict_ss_trace,
            "verdict_dot_product": self.verdict_dot_product,
        }

    def to_json(self):
        return json.dumps(self.to_json_obj(), sort_keys=True)


def _reduce_OK_poly(F, poly, w):
    return [F.add(F(u), F.mul(F(v), w)) for u, v in poly]


def _match(F, tmult, pmult, shifted, limit=2):
    """pair the reductions of t6 and P across the CM points: find multisets
    of pairs (t, P) with the given t- and P-marginals such that for each
    shift c the multiset {t + c P} equals shifted[c].  Up to `limit`
    solutions are returned, each as {t: sorted list of P}."""
    slots = sorted(t for t, m in tmult.items() for _ in range(m))
    cs = sorted(shifted)
    remaining = dict(pmult)
    used = {c: {} for c in cs}
    assign = []
    sols = []

    def rec(k):
        if len(sols) >= limit:
            return
        if k == len(slots):
            if all(used[c] == shifted[c] for c in cs):
                sol = {}
                for t, P in zip(slots, assign):
                    sol.setdefault(t, []).append(P)
                sols.append({t: sorted(v) for t, v in sol.items()})
            return
        t = slots[k]
        for P in sorted(remaining):
            if not remaining[P]:
                continue
            # identical t slots take nondecreasing P, which removes permutations
            if k and slots[k - 1] == t and P < assign[-1]:
                continue
            rs = [(c, F.add(t, F.mul(F(c), P))) for c in cs]
            if any(used[c].get(r, 0) + 1 > shifted[c].get(r, 0) for c, r in rs):
                continue
            remaining[P] -= 1
            for c, r in rs:
                used[c][r] = used[c].get(r, 0) + 1
            assign.append(P)
            rec(k + 1)
            assign.pop()
            for c, r in rs:
                used[c][r] -= 1
                if not used[c][r]:
                    del used[c][r]
            remaining[P] += 1

    rec(0)
    return sols


SHIFT_SETS = ((1, 2), (1, 2, 3), (1, 2, 3, 4), (1, 2, 3, 4, 5, 6))


def fiber_match(n, ell, bits=None):
    """per supersingular point: how many CM points of discriminant Delta_n
    reduce to it, and the reductions of P carried by those CM points."""
    d = heegner.discriminant_for(n)
    kd = kronecker(d.delta, ell)
    if kd == 1:
        raise InvalidInput("%d splits in Q(sqrt(%d))" % (ell, d.delta))
    F = FiniteFieldModel(ell)
    pts = supersingular_points_X06(ell)
    index = {p.t: p.point_id for p in pts}
    h = heegner.class_number(d, primitive=False)
    bits = bits or precision_plan(d.delta, h) + 64
    max_shift = max(max(cs) for cs in SHIFT_SETS)
    for _ in range(5):
        old = ctx.prec
        ctx.prec = bits + 40
        try:
            _, forms, ts, ps = _cm_values(n, bits)
            height = sum(math.log2(2 + float(abs(t).mid())) + math.log2(2 + max_shift * float(abs(p).mid()))
                         for t, p in zip(ts, ps))
            if height + 64 > bits:
                bits = int(height) + 128
                continue
            try:
                G0 = _poly_OK(ts, d.delta)
                GP = _poly_OK(ps, d.delta)
                cache = {c: _poly_OK([t + c * p for t, p in zip(ts, ps)], d.delta)
                         for c in range(1, max_shift + 1)}
            except RecognitionFailure:
                bits *= 2
                continue
        finally:
            ctx.prec = old
        break
    else:
        raise RecognitionFailure("could not recognize the joint CM polynomials")
    w = omega_mod(F, d.delta)
    tmult = F.roots(_reduce_OK_poly(F, G0, w))
    pmult = F.roots(_reduce_OK_poly(F, GP, w))
    if sum(tmult.values()) != h or sum(pmult.values()) != h:
        raise ConsistencyFailure("CM values do not all reduce into F_{l^2}")
    for t in tmult:
        if t not in index:
            raise ConsistencyFailure("CM point reduces to non-supersingular t6 = %s" % F.label(t))
    sols = []
    for shifts in SHIFT_SETS:
        shifts = tuple(c for c in shifts if c % ell)
        shifted = {c: F.roots(_reduce_OK_poly(F, cache[c], w)) for c in shifts}
        sols = _match(F, tmult, pmult, shifted)
        if len(sols) == 1:
            break
    if len(sols) != 1:
        raise ConsistencyFailure("(t6, P) pairing %s" % ("ambiguous" if sols else "impossible"))
    sol = sols[0]
    # P~: P(alpha) mod lambda when l does not divide Delta, else Delta P
    scale = F.inv(F.from_rational(d.delta)) if d.delta % ell else F(1)
    v_P = [None] * len(pts)
    h_fiber = [0] * len(pts)
    fibers = [[] for _ in pts]
    for t, Ps in sol.items():
        i = index[t]
        h_fiber[i] = len(Ps)
        fibers[i] = [F.mul(P, scale) for P in Ps]
        if len(set(fibers[i])) == 1:
            v_P[i] = fibers[i][0]
    fac = reduce_class_polynomial(n, ell)
    rep = ReductionReport(n, ell, d.delta, fac, pts, v_P, h_fiber, shifts)
    rep.extra["omega"] = w
    rep.extra["fibers"] = fibers
    rep.extra["well_defined"] = all(len(set(f)) <= 1 for f in fibers)
    return rep


def _pairing(F, h, v):
    acc = (0, 0)
    for a, b in zip(h, v):
        if a and b is not None:
            acc = F.add(acc, F.mul(F(a), b))
    return acc


def _fiber_sum(F, rep):
    """sum over supersingular points of h(E,C) P~(E,C); where P~ is not
    constant on a fiber the individual reductions are summed instead."""
    acc = (0, 0)
    for i, vals in enumerate(rep.extra["fibers"]):
        if rep.v_P[i] is not None:
            acc = F.add(acc, F.mul(F(rep.h_fiber[i]), rep.v_P[i]))
        else:
            for v in vals:
                acc = F.add(acc, v)
    return acc


def verify_ss_trace(n, ell, report=None):
    """p(n) = -(1/Delta) sum h(E,C) P~(E,C) mod l."""
    d = heegner.discriminant_for(n)
    if kronecker(d.delta, ell) != -1:
        raise InvalidInput("need (Delta/l) = -1, got %d" % kronecker(d.delta, ell))
    rep = report or fiber_match(n, ell)
    F = FiniteFieldModel(ell)
    S = _fiber_sum(F, rep)
    if not F.in_prime_field(S):
        rep.verdict_ss_trace = False
        return False, rep
    val = (-S[0] * pow(d.delta, -1, ell)) % ell
    rep.pairing = S
    rep.extra["p_mod_l_ss"] = val
    rep.verdict_ss_trace = (val == euler_p(n) % ell)
    return rep.verdict_ss_trace, rep


# ---------------------------------------------------------------------------
# Brandt side: matching ideal classes with supersingular points

HECKE_PRIMES = (5, 7, 11)


def hecke_adjacency(ell, p, pts=None):
    """A[s][t] = multiplicity of t6(E') as a root of Phi^(6)_p(t6(E), Y) mod l."""
    F = FiniteFieldModel(ell)
    pts = pts or supersingular_points_X06(ell)
    eq = modpoly.level6_modular_equation(p, K=120)
    index = {q.t: q.point_id for q in pts}
    dy = eq.degree_y
    A = [[0] * len(pts) for _ in pts]
    for q in pts:
        tp = [F(1)]
        for _ in range(eq.degree_x):
            tp.append(F.mul(tp[-1], q.t))
        poly = [F(0)] * (dy + 1)
        for (i, j), c in eq.coeffs.items():
            poly[j] = F.add(poly[j], F.mul(F(c), tp[i]))
        rts = F.roots(poly)
        if sum(rts.values()) != p + 1:
            raise ConsistencyFailure("T_%d neighbours of a supersingular point leave F_{l^2}" % p)
        for t, m in rts.items():
            if t not in index:
                raise ConsistencyFailure("T_%d neighbour is not supersingular" % p)
            A[q.point_id][index[t]] = m
    return A


def class_point_bijections(ell, primes=None, limit=64):
    """bijections sigma: ideal classes -> supersingular points with
    B_p[i][j] = A_p[sigma i][sigma j] for the chosen Hecke primes p."""
    cl = _brandt.classes_for(ell)
    pts = supersingular_points_X06(ell)
    primes = primes or [p for p in HECKE_PRIMES if p != ell][:2]
    Bs = [_brandt.brandt_matrix(cl, p).as_ints() for p in primes]
    As = [hecke_adjacency(ell, p, pts) for p in primes]
    s = cl.s
    out = []
    sigma = [None] * s
    used = [False] * s

    def ok(i):
        for Bm, Am in zip(Bs, As):
            for k in range(i + 1):
                if Bm[i][k] != Am[sigma[i]][sigma[k]] or Bm[k][i] != Am[sigma[k]][sigma[i]]:
                    return False
        return True

    def rec(i):
        if len(out) >= limit:
            return
        if i == s:
            out.append(list(sigma))
            return
        for t in range(s):
            if used[t]:
                continue
            sigma[i] = t
            if ok(i):
                used[t] = True
                rec(i + 1)
                used[t] = False
        sigma[i] = None

    rec(0)
    return out


def reconcile(ell, delta, h_fiber, pts=None):
    """compare the quaternionic oriented counts with the geometric fiber
    counts under every Hecke-compatible class/point bijection.  Returns a
    list of (signature, sigma, relation) for the matches found, where
    relation is 'equal' (u = h) or 'frobenius-sum' (u = h + h o Frob)."""
    cl = _brandt.classes_for(ell)
    pts = pts or supersingular_points_X06(ell)
    counts = _brandt.oriented_counts(cl, delta)
    frob = [p.frobenius_partner for p in pts]
    out = []
    for sigma in class_point_bijections(ell):
        for sig, u in sorted(counts.items()):
            upt = [0] * len(pts)
            for i, t in enumerate(sigma):
                upt[t] = u[i]
            if upt == list(h_fiber):
                out.append((sig, sigma, "equal"))
            elif upt == [h_fiber[t] + h_fiber[frob[t]] for t in range(len(pts))]:
                out.append((sig, sigma, "frobenius-sum"))
    return out


def verify_dot_product(n, ell, report=None):
    """p(n) = -<u, v_P>/(c Delta) mod l with u the Brandt-side oriented
    embedding counts carried to the supersingular points by a Hecke
    compatible bijection, and c the measured constant relating u to the
    fiber counts (c = 1 for u = h, c = 2 for u = h + h o Frob).
    The verdict with c = 1 is kept in extra['literal']."""
    d = heegner.discriminant_for(n)
    if kronecker(d.delta, ell) != -1:
        raise InvalidInput("need (Delta/l) = -1")
    rep = report or fiber_match(n, ell)
    F = FiniteFieldModel(ell)
    if sum(rep.h_fiber) != heegner.class_number(d, primitive=False):
        raise ConsistencyFailure("fiber counts do not add up to h_Delta")
    matches = reconcile(ell, d.delta, rep.h_fiber, rep.points)
    rep.extra["reconciliations"] = len(matches)
    if not matches:
        raise ConsistencyFailure("no Hecke-compatible bijection relates u to the fiber counts")
    rels = sorted({rel for _, _, rel in matches})
    if len(rels) != 1:
        raise ConsistencyFailure("ambiguous normalization: %s" % rels)
    c = 1 if rels[0] == "equal" else 2
    if not rep.extra.get("well_defined", True):
        raise ConsistencyFailure("P~ is not constant on some fiber")
    v = [x if x is not None else F(0) for x in rep.v_P]
    # the Heegner set is only stable under Gal(H/K); its complex conjugate
    # reduces to the Frobenius partners with conjugated values of P~, so the
    # Frobenius half of u pairs with v o Frob conjugated
    vbar = [F.frob(v[q.frobenius_partner]) for q in rep.points]
    cl = _brandt.classes_for(ell)
    counts = _brandt.oriented_counts(cl, d.delta)
    want = euler_p(n) % ell
    ok = lit = True
    values, literal = set(), set()
    for sig, sigma, rel in matches:
        u = [0] * len(rep.points)
        for i, t in enumerate(sigma):
            u[t] = counts[sig][i]
        L = _pairing(F, u, v)
        if rel == "equal":
            S = L
        else:
            # u - h is the Frobenius half of u
            rest = [a - b for a, b in zip(u, rep.h_fiber)]
            S = F.add(_pairing(F, rep.h_fiber, v), _pairing(F, rest, vbar))
        values.add(S)
        literal.add(L)
        ok &= F.in_prime_field(S) and (-S[0] * pow(c * d.delta, -1, ell)) % ell == want
        lit &= F.in_prime_field(L) and (-L[0] * pow(d.delta, -1, ell)) % ell == want
    rep.extra["relation"] = rels[0]
    rep.extra["normalization"] = c
    rep.extra["dot_values"] = sorted(values)
    rep.extra["literal_values"] = sorted(literal)
    rep.extra["literal"] = lit
    rep.verdict_dot_product = ok
    return ok, rep


# ---------------------------------------------------------------------------
# ramified primes

def ramified_grouping_check(n, ell):
    d = heegner.discriminant_for(n)
    if d.delta % ell:
        raise InvalidInput("%d does not divide %d" % (ell, d.delta))
    F = FiniteFieldModel(ell)
    rep = fiber_match(n, ell)
    pts = rep.points
    fac = rep.factorization
    # (a) every root of H^_n mod l is the reduction of Delta P at a supersingular point
    roots_ok = all(len(f) - 1 <= 2 for f, _ in fac.factors)
    T = (24 * n - 1) * euler_p(n)
    vT = 0
    while T and T % ell == 0:
        T //= ell
        vT += 1
    v_Delta = 0
    D = d.delta
    while D % ell == 0:
        D //= ell
        v_Delta += 1
    out = {
        "n": n, "ell": ell, "delta": d.delta,
        "roots_in_F_l2": roots_ok,
        "trace_valuation": vT,
        "p_divisible": euler_p(n) % ell == 0,
        "h_fiber": rep.h_fiber,
        "fibers_divisible": all(h % ell == 0 for h in rep.h_fiber),
        "fiber_total": sum(rep.h_fiber),
        "v_delta": v_Delta,
    }
    return out
