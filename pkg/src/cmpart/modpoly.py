"""Classical modular polynomials Phi_m, the CM-tangent expression built from
their derivatives, the level-6 modular equation in the Hauptmodul t6, and U_l.

Phi_m is obtained exactly: the power sums S_k = J(q^m)^k + m U_m(J^k) of the
m+1 conjugates j(m tau), j((tau+a)/m) are polynomials in j; Newton's
identities over Z[j] then give the elementary symmetric functions.
"""
import math
import os
import threading
from fractions import Fraction

from flint import acb, arb, ctx, fmpq_poly, fmpz, fmpz_mat, fmpz_poly

from . import qseries
from .qseries import QSeries, PrecisionFailure, ConsistencyFailure

FORMAT_TAG = "#cmpart-modpoly-v1"


class SingularPoint(ArithmeticError):
    pass


class ModularPolynomial:
    def __init__(self, m, coeffs, certified_order=None):
        self.m = m
        self.coeffs = dict(coeffs)  # (i, j) -> int, X^i Y^j
        self.certified_order = certified_order

    @property
    def degree(self):
        return max(max(i, j) for i, j in self.coeffs)

    def coeff(self, i, j):
        return self.coeffs.get((i, j), 0)

    def is_symmetric(self):
        return all(self.coeff(j, i) == c for (i, j), c in self.coeffs.items())

    def is_monic(self):
        d = self.degree
        return self.coeff(d, 0) == 1 and self.coeff(0, d) == 1 and \
            all(i < d or j == 0 for i, j in self.coeffs) and all(j < d or i == 0 for i, j in self.coeffs)

    def __call__(self, x, y):
        # Horner in Y over X-polynomials
        d = self.degree
        rows = [[0] * (d + 1) for _ in range(d + 1)]
        for (i, j), c in self.coeffs.items():
            rows[j][i] = c
        acc = 0
        for j in range(d, -1, -1):
            a = 0
            for i in range(d, -1, -1):
                a = a * x + rows[j][i]
            acc = acc * y + a
        return acc

    def partial(self, dx, dy):
        """the polynomial d^dx/dX^dx d^dy/dY^dy Phi (as a coefficient dict)."""
        out = {}
        for (i, j), c in self.coeffs.items():
            if i < dx or j < dy:
                continue
            f = c * math.perm(i, dx) * math.perm(j, dy)
            out[(i - dx, j - dy)] = f
        return ModularPolynomial(self.m, out)

    def reduce_mod(self, p):
        return {k: c % p for k, c in self.coeffs.items() if c % p}

    # cache format: "m degree" then "i j c" lines sorted lexicographically
    def dumps(self):
        lines = [FORMAT_TAG, "%d %d" % (self.m, self.degree)]
        for (i, j) in sorted(self.coeffs):
            lines.append("%d %d %d" % (i, j, self.coeffs[(i, j)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = text.strip().split("\n")
        if lines[0] != FORMAT_TAG:
            raise ValueError("modular polynomial cache: format mismatch")
        m, _deg = map(int, lines[1].split())
        coeffs = {}
        for ln in lines[2:]:
            i, j, c = ln.split()
            coeffs[(int(i), int(j))] = int(c)
        return cls(m, coeffs)


def psi(m):
    out = m
    for p, _ in fmpz(m).factor():
        p = int(p)
        out = out * (p + 1) // p
    return out


# ---------------------------------------------------------------------------
# principal parts of Laurent series in q, as integer vectors
# vec[t] = coefficient of q^(-t), t = 0..D

def _jt_powers(D):
    """J^d principal parts for d = 0..D, computed from Jt = q J = 1 + 744 q + ..."""
    J = qseries.j_series(D + 2)
    jt = fmpz_poly(J.coeffs[: D + 1])
    out = [fmpz_poly([1])]
    cur = fmpz_poly([1])
    for d in range(1, D + 1):
        cur = cur.mul_low(jt, D + 1)
        cs = [int(c) for c in cur.coeffs()] + [0] * (D + 1 - cur.length())
        # exponent -d + s has index t = d - s
        out.append(fmpz_poly(cs[: d + 1][::-1]))
    return out, J


def _as_poly_in_j(vec, jpows):
    """Write a series with principal part vec (index t <-> q^-t, constant at
    t=0) as a polynomial in j.  The caller certifies the result separately."""
    vec = fmpz_poly(vec)
    D = vec.degree()
    coeffs = [0] * (D + 1)
    for t in range(D, -1, -1):
        c = int(vec[t]) if t <= vec.degree() else 0
        if c:
            coeffs[t] = c
            vec -= c * jpows[t]
    return fmpz_poly(coeffs)


def _power_sum_vectors(m, k_max, J):
    """principal parts of S_k = J(q^m)^k + m U_m(J^k), k = 1..k_max (m prime)."""
    out = [None]
    Jk = None
    for k in range(1, k_max + 1):
        Jk = J if Jk is None else Jk * J
        # exponents -k..0 of J^k are all that is needed
        pp = [0] * (m * k + 1)
        for e in range(-k, 1):
            c = Jk.coef(e)
            pp[-e * m] += c
            if e % m == 0:
                pp[-e // m] += m * c
        out.append(pp)
    return out


def _newton(S, n):
    """elementary symmetric e_0..e_n from power sums S[1..n] (over Z[j])."""
    e = [fmpz_poly([1])]
    for k in range(1, n + 1):
        acc = fmpz_poly([])
        for i in range(1, k + 1):
            t = e[k - i] * S[i]
            acc = acc + t if i % 2 == 1 else acc - t
        cs = [int(c) for c in acc.coeffs()]
        if any(c % k for c in cs):
            raise PrecisionFailure("Newton step %d not integral" % k)
        e.append(fmpz_poly([c // k for c in cs]))
    return e


def _compute_classical(m):
    n = psi(m)
    D = m * n
    jpows, _ = _jt_powers(D)
    J = qseries.j_series(D + 2)
    vecs = _power_sum_vectors(m, n, J)
    S = [None] + [_as_poly_in_j(v, jpows) for v in vecs[1:]]
    e = _newton(S, n)
    coeffs = {}
    for k in range(n + 1):
        if e[k].degree() > n:
            raise PrecisionFailure("e_%d has degree %d > %d" % (k, e[k].degree(), n))
        sign = -1 if k % 2 else 1
        for i, c in enumerate(e[k].coeffs()):
            c = int(c)
            if c:
                coeffs[(i, n - k)] = sign * c
    return ModularPolynomial(m, coeffs)


def vanishing_order(phi, K):
    """Check phi(j(q), j(q^m)) = O(q^K); returns the certified order K or
    raises.  Horner in Y, each coefficient polynomial in X by Horner in J."""
    m, d = phi.m, phi.degree
    N = K + m * d + d + 2
    J = qseries.j_series(N)
    Y = J.subs(m).truncate(N)
    rows = [[0] * (d + 1) for _ in range(d + 1)]
    for (i, j), c in phi.coeffs.items():
        rows[j][i] = c
    acc = None
    for j in range(d, -1, -1):
        a = None
        for i in range(d, -1, -1):
            a = qseries.const(rows[j][i], N) if a is None else a * J + rows[j][i]
        acc = a if acc is None else acc * Y + a
    bad = [e for e, c in enumerate(acc.coeffs) if c and acc.v + e < K]
    if bad:
        raise PrecisionFailure("Phi_%d(j, j(q^%d)) has a nonzero q^%s coefficient"
                               % (m, m, acc.v + bad[0]))
    if acc.order < K:
        raise PrecisionFailure("series too short to certify order %d" % K)
    return K


_lock = threading.Lock()
_memory = {}

MAX_DEFAULT = 19  # Phi_23 is only built when explicitly allowed


def _cache_path(cache_dir, m):
    return os.path.join(cache_dir, "modpoly", "phi_%d.txt" % m)


def classical_modular_polynomial(m, cache_dir=None, allow_large=False, certify_order=40):
    if m > 23 or not fmpz(m).is_prime():
        raise ValueError("m must be a prime <= 23")
    if m > MAX_DEFAULT and not allow_large:
        raise ValueError("Phi_%d needs allow_large=True (slow)" % m)
    path = _cache_path(cache_dir, m) if cache_dir else None
    phi = _memory.get(m)
    if phi is None and path and os.path.exists(path):
        try:
            with open(path) as fh:
                phi = ModularPolynomial.loads(fh.read())
        except ValueError:
            phi = None
        if phi is not None:
            if not (phi.is_symmetric() and phi.is_monic() and phi.degree == psi(m)):
                phi = None
            else:
                phi.certified_order = vanishing_order(phi, certify_order)
    if phi is None:
        phi = _compute_classical(m)
        if not (phi.is_symmetric() and phi.is_monic() and phi.degree == psi(m)):
            raise PrecisionFailure("Phi_%d fails symmetry/monicity" % m)
        phi.certified_order = vanishing_order(phi, certify_order)
    if path and not os.path.exists(path):
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp%d" % os.getpid()
        with open(tmp, "w") as fh:
            fh.write(phi.dumps())
        os.replace(tmp, path)
    with _lock:
        _memory[m] = phi
    return phi


def kronecker_congruence(phi):
    """Phi_l = (X^l - Y)(X - Y^l) mod l."""
    l = phi.m
    target = {(l + 1, 0): 1, (l, l): -1, (1, 1): -1, (0, l + 1): 1}
    got = phi.reduce_mod(l)
    want = {k: v % l for k, v in target.items()}
    return got == want


# ---------------------------------------------------------------------------
# CM tangent

def _eval_at(phi_dict, x, y):
    return sum((c * x ** i * y ** j for (i, j), c in phi_dict.coeffs.items()), acb(0))


def cm_tangent(J, phi, bits=256):
    """(Phi_YY - Phi_XY)/Phi_Y at (J, J)."""
    old = ctx.prec
    ctx.prec = bits + 64
    try:
        J = acb(J)
        PY = _eval_at(phi.partial(0, 1), J, J)
        if PY.contains(0):
            raise SingularPoint("Phi_Y vanishes at (J, J)")
        PYY = _eval_at(phi.partial(0, 2), J, J)
        PXY = _eval_at(phi.partial(1, 1), J, J)
        return (PYY - PXY) / PY
    finally:
        ctx.prec = old


def cm_tangent_weighted(J, phi, e4, e6, bits=256):
    """Weight-2 version of the CM tangent: combined with E6/E4 at the CM point
    this reproduces E2*(alpha):

        E2*(alpha) = (6 E6/E4) * (J T + J/(2(J - 1728)) + 2/3),   T = cm_tangent.

    It comes from differentiating Phi(j(tau), j(g tau)) = 0 twice along the
    graph of the CM isogeny and using j' = -2 pi i E6/E4 j, E4' etc."""
    old = ctx.prec
    ctx.prec = bits + 64
    try:
        J = acb(J)
        T = cm_tangent(J, phi, bits)
        return 6 * e6 / e4 * (J * T + J / (2 * (J - 1728)) + acb(2) / 3)
    finally:
        ctx.prec = old


def masser_residuals(alpha, phi, bits=256):
    """(|E2* - literal tangent|, |E2* - weighted tangent|, E2*, J) at alpha."""
    ec = qseries.EvalContext(bits)
    old = ctx.prec
    ctx.prec = bits + 64
    try:
        alpha = acb(alpha)
        e2s = qseries.e2_star(alpha, ec)
        Jr = qseries.eval_modular("j", alpha, bits)
        e4 = qseries.eval_modular("E4", alpha, bits)
        e6 = qseries.eval_modular("E6", alpha, bits)
        lit = cm_tangent(Jr, phi, bits)
        wt = cm_tangent_weighted(Jr, phi, e4, e6, bits)
        return abs(e2s - lit), abs(e2s - wt), e2s, Jr
    finally:
        ctx.prec = old


def split_P_via_tangent(alpha, phi, bits=256, weighted=True):
    """P(alpha) = -D_{-2}F(alpha) + (1/6) F(alpha) * (CM tangent), with D_{-2}
    the weight -2 Serre derivative q F' + E2 F/6.  weighted=False plugs in the
    literal tangent quotient."""
    ec = qseries.EvalContext(bits)
    old = ctx.prec
    ctx.prec = bits + 64
    try:
        alpha = acb(alpha)
        J = qseries.eval_modular("j", alpha, bits)
        if weighted:
            e4 = qseries.eval_modular("E4", alpha, bits)
            e6 = qseries.eval_modular("E6", alpha, bits)
            tangent = cm_tangent_weighted(J, phi, e4, e6, bits)
        else:
            tangent = cm_tangent(J, phi, bits)
        return qseries.eval_P_split(alpha, tangent, ec)
    finally:
        ctx.prec = old


# ---------------------------------------------------------------------------
# level 6 modular equation in t6

EXPECTED_A0_VALUATION = {5: 1, 7: 2, 11: 1}


class LevelModularEquation:
    def __init__(self, ell, coeffs, certified_order, denominators=None):
        self.ell = ell
        self.coeffs = coeffs  # (i, j) -> int : t^i Y^j
        self.certified_order = certified_order

    @property
    def degree_y(self):
        return max(j for _, j in self.coeffs)

    @property
    def degree_x(self):
        return max(i for i, _ in self.coeffs)

    def A(self, r):
        """coefficient of Y^r as an integer polynomial in t."""
        d = self.degree_x
        cs = [0] * (d + 1)
        for (i, j), c in self.coeffs.items():
            if j == r:
                cs[i] = c
        return fmpz_poly(cs)

    def is_monic_in_y(self):
        top = self.degree_y
        return top == self.ell + 1 and self.A(top) == fmpz_poly([1])

    def content_valuation(self, r=0):
        c = int(self.A(r).content())
        if c == 0:
            return math.inf
        v = 0
        while c % self.ell == 0:
            c //= self.ell
            v += 1
        return v

    def content_report(self):
        """measured v_ell(content A_r) for every r, next to the A_0 value the
        Watson-style argument would like to see."""
        return {
            "ell": self.ell,
            "valuations": [self.content_valuation(r) for r in range(self.degree_y + 1)],
            "A0_valuation": self.content_valuation(0),
            "A0_expected": EXPECTED_A0_VALUATION[self.ell],
        }

    def reduce_mod(self, p):
        return {k: c % p for k, c in self.coeffs.items() if c % p}

    def dumps(self):
        lines = [FORMAT_TAG, "%d %d %d" % (self.ell, self.degree_y, self.certified_order)]
        for (i, j) in sorted(self.coeffs):
            lines.append("%d %d %d" % (i, j, self.coeffs[(i, j)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = text.strip().split("\n")
        if lines[0] != FORMAT_TAG:
            raise ValueError("level-6 equation cache: format mismatch")
        ell, _, K = map(int, lines[1].split())
        coeffs = {}
        for ln in lines[2:]:
            i, j, c = map(int, ln.split())
            coeffs[(i, j)] = c
        return cls(ell, coeffs, K)


def _check_wa(eq, strict_wa):
    if strict_wa and eq.content_valuation(0) < 1:
        raise ConsistencyFailure("v_%d(content A_0) = %d < 1" % (eq.ell, eq.content_valuation(0)))
    return eq


def level6_modular_equation(ell, K=200, strict_wa=False, cache_dir=None):
    """Phi^(6)_ell(X, Y) = sum_r A_r(X) Y^r with Phi(t6(tau), t6(ell tau)) = 0,
    found by exact linear algebra on q-expansions and certified to O(q^K)."""
    if ell not in (5, 7, 11):
        raise ValueError("ell must be 5, 7 or 11")
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, "modpoly", "level6_%d.txt" % ell)
        if os.path.exists(path):
            try:
                with open(path) as fh:
                    eq = LevelModularEquation.loads(fh.read())
                if eq.ell == ell and eq.certified_order >= K:
                    return _check_wa(eq, strict_wa)
            except ValueError:
                pass
    d = ell + 1
    # on X_0(6 ell) both t6(tau) and t6(ell tau) have degree ell+1, so
    # deg_X A_r <= ell + 1
    dx = ell + 1
    N = K + ell * d + dx + 8
    t = qseries.hauptmodul_series(N)
    Y = t.subs(ell).truncate(N)
    tp = [qseries.const(1, N)]
    for _ in range(dx):
        tp.append(tp[-1] * t)
    Yp = [qseries.const(1, N)]
    for _ in range(d):
        Yp.append(Yp[-1] * Y)
    # unknowns c_ij, i <= dx, j < d; monic: Y^d term fixed
    cols = [(i, j) for j in range(d) for i in range(dx + 1)]
    lo = -(ell * d + dx)
    nrows = K - lo
    prods = {}
    for (i, j) in cols:
        prods[(i, j)] = tp[i] * Yp[j]
    rhs = Yp[d]
    M = []
    b = []
    for e in range(lo, K):
        M.append([_coef0(prods[c], e) for c in cols])
        b.append(-_coef0(rhs, e))
    sol = _solve_integer(M, b)
    coeffs = {(0, d): 1}
    for c, v in zip(cols, sol):
        if v:
            coeffs[c] = v
    eq = LevelModularEquation(ell, coeffs, K)
    # certification: the full combination vanishes through q^(K-1)
    acc = rhs
    for c, v in zip(cols, sol):
        if v:
            acc = acc + prods[c].scale(v)
    for k, c in enumerate(acc.coeffs):
        if acc.v + k < K and c:
            raise PrecisionFailure("level-6 equation does not vanish at q^%s" % (acc.v + k))
    if path:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp%d" % os.getpid()
        with open(tmp, "w") as fh:
            fh.write(eq.dumps())
        os.replace(tmp, path)
    return _check_wa(eq, strict_wa)


def _coef0(s, e):
    if e < s.v:
        return 0
    return s.coef(e)


def _solve_integer(M, b):
    """The unique solution of the overdetermined system M x = b, which must be
    integral; solved exactly through the normal equations, then checked
    against every row."""
    from flint import fmpq_mat
    A = fmpz_mat(M)
    n = A.ncols()
    if A.rank() < n:
        raise PrecisionFailure("level-6 system is rank deficient")
    At = A.transpose()
    x = fmpq_mat(At * A).solve(fmpq_mat(At * fmpz_mat([[v] for v in b])))
    out = []
    for k in range(n):
        v = x[k, 0]
        if v.q != 1:
            raise PrecisionFailure("non-integral coefficient in the level-6 equation")
        out.append(int(v.p))
    if A * fmpz_mat([[v] for v in out]) != fmpz_mat([[v] for v in b]):
        raise PrecisionFailure("level-6 system inconsistent")
    return out


# ---------------------------------------------------------------------------

def u_ell(s, ell):
    """(s | U_ell): coefficient of q^n is the coefficient of q^(ell n) in s."""
    if s.v.denominator != 1:
        raise ValueError("U_ell needs integer exponents")
    v = int(s.v)
    lo = -((-v) // ell)
    hi = (int(s.order) - 1) // ell  # last fully known exponent
    if hi < lo:
        return QSeries(lo, [0])
    return QSeries(lo, [s.coef(ell * e) if ell * e >= v else 0 for e in range(lo, hi + 1)])
