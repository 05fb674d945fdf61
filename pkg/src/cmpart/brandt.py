"""Definite quaternion algebras B_{l,oo}, maximal and level-6 Eichler orders,
right ideal classes by p-neighbours, Brandt matrices from theta counts, and
optimal embedding counts of imaginary quadratic orders.

Elements are 4-tuples of Fractions in the basis 1, i, j, k with i^2 = a,
j^2 = b, k = ij.  Lattices are kept as Hermite-normal-form row bases so that
equality of ideals is equality of keys.
"""
import json
import math
import os
from fractions import Fraction
from itertools import product
from math import gcd, isqrt

from flint import fmpq, fmpq_mat, fmpz_mat

from .heegner import InvalidInput, factorize, is_prime, kronecker
from .qseries import ConsistencyFailure, sigma

FORMAT_TAG = "#cmpart-brandt-v1"


# ---------------------------------------------------------------------------
# Hilbert symbols

def _legendre(u, p):
    u %= p
    if u == 0:
        return 0
    return 1 if pow(u, (p - 1) // 2, p) == 1 else -1


def _split_p(x, p):
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v, x


def hilbert_symbol(a, b, p):
    """(a, b)_p for nonzero integers; p = -1 means the real place."""
    if p == -1:
        return -1 if (a < 0 and b < 0) else 1
    al, u = _split_p(a, p)
    be, v = _split_p(b, p)
    if p != 2:
        s = (-1) ** (al * be * ((p - 1) // 2))
        return s * _legendre(u, p) ** be * _legendre(v, p) ** al
    eps = lambda x: ((x - 1) // 2) % 2
    om = lambda x: ((x * x - 1) // 8) % 2
    e = eps(u) * eps(v) + al * om(v) + be * om(u)
    return -1 if e % 2 else 1


# ---------------------------------------------------------------------------
# the algebra

class QuaternionAlgebra:
    def __init__(self, a, b, ell):
        self.a, self.b, self.ell = a, b, ell

    def __repr__(self):
        return "QuaternionAlgebra(%d, %d)" % (self.a, self.b)

    def mul(self, x, y):
        a, b = self.a, self.b
        x0, x1, x2, x3 = x
        y0, y1, y2, y3 = y
        return (
            x0 * y0 + a * x1 * y1 + b * x2 * y2 - a * b * x3 * y3,
            x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
            x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
            x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
        )

    @staticmethod
    def conj(x):
        return (x[0], -x[1], -x[2], -x[3])

    def nrd(self, x):
        a, b = self.a, self.b
        return x[0] * x[0] - a * x[1] * x[1] - b * x[2] * x[2] + a * b * x[3] * x[3]

    @staticmethod
    def trd(x):
        return 2 * x[0]

    def ramified_places(self):
        ps = set(factorize(2 * self.a * self.b)) | {2}
        out = [p for p in sorted(ps) if hilbert_symbol(self.a, self.b, p) == -1]
        if hilbert_symbol(self.a, self.b, -1) == -1:
            out.append(-1)
        return out


def algebra(ell):
    """B_{ell,oo} as (a, b) with a verified ramification set {ell, oo}."""
    if not is_prime(ell) or ell < 5:
        raise InvalidInput("ell must be a prime >= 5")
    if ell % 4 == 3:
        a, b = -1, -ell
    elif ell % 8 == 5:
        a, b = -2, -ell
    else:
        q = 3
        while not (is_prime(q) and q % 4 == 3 and _legendre(ell, q) == -1):
            q += 4
        a, b = -q, -ell
    B = QuaternionAlgebra(a, b, ell)
    if B.ramified_places() != [ell, -1]:
        raise ConsistencyFailure("(%d,%d) ramifies at %s" % (a, b, B.ramified_places()))
    return B


# ---------------------------------------------------------------------------
# lattices in B

def _F(x):
    return x if isinstance(x, Fraction) else Fraction(x)


def _to_fmpq_mat(rows):
    n, m = len(rows), len(rows[0])
    return fmpq_mat(n, m, [fmpq(int(v.numerator), int(v.denominator)) for r in rows for v in r])


def _from_fmpq_mat(M):
    return [[Fraction(int(M[i, j].p), int(M[i, j].q)) for j in range(M.ncols())] for i in range(M.nrows())]


class Lattice:
    """full rank Z-lattice in Q^4, rows of a canonical HNF basis."""

    def __init__(self, rows):
        self.rows = [tuple(_F(v) for v in r) for r in rows]
        self.key = tuple(self.rows)

    @classmethod
    def from_gens(cls, gens):
        gens = [tuple(_F(v) for v in g) for g in gens]
        d = 1
        for g in gens:
            for v in g:
                d = d * v.denominator // gcd(d, v.denominator)
        M = fmpz_mat([[int(v * d) for v in g] for g in gens]).hnf()
        rows = []
        for i in range(M.nrows()):
            r = [int(M[i, j]) for j in range(4)]
            if any(r):
                rows.append([Fraction(v, d) for v in r])
        if len(rows) != 4:
            raise ValueError("generators do not span a full lattice")
        return cls(rows)

    def __eq__(self, other):
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def covolume(self):
        return abs(self._det())

    def _det(self):
        d = _to_fmpq_mat(self.rows).det()
        return Fraction(int(d.p), int(d.q))

    def coords(self, v):
        Binv = _to_fmpq_mat(self.rows).inv()
        c = _to_fmpq_mat([list(map(_F, v))]) * Binv
        return [Fraction(int(c[0, j].p), int(c[0, j].q)) for j in range(4)]

    def contains(self, v):
        return all(c.denominator == 1 for c in self.coords(v))

    def contains_lattice(self, other):
        return all(self.contains(r) for r in other.rows)

    def dual(self):
        Binv = _to_fmpq_mat(self.rows).inv().transpose()
        return Lattice.from_gens(_from_fmpq_mat(Binv))

    def __add__(self, other):
        return Lattice.from_gens(self.rows + other.rows)

    def intersect(self, other):
        return (self.dual() + other.dual()).dual()

    def scale(self, c):
        c = _F(c)
        return Lattice([[c * v for v in r] for r in self.rows])

    def element(self, c):
        return tuple(sum(ci * r[k] for ci, r in zip(c, self.rows)) for k in range(4))


# ---------------------------------------------------------------------------
# short vectors

def _gram(B, L):
    """q(x) = nrd(sum x_k e_k) as a symmetric Fraction matrix."""
    e = L.rows
    G = [[Fraction(0)] * 4 for _ in range(4)]
    for s in range(4):
        G[s][s] = B.nrd(e[s])
        for t in range(s + 1, 4):
            v = tuple(x + y for x, y in zip(e[s], e[t]))
            G[s][t] = G[t][s] = (B.nrd(v) - G[s][s] - B.nrd(e[t])) / 2
    return G


def _qform(G, x):
    return sum(G[s][t] * x[s] * x[t] for s in range(4) for t in range(4))


def short_vectors(G, bound):
    """all nonzero integer x with x G x^T <= bound (Fincke-Pohst), as
    (x, q) pairs with q exact.  Both x and -x are listed."""
    n = len(G)
    d = 1
    for r in G:
        for v in r:
            d = d * _F(v).denominator // gcd(d, _F(v).denominator)
    Gi = [[int(_F(v) * d) for v in r] for r in G]
    top = _F(bound) * d
    # q(x) = sum_i Q[i][i] (x_i + sum_{j>i} Q[i][j] x_j)^2
    Q = [[float(G[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            Q[j][i] = Q[i][j]
            Q[i][j] = Q[i][j] / Q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                Q[k][l] -= Q[k][i] * Q[i][l]
    out = []
    x = [0] * n

    def rec(i, rem):
        if i < 0:
            if any(x):
                q = sum(Gi[s][t] * x[s] * x[t] for s in range(n) for t in range(n))
                if q <= top:
                    out.append((tuple(x), Fraction(q, d)))
            return
        c = -sum(Q[i][j] * x[j] for j in range(i + 1, n))
        r = math.sqrt(max(rem, 0.0) / Q[i][i])
        for v in range(math.ceil(c - r - 1e-7), math.floor(c + r + 1e-7) + 1):
            x[i] = v
            t = Q[i][i] * (v - c) ** 2
            if t <= rem + 1e-7:
                rec(i - 1, rem - t)
        x[i] = 0

    rec(n - 1, float(bound) * (1 + 1e-9) + 1e-7)
    return out


def _reduced(B, L):
    """LLL-reduce a lattice basis with respect to the norm form."""
    G = _gram(B, L)
    d = 1
    for r in G:
        for v in r:
            d = d * v.denominator // gcd(d, v.denominator)
    Gi = fmpz_mat([[int(2 * v * d) for v in r] for r in G])
    _, T = Gi.lll(transform=True, rep="gram")
    rows = [L.element([int(T[i, j]) for j in range(4)]) for i in range(4)]
    return rows


class _NormLattice:
    """a lattice with an LLL-reduced basis for the norm form, used for
    enumeration; coordinates refer to the reduced basis."""

    def __init__(self, B, L, scale=1):
        self.B = B
        self.basis = _reduced(B, L)
        self.scale = _F(scale)
        G = _gram(B, Lattice(self.basis))
        self.G = [[v / self.scale for v in r] for r in G]

    def vectors(self, bound):
        for x, q in short_vectors(self.G, bound):
            yield tuple(sum(xi * b[k] for xi, b in zip(x, self.basis)) for k in range(4)), q


# ---------------------------------------------------------------------------
# orders

def _one():
    return (Fraction(1), Fraction(0), Fraction(0), Fraction(0))


def products(B, L1, L2):
    return Lattice.from_gens([B.mul(x, y) for x in L1.rows for y in L2.rows])


def is_order(B, L):
    if not L.contains(_one()):
        return False
    return all(L.contains(B.mul(x, y)) for x in L.rows for y in L.rows)


def reduced_discriminant(B, L):
    G = _gram(B, L)
    d = _to_fmpq_mat([[2 * v for v in r] for r in G]).det()
    det = abs(Fraction(int(d.p), int(d.q)))
    r = isqrt(det.numerator)
    if det.denominator != 1 or r * r != det.numerator:
        raise ConsistencyFailure("discriminant is not a square: %s" % det)
    return r


def _mult_matrix(B, g, side):
    """matrix M with x M = g x (side='left') or x g (side='right') on row
    vectors in the standard basis."""
    E = [tuple(Fraction(int(i == k)) for i in range(4)) for k in range(4)]
    if side == "left":
        return [list(B.mul(g, e)) for e in E]
    return [list(B.mul(e, g)) for e in E]


def _stabilizer(B, L, side):
    """{x : x L in L} (side='left') or {x : L x in L} (side='right')."""
    Binv = _to_fmpq_mat(L.rows).inv()
    cols = []
    for g in L.rows:
        # x -> x g for the left order, x -> g x for the right order
        M = _to_fmpq_mat(_mult_matrix(B, g, "right" if side == "left" else "left")) * Binv
        Mt = _from_fmpq_mat(M.transpose())
        cols.extend(Mt)
    return Lattice.from_gens(cols).dual()


def left_order(B, L):
    return _stabilizer(B, L, "left")


def right_order(B, L):
    return _stabilizer(B, L, "right")


def _is_integral_element(B, x):
    return B.trd(x).denominator == 1 and B.nrd(x).denominator == 1


def _ring_closure(B, L, limit=8):
    for _ in range(limit):
        new = products(B, L, L) + L
        if new == L:
            return L
        L = new
    return None


def maximal_order(B):
    """saturate Z<1,i,j,k> until the reduced discriminant is ell."""
    one = _one()
    E = [tuple(Fraction(int(i == k)) for i in range(4)) for k in range(4)]
    O = Lattice.from_gens(E)
    while True:
        disc = reduced_discriminant(B, O)
        if disc == B.ell:
            break
        m = disc // B.ell
        grown = False
        for p in sorted(factorize(m)):
            for c in product(range(p), repeat=4):
                if not any(c):
                    continue
                x = tuple(v / p for v in O.element(c))
                if O.contains(x) or not _is_integral_element(B, x):
                    continue
                L = _ring_closure(B, O + Lattice.from_gens([x] + O.rows))
                if L is None or not all(_is_integral_element(B, r) for r in L.rows):
                    continue
                if not all(v.denominator == 1 for r in _gram(B, L) for v in [2 * w for w in r]):
                    continue
                O = L
                grown = True
                break
            if grown:
                break
        if not grown:
            raise ConsistencyFailure("could not enlarge order of discriminant %d" % disc)
    if not is_order(B, O) or not O.contains(one):
        raise ConsistencyFailure("maximal order failed the order axioms")
    return O


class EichlerOrder:
    def __init__(self, B, lattice, level, maximal):
        self.B = B
        self.lattice = lattice
        self.level = level
        self.maximal = maximal

    @property
    def basis(self):
        return self.lattice.rows

    @property
    def gram(self):
        """integer Gram matrix of the bilinear form trd(x ybar)."""
        G = _gram(self.B, self.lattice)
        return [[int(2 * v) for v in r] for r in G]

    def discriminant(self):
        return reduced_discriminant(self.B, self.lattice)


def eichler_order(B, level=6):
    """O cap O' with O maximal and O' a maximal order adjacent at each p | level
    (right order of the left ideal O mu + level O with level | nrd(mu))."""
    O = maximal_order(B)
    if level == 1:
        return EichlerOrder(B, O, 1, O)
    ps = sorted(factorize(level))
    if any(level % (p * p) == 0 for p in ps):
        raise InvalidInput("square-free level only")
    mu = None
    for r in range(1, 6):
        for c in product(range(-r, r + 1), repeat=4):
            if max(map(abs, c)) != r:
                continue
            if any(all(v % p == 0 for v in c) for p in ps):
                continue
            x = O.element(c)
            if B.nrd(x) % level == 0:
                mu = x
                break
        if mu is not None:
            break
    J = Lattice.from_gens([B.mul(o, mu) for o in O.rows] + [tuple(level * v for v in o) for o in O.rows])
    if J.covolume != O.covolume * level * level:
        raise ConsistencyFailure("left ideal of the wrong norm")
    R = O.intersect(right_order(B, J))
    if R.covolume != O.covolume * level:
        raise ConsistencyFailure("Eichler order has index %s, wanted %d" % (R.covolume / O.covolume, level))
    if not is_order(B, R):
        raise ConsistencyFailure("intersection is not closed")
    if reduced_discriminant(B, R) != level * B.ell:
        raise ConsistencyFailure("reduced discriminant %d != %d" % (reduced_discriminant(B, R), level * B.ell))
    return EichlerOrder(B, R, level, O)


def eichler_order_level6(B):
    return eichler_order(B, 6)


# ---------------------------------------------------------------------------
# ideal classes

def ideal_norm(O, I):
    """reduced norm of a lattice I relative to the order O: [O:I] = nrd(I)^2."""
    r = I.covolume / O.lattice.covolume
    n, d = isqrt(r.numerator), isqrt(r.denominator)
    if n * n != r.numerator or d * d != r.denominator:
        raise ConsistencyFailure("index is not a square")
    return Fraction(n, d)


def unit_group(B, L):
    """elements of norm 1 in an order."""
    NL = _NormLattice(B, L)
    return [v for v, q in NL.vectors(1) if q == 1]


def _conj_lattice(L):
    return Lattice.from_gens([QuaternionAlgebra.conj(r) for r in L.rows])


class IdealClassSet:
    def __init__(self, order, ideals, norms, left_orders, units, p):
        self.order = order
        self.ideals = ideals
        self.norms = norms
        self.left_orders = left_orders
        self.units = units
        self.neighbour_prime = p
        self._theta = {}
        self._theta_bound = 0

    @property
    def B(self):
        return self.order.B

    @property
    def s(self):
        return len(self.ideals)

    @property
    def weights(self):
        """w_i = #O_i^x (the full unit group, -1 included)."""
        return [len(u) for u in self.units]

    @property
    def mass(self):
        return sum(Fraction(1, w) for w in self.weights)

    def connecting(self, i, j):
        return _NormLattice(self.B, products(self.B, self.ideals[i], _conj_lattice(self.ideals[j])),
                            self.norms[i] * self.norms[j])

    def theta_counts(self, bound):
        """counts[i][j][m] = #{x in I_i conj(I_j) : nrd x = m N_i N_j}, m <= bound."""
        if bound > self._theta_bound:
            s = self.s
            T = [[None] * s for _ in range(s)]
            for i in range(s):
                for j in range(i, s):
                    c = [0] * (bound + 1)
                    c[0] = 1
                    for _, q in self.connecting(i, j).vectors(bound):
                        c[int(q)] += 1
                    T[i][j] = T[j][i] = c
            self._theta = T
            self._theta_bound = bound
        return self._theta


def _equivalent(B, I, NI, J, NJ):
    """right ideals I, J are isomorphic iff J conj(I) has an element of
    norm N(I) N(J)."""
    L = _NormLattice(B, products(B, J, _conj_lattice(I)), NI * NJ)
    for _, q in L.vectors(1):
        if q == 1:
            return True
    return False


def _neighbour_prime(B, level):
    p = 2
    while gcd(p, level * B.ell) != 1 or not is_prime(p):
        p += 1
    return p


def neighbours(O, I, NI, p):
    """right O-ideals J in I with [I:J] = p^2."""
    B = O.B
    out = {}
    for c in product(range(p), repeat=4):
        nz = [v for v in c if v]
        if not nz or nz[0] != 1 or c.index(nz[0]) != next(k for k, v in enumerate(c) if v):
            continue
        x = I.element(c)
        r = B.nrd(x) / NI
        if r.denominator != 1 or r.numerator % p:
            continue
        J = Lattice.from_gens([B.mul(x, o) for o in O.basis] + [tuple(p * v for v in g) for g in I.rows])
        if J.covolume == I.covolume * p * p:
            out[J.key] = J
    return list(out.values())


def expected_mass(ell, level):
    psi = 1
    for p in factorize(level):
        psi *= p + 1
    return Fraction((ell - 1) * psi, 24)


def ideal_classes(O, max_rounds=200):
    """right ideal classes of O by p-neighbour search, stopping when the
    Eichler mass is used up."""
    B = O.B
    p = _neighbour_prime(B, O.level)
    target = expected_mass(B.ell, O.level)
    base = O.lattice
    ideals, norms, lefts, units = [], [], [], []

    def add(I, N):
        L = left_order(B, I)
        ideals.append(I)
        norms.append(N)
        lefts.append(L)
        units.append(unit_group(B, L))

    add(base, Fraction(1))
    mass = Fraction(1, len(units[0]))
    queue = [0]
    rounds = 0
    while mass < target and queue and rounds < max_rounds:
        rounds += 1
        k = queue.pop(0)
        for J in neighbours(O, ideals[k], norms[k], p):
            NJ = norms[k] * p
            if any(_equivalent(B, ideals[t], norms[t], J, NJ) for t in range(len(ideals))):
                continue
            add(J, NJ)
            mass += Fraction(1, len(units[-1]))
            queue.append(len(ideals) - 1)
            if mass >= target:
                break
    if mass != target:
        raise ConsistencyFailure("mass %s after search, expected %s" % (mass, target))
    return IdealClassSet(O, ideals, norms, lefts, units, p)


# ---------------------------------------------------------------------------
# Brandt matrices

class BrandtMatrix:
    def __init__(self, m, entries):
        self.m = m
        self.entries = entries  # Fractions

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    @property
    def size(self):
        return len(self.entries)

    def __mul__(self, other):
        n = self.size
        return [[sum(self.entries[i][k] * other.entries[k][j] for k in range(n)) for j in range(n)] for i in range(n)]

    def is_integral(self):
        return all(v.denominator == 1 for r in self.entries for v in r)

    def as_ints(self):
        return [[int(v) for v in r] for r in self.entries]


def brandt_matrix(classes, m):
    """b_ij(m) = #{x in I_i I_j^-1 : nrd x = m N_i / N_j} / #O_j^x, which
    counts sub-ideals of I_i of norm m N_i isomorphic to I_j."""
    T = classes.theta_counts(max(m, classes._theta_bound))
    w = classes.weights
    s = classes.s
    return BrandtMatrix(m, [[Fraction(T[i][j][m], w[j]) if m else Fraction(int(i == j)) for j in range(s)] for i in range(s)])


def check_brandt_structure(classes, m_max=20):
    """B_1 = I, weighted symmetry, row sums sigma(m) for m prime to level*ell,
    Hecke multiplicativity; returns a dict of booleans."""
    B = classes.B
    ell, N = B.ell, classes.order.level
    s = classes.s
    bound = m_max * m_max if m_max <= 7 else max(m_max, 40)
    classes.theta_counts(max(bound, m_max))
    w = classes.weights
    Bm = {m: brandt_matrix(classes, m) for m in range(1, m_max + 1)}
    res = {}
    res["identity"] = all(Bm[1][i, j] == int(i == j) for i in range(s) for j in range(s))
    res["weighted_symmetry"] = all(w[j] * Bm[m][i, j] == w[i] * Bm[m][j, i]
                                   for m in Bm for i in range(s) for j in range(s))
    res["row_sums"] = all(sum(Bm[m].entries[i]) == sigma(m)
                          for m in Bm if gcd(m, N * ell) == 1 for i in range(s))
    good = [p for p in range(2, m_max + 1) if is_prime(p) and gcd(p, N * ell) == 1]
    ok = True
    for p in good:
        for q in good:
            if p < q and p * q <= m_max:
                ok &= (Bm[p] * Bm[q]) == Bm[p * q].entries
        k = 1
        while p ** (k + 1) <= m_max:
            lhs = Bm[p ** (k + 1)].entries
            prod_ = Bm[p ** k] * Bm[p]
            prev = Bm[p ** (k - 1)].entries
            ok &= all(lhs[i][j] == prod_[i][j] - p * prev[i][j] for i in range(s) for j in range(s))
            k += 1
    res["hecke"] = ok
    return res


# ---------------------------------------------------------------------------
# optimal embeddings

def _omega_data(delta):
    d = delta % 2
    return d, Fraction(d * d - delta, 4)


def _conductor(delta):
    f = 1
    D0 = delta
    for p, e in factorize(delta).items():
        while e >= 2:
            cand = D0 // (p * p)
            if cand % 4 in (0, 1):
                D0 = cand
                f *= p
                e -= 2
            else:
                break
    return f


def optimal_embeddings(B, L, delta):
    """elements x of the order L with trd x = delta mod 2 and
    nrd x = (trd^2 - delta)/4 such that Z[x] is optimally embedded, i.e.
    no (x - c)/p lies in L for a prime p dividing the conductor."""
    t, n = _omega_data(delta)
    f = _conductor(delta)
    NL = _NormLattice(B, L)
    out = []
    for x, q in NL.vectors(n):
        if q != n or B.trd(x) != t:
            continue
        bad = False
        for p in factorize(f):
            for c in range(p):
                y = tuple((v - (c if k == 0 else 0)) / p for k, v in enumerate(x))
                if L.contains(y):
                    bad = True
                    break
            if bad:
                break
        if not bad:
            out.append(x)
    return out


def _orbits(B, elems, units):
    seen = set()
    n = 0
    for x in elems:
        if x in seen:
            continue
        n += 1
        for u in units:
            seen.add(B.mul(B.mul(u, x), QuaternionAlgebra.conj(u)))
    return n


def optimal_embeddings_direct(classes, i, delta):
    """number of optimal embeddings of O_delta into O_i up to O_i^x
    conjugation, no orientation imposed at any place."""
    B = classes.B
    emb = optimal_embeddings(B, classes.left_orders[i], delta)
    return _orbits(B, emb, classes.units[i])


def _characters(B, O, p):
    """ring homomorphisms O -> F_p, as value vectors on the basis."""
    E = O.basis
    one = O.lattice.coords(_one())
    table = [[O.lattice.coords(B.mul(x, y)) for y in E] for x in E]
    out = []
    for c in product(range(p), repeat=4):
        if sum(int(o) * v for o, v in zip(one, c)) % p != 1:
            continue
        if all(sum(int(z) * v for z, v in zip(table[s][t], c)) % p == c[s] * c[t] % p
               for s in range(4) for t in range(4)):
            out.append(c)
    return out


def _kernel(O, c, p):
    E = O.basis
    k0 = next(k for k in range(4) if c[k] % p)
    inv = pow(c[k0], -1, p)
    gens = [tuple(p * v for v in E[k0])]
    for k in range(4):
        if k != k0:
            t = c[k] * inv % p
            gens.append(tuple(a - t * b for a, b in zip(E[k], E[k0])))
    return Lattice.from_gens(gens)


class Orientation:
    """for each p | level, the local character chi_p on every O_i, read off
    from the action of O_i on I_i / I_i P_p where P_p is the kernel of a
    fixed character of the base order."""

    def __init__(self, classes):
        self.classes = classes
        B, O = classes.B, classes.order
        self.primes = sorted(factorize(O.level)) if O.level > 1 else []
        self.data = {}
        for p in self.primes:
            chars = _characters(B, O, p)
            if len(chars) != 2:
                raise ConsistencyFailure("expected two characters mod %d, found %d" % (p, len(chars)))
            P = _kernel(O, chars[0], p)
            per = []
            for I in classes.ideals:
                IP = products(B, I, P)
                if IP.covolume != I.covolume * p:
                    raise ConsistencyFailure("I P has the wrong index")
                g = next(r for r in I.rows if not IP.contains(r))
                per.append((IP, g))
            self.data[p] = per

    def character(self, i, p, x):
        B = self.classes.B
        IP, g = self.data[p][i]
        xg = B.mul(x, g)
        for lam in range(p):
            if IP.contains(tuple(a - lam * b for a, b in zip(xg, g))):
                return lam
        raise ConsistencyFailure("element does not act by a scalar")

    def signature(self, i, x):
        return tuple(self.character(i, p, x) for p in self.primes)


def oriented_counts(classes, delta, orient=None):
    """{signature: [count_i]}: optimal embeddings of O_delta into each O_i,
    split by the local characters of the image of (delta mod 2 + sqrt
    delta)/2 at p | level, each modulo O_i^x conjugation."""
    B = classes.B
    orient = orient or Orientation(classes)
    out = {}
    for i in range(classes.s):
        emb = optimal_embeddings(B, classes.left_orders[i], delta)
        groups = {}
        for x in emb:
            groups.setdefault(orient.signature(i, x), []).append(x)
        for sig, xs in groups.items():
            out.setdefault(sig, [0] * classes.s)[i] = _orbits(B, xs, classes.units[i])
    return out


def embedding_vector(classes, delta, signature=None, ell_fold=False, orient=None):
    """u_delta: per class, the optimal embeddings with the given local
    orientation at p | level (all of them when signature is None).  With
    ell_fold the count is multiplied by ell, one lift per local orientation
    at the division place."""
    counts = oriented_counts(classes, delta, orient)
    s = classes.s
    if signature is None:
        u = [sum(c[i] for c in counts.values()) for i in range(s)]
    else:
        u = list(counts.get(tuple(signature), [0] * s))
    if ell_fold and kronecker(delta, classes.B.ell) != 1:
        u = [classes.B.ell * v for v in u]
    return u


def theta_vector(classes, delta):
    """B_|delta| w with w = (1/#O_i^x): the theta-coefficient vector."""
    m = abs(delta)
    Bm = brandt_matrix(classes, m)
    w = classes.weights
    return [sum(Bm[i, j] / w[j] for j in range(classes.s)) for i in range(classes.s)]


# ---------------------------------------------------------------------------
# Hurwitz class numbers and the level-1 calibration

def hurwitz_class_number(N):
    """H(N): SL2(Z)-classes of positive definite forms of discriminant -N,
    weighted 1/2 and 1/3 at forms equivalent to a(x^2+y^2), a(x^2+xy+y^2)."""
    if N == 0:
        return Fraction(-1, 12)
    if N % 4 in (1, 2):
        return Fraction(0)
    D = -N
    h = Fraction(0)
    a = 1
    while 3 * a * a <= N:
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if b == 0 and a == c:
                h += Fraction(1, 2)
            elif a == b == c:
                h += Fraction(1, 3)
            else:
                h += 1
        a += 1
    return h


def modified_hurwitz(ell, N):
    """(1 - (-N/ell))/2 H(N): the part of H(N) living on supersingular curves."""
    return Fraction(1 - kronecker(-N, ell), 2) * hurwitz_class_number(N)


def level1_calibration(ell, deltas=(-3, -4, -7, -8, -11)):
    """sum over supersingular E of (embeddings)/w_E against the modified
    Hurwitz number, once with raw embedding counts and once with counts up
    to O_E^x conjugation.  Rows (delta, H_ell, raw_sum, orbit_sum)."""
    B = algebra(ell)
    cl = classes_for(ell, 1)
    rows = []
    for d in deltas:
        raw = orb = Fraction(0)
        for i in range(cl.s):
            emb = optimal_embeddings(B, cl.left_orders[i], d)
            raw += Fraction(len(emb), cl.weights[i])
            orb += Fraction(_orbits(B, emb, cl.units[i]), cl.weights[i])
        rows.append((d, modified_hurwitz(ell, -d), raw, orb))
    return rows


def gross_vector(ell, delta):
    """optimal embeddings of O_delta into each maximal order of B_{ell,oo},
    counted up to conjugation by the unit group."""
    cl = classes_for(ell, 1)
    return [optimal_embeddings_direct(cl, i, delta) for i in range(cl.s)]


def gross_eigen_check(ell, delta, ms=(2, 3, 5)):
    """{m: eigenvalue or None}: whether B(m) v = a v for the Gross vector v.
    Both the row and column actions are tried; a zero vector is reported as
    such rather than as an eigenvector."""
    cl = classes_for(ell, 1)
    v = gross_vector(ell, delta)
    out = {"vector": v, "eigen": {}}
    if not any(v):
        out["zero"] = True
        return out
    k = next(i for i, x in enumerate(v) if x)
    for m in ms:
        if m % ell == 0:
            continue
        M = brandt_matrix(cl, m).entries
        res = None
        for w in ([sum(M[i][j] * v[j] for j in range(cl.s)) for i in range(cl.s)],
                  [sum(v[j] * M[j][i] for j in range(cl.s)) for i in range(cl.s)]):
            a = Fraction(w[k], v[k])
            if all(x == a * y for x, y in zip(w, v)):
                res = a
                break
        out["eigen"][m] = res
    return out


# ---------------------------------------------------------------------------
# serialisation and cache

def class_data(classes, m_list=(1, 2, 3, 5, 7)):
    s = classes.s
    obj = {
        "ell": str(classes.B.ell),
        "level": str(classes.order.level),
        "s": str(s),
        "weights": [str(w) for w in classes.weights],
        "gram_matrices": [[[str(v) for v in r] for r in EichlerOrder(classes.B, L, 0, None).gram]
                          for L in classes.left_orders],
        "brandt": {},
    }
    for m in m_list:
        Bm = brandt_matrix(classes, m)
        obj["brandt"][str(m)] = [[str(v) for v in r] for r in Bm.entries]
    return obj


def dumps(classes, m_list=(1, 2, 3, 5, 7)):
    return json.dumps(class_data(classes, m_list), sort_keys=True)


_memo = {}


def _serialize_classes(cl):
    rows = lambda L: [[str(v) for v in r] for r in L.rows]
    return {
        "tag": FORMAT_TAG,
        "ell": cl.B.ell, "a": cl.B.a, "b": cl.B.b, "level": cl.order.level,
        "order": rows(cl.order.lattice), "maximal": rows(cl.order.maximal),
        "ideals": [rows(I) for I in cl.ideals], "norms": [str(n) for n in cl.norms],
    }


def _restore_classes(obj):
    B = QuaternionAlgebra(obj["a"], obj["b"], obj["ell"])
    lat = lambda rows: Lattice([[Fraction(v) for v in r] for r in rows])
    O = EichlerOrder(B, lat(obj["order"]), obj["level"], lat(obj["maximal"]))
    ideals = [lat(r) for r in obj["ideals"]]
    lefts = [left_order(B, I) for I in ideals]
    units = [unit_group(B, L) for L in lefts]
    return IdealClassSet(O, ideals, [Fraction(n) for n in obj["norms"]], lefts, units,
                         _neighbour_prime(B, O.level))


def classes_for(ell, level=6, cache_dir=None):
    """ideal classes of the level-N Eichler order in B_{ell,oo}, memoised and
    optionally cached on disk under cache_dir/brandt/."""
    key = (ell, level)
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, "brandt", "classes_%d_%d.json" % (ell, level))
    cl = _memo.get(key)
    if cl is None and path and os.path.exists(path):
        try:
            with open(path) as fh:
                obj = json.load(fh)
            if obj.get("tag") == FORMAT_TAG:
                cl = _restore_classes(obj)
                if cl.mass != expected_mass(ell, level):
                    cl = None
        except (ValueError, KeyError):
            cl = None
    if cl is None:
        cl = ideal_classes(eichler_order(algebra(ell), level))
    if path and not os.path.exists(path):
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + ".tmp%d" % os.getpid()
        with open(tmp, "w") as fh:
            json.dump(_serialize_classes(cl), fh)
        os.replace(tmp, path)
    _memo[key] = cl
    return cl
