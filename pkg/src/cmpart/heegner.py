"""Discriminants 1 - 24n and Gamma_0(6) Heegner form classes.

Forms [a,b,c] with 6 | a, b = 1 mod 12.  Under the Heegner condition these
classes are in bijection with SL2(Z) classes, so we dedupe by Gauss reduction.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from flint import acb, arb, ctx, fmpz


class InvalidInput(ValueError):
    pass


def factorize(n):
    n = abs(n)
    out = {}
    for p, e in (fmpz(n).factor() if n > 1 else []):
        out[int(p)] = int(e)
    return out


def is_fundamental(D):
    if D % 4 == 1:
        return all(e == 1 for e in factorize(D).values())
    if D % 4 == 0:
        m = D // 4
        if m % 4 in (2, 3):
            return all(e == 1 for e in factorize(m).values())
    return False


@dataclass(frozen=True)
class Discriminant:
    n: int
    delta: int
    fundamental_part: int
    conductor: int
    factorization: tuple  # ((p, e), ...)


def discriminant_for(n) -> Discriminant:
    if not isinstance(n, int) or n < 1:
        raise InvalidInput("n must be a positive integer, got %r" % (n,))
    D = 1 - 24 * n
    fac = factorize(D)
    # D = 1 mod 4, so D0 = 1 mod 4 and f is odd
    f = 1
    for p, e in fac.items():
        f *= p ** (e // 2)
    D0 = D // (f * f)
    assert is_fundamental(D0)
    return Discriminant(n, D, D0, f, tuple(sorted(fac.items())))


@dataclass(frozen=True, order=True)
class QuadForm:
    a: int
    b: int
    c: int

    @property
    def disc(self):
        return self.b * self.b - 4 * self.a * self.c

    def __iter__(self):
        return iter((self.a, self.b, self.c))

    def __repr__(self):
        return "[%d,%d,%d]" % (self.a, self.b, self.c)


def sl2_reduce(q):
    """Gauss reduction. Returns (reduced form, matrix M in SL2(Z)) with q.M = red,
    where (q.M)(x,y) = q(M(x,y))."""
    a, b, c = q
    if b * b - 4 * a * c >= 0 or a <= 0:
        raise InvalidInput("form must be positive definite")
    M = [[1, 0], [0, 1]]
    while True:
        if b > a or b <= -a:
            # translate x -> x + k y
            k = (a - b) // (2 * a)
            c = a * k * k + b * k + c
            b = b + 2 * a * k
            M = [[M[0][0], M[0][0] * k + M[0][1]], [M[1][0], M[1][0] * k + M[1][1]]]
            continue
        if a > c or (a == c and b < 0):
            # S: (x,y) -> (-y, x)
            a, b, c = c, -b, a
            M = [[M[0][1], -M[0][0]], [M[1][1], -M[1][0]]]
            continue
        break
    return QuadForm(a, b, c), M


def act(q, M):
    a, b, c = q
    (p, r), (s, t) = M
    return QuadForm(a * p * p + b * p * s + c * s * s,
                    2 * a * p * r + b * (p * t + r * s) + 2 * c * s * t,
                    a * r * r + b * r * t + c * t * t)


def reduced_forms(D, primitive=True):
    """Reduced forms of discriminant D < 0 (brute force), primitive ones only
    unless primitive=False."""
    out = []
    amax = isqrt(-D // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if not primitive or gcd(gcd(a, b), c) == 1:
                out.append(QuadForm(a, b, c))
    return out


def class_number(d, primitive=True) -> int:
    D = d.delta if isinstance(d, Discriminant) else d
    return len(reduced_forms(D, primitive))


_class_cache = {}


def enumerate_classes(d, primitive=True):
    """One [a,b,c] (6|a, b = 1 mod 12) per class, sorted by (a,b).  With
    primitive=False the non-primitive forms g*Q' (g^2 | Delta) are included;
    the trace identity for non-fundamental Delta needs those too."""
    if not isinstance(d, Discriminant):
        d = discriminant_for(d)
    key = (d.delta, primitive)
    if key in _class_cache:
        return list(_class_cache[key])
    D = d.delta
    h = class_number(d, primitive)
    found = {}
    # minimal a first, then smallest b >= 0 in the residue class
    for a in range(6, 6 * abs(D) + 1, 6):
        for b in range(1, 2 * a, 12):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if primitive and gcd(gcd(a, b), c) != 1:
                continue
            r, _ = sl2_reduce(QuadForm(a, b, c))
            if r not in found:
                found[r] = QuadForm(a, b, c)
        if len(found) == h:
            break
    if len(found) != h:
        raise RuntimeError("scan exhausted before finding all %d classes for D=%d" % (h, D))
    reps = sorted(found.values(), key=lambda f: (f.a, f.b))
    _class_cache[key] = tuple(reps)
    return reps


@dataclass(frozen=True)
class CMPoint:
    form: QuadForm
    value: acb
    imag_lower_bound: tuple  # (num_sq, den): Im = sqrt(num_sq)/den exactly

    @property
    def imag_lower(self) -> float:
        return (self.imag_lower_bound[0] ** 0.5) / self.imag_lower_bound[1]


def cm_point(q, bits=256):
    a, b, c = q
    D = b * b - 4 * a * c
    old = ctx.prec
    ctx.prec = bits + 20
    try:
        val = (acb(-b) + acb(0, arb(-D).sqrt())) / (2 * a)
    finally:
        ctx.prec = old
    return CMPoint(QuadForm(a, b, c), val, (-D, 2 * a))


def kronecker(D, p):
    """(D/p) for an odd prime p."""
    r = D % p
    if r == 0:
        return 0
    return 1 if pow(r, (p - 1) // 2, p) == 1 else -1


def is_prime(n):
    if n < 2:
        return False
    return fmpz(n).is_prime()


def auto_inert_prime(D, start=5):
    p = start
    while True:
        if is_prime(p) and kronecker(D, p) == -1:
            return p
        p += 1
