"""Partition numbers from Euler's pentagonal recurrence, a binary table cache,
and sweeps of the Ramanujan-type congruences p(l^j n + beta) = 0."""
import hashlib
import os
import random
import struct
import threading

MAGIC = b"PTB2"

_lock = threading.Lock()
_table = [1]


def _pentagonal(limit):
    # generalized pentagonal numbers k(3k-1)/2, k = 1,-1,2,-2,... with signs
    out = []
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        if g1 > limit:
            break
        s = 1 if k % 2 else -1
        out.append((g1, s))
        g2 = k * (3 * k + 1) // 2
        if g2 <= limit:
            out.append((g2, s))
        k += 1
    return out


def _extend(table, n):
    pent = _pentagonal(n)
    for m in range(len(table), n + 1):
        acc = 0
        for g, s in pent:
            if g > m:
                break
            if s > 0:
                acc += table[m - g]
            else:
                acc -= table[m - g]
        table.append(acc)
    return table


def partition_table(n):
    """p(0..n) as a list (shared, do not mutate)."""
    global _table
    if len(_table) <= n:
        with _lock:
            if len(_table) <= n:
                t = list(_table)
                _extend(t, n)
                _table = t
    return _table


def euler_p(n):
    if n < 0:
        raise ValueError("n must be >= 0")
    return partition_table(n)[n]


def check_recurrence(vals, samples=None, seed=0):
    """Re-verify p(0)=1 and the pentagonal recurrence on a loaded table.

    samples=None checks every entry; otherwise only the first 200 entries,
    the last one and `samples` random indices."""
    if not vals or vals[0] != 1:
        return False
    n = len(vals) - 1
    if samples is None:
        idx = range(1, n + 1)
    else:
        rng = random.Random(seed)
        idx = set(range(1, min(n, 200) + 1)) | {n} | {rng.randint(1, n) for _ in range(samples)}
        idx.discard(0)
    pent = _pentagonal(n)
    for m in idx:
        acc = 0
        for g, s in pent:
            if g > m:
                break
            acc += vals[m - g] if s > 0 else -vals[m - g]
        if acc != vals[m]:
            return False
    return True


# --- binary cache -------------------------------------------------------

# layout: MAGIC, u64 count, 32-byte sha256 of the body, body of
# (u32 nbytes, little-endian integer) records

def save_table(path, vals):
    parts = []
    for v in vals:
        nb = (v.bit_length() + 7) // 8 or 1
        parts.append(struct.pack("<I", nb))
        parts.append(v.to_bytes(nb, "little"))
    body = b"".join(parts)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(vals)))
        fh.write(hashlib.sha256(body).digest())
        fh.write(body)
    os.replace(tmp, path)


def load_table(path, verify=True, samples=64):
    """Read a table; verify checks the digest and spot-checks the recurrence
    (samples=None re-checks every entry)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError("bad magic in %s" % path)
    (count,) = struct.unpack_from("<Q", data, 4)
    digest = data[12:44]
    body = memoryview(data)[44:]
    if hashlib.sha256(body).digest() != digest:
        raise ValueError("partition cache digest mismatch")
    pos = 44
    vals = []
    for _ in range(count):
        (nb,) = struct.unpack_from("<I", data, pos)
        pos += 4
        vals.append(int.from_bytes(data[pos:pos + nb], "little"))
        pos += nb
    if pos != len(data):
        raise ValueError("trailing bytes in %s" % path)
    if verify and not check_recurrence(vals, samples):
        raise ValueError("partition cache fails recurrence check")
    return vals


def cached_table(n, cache_dir=None):
    """Table up to n, read from / written to cache_dir/ptable.bin when given."""
    global _table
    if cache_dir is None:
        return partition_table(n)
    path = os.path.join(cache_dir, "ptable.bin")
    have = 0
    if os.path.exists(path):
        try:
            with open(path, "rb") as fh:
                head = fh.read(12)
            if head[:4] == MAGIC:
                (have,) = struct.unpack_from("<Q", head, 4)
        except (OSError, struct.error):
            have = 0
    if have > n and len(_table) > n:
        return _table
    if have > n:
        try:
            vals = load_table(path)
        except (ValueError, struct.error):
            vals = []
        if len(vals) > n:
            with _lock:
                if len(vals) > len(_table):
                    _table = vals
            return _table
    vals = partition_table(n)
    os.makedirs(cache_dir, exist_ok=True)
    save_table(path, vals[: n + 1])
    return vals


# --- congruences --------------------------------------------------------

def beta_residue(m, j):
    """0 <= beta < m^j with 24 beta = 1 mod m^j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    mod = m ** j
    if m < 2 or 24 % m == 0 or mod % 2 == 0 or mod % 3 == 0:
        raise ValueError("need gcd(24, m) = 1")
    return pow(24, -1, mod)


def congruence_modulus(ell, j):
    if ell == 7:
        return 7 ** (j // 2 + 1)
    return ell ** j


def congruence_sweep(ell, j, n_max, cache_dir=None):
    """Check p(ell^j n + beta) = 0 mod M for 0 <= n <= n_max.

    Returns (ok, counterexamples) where counterexamples lists the failing n."""
    if ell not in (5, 7, 11):
        raise ValueError("ell must be 5, 7 or 11")
    beta = beta_residue(ell, j)
    step = ell ** j
    M = congruence_modulus(ell, j)
    top = step * n_max + beta
    tab = cached_table(top, cache_dir)
    bad = [n for n in range(n_max + 1) if tab[step * n + beta] % M]
    return (not bad), bad
