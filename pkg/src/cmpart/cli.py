"""command line front end: python -m cmpart <command> ...

exit codes: 0 ok, 2 usage, 3 precision failure, 4 consistency failure.
"""
import argparse
import json
import os
import sys

from . import brandt, heegner, modpoly, partition, ss_reduce
from .cm_trace import class_polynomial, trace
from .heegner import InvalidInput, kronecker
from .qseries import ConsistencyFailure, PrecisionFailure

EXIT_OK, EXIT_USAGE, EXIT_PRECISION, EXIT_CONSISTENCY = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _cache_dir(args):
    d = args.cache_dir or os.environ.get("CMPART_CACHE")
    if d and os.path.exists(d) and not os.path.isdir(d):
        raise UsageError("cache dir %s is not a directory" % d)
    return d


def _emit(args, obj, human):
    if args.json:
        print(json.dumps(obj, sort_keys=True))
    else:
        for line in human:
            print(line)


def _s(x):
    return None if x is None else str(x)


def _fq(F, x):
    return None if x is None else [str(x[0]), str(x[1])]


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("not an integer: %r" % text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1, got %d" % v)
    return v


def _prime(text):
    v = _positive(text)
    if v < 5 or not heegner.is_prime(v):
        raise argparse.ArgumentTypeError("need a prime >= 5, got %d" % v)
    return v


# --------------------------------------------------------------------------

def cmd_compute(args):
    n = args.n
    d = heegner.discriminant_for(n)
    oracle = partition.euler_p(n)
    tr = trace(n, args.bits)
    if tr.p_of_n != oracle:
        raise ConsistencyFailure("trace gives p(%d) = %d, recurrence gives %d" % (n, tr.p_of_n, oracle))
    ell = args.ell or heegner.auto_inert_prime(d.delta)
    if kronecker(d.delta, ell) != -1:
        raise InvalidInput("%d is not inert in Q(sqrt(%d))" % (ell, d.delta))
    rep = ss_reduce.fiber_match(n, ell)
    ok, rep = ss_reduce.verify_ss_trace(n, ell, rep)
    ss_val = rep.extra.get("p_mod_l_ss")
    if not ok:
        raise ConsistencyFailure("supersingular trace gives %s, expected %d mod %d" % (ss_val, oracle % ell, ell))
    dot_val, dot_note = None, None
    if rep.extra["well_defined"]:
        ok, rep = ss_reduce.verify_dot_product(n, ell, rep)
        if not ok:
            raise ConsistencyFailure("Brandt pairing disagrees with p(%d) mod %d" % (n, ell))
        c = rep.extra["normalization"]
        S = rep.extra["dot_values"][0]
        dot_val = (-S[0] * pow(c * d.delta, -1, ell)) % ell
    else:
        dot_note = "reduced P not constant on some fiber; pairing undefined"
    gross = brandt.gross_eigen_check(ell, d.delta, (2, 3, 5, 7))
    bad = [m for m, a in gross["eigen"].items() if a is None]
    obj = {
        "n": str(n), "delta": str(d.delta),
        "p_oracle": str(oracle), "trace": str(tr.exact_trace), "p_trace": str(tr.p_of_n),
        "ell": str(ell), "p_mod_ell_ss": _s(ss_val), "p_mod_ell_pairing": _s(dot_val),
        "pairing_note": dot_note, "fibers_well_defined": rep.extra["well_defined"],
        "gross_vector": [str(x) for x in gross["vector"]],
        "gross_eigenvalues": {str(m): _s(a) for m, a in gross["eigen"].items()},
        "bits_used": str(tr.bits_used),
    }
    human = [
        "p(%d) = %d   (pentagonal recurrence)" % (n, oracle),
        "trace over Delta = %d: %d = %d * %d   -> p = %d" % (d.delta, tr.exact_trace, 24 * n - 1, tr.p_of_n, tr.p_of_n),
        "ell = %d (inert): supersingular trace gives p = %s mod %d" % (ell, ss_val, ell),
        ("                 Brandt pairing gives p = %s mod %d" % (dot_val, ell)) if dot_note is None
        else "                 Brandt pairing: %s" % dot_note,
        "Gross vector at level 1: %s, eigenvalues %s" % (gross["vector"], {m: _s(a) for m, a in gross["eigen"].items()}),
    ]
    _emit(args, obj, human)
    if bad:
        print("Gross vector is not a Hecke eigenvector for m = %s" % bad, file=sys.stderr)
        return EXIT_CONSISTENCY
    return EXIT_OK


def cmd_classpoly(args):
    H = class_polynomial(args.n, args.bits)
    if args.json:
        print(H.to_json())
        return EXIT_OK
    print("n = %d, Delta = %d, h = %d, trace = %d, p = %d" % (H.n, H.delta, H.h, H.trace, H.p_of_n))
    print("H(x) =", " + ".join("(%s)x^%d" % (c, k) for k, c in reversed(list(enumerate(H.rational_coeffs)))))
    print("|Delta| H(x) in Z[x]:", [int(c) for c in reversed(H.scaled_coeffs)])
    return EXIT_OK


def cmd_reduce(args):
    n, ell = args.n, args.ell
    d = heegner.discriminant_for(n)
    k = kronecker(d.delta, ell)
    fac = ss_reduce.reduce_class_polynomial(n, ell)
    obj = {"n": str(n), "ell": str(ell), "delta": str(d.delta), "kronecker": str(k),
           "factorization": fac.pretty()}
    human = ["|Delta| H_%d mod %d = %s" % (n, ell, fac.pretty())]
    status = EXIT_OK
    if k == 1:
        human.append("%d splits: no supersingular reduction" % ell)
    elif k == -1:
        rep = ss_reduce.fiber_match(n, ell)
        F = ss_reduce.FiniteFieldModel(ell)
        ok, rep = ss_reduce.verify_ss_trace(n, ell, rep)
        obj["report"] = rep.to_json_obj()
        obj["fibers_well_defined"] = rep.extra["well_defined"]
        human.append("h_fiber = %s" % rep.h_fiber)
        human.append("P~ = %s" % [None if v is None else F.label(v) for v in rep.v_P])
        human.append("supersingular trace verdict: %s" % ok)
        status = EXIT_OK if ok else EXIT_CONSISTENCY
        if rep.extra["well_defined"]:
            ok2, rep = ss_reduce.verify_dot_product(n, ell, rep)
            obj["report"] = rep.to_json_obj()
            obj["pairing_normalization"] = str(rep.extra["normalization"])
            obj["pairing_literal"] = rep.extra["literal"]
            human.append("Brandt pairing verdict: %s (normalization %d, literal %s)"
                         % (ok2, rep.extra["normalization"], rep.extra["literal"]))
            if not ok2:
                status = EXIT_CONSISTENCY
        else:
            human.append("fibers with several reduced P values: %s"
                         % [[F.label(v) for v in f] for f in rep.extra["fibers"] if len(set(f)) > 1])
            status = EXIT_CONSISTENCY
    else:
        if ell not in (5, 7, 11):
            raise InvalidInput("ramified check implemented for ell in 5, 7, 11")
        g = ss_reduce.ramified_grouping_check(n, ell)
        obj["ramified"] = {k2: (v if isinstance(v, bool) else
                                [str(x) for x in v] if isinstance(v, list) else str(v))
                           for k2, v in g.items()}
        human.append("h_fiber = %s, p divisible: %s, fibers divisible: %s"
                     % (g["h_fiber"], g["p_divisible"], g["fibers_divisible"]))
        if not (g["roots_in_F_l2"] and g["p_divisible"] and g["fibers_divisible"]):
            status = EXIT_CONSISTENCY
    _emit(args, obj, human)
    return status


def cmd_brandt(args):
    cl = brandt.classes_for(args.ell, args.level, _cache_dir(args))
    ms = args.m or [1, 2, 3, 5]
    for m in ms:
        if m < 1:
            raise UsageError("m must be positive")
    obj = brandt.class_data(cl, ms)
    status = EXIT_OK
    if args.check:
        chk = brandt.check_brandt_structure(cl, args.check)
        obj["checks"] = {k: bool(v) for k, v in chk.items()}
        if not all(chk.values()):
            status = EXIT_CONSISTENCY
    human = ["ell = %d, level = %d, s = %d, weights = %s, mass = %s"
             % (args.ell, args.level, cl.s, cl.weights, cl.mass)]
    for m in ms:
        human.append("B(%d) =" % m)
        human.extend("  " + " ".join("%4s" % x for x in row) for row in brandt.brandt_matrix(cl, m).entries)
    if args.check:
        human.append("checks: %s" % obj["checks"])
    _emit(args, obj, human)
    return status


def cmd_sweep(args):
    ell, j = args.ell, args.j
    if ell not in (5, 7, 11):
        raise UsageError("ell must be 5, 7 or 11")
    ok, bad = partition.congruence_sweep(ell, j, args.n_max, _cache_dir(args))
    M = partition.congruence_modulus(ell, j)
    beta = partition.beta_residue(ell, j)
    obj = {"ell": str(ell), "j": str(j), "modulus": str(M), "beta": str(beta),
           "n_max": str(args.n_max), "ok": ok, "counterexamples": [str(x) for x in bad[:20]]}
    human = ["p(%d n + %d) = 0 mod %d for 0 <= n <= %d: %s"
             % (ell ** j, beta, M, args.n_max, "ok" if ok else "FAILS at %s" % bad[:20])]
    _emit(args, obj, human)
    return EXIT_OK if ok else EXIT_CONSISTENCY


def cmd_modeq(args):
    eq = modpoly.level6_modular_equation(args.ell, args.terms, strict_wa=args.strict_wa,
                                         cache_dir=_cache_dir(args))
    rep = eq.content_report()
    obj = {"ell": str(args.ell), "degree_y": str(eq.degree_y), "degree_x": str(eq.degree_x),
           "monic": eq.is_monic_in_y(), "certified_order": str(eq.certified_order),
           "content_valuations": [str(v) for v in rep["valuations"]],
           "A0_valuation": str(rep["A0_valuation"]), "A0_expected": str(rep["A0_expected"]),
           "coeffs": [[str(i), str(j), str(c)] for (i, j), c in sorted(eq.coeffs.items())]}
    human = ["level-6 modular equation for ell = %d: degree %d in Y, monic %s, vanishes to q^%d"
             % (args.ell, eq.degree_y, eq.is_monic_in_y(), eq.certified_order),
             "v_%d(content A_r), r = 0..%d: %s" % (args.ell, eq.degree_y, rep["valuations"]),
             "A_0: measured %s, expected %s" % (rep["A0_valuation"], rep["A0_expected"])]
    _emit(args, obj, human)
    return EXIT_OK if eq.is_monic_in_y() else EXIT_CONSISTENCY


# --------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine readable output")
    common.add_argument("--cache-dir", default=None, help="cache directory (or $CMPART_CACHE)")
    common.add_argument("--bits", type=_positive, default=None, help="starting working precision")

    p = argparse.ArgumentParser(prog="cmpart", description="partition values from CM traces and supersingular reduction")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", parents=[common], help="p(n) by recurrence, CM trace and supersingular reduction")
    c.add_argument("n", type=_positive)
    c.add_argument("--ell", type=_prime, default=None, help="inert prime (default: smallest one)")
    c.set_defaults(func=cmd_compute)

    c = sub.add_parser("classpoly", parents=[common], help="class polynomial of the P-values")
    c.add_argument("n", type=_positive)
    c.set_defaults(func=cmd_classpoly)

    c = sub.add_parser("reduce", parents=[common], help="reduction mod ell and the congruence verdicts")
    c.add_argument("n", type=_positive)
    c.add_argument("ell", type=_prime)
    c.set_defaults(func=cmd_reduce)

    c = sub.add_parser("brandt", parents=[common], help="ideal classes and Brandt matrices")
    c.add_argument("ell", type=_prime)
    c.add_argument("m", type=_positive, nargs="*")
    c.add_argument("--level", type=int, choices=(1, 6), default=6)
    c.add_argument("--check", type=_positive, nargs="?", const=20, default=None,
                   help="verify Brandt structure up to this m (default 20)")
    c.set_defaults(func=cmd_brandt)

    c = sub.add_parser("sweep", parents=[common], help="Ramanujan-type congruence sweep")
    c.add_argument("ell", type=int)
    c.add_argument("j", type=_positive, nargs="?", default=1)
    c.add_argument("--n-max", type=_positive, default=1000)
    c.set_defaults(func=cmd_sweep)

    c = sub.add_parser("modeq", parents=[common], help="level-6 modular equation")
    c.add_argument("ell", type=int, choices=(5, 7, 11))
    c.add_argument("--terms", type=_positive, default=200, help="certify vanishing to this q-order")
    c.add_argument("--strict-wa", action="store_true", help="require ell | content of A_0")
    c.set_defaults(func=cmd_modeq)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, InvalidInput) as e:
        print("usage error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    except PrecisionFailure as e:
        print("precision failure: %s" % e, file=sys.stderr)
        return EXIT_PRECISION
    except ConsistencyFailure as e:
        print("consistency failure: %s" % e, file=sys.stderr)
        return EXIT_CONSISTENCY


if __name__ == "__main__":
    sys.exit(main())
