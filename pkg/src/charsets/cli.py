"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (or a failed certificate check),
2 budget or precision exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import List, Optional

from . import torus
from .characterizer import (Budget, CertificateError, CoveringCertificate, CoveringFailure,
                            Tower, build_tower, characterize, verify_certificate,
                            verify_certificates)
from .charset import CharSet
from .classic import (cyclic_cf_charset, factorial_charset, factorial_expand, prufer_charset,
                      witness_pairs)
from .fsigma import ChainError, ChainSpec, check_condition_c, partition_B, refutation_witness, \
    verify_refutation
from .lattice import UnsupportedSubgroup, annihilator, closure, snf
from .quasiconvex import char_window, quasi_hull
from .torus import (SUP, WEIGHTED, PrecisionExhausted, Quadratic, _split_top, format_character,
                    format_circle, format_point, parse_circle, parse_point)
from .verifier import measure_profile, monte_carlo_measure, tail_profile

EXIT_OK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2


@dataclass
class RunConfig:
    subcommand: str
    dim: int = 1
    levels: int = 8
    precision_cap: int = torus.PRECISION_CAP
    pool: int = 16
    max_pool: int = 4096
    max_depth: int = 14
    seed: int = 0
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def check(self):
        for name in ("levels", "precision_cap", "pool", "max_pool", "max_depth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"--{name.replace('_', '-')} must be positive")

    @property
    def budget(self) -> Budget:
        return Budget(pool=self.pool, max_pool=self.max_pool, max_depth=self.max_depth)


class InputError(ValueError):
    pass


# -- I/O helpers ------------------------------------------------------------

def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(obj, path: Optional[str] = None):
    text = _dump(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(text_or_path: str, what: str):
    src = text_or_path
    if not text_or_path.lstrip().startswith(("{", "[")):
        if not os.path.exists(text_or_path):
            raise InputError(f"{what}: no such file {text_or_path!r}")
        with open(text_or_path) as fh:
            src = fh.read()
    try:
        return json.loads(src)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: malformed JSON at line {exc.lineno} column {exc.colno}: "
                         f"{exc.msg}") from exc


def _field(obj, key, what):
    if not isinstance(obj, dict) or key not in obj:
        raise InputError(f"{what}: missing field {key!r}")
    return obj[key]


def parse_charset(text: str, dim: int = 1) -> CharSet:
    """factorial:N | prufer:p:N | cf:K:<quadratic> | list:a,b,... | JSON file."""
    head, _, rest = text.partition(":")
    if head == "factorial":
        return factorial_charset(int(rest))
    if head == "prufer":
        p, _, n = rest.partition(":")
        return prufer_charset(int(p), int(n))
    if head == "cf":
        k, _, alpha = rest.partition(":")
        a = parse_circle(alpha, reduce=False)
        if not isinstance(a, Quadratic):
            raise InputError("cf: needs a quadratic irrational such as sqrt(2):-1,1,1")
        return cyclic_cf_charset(a, int(k))
    if head == "list":
        return CharSet(tuple(((int(v),),) for v in rest.split(",") if v.strip()), 1)
    obj = _load_json(text, "--B")
    levels = _field(obj, "levels", "--B")
    if not isinstance(levels, list) or not all(isinstance(lv, list) for lv in levels):
        raise InputError("--B: field 'levels' must be a list of lists")
    return CharSet.from_json(obj)


def parse_points(text: str) -> List[tuple]:
    if text.lstrip().startswith("["):
        return [parse_point(p) for p in json.loads(text)]
    return [parse_point(p) for p in _split_top(text)]


# -- subcommands ------------------------------------------------------------

def cmd_characterize(args, cfg: RunConfig):
    obj = _load_json(args.tower, "--tower")
    if isinstance(obj, dict):
        obj.setdefault("dim", args.dim)
        if "generators" in obj:
            obj.setdefault("levels", args.levels)
    try:
        tower = Tower.from_json(obj)
    except KeyError as exc:
        raise InputError(f"--tower: missing field {exc.args[0]!r}") from exc
    metric = WEIGHTED if args.metric == "weighted" else SUP
    result = characterize(tower, args.levels, metric, cfg.budget)
    out = result.charset.to_json()
    out["seed"] = cfg.seed
    out["mode"] = result.mode
    out["complete"] = result.complete
    certs = result.certs_json()
    certs["seed"] = cfg.seed
    _emit(out, args.out)
    if args.certs:
        _emit(certs, args.certs)
    return EXIT_OK


def cmd_qhull(args, cfg):
    E = parse_points(args.E)
    w = char_window(E, args.m)
    h = quasi_hull(E, args.m, w)
    out = h.to_json()
    out["residues"] = w.to_json().get("residues")
    _emit(out, args.out)
    return EXIT_OK


def cmd_verify(args, cfg):
    B = parse_charset(args.B, cfg.dim)
    x = parse_point(args.x)
    prof = tail_profile(x, B, args.N, W=args.W, windowed=args.windowed)
    out = prof.to_json()
    out["seed"] = cfg.seed
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(prof.to_csv())
    _emit(out, args.out)
    return EXIT_OK


def cmd_measure(args, cfg):
    B = parse_charset(args.B, cfg.dim)
    delta = Fraction(args.delta)
    reports = measure_profile(B, delta, args.levels)
    last = reports[-1] if reports else None
    out = {"delta": format_circle(delta), "seed": cfg.seed,
           "measure": format_circle(last.measure) if last else "1",
           "levels": [{"level": B.start + i, "N": r.N, "measure": format_circle(r.measure)}
                      for i, r in enumerate(reports)]}
    if args.samples:
        chars = list(B.prefix(args.levels) if args.levels else B)
        est, se = monte_carlo_measure(chars, delta, args.samples, cfg.seed)
        out["monte_carlo"] = {"estimate": est, "stderr": se, "samples": args.samples}
    _emit(out, args.out)
    return EXIT_OK


def cmd_perp(args, cfg):
    H = parse_points(args.H)
    basis = annihilator(H)
    N = closure(H)
    _emit({"perp": [format_character(p) for p in basis],
           "invariant_factors": list(N.invariant_factors), "torus_rank": N.torus_rank,
           "order": N.order if N.is_finite else "inf"}, args.out)
    return EXIT_OK


def cmd_snf(args, cfg):
    M = _load_json(args.M, "--M")
    try:
        M = [[int(v) for v in row] for row in M]
    except (TypeError, ValueError) as exc:
        raise InputError("--M: expected a list of integer rows") from exc
    if not M or not M[0] or any(len(r) != len(M[0]) for r in M):
        raise InputError("--M: rows must be nonempty and of equal length")
    U, D, V = snf(M)
    s = lambda A: [[str(v) for v in row] for row in A]
    _emit({"U": s(U), "D": s(D), "V": s(V)}, args.out)
    return EXIT_OK


def _chain(path):
    obj = _load_json(path, "--chain")
    try:
        return ChainSpec.from_json(obj)
    except KeyError as exc:
        raise InputError(f"--chain: missing field {exc.args[0]!r}") from exc


def cmd_refute(args, cfg):
    chain = _chain(args.chain)
    B = parse_charset(args.B, chain.dim) if args.B else CharSet((), chain.dim)
    ref = refutation_witness(chain, B, args.levels)
    check = verify_refutation(ref)
    out = ref.to_json()
    out["verified"] = check.ok
    out["failures"] = list(check.failures)
    _emit(out, args.out)
    return EXIT_OK if check.ok else EXIT_INPUT


def cmd_expand(args, cfg):
    x = parse_circle(args.x)
    fd = factorial_expand(x, args.N)
    out = {"x": format_circle(x), "digits": list(fd.digits), "exact": fd.exact}
    if args.witnesses:
        out["witnesses"] = [{"k": w.k, "n": w.n, "norm": str(w.value)}
                            for w in witness_pairs(x, args.N, args.require_digit)]
    _emit(out, args.out)
    return EXIT_OK


def cmd_check_chain(args, cfg):
    chain = _chain(args.chain)
    out = check_condition_c(chain).to_json()
    if args.B:
        out["partition"] = partition_B(parse_charset(args.B, chain.dim), chain).to_json()
    _emit(out, args.out)
    return EXIT_OK


def cmd_verify_cert(args, cfg):
    obj = _load_json(args.certs, "--certs")
    levels = _field(obj, "levels", "--certs")
    certs = []
    for i, c in enumerate(levels):
        try:
            certs.append(CoveringCertificate.from_json(c))
        except KeyError as exc:
            raise InputError(f"--certs: levels[{i}] missing field {exc.args[0]!r}") from exc
    for cert in certs:
        try:
            verify_certificate(cert, deep=args.deep)
        except CertificateError as exc:
            print(f"level {cert.n}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        verify_certificates(certs)
    except CertificateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit({"verified": True, "levels": len(levels)}, args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="charsets", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision-cap", type=int, default=torus.PRECISION_CAP)
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", default=None, help="output file (default stdout)")
        # accepted after the subcommand as well
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--precision-cap", type=int, default=argparse.SUPPRESS)
        return sp

    sp = add("characterize", cmd_characterize, "build B and covering certificates for a tower")
    sp.add_argument("--tower", required=True, help="tower JSON file or inline JSON")
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--levels", type=int, default=8)
    sp.add_argument("--certs", default=None)
    sp.add_argument("--metric", choices=["sup", "weighted"], default="sup")
    sp.add_argument("--pool", type=int, default=16)
    sp.add_argument("--max-pool", type=int, default=4096)
    sp.add_argument("--max-depth", type=int, default=14)

    sp = add("qhull", cmd_qhull, "quasi-convex hull q_m(E)")
    sp.add_argument("--E", required=True, help='points, e.g. "1/5" or "(1/2,1/3),(0,1/2)"')
    sp.add_argument("--m", type=int, default=0)

    sp = add("verify", cmd_verify, "tail profile of x against B")
    sp.add_argument("--B", required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--N", type=int, default=40)
    sp.add_argument("--W", type=int, default=3)
    sp.add_argument("--windowed", action="store_true")
    sp.add_argument("--csv", default=None)
    sp.add_argument("--dim", type=int, default=1)

    sp = add("measure", cmd_measure, "exact measure of the delta-sublevel set")
    sp.add_argument("--B", required=True)
    sp.add_argument("--delta", required=True)
    sp.add_argument("--levels", type=int, default=None)
    sp.add_argument("--samples", type=int, default=0, help="also run a Monte-Carlo estimate")
    sp.add_argument("--dim", type=int, default=1)

    sp = add("perp", cmd_perp, "annihilator basis and closure structure")
    sp.add_argument("--H", required=True)

    sp = add("snf", cmd_snf, "Smith normal form")
    sp.add_argument("--M", required=True, help="JSON matrix or file")

    sp = add("refute", cmd_refute, "witness point against a chain with infinite indices")
    sp.add_argument("--chain", required=True)
    sp.add_argument("--B", default=None)
    sp.add_argument("--levels", type=int, default=None)

    sp = add("expand", cmd_expand, "factorial digits and witness pairs")
    sp.add_argument("--x", required=True)
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--witnesses", action="store_true")
    sp.add_argument("--require-digit", action="store_true")

    sp = add("check-chain", cmd_check_chain, "finite-index condition for a chain")
    sp.add_argument("--chain", required=True)
    sp.add_argument("--B", default=None)

    sp = add("verify-cert", cmd_verify_cert, "re-check covering certificates")
    sp.add_argument("--certs", required=True)
    sp.add_argument("--deep", action="store_true", help="also recompute each hull")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    cfg = RunConfig(args.cmd, getattr(args, "dim", 1) or 1,
                    getattr(args, "levels", None) or 8, args.precision_cap,
                    getattr(args, "pool", 16), getattr(args, "max_pool", 4096),
                    getattr(args, "max_depth", 14), args.seed)
    try:
        cfg.check()
        torus.PRECISION_CAP = cfg.precision_cap
        return args.fn(args, cfg)
    except (CoveringFailure, PrecisionExhausted, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if getattr(args, "out", None):
            # flag the run as partial rather than leaving a stale file behind
            _emit({"partial": True, "error": str(exc), "seed": cfg.seed}, args.out)
        return EXIT_BUDGET
    except (InputError, ChainError, UnsupportedSubgroup, ValueError, KeyError, TypeError,
            ZeroDivisionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
