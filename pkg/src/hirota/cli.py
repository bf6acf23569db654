"""Command-line front end.

Every subcommand builds a report dictionary, prints it as a table (or as
JSON with ``--json``) and exits with

    0  success, expectations met
    1  an expectation was not met
    2  usage error (bad flags, unparsable expression, unknown corpus entry)
    3  numerical failure (degenerate conic, failed sampling, ...)

Grid dumps written by ``reduce --dump FILE`` are whitespace separated
columns with one grid node per line.  The header line starts with ``#`` and
names the columns: ``R1..Rn`` (node coordinates), the base fields
``a b c p q r`` (``r`` is ``u33``), ``mu1..mun``, ``lam1..lamn``,
``A1..An``, the dispersion residual of each component and the smallest
``|D_ij|`` at the node.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .corpus import CorpusEntry, load_corpus
from .dispersion import _as_rng, check_nondegenerate, Snapshot
from .expr import EVOLUTIONARY_VARS, HESSIAN_VARS, ExprError, UnknownIdentifierError, parse
from .geometry import geometry_report
from .integrability import (
    INTEGRABLE_TOL,
    NON_INTEGRABLE_TOL,
    evolutionary_to_implicit,
    sample_point,
    test_integrability,
    test_integrability_implicit,
)
from .mongeampere import (
    COEFF_NAMES,
    MACoeffs,
    eliminate_minors,
    heavenly_travelling_wave,
    quartic,
    reduced_on_slice,
)
from .reductions import ReductionError, bisecant_check, gt_integrate
from .symplectic import JetPoint21, SamplingError, prolong_orbit_rank, symmetry_dimension

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# defaults echoed into every report
CONFIG = {
    "seed": 1,
    "tol": INTEGRABLE_TOL,
    "tol_non_integrable": NON_INTEGRABLE_TOL,
    "points": 5,
    "triples": 100,
    "symmetry_samples": 60,
    "geometry_det_tol": 1e-8,
    "geometry_relation_tol": 1e-7,
    "grid_dispersion_tol": 1e-5,
    "grid_rank_tol": 1e-4,
}


class UsageError(Exception):
    pass


class Mismatch(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _entry(args) -> CorpusEntry:
    corpus = load_corpus(getattr(args, "file", None))
    if args.corpus not in corpus:
        raise UsageError(f"unknown corpus entry {args.corpus!r}; known: {', '.join(sorted(corpus))}")
    return corpus[args.corpus]


def _equation(args) -> tuple[str, object, CorpusEntry | None]:
    """``(kind, Expr, entry)`` from ``--expr`` or ``--corpus``."""
    if args.corpus is not None:
        e = _entry(args)
        return e.kind, e.equation(), e
    if args.expr is None:
        raise UsageError("give --expr or --corpus")
    try:
        try:
            return "evolutionary", parse(args.expr, EVOLUTIONARY_VARS), None
        except UnknownIdentifierError:
            return "implicit", parse(args.expr, HESSIAN_VARS), None
    except ExprError as exc:
        raise UsageError(f"cannot parse expression: {exc}") from exc


def _verdict(kind, eq, entry, args, **kw):
    box = {k: tuple(v) for k, v in entry.box.items()} if entry else {}
    run = test_integrability if kind == "evolutionary" else test_integrability_implicit
    return run(eq, args.points, args.seed, n_triples=args.triples, box=box,
               tol_int=args.tol, **kw)


def _verdict_record(v) -> dict:
    return {"status": v.status, "max_relative_residual": v.max_relative_residual,
            "points_tested": v.points_tested, "max_thirds_mismatch": v.max_thirds_mismatch,
            "reason": v.reason}


def _base_points(eq, entry, n, seed) -> list[dict]:
    rng = _as_rng(seed)
    box = dict(entry.box) if entry else {}
    out = []
    for _ in range(50 * n):
        if len(out) == n:
            break
        base = sample_point(box, rng, EVOLUTIONARY_VARS)
        try:
            check_nondegenerate(Snapshot.from_expr(eq, base, with_third=False))
        except ArithmeticError:
            continue
        out.append(base)
    if len(out) < n:
        raise ArithmeticError("could not find enough nondegenerate base points")
    return out


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"expected comma separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} numbers, got {len(vals)}")
    return vals


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args) -> dict:
    kind, eq, entry = _equation(args)
    v = _verdict(kind, eq, entry, args, solve=False)
    rec = {"equation": str(eq), "form": kind, **_verdict_record(v)}
    if v.status == "unsupported":
        raise ArithmeticError(v.reason or "no usable base points")
    expected = args.expect
    if expected is None and entry is not None and entry.integrable is not None:
        expected = "integrable" if entry.integrable else "not_integrable"
    rec["expected"] = expected
    if expected is not None and v.status != expected:
        raise Mismatch(rec)
    return rec


def cmd_thirds(args) -> dict:
    kind, eq, entry = _equation(args)
    v = _verdict(kind, eq, entry, args, solve=True)
    if v.status == "unsupported":
        raise ArithmeticError(v.reason or "no usable base points")
    points = [{k: d.get(k) for k in ("base", "rank", "lsq_residual", "condition", "thirds_mismatch")}
              for d in v.diagnostics]
    rec = {"equation": str(eq), "form": kind, "verdict": v.status,
           "max_thirds_mismatch": v.max_thirds_mismatch, "points": points}
    if v.status == "integrable":
        if any(p["rank"] != 35 for p in points) or not v.max_thirds_mismatch < args.tol:
            raise Mismatch(rec)
    return rec


def cmd_geometry(args) -> dict:
    kind, eq, entry = _equation(args)
    if kind != "evolutionary":
        raise UsageError("geometry needs an evolutionary equation u33 = f(a, b, c, p, q)")
    recs = geometry_report(eq, _base_points(eq, entry, args.points, args.seed), args.seed)
    worst = {key: max(r[key] for r in recs)
             for key in ("det_residual", "apolarity", "quartic_relation")}
    rec = {"equation": str(eq), "worst": worst, "points": recs}
    if worst["det_residual"] > CONFIG["geometry_det_tol"] or \
            max(worst["apolarity"], worst["quartic_relation"]) > CONFIG["geometry_relation_tol"]:
        raise Mismatch(rec)
    return rec


def cmd_symmetries(args) -> dict:
    if args.corpus is not None:
        entry = _entry(args)
        F = entry.symmetry_form() or entry.implicit()
        box, expected = dict(entry.box), entry.symmetry_dim
    else:
        kind, eq, _ = _equation(args)
        F = evolutionary_to_implicit(eq) if kind == "evolutionary" else eq
        box, expected = {}, None
    if args.expect is not None:
        expected = args.expect
    dim, res = symmetry_dimension(F, args.samples, args.seed, box=box or None, return_details=True)
    rec = {"equation": str(F), "dimension": dim, "stable": res.stable,
           "singular_values": res.singular_values, "expected": expected}
    if not res.stable:
        raise ArithmeticError("numerical rank is not stable under threshold changes")
    if expected is not None and dim != expected:
        raise Mismatch(rec)
    return rec


def cmd_orbit_rank(args) -> dict:
    rng = _as_rng(args.seed)
    if args.expr is None:
        jp = JetPoint21.random(rng)
        source = "random"
    else:
        kind, f, _ = _equation(args)
        if kind != "evolutionary":
            raise UsageError("orbit-rank needs u33 = f(a, b, c, p, q)")
        x = _floats(args.at, 5) if args.at else rng.uniform(0.2, 0.8, size=5)
        jp = JetPoint21.from_function(f, x)
        source = str(f)
    rank, res = prolong_orbit_rank(jp, max(60, args.triples), args.seed, return_details=True)
    rec = {"source": source, "x": jp.x, "rank": rank, "stable": res.stable,
           "stabilizer_dimension": 21 - rank, "expected": args.expect}
    if not res.stable:
        raise ArithmeticError("numerical rank is not stable under threshold changes")
    if args.expect is not None and rank != args.expect:
        raise Mismatch(rec)
    return rec


def _ma_record(c: MACoeffs, tol: float) -> dict:
    if c.is_degenerate:
        raise ArithmeticError("degenerate equation: every coefficient except nu vanishes")
    q = quartic(c)
    scale = float(np.abs(c.vector).max()) ** 4
    rec = {"coefficients": c.as_dict(), "quartic": q,
           "linearizable": abs(q) <= tol * scale}
    if c.eps != 0.0:
        reduced, S = eliminate_minors(c)
        rec["shift"] = S
        rec["reduced_quartic"] = reduced_on_slice(reduced)
    return rec


def cmd_ma_quartic(args) -> dict:
    vals = [getattr(args, n) for n in COEFF_NAMES]
    rec = _ma_record(MACoeffs.from_vector(vals), args.tol)
    if args.expect is not None and rec["linearizable"] != (args.expect == "linearizable"):
        raise Mismatch(rec)
    return rec


def cmd_heavenly(args) -> dict:
    c, _ = heavenly_travelling_wave(args.alpha, args.gamma)
    rec = _ma_record(c, args.tol)
    rec.update(alpha=args.alpha, gamma=args.gamma)
    if not rec["linearizable"]:
        raise Mismatch(rec)
    return rec


def cmd_reduce(args) -> dict:
    kind, f, _ = _equation(args)
    if kind != "evolutionary":
        raise UsageError("reduce needs u33 = f(a, b, c, p, q)")
    base = _floats(args.base, 5)
    mus = args.mu or ["0.5 + 0.2*R", "-0.5 - 0.1*R", "1.5 + 0.1*R"][:args.n]
    if len(mus) != args.n:
        raise UsageError(f"need {args.n} --mu profiles")
    g = gt_integrate(f, args.n, base=base, mu_profiles=mus, A_profiles=args.A,
                     steps=args.steps, h=args.h)
    diag = bisecant_check(g, f)
    rec = {"equation": str(f), "n": args.n, "h": args.h, "steps": args.steps,
           "mu_profiles": mus, "max_dispersion": float(np.abs(g.dispersion).max()),
           "min_abs_D": float(g.min_abs_D.min()),
           **{k: v for k, v in diag.items() if k != "flagged_nodes"},
           "flagged_nodes": len(diag["flagged_nodes"])}
    if args.dump:
        with open(args.dump, "w") as fh:
            fh.write(g.dump())
        rec["dump"] = args.dump
    if rec["max_dispersion"] > CONFIG["grid_dispersion_tol"] or \
            rec["max_rank_measure"] > CONFIG["grid_rank_tol"]:
        raise Mismatch(rec)
    return rec


def run_corpus(seed=1, path=None, points=5, triples=100, tol=INTEGRABLE_TOL) -> dict:
    """Every corpus entry through the verdict and symmetry analyses."""
    results, failures = {}, []
    for name, entry in load_corpus(path).items():
        rec = {}
        try:
            if entry.integrable is not None:
                v = entry.verdict(points, seed, triples, tol_int=tol)
                expected = "integrable" if entry.integrable else "not_integrable"
                rec["verdict"] = {**_verdict_record(v), "expected": expected}
                if v.status != expected:
                    failures.append(f"{name}: verdict {v.status}, expected {expected}")
            if entry.symmetry_dim is not None:
                F = entry.symmetry_form() or entry.implicit()
                dim, res = symmetry_dimension(F, seed=seed, box=dict(entry.box) or None,
                                              return_details=True)
                rec["symmetries"] = {"dimension": dim, "stable": res.stable,
                                     "expected": entry.symmetry_dim}
                if dim != entry.symmetry_dim or not res.stable:
                    failures.append(f"{name}: symmetry dimension {dim}, expected {entry.symmetry_dim}")
        except (ArithmeticError, SamplingError, ValueError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
            failures.append(f"{name}: {rec['error']}")
        results[name] = rec
    return {"entries": results, "failures": failures, "passed": not failures}


def cmd_corpus(args) -> dict:
    rec = run_corpus(args.seed, args.file, args.points, args.triples, args.tol)
    if not rec["passed"]:
        raise Mismatch(rec)
    return rec


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=CONFIG["seed"])
    common.add_argument("--tol", type=float, default=CONFIG["tol"])
    common.add_argument("--json", action="store_true", help="emit the report as JSON")
    common.add_argument("--points", type=int, default=CONFIG["points"])
    common.add_argument("--triples", type=int, default=CONFIG["triples"])

    def source(p):
        p.add_argument("--expr", help="u33 = f(a,b,c,p,q) or F(u11,...,u33) = 0")
        p.add_argument("--corpus", metavar="NAME", help="named corpus entry")
        p.add_argument("--file", help="corpus file (default: the built-in one)")

    parser = argparse.ArgumentParser(prog="hirota", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hirota {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="integrability verdict")
    source(p)
    p.add_argument("--expect", choices=["integrable", "not_integrable", "inconclusive"])
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("thirds", parents=[common], help="solve third derivatives")
    source(p)
    p.set_defaults(func=cmd_thirds)

    p = sub.add_parser("geometry", parents=[common], help="cubic form and metric identities")
    source(p)
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("symmetries", parents=[common], help="symmetry algebra dimension")
    source(p)
    p.add_argument("--samples", type=int, default=CONFIG["symmetry_samples"])
    p.add_argument("--expect", type=int)
    p.set_defaults(func=cmd_symmetries)

    p = sub.add_parser("orbit-rank", parents=[common], help="rank of the prolonged action")
    source(p)
    p.add_argument("--at", help="x1,...,x5 (default: random)")
    p.add_argument("--expect", type=int)
    p.set_defaults(func=cmd_orbit_rank)

    p = sub.add_parser("ma-quartic", parents=[common], help="Monge-Ampere linearizability quartic")
    for name in COEFF_NAMES:
        p.add_argument(f"--{name}", type=float, default=0.0)
    p.add_argument("--expect", choices=["linearizable", "not_linearizable"])
    p.set_defaults(func=cmd_ma_quartic)

    p = sub.add_parser("heavenly", parents=[common], help="heavenly travelling-wave quartic")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.set_defaults(func=cmd_heavenly)

    p = sub.add_parser("reduce", parents=[common], help="Goursat grid of a hydrodynamic reduction")
    source(p)
    p.add_argument("--n", type=int, choices=[2, 3], default=2)
    p.add_argument("--base", default="0,0,2,0,0", help="a,b,c,p,q at the origin")
    p.add_argument("--mu", action="append", help="mu profile in R, once per component")
    p.add_argument("--A", action="append", help="A profile in R, once per component")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--h", type=float, default=0.01)
    p.add_argument("--dump", metavar="FILE", help="write the grid as columnar text")
    p.set_defaults(func=cmd_reduce, expr="b + c^2")

    p = sub.add_parser("corpus", parents=[common], help="run the whole corpus")
    p.add_argument("--file", help="corpus file (default: the built-in one)")
    p.set_defaults(func=cmd_corpus)
    return parser


def _config(args) -> dict:
    cfg = dict(CONFIG)
    for key in ("seed", "tol", "points", "triples"):
        cfg[key] = getattr(args, key)
    return cfg


def _emit(report: dict, as_json: bool, out) -> None:
    report = _clean(report)
    if as_json:
        out.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
        return
    flat = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}.{k}" if prefix else k, obj[k])
        elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
            for i, v in enumerate(obj):
                walk(f"{prefix}[{i}]", v)
        else:
            flat.append((prefix, obj))

    walk("", report)
    width = max(len(k) for k, _ in flat)
    for k, v in flat:
        if isinstance(v, float):
            v = f"{v:.6g}"
        out.write(f"{k:<{width}}  {v}\n")


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    report = {"tool": "hirota", "version": __version__, "command": args.command,
              "seed": args.seed, "config": _config(args), "errors": []}
    try:
        report["result"] = args.func(args)
        report["status"], code = "ok", EXIT_OK
    except Mismatch as exc:
        report["result"] = exc.args[0]
        report["status"], code = "mismatch", EXIT_MISMATCH
        report["errors"].append("expectation not met")
    except UsageError as exc:
        report["status"], code = "usage_error", EXIT_USAGE
        report["errors"].append(str(exc))
    except (ArithmeticError, SamplingError, ReductionError) as exc:
        report["status"], code = "numerical_failure", EXIT_NUMERIC
        report["errors"].append(f"{type(exc).__name__}: {exc}")
    report["exit_code"] = code
    _emit(report, args.json, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
