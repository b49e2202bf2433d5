"""Command-line surface: every table and verification as a reproducible batch run.

Output is machine-readable (CSV with a commented config header, or a single
JSON object {config, rows, summary}); identical configuration including seed
and precision produces byte-identical output.  Exit codes: 0 all checks
passed, 1 a check failed, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import matrices, verify, weights
from .exactmath import r_conjecture_check
from .mpreal import MAX_PRECISION, MIN_PRECISION, Real
from .weights import WeightSpec

ENV_PRECISION = "HRBWEIGHTS_PRECISION"

_FAMILIES = ["canonical", "q", "shifted", "alpha2", "polyharmonic",
             "kpp", "gks", "hy", "birman-classical", "half-power-monomial"]


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _fmt(value, hex_floats: bool = False):
    if isinstance(value, Real):
        return value.hexfloat() if hex_floats else value.decimal()
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(config: dict, rows: list[dict], summary: dict, args) -> None:
    out = sys.stdout
    close = False
    if args.output:
        out = open(args.output, "w")
        close = True
    try:
        if args.format == "json":
            doc = {
                "config": {k: _fmt(v) for k, v in config.items()},
                "rows": [{k: _fmt(v) for k, v in row.items()} for row in rows],
                "summary": {k: _fmt(v) for k, v in summary.items()},
            }
            json.dump(doc, out, indent=2)
            out.write("\n")
        else:
            for k, v in config.items():
                out.write(f"# {k}={_fmt(v)}\n")
            if rows:
                cols = list(rows[0].keys())
                extra = []
                if args.hex:
                    extra = [c + "_hex" for c in cols
                             if any(isinstance(r[c], Real) for r in rows)]
                out.write(",".join(cols + extra) + "\n")
                for row in rows:
                    cells = [_fmt(row[c]) for c in cols]
                    if args.hex:
                        cells += [_fmt(row[c], hex_floats=True)
                                  for c in cols if any(isinstance(r[c], Real) for r in rows)]
                    out.write(",".join(cells) + "\n")
            for k, v in summary.items():
                out.write(f"# {k}={_fmt(v)}\n")
    finally:
        if close:
            out.close()


def _config(args, **extra) -> dict:
    cfg = {"subcommand": args.subcommand, "precision": args.precision,
           "seed": args.seed, "format": args.format}
    cfg.update(extra)
    return cfg


def _spec_from_args(args) -> WeightSpec:
    fam = args.family
    ell = args.ell
    if fam == "canonical":
        return WeightSpec.canonical(ell)
    if fam == "q":
        if args.q is None:
            raise ValueError("family 'q' requires --q")
        return WeightSpec.q_family(ell, Fraction(args.q))
    if fam == "shifted":
        q = Fraction(args.q) if args.q is not None else Fraction(1, 2)
        return WeightSpec.shifted(ell, args.m, q)
    if fam == "alpha2":
        if not args.alpha:
            raise ValueError("family 'alpha2' requires --alpha")
        return WeightSpec.alpha2(Fraction(args.alpha[0]))
    if fam == "polyharmonic":
        return WeightSpec.polyharmonic(ell, [Fraction(a) for a in args.alpha or []])
    if fam == "kpp":
        return WeightSpec.kpp()
    if fam == "gks":
        return WeightSpec.gks()
    if fam == "hy":
        return WeightSpec.hy(args.hy_terms)
    if fam == "birman-classical":
        return WeightSpec.birman_classical(ell)
    if fam == "half-power-monomial":
        return WeightSpec.half_power_monomial(ell)
    raise ValueError(f"unknown family {fam!r}")


def _tolerance(precision: int) -> float:
    # default relative tolerance for identity-style checks
    return 2.0 ** (-(precision - 20))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_weights(args) -> int:
    spec = _spec_from_args(args)
    rows = [{"n": n, "rho": weights.rho_eval(spec, n, args.precision)}
            for n in range(args.n_from, args.n_to + 1)]
    emit(_config(args, family=args.family, ell=args.ell, n_from=args.n_from,
                 n_to=args.n_to), rows, {"count": len(rows)}, args)
    return 0


def cmd_coeffs(args) -> int:
    ell = args.ell
    rows = []
    counterexample = None
    if args.table == "r":
        from .exactmath import r_coeff
        for k in range(2 * ell, args.k_max + 1):
            rows.append({"k": k, "r": r_coeff(k, ell)})
    else:
        table = weights.rho_expansion_table(ell, args.k_max)
        rows = [{"power": p, "coefficient": c} for p, c in table.coefficients]
    if args.check_conjecture:
        scan = {e.k: e for e in r_conjecture_check(ell, args.k_max)}
        for row in rows:
            k = row.get("k", row.get("power"))
            if k in scan:
                row["scaled_by_4_pow"] = scan[k].scaled
                row["is_integer"] = scan[k].is_integer
                if not scan[k].is_integer and counterexample is None:
                    counterexample = k
    summary = {"count": len(rows)}
    if args.check_conjecture:
        summary["conjecture_counterexample"] = counterexample if counterexample else "none"
    emit(_config(args, ell=ell, table=args.table, k_max=args.k_max), rows, summary, args)
    return 0


def cmd_verify_identity(args) -> int:
    g = weights.g_param(WeightSpec.canonical(args.ell), args.precision)
    tol = _tolerance(args.precision)
    rows, worst, first_bad = [], 0.0, None
    for t in range(args.trials):
        u = verify.random_test_vector(args.seed + t, args.ell, args.support_len,
                                      args.precision)
        rep = verify.identity_check(g, u, args.ell)
        rel = abs(float(rep.relative_residual))
        if rel > tol and first_bad is None:
            first_bad = t
        worst = max(worst, rel)
        rows.append({"trial": t, "lhs": rep.lhs, "relative_residual": rep.relative_residual})
    ok = worst <= tol
    summary = {"max_relative_residual": worst, "tolerance": tol, "pass": ok}
    if first_bad is not None:
        summary["first_violation"] = f"relative_residual above tolerance at trial {first_bad}"
    emit(_config(args, ell=args.ell, trials=args.trials, support_len=args.support_len),
         rows, summary, args)
    return 0 if ok else 1


def cmd_verify_assumptions(args) -> int:
    spec = _spec_from_args(args)
    g = weights.g_param(spec, args.precision)
    rep = verify.assumptions_check(g, args.ell, args.horizon)
    ok = rep.a1_ok and rep.a2_ok and rep.a2prime_ok and rep.a3strict_ok
    rows = [{"assumption": name, "ok": val} for name, val in
            [("a1", rep.a1_ok), ("a2", rep.a2_ok), ("a2prime", rep.a2prime_ok),
             ("a3strict", rep.a3strict_ok)]]
    summary = {"note": rep.note, "pass": ok}
    if rep.first_violation:
        tag, k, n = rep.first_violation
        summary["first_violation"] = f"{tag} at k={k}, n={n}"
    emit(_config(args, family=args.family, ell=args.ell, horizon=args.horizon),
         rows, summary, args)
    return 0 if ok else 1


def cmd_check_ineq(args) -> int:
    spec = _spec_from_args(args)
    tol = _tolerance(args.precision)
    rows, ok, first_bad = [], True, None
    for t in range(args.trials):
        u = verify.random_test_vector(args.seed + t, args.ell, args.support_len,
                                      args.precision)
        rep = verify.inequality_check(spec, u, args.precision)
        margin = float(rep.margin)
        if margin < -tol and first_bad is None:
            first_bad = t
        ok = ok and margin >= -tol
        rows.append({"trial": t, "lhs": rep.lhs, "rhs": rep.rhs, "margin": rep.margin})
    summary = {"tolerance": tol, "pass": ok}
    if first_bad is not None:
        summary["first_violation"] = f"negative margin at trial {first_bad}"
    emit(_config(args, family=args.family, ell=args.ell, trials=args.trials),
         rows, summary, args)
    return 0 if ok else 1


def cmd_probe_criticality(args) -> int:
    pts = verify.criticality_probe(args.ell, args.ns)
    rows = [{"N": p.N, "total_remainder": p.total_remainder,
             "remainder_times_logN": p.remainder_log_product} for p in pts]
    decreasing = all(pts[i].total_remainder > pts[i + 1].total_remainder
                     for i in range(len(pts) - 1))
    summary = {"strictly_decreasing": decreasing, "pass": decreasing}
    for i in range(len(pts) - 1):
        if pts[i].total_remainder <= pts[i + 1].total_remainder:
            summary["first_violation"] = \
                f"remainder not decreasing from N={pts[i].N} to N={pts[i + 1].N}"
            break
    emit(_config(args, ell=args.ell, ns=" ".join(map(str, args.ns))),
         rows, summary, args)
    return 0 if decreasing else 1


def cmd_probe_optimality(args) -> int:
    pts = verify.optimality_probe(args.ell, args.M, args.ns)
    rows = [{"N": p.N, "remainder_sum": p.remainder_sum, "weight_sum": p.weight_sum,
             "ratio": p.ratio} for p in pts]
    decreasing = all(pts[i].ratio > pts[i + 1].ratio for i in range(len(pts) - 1))
    summary = {"ratio_strictly_decreasing": decreasing, "pass": decreasing}
    for i in range(len(pts) - 1):
        if pts[i].ratio <= pts[i + 1].ratio:
            summary["first_violation"] = \
                f"ratio not decreasing from N={pts[i].N} to N={pts[i + 1].N}"
            break
    emit(_config(args, ell=args.ell, M=args.M, ns=" ".join(map(str, args.ns))),
         rows, summary, args)
    return 0 if decreasing else 1


def cmd_probe_attainability(args) -> int:
    rep = verify.attainability_probe(args.ell, Fraction(args.q), args.horizon,
                                     args.precision)
    rows = [{"lhs_partial": rep.lhs_partial, "rhs_partial": rep.rhs_partial,
             "gap": rep.gap, "boundary_remainder": rep.boundary_remainder}]
    emit(_config(args, ell=args.ell, q=Fraction(args.q), horizon=args.horizon),
         rows, {"pass": True}, args)
    return 0


def cmd_matrix_factor(args) -> int:
    g = weights.g_param(_spec_from_args(args), args.precision)
    rep = matrices.factorization_check(g, args.ell, args.size, args.precision)
    tol = 2.0 ** (-(args.precision - 28))
    resid = float(rep.max_residual)
    ok = resid <= tol
    rows = [{"size": rep.size, "top_margin": rep.top_margin,
             "bottom_margin": rep.bottom_margin, "max_residual": rep.max_residual}]
    emit(_config(args, family=args.family, ell=args.ell, size=args.size),
         rows, {"tolerance": tol, "pass": ok}, args)
    return 0 if ok else 1


def cmd_corner_defect(args) -> int:
    block = matrices.corner_defect(args.ell, args.precision)
    rows = []
    for i, row in enumerate(block):
        for j, v in enumerate(row):
            rows.append({"i": i, "j": j, "value": v})
    emit(_config(args, ell=args.ell), rows, {"block_size": len(block)}, args)
    return 0


def cmd_alpha_range(args) -> int:
    lo, hi = verify.alpha_admissible_range(args.n_check, Fraction(str(args.tol)),
                                           args.precision)
    rows = [{"alpha_lo": lo, "alpha_hi": hi}]
    emit(_config(args, n_check=args.n_check, tol=args.tol), rows, {"pass": True}, args)
    return 0


def cmd_compare_weights(args) -> int:
    spec2 = WeightSpec.canonical(2)
    gks = WeightSpec.gks()
    hy = WeightSpec.hy(args.hy_terms)
    rows = []
    hy_dominations = 0
    for n in range(max(2, args.n_from), args.n_to + 1):
        r2 = weights.rho_eval(spec2, n, args.precision)
        rg = weights.rho_eval(gks, n, args.precision)
        rh = weights.rho_eval(hy, n, args.precision)
        if float(r2) > float(rh):
            hy_dominations += 1
        rows.append({"n": n, "rho_optimal": r2, "rho_gks": rg, "rho_hy": rh})
    # reported, not asserted: pointwise comparison of the optimal weight vs hy
    emit(_config(args, n_from=args.n_from, n_to=args.n_to, hy_terms=args.hy_terms),
         rows, {"optimal_above_hy_count": hy_dominations, "rows": len(rows)}, args)
    return 0


def cmd_matrix_dump(args) -> int:
    if args.kind == "toeplitz":
        m = matrices.toeplitz_power(args.ell, args.size, args.precision)
    else:
        m = matrices.dirichlet_power(args.ell, args.size, args.precision)
    text = m.to_csv()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _env_precision() -> int:
    raw = os.environ.get(ENV_PRECISION)
    if raw is None:
        return 128
    try:
        return int(raw)
    except ValueError:
        return 128


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hrbweights",
        description="Optimal discrete Hardy-Rellich-Birman weights: tables and verification",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=_env_precision(),
                        help=f"significand bits in [{MIN_PRECISION}, {MAX_PRECISION}] "
                             f"(default 128; env {ENV_PRECISION})")
    common.add_argument("--seed", type=int, default=20240425,
                        help="64-bit seed for random test vectors")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--output", help="write to this path instead of stdout")
    common.add_argument("--hex", action="store_true",
                        help="add bit-exact hex-float columns (csv only)")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", choices=_FAMILIES, default="canonical")
    fam.add_argument("--ell", type=int, default=2)
    fam.add_argument("--q", help="exponent parameter in (0,1), as a fraction or decimal")
    fam.add_argument("--m", type=int, default=0, help="shift order for the shifted family")
    fam.add_argument("--alpha", nargs="*", help="root parameters (alpha2 / polyharmonic)")
    fam.add_argument("--hy-terms", type=int, default=16,
                     help="series terms kept in the hy comparison weight")

    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("weights", parents=[common, fam],
                       help="tabulate a weight family pointwise")
    p.add_argument("--n-from", type=int, required=True)
    p.add_argument("--n-to", type=int, required=True)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("coeffs", parents=[common],
                       help="exact series/expansion coefficient tables")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--table", choices=["r", "expansion"], default="r")
    p.add_argument("--check-conjecture", action="store_true")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("verify-identity", parents=[common],
                       help="residuals of the quadratic-form identity on random vectors")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--support-len", type=int, default=12)
    p.set_defaults(func=cmd_verify_identity)

    p = sub.add_parser("verify-assumptions", parents=[common, fam],
                       help="positivity assumption scan up to a horizon")
    p.add_argument("--horizon", type=int, default=1000)
    p.set_defaults(func=cmd_verify_assumptions)

    p = sub.add_parser("check-ineq", parents=[common, fam],
                       help="weighted inequality margins on random vectors")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--support-len", type=int, default=12)
    p.set_defaults(func=cmd_check_ineq)

    p = sub.add_parser("probe-criticality", parents=[common],
                       help="remainder decay along growing cutoffs")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--ns", type=int, nargs="+", default=[10, 100, 1000])
    p.set_defaults(func=cmd_probe_criticality)

    p = sub.add_parser("probe-optimality", parents=[common],
                       help="remainder-to-weight ratio along far-out plateaus")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("-M", type=int, default=None,
                   help="minimum support start (default ell)")
    p.add_argument("--ns", type=int, nargs="+", default=[10, 30, 100])
    p.set_defaults(func=cmd_probe_optimality)

    p = sub.add_parser("probe-attainability", parents=[common],
                       help="partial sums for the truncated attaining sequence")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--q", required=True)
    p.add_argument("--horizon", type=int, default=1000)
    p.set_defaults(func=cmd_probe_attainability)

    p = sub.add_parser("matrix-factor", parents=[common, fam],
                       help="interior residual of the banded factorization")
    p.add_argument("--size", type=int, default=64)
    p.set_defaults(func=cmd_matrix_factor)

    p = sub.add_parser("corner-defect", parents=[common],
                       help="upper-left defect between the two matrix powers")
    p.add_argument("--ell", type=int, required=True)
    p.set_defaults(func=cmd_corner_defect)

    p = sub.add_parser("alpha-range", parents=[common],
                       help="bisect the admissible alpha interval of the cubic family")
    p.add_argument("--n-check", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_alpha_range)

    p = sub.add_parser("compare-weights", parents=[common],
                       help="tabulate the optimal Rellich weight against published ones")
    p.add_argument("--n-from", type=int, default=2)
    p.add_argument("--n-to", type=int, default=30)
    p.add_argument("--hy-terms", type=int, default=16)
    p.set_defaults(func=cmd_compare_weights)

    p = sub.add_parser("matrix-dump", parents=[common],
                       help="dense CSV dump of a matrix power")
    p.add_argument("--kind", choices=["toeplitz", "dirichlet"], default="toeplitz")
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--size", type=int, default=16)
    p.set_defaults(func=cmd_matrix_dump)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not MIN_PRECISION <= args.precision <= MAX_PRECISION:
        print(f"error: precision must lie in [{MIN_PRECISION}, {MAX_PRECISION}]",
              file=sys.stderr)
        return 2
    if getattr(args, "M", None) is None and args.subcommand == "probe-optimality":
        args.M = args.ell
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
