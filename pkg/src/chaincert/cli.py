"""Command-line entry points for the certification suites.

Exit codes: 0 when every requested check passes, 1 when a verification
fails (including divergence flags and degenerate fits), 2 for malformed
input or an insufficient budget, 3 when a resource cap is hit.
"""
from __future__ import annotations

import argparse
import sys

from . import kernels
from .cohomology import (
    check_cocycle_gaussian,
    discrete_cocycle_suite,
    mixture_identity_report,
)
from .errors import (
    BudgetTooSmall,
    ChainCertError,
    ClosureExplosion,
    DegenerateFit,
    DivergentAction,
    LawError,
    MalformedInput,
    StructureError,
)
from .functionals import EntropyCochain
from .kde import (
    DEFAULT_ABCS,
    parse_bandwidth,
    run_convergence,
    slope_test,
    target_by_name,
)
from .nullspace import denominator_laws, solve_nullspace
from .serialize import write_output
from .structures import (
    coordinate_subspace_structure,
    partition_lattice,
    validate_structure,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_BAD_INPUT = 2
EXIT_RESOURCE = 3


def _ints(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise MalformedInput(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise MalformedInput(f"expected comma-separated numbers, got {text!r}") from exc


def _add_output_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=None, help="output path (default: stdout)")
    sub.add_argument("--format", default="json", choices=("json", "csv"))


def cmd_verify_discrete(args) -> int:
    sizes = _ints(args.sizes)
    if not sizes or any(s < 2 for s in sizes):
        raise MalformedInput("--sizes needs ground sets of at least 2 elements")
    validations = {}
    structure_ok = True
    for size in sizes:
        report = validate_structure(partition_lattice(size))
        validations[str(size)] = report.to_dict()
        structure_ok = structure_ok and report.ok
    suite = discrete_cocycle_suite(
        sizes=sizes,
        n_laws=args.laws,
        pairs_per_law=args.pairs,
        seed=args.seed,
        tol=args.tol,
        corrupt=args.corrupt,
    )
    passed = structure_ok and suite.passed
    payload = {
        "check": "cocycle-chain-rule",
        "structures": validations,
        "report": suite.to_dict(),
        "passed": passed,
    }
    write_output(payload, args.out, args.format)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_verify_gaussian(args) -> int:
    validation = validate_structure(coordinate_subspace_structure(3))
    suite = check_cocycle_gaussian(
        n_trials=args.trials,
        max_dim=args.max_dim,
        seed=args.seed,
        tol=args.tol,
    )
    payload = {
        "check": "cocycle-chain-rule",
        "structure": validation.to_dict(),
        "report": suite.to_dict(),
    }
    passed = validation.ok and suite.passed
    if args.abc is not None:
        abc = _floats(args.abc)
        if len(abc) != 3:
            raise MalformedInput("--abc needs exactly three numbers a,b,c")
        phi = EntropyCochain(*abc, mixture_rule="density")
        mixed = mixture_identity_report(
            n_cases=12,
            budget=args.budget,
            seed=args.seed,
            phi=phi,
        )
        payload["mixed_density_rule"] = mixed["two-route"].to_dict()
        passed = passed and mixed["two-route"].passed
    payload["passed"] = passed
    write_output(payload, args.out, args.format)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_mixture_identity(args) -> int:
    abc = _floats(args.abc)
    if len(abc) != 3:
        raise MalformedInput("--abc needs exactly three numbers a,b,c")
    phi = EntropyCochain(*abc, mixture_rule=args.rule)
    reports = mixture_identity_report(
        n_cases=args.count,
        dim_max=args.dmax,
        k_max=args.kmax,
        budget=args.budget,
        seed=args.seed,
        tol=args.tol,
        phi=phi,
        jobs=args.jobs,
    )
    passed = reports["two-route"].passed and reports["integrated"].passed
    payload = {
        "check": "two-route-mixture",
        "two_route": reports["two-route"].to_dict(),
        "integrated": reports["integrated"].to_dict(),
        "passed": passed,
    }
    write_output(payload, args.out, args.format)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_kde_converge(args) -> int:
    target = target_by_name(args.target, args.dim)
    rule = parse_bandwidth(args.bandwidth)
    ns = _ints(args.ns)
    rows = run_convergence(
        target, ns, rule, budget=args.budget, seed=args.seed, abcs=DEFAULT_ABCS
    )
    payload = {
        "check": "kde-slope",
        "target": target.label,
        "dim": target.dim,
        "bandwidth": {
            "rule": rule.label,
            "h_to_zero": rule.h_to_zero(target.dim),
            "nhd_to_inf": rule.nhd_to_inf(target.dim),
        },
        "backend": kernels.BACKEND,
        "rows": [row.to_dict() for row in rows],
    }
    slopes_apply = rule.h_to_zero(target.dim) and len({row.h for row in rows}) >= 4
    passed = True
    if slopes_apply:
        slopes = [slope_test(rows, a, b, c, target.dim) for a, b, c in DEFAULT_ABCS]
        payload["slopes"] = [s.to_dict() for s in slopes]
        passed = all(s.passed for s in slopes)
    else:
        payload["slopes"] = []
        payload["slopes_skipped"] = (
            "bandwidth does not shrink" if not rule.h_to_zero(target.dim)
            else "fewer than 4 distinct bandwidths"
        )
    payload["passed"] = passed
    write_output(payload, args.out, args.format)
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_solve_nullspace(args) -> int:
    lattice = partition_lattice(args.set_size)
    seeds = denominator_laws(lattice.objects[0], args.denominator)
    report = solve_nullspace(
        lattice, seeds, cap=args.cap, svd_tol=args.svd_tol
    )
    passed = report.entropy_residual <= args.tol
    payload = {
        "check": "nullspace-entropy",
        "set_size": args.set_size,
        "denominator": args.denominator,
        "report": report.to_dict(),
        "passed": passed,
    }
    write_output(payload, args.out, args.format)
    return EXIT_PASS if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaincert",
        description="Certify chain-rule identities for entropy-type functionals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-discrete", help="cocycle identity on partition lattices")
    p.add_argument("--sizes", default="4", help="comma-separated ground-set sizes")
    p.add_argument("--laws", type=int, default=100)
    p.add_argument("--pairs", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--corrupt", action="store_true",
                   help="double the functional on one observable; must fail")
    _add_output_flags(p)
    p.set_defaults(func=cmd_verify_discrete)

    p = sub.add_parser("verify-gaussian", help="log-det and dimension chain rules")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-dim", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--abc", default=None,
                   help="also check a,b,c under the density rule on mixed laws")
    _add_output_flags(p)
    p.set_defaults(func=cmd_verify_gaussian)

    p = sub.add_parser("mixture-identity", help="two-route and integrated identities")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--dmax", type=int, default=2)
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--abc", default="1,1,0")
    p.add_argument("--rule", default="lifted", choices=("lifted", "density"))
    p.add_argument("--jobs", type=int, default=1)
    _add_output_flags(p)
    p.set_defaults(func=cmd_mixture_identity)

    p = sub.add_parser("kde-converge", help="density-estimate convergence table")
    p.add_argument("--target", default="gaussian",
                   choices=("gaussian", "mixture", "uniform", "triangular"))
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--ns", default="100,316,1000,3162,10000")
    p.add_argument("--bandwidth", default="auto", help="auto, pow:E, or const:H")
    p.add_argument("--budget", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=42)
    _add_output_flags(p)
    p.set_defaults(func=cmd_kde_converge)

    p = sub.add_parser("solve-nullspace", help="all chain-rule solutions on a lattice")
    p.add_argument("--set-size", type=int, default=4)
    p.add_argument("--denominator", type=int, default=4)
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--svd-tol", type=float, default=1e-8)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="entropy-vector residual bound")
    _add_output_flags(p)
    p.set_defaults(func=cmd_solve_nullspace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MalformedInput, BudgetTooSmall, LawError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ClosureExplosion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (DivergentAction, DegenerateFit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ChainCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
