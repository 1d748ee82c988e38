#!/usr/bin/env python3
"""
fedocheck command line: dimensions of natural-tensor spaces, dimensional
identities, verification suites, expression evaluation and reduction checks.

Every run produces a RunReport: human text on stdout and, with --out, a JSON
file. Exit codes: 0 all checks passed, 1 a check failed, 2 usage or cap error.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from scripts.exprlang.analysis import as_natural_expression, infer
from scripts.exprlang.parser import parse_file
from scripts.geometry.fedosov import curvature, flat, random_fedosov
from scripts.geometry.identities import BUILTINS, NaturalExpression, builtin
from scripts.geometry.verification import SUITES, VANISHES_UP_TO, certificate_ratio, reduction_check, run_suite
from scripts.invariants.natural_spaces import SpaceSpec, find_identity, identity_space_dim, space_dim
from scripts.tensors.scalars import field_from_name
from scripts.utils.config import Settings, initialize_environment, load_settings
from scripts.utils.errors import FedocheckError, UsageError
from scripts.utils.logging_config import log_check, setup_report_logging
from scripts.utils.report_log_handler import RunReport

logger = logging.getLogger('fedocheck')

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# Short names used on the command line for the shipped identities.
ALIASES = {'eq1': 'expr1', 'eq2': 'scalar_identity', 'eq4': 'two_form_identity'}

# Built-in compared against the certificate of a first dimensional identity.
REFERENCE = {(0, -4): 'scalar_identity', (2, -2): 'two_form_identity'}


def _half_dim(dim: int) -> int:
    if dim < 2 or dim % 2:
        raise UsageError(f"dimension must be even and >= 2, got {dim}")
    return dim // 2


def _expression(target: str) -> NaturalExpression:
    """A .ten file or a built-in name."""
    if target.endswith('.ten'):
        return as_natural_expression(parse_file(target), Path(target).stem)
    return builtin(ALIASES.get(target, target))


def _structure(spec: str, n: int, degree: int):
    if spec == 'flat':
        return flat(n)
    if spec.startswith('random:') and spec[7:].isdigit():
        return random_fedosov(n, degree, int(spec[7:]))
    raise UsageError(f"structure must be 'flat' or 'random:<seed>', got {spec!r}")


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_dims(args, settings: Settings) -> None:
    if args.field == 'float':
        raise UsageError("ranks need an exact field: use 'prime' or 'rational'")
    spec = SpaceSpec(args.p, args.weight, _half_dim(args.dim))
    result = space_dim(spec, settings.seed, args.samples, settings, exact=args.field == 'rational')
    for t in result.tuples:
        logger.info(f"  tuple {t.solution}: N={t.order}, {t.matchings} matchings, rank {t.rank}")
    log_check(logger, f'dims.{spec}', 'measured', f"dim {spec} = {result.total}", **result.to_dict())


def cmd_identities(args, settings: Settings) -> None:
    spec = SpaceSpec(args.p, args.weight, _half_dim(args.dim))
    count = identity_space_dim(spec, settings.seed, args.samples, settings)
    log_check(logger, f'identities.{spec}', 'measured', f"dim K = {count}", dimension=count)
    if count == 0:
        return
    certificates = find_identity(spec, settings.seed, args.samples, settings)
    out_dir = Path(args.cert_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, certificate in enumerate(certificates):
        path = out_dir / f"identity_p{spec.p}_w{spec.delta}_dim{spec.dim}_{k}.cert"
        certificate.save(str(path))
        logger.info(f"✓ certificate written to {path}")
        reference = REFERENCE.get((spec.p, spec.delta))
        if reference is None or any(certificate.solution[1:]):
            continue
        c = certificate_ratio(certificate, BUILTINS[reference], args.trials, settings.seed)
        status = 'pass' if c not in (None, 0) else 'fail'
        log_check(logger, f'identities.matches_{reference}', status,
                  f"certificate = {c} * raised {reference}", ratio=str(c), file=str(path))
    log_check(logger, f'identities.certificates_{spec}', 'pass' if len(certificates) == count else 'fail',
              f"{len(certificates)} certificate(s) for dim K = {count}", certificates=len(certificates))


def cmd_verify(args, settings: Settings) -> None:
    run_suite(args.suite, args.dim, args.trials, settings.seed, settings)


def cmd_eval(args, settings: Settings) -> None:
    expr = parse_file(args.expr_file)
    report = infer(expr)
    E = as_natural_expression(expr, Path(args.expr_file).stem)
    F = _structure(args.structure, _half_dim(args.dim), args.degree)
    field = field_from_name(args.field, settings.seed)
    R, w = curvature(F).to(field), F.w.to(field)
    value = E.evaluate(R, w)
    components = {','.join(map(str, idx)): str(x) for idx, x in _components(value)}
    for key, x in list(components.items())[:20]:
        print(f"  [{key}] = {x}")
    log_check(logger, f'eval.{E.name}', 'measured',
              f"p={report.p} delta={report.delta}, {len(components)} nonzero component(s)",
              p=report.p, delta=report.delta, free=list(report.free), field=str(field),
              structure=args.structure, components=components)


def _components(value):
    if value.order == 0:
        x = value.scalar()
        return [((), x)] if x != 0 else []
    return [(tuple(int(i) for i in idx), value.data[tuple(idx)]) for idx in np.argwhere(value.data != 0)]


def cmd_reduce(args, settings: Settings) -> None:
    E = _expression(args.target)
    n = _half_dim(args.dim)
    consistent, zero = 0, 0
    for t in range(args.trials):
        F = random_fedosov(n, args.degree, [settings.seed, args.dim, t])
        result = reduction_check(E, F)
        consistent += result['consistent']
        zero += result['restriction_zero']
    log_check(logger, f'reduce.{E.name}_consistent_dim{args.dim}', 'pass' if consistent == args.trials else 'fail',
              f"{consistent}/{args.trials} agree with direct evaluation", agree=consistent, trials=args.trials)
    if args.dim <= VANISHES_UP_TO.get(E.name, 0):
        status = 'pass' if zero == args.trials else 'fail'
    else:
        status = 'measured'
    log_check(logger, f'reduce.{E.name}_restriction_dim{args.dim + 2}_to_{args.dim}', status,
              f"restriction zero on {zero}/{args.trials}", zero=zero, trials=args.trials)


# ============================================================================
# ENTRY POINT
# ============================================================================

def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument('--seed', type=int, default=default(None),
                        help='Random seed (default: FEDOCHECK_SEED or 20240601)')
    parser.add_argument('--threads', type=int, default=default(None),
                        help='Worker threads (default: FEDOCHECK_THREADS or CPU count)')
    parser.add_argument('--field', choices=['rational', 'prime', 'float'], default=default(None),
                        help='Scalar field (default: prime for ranks, rational for evaluation)')
    parser.add_argument('--out', default=default(None),
                        help='Write the machine-readable report (JSON) to this file')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Dimensional curvature identities of Fedosov manifolds',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Dimension of the scalar weight -4 natural tensors in dim 2 and dim 4
  python scripts/run_fedocheck.py dims --p 0 --weight -4 --dim 2
  python scripts/run_fedocheck.py dims --p 0 --weight -4 --dim 4

  # Dimensional identities of 2-forms of weight -2 in dim 4, with certificates
  python scripts/run_fedocheck.py identities --p 2 --weight -2 --dim 4 --cert-dir certificates

  # Chern-form vanishing in dim 6
  python scripts/run_fedocheck.py verify --suite chern --dim 6

  # Evaluate a shipped expression on a random structure
  python scripts/run_fedocheck.py eval scripts/exprlang/corpus/eq2.ten --dim 4 --structure random:7

  # Extend-then-restrict check of the two-form identity from dim 6 to dim 4
  python scripts/run_fedocheck.py reduce eq4 --dim 4 --out reduce.json
        """
    )
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest='command', required=True)

    dims = sub.add_parser('dims', parents=[common], help='dim T_{p,weight}[dim] with per-tuple breakdown')
    dims.add_argument('--p', type=int, required=True, help='Covariant order')
    dims.add_argument('--weight', type=int, required=True, help='Weight (must be even)')
    dims.add_argument('--dim', type=int, required=True, help='Even dimension 2n')
    dims.add_argument('--samples', type=int, help='Fixed sample count (default: adaptive)')
    dims.set_defaults(func=cmd_dims)

    identities = sub.add_parser('identities', parents=[common], help='Dimensional identities and certificates')
    identities.add_argument('--p', type=int, required=True)
    identities.add_argument('--weight', type=int, required=True)
    identities.add_argument('--dim', type=int, required=True)
    identities.add_argument('--samples', type=int)
    identities.add_argument('--trials', type=int, default=10,
                            help='Curvature samples for the comparison with built-ins (default: 10)')
    identities.add_argument('--cert-dir', default='certificates', help='Certificate output directory')
    identities.set_defaults(func=cmd_identities)

    verify = sub.add_parser('verify', parents=[common], help='Run an acceptance suite')
    verify.add_argument('--suite', choices=SUITES, required=True)
    verify.add_argument('--dim', type=int, default=6)
    verify.add_argument('--trials', type=int, default=10)
    verify.set_defaults(func=cmd_verify)

    evaluate = sub.add_parser('eval', parents=[common], help='Evaluate a .ten expression')
    evaluate.add_argument('expr_file')
    evaluate.add_argument('--dim', type=int, required=True)
    evaluate.add_argument('--structure', default='random:0', help="'flat' or 'random:<seed>'")
    evaluate.add_argument('--degree', type=int, default=1, help='Polynomial degree of random structures')
    evaluate.set_defaults(func=cmd_eval)

    reduce = sub.add_parser('reduce', parents=[common], help='Extend by a flat plane, restrict, compare')
    reduce.add_argument('target', help=f".ten file or built-in ({', '.join(list(ALIASES) + sorted(BUILTINS))})")
    reduce.add_argument('--dim', type=int, required=True, help='Dimension after restriction')
    reduce.add_argument('--trials', type=int, default=5)
    reduce.add_argument('--degree', type=int, default=1)
    reduce.set_defaults(func=cmd_reduce)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    initialize_environment()
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = load_settings(seed=args.seed, threads=args.threads)
    if args.field is None:
        args.field = 'prime' if args.command in ('dims', 'identities') else 'rational'

    report = RunReport(command=['fedocheck'] + list(argv if argv is not None else sys.argv[1:]),
                       seeds=[settings.seed])
    setup_report_logging(report, getattr(logging, settings.log_level, logging.INFO))

    try:
        args.func(args, settings)
        code = EXIT_PASS
    except (FedocheckError, OSError) as e:
        logger.error(f"✗ {args.command}: {e}",
                     extra={"log_type": "check", "action": f"{args.command}.error", "status": "fail",
                            "metadata": {"error": type(e).__name__, "message": str(e)}})
        code = EXIT_USAGE
    report.finish()
    if code == EXIT_PASS and not report.passed:
        code = EXIT_FAIL

    print(report.to_text())
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            json.dump(report.to_dict(), f, indent=2, default=str)
    return code


if __name__ == '__main__':
    sys.exit(main())
