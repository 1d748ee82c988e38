#!/usr/bin/env python3
"""
Acceptance suites for the curvature identities.

Each suite evaluates built-in natural tensors on random curvature samples or
random polynomial structures, logs one structured check record per assertion
(or measurement) through log_check, and returns True when nothing failed.
"""

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from scripts.geometry.fedosov import (
    PolyFedosov,
    contracted_bianchi_residual,
    random_fedosov,
    reduce,
    ricci,
)
from scripts.geometry.identities import (
    BUILTINS,
    builtin,
    chern_generator,
    common_ratio,
    divergence,
    expr1,
    homogeneity_check,
    main_theorem_form,
    random_curvature,
    ratio_constants,
    resolve_expr1_variant,
    scalar_identity,
    two_form_identity,
    NaturalExpression,
)
from scripts.invariants.natural_spaces import IdentityCertificate
from scripts.invariants.sft import alternation_vanishes, minimal_vanishing_size
from scripts.tensors.symplectic import act, inverse_form, raise_slots, random_symplectic, standard_form
from scripts.tensors.tensor import FactoredTensor, Tensor, is_antisymmetric
from scripts.utils.config import Settings
from scripts.utils.errors import ShapeMismatchError, UnknownNameError, UsageError
from scripts.utils.logging_config import log_check

logger = logging.getLogger(__name__)

SUITES = ['scalar', 'two-form', 'chern', 'main-theorem', 'divergence', 'sft',
          'homogeneity', 'equivariance', 'bianchi', 'reduction']

# largest dimension in which each built-in vanishes identically
VANISHES_UP_TO = {
    'scalar_identity': 2,
    'two_form_identity': 4,
    'expr1': 4,
    'main(0,2)': 2,
    'main(2,2)': 4,
    'main(4,2)': 6,
}


def _map_trials(func: Callable[[int], object], trials: int, threads: int) -> List:
    """Run func(0..trials-1) in a thread pool; results keep trial order."""
    if threads <= 1 or trials <= 1:
        return [func(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, range(trials)))


def _check(name: str, ok: bool, message: str = '', **metadata) -> bool:
    log_check(logger, name, 'pass' if ok else 'fail', message, **metadata)
    return ok


def _measured(name: str, message: str = '', **metadata):
    log_check(logger, name, 'measured', message, **metadata)


def _curvatures(dim: int, trials: int, seed: int) -> List[Tensor]:
    return [random_curvature(dim // 2, [seed, dim, t]) for t in range(trials)]


def _structures(dim: int, degree: int, trials: int, seed: int) -> List[PolyFedosov]:
    return [random_fedosov(dim // 2, degree, [seed, dim, degree, t]) for t in range(trials)]


def _nonzero_count(values: Sequence[Tensor]) -> int:
    return sum(1 for v in values if not v.is_zero())


# ============================================================================
# SUITES
# ============================================================================

def suite_scalar(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    w = standard_form(dim // 2)
    samples = _curvatures(dim, trials, seed)
    values = _map_trials(lambda t: scalar_identity(samples[t], w), trials, settings.threads)
    nonzero = _nonzero_count(values)
    ok = True
    if dim == 2:
        ok &= _check('scalar.vanishes_dim2', nonzero == 0, f"{nonzero}/{trials} nonzero", nonzero=nonzero)
    else:
        ok &= _check(f'scalar.nonzero_dim{dim}', nonzero > 0, f"{nonzero}/{trials} nonzero", nonzero=nonzero)
    if dim >= 4:
        main = [main_theorem_form(R, w, 0, 2) for R in samples]
        c = common_ratio(list(zip(main, values)))
        frozen = ratio_constants(seed)['main(0,2)/scalar_identity'].value
        ok &= _check(f'scalar.main_form_ratio_dim{dim}', c is not None and c != 0 and c == frozen,
                     f"main(0,2) = {c} * scalar_identity", ratio=str(c), frozen=str(frozen))
    return ok


def suite_two_form(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    variant = resolve_expr1_variant(seed)
    _measured('two_form.expr1_reading', variant, variant=variant)
    ok = True
    w = standard_form(dim // 2)
    samples = _curvatures(dim, trials, seed)
    values = _map_trials(lambda t: two_form_identity(samples[t], w), trials, settings.threads)
    nonzero = _nonzero_count(values)
    if dim <= 4:
        ok &= _check(f'two_form.vanishes_dim{dim}', nonzero == 0, f"{nonzero}/{trials} nonzero", nonzero=nonzero)
    else:
        ok &= _check(f'two_form.nonzero_dim{dim}', nonzero > 0, f"{nonzero}/{trials} nonzero", nonzero=nonzero)
    ok &= _check('two_form.antisymmetric', all(is_antisymmetric(v) for v in values))

    expanded = _map_trials(lambda t: expr1(samples[t], ricci(samples[t], w), w, variant), trials, settings.threads)
    ok &= _check('expr1.antisymmetric', all(is_antisymmetric(v) for v in expanded))
    if dim == 4:
        ok &= _check('expr1.vanishes_dim4', _nonzero_count(expanded) == 0)
    c = common_ratio(list(zip(expanded, values)))
    frozen = ratio_constants(seed)['expr1/two_form_identity'].value
    if dim >= 6:
        ok &= _check(f'expr1.ratio_dim{dim}', c is not None and c != 0 and c == frozen,
                     f"expr1 = {c} * two_form_identity", ratio=str(c), frozen=str(frozen))
        main = [main_theorem_form(R, w, 2, 2) for R in samples]
        c_main = common_ratio(list(zip(main, values)))
        frozen_main = ratio_constants(seed)['main(2,2)/two_form_identity'].value
        ok &= _check(f'two_form.main_form_ratio_dim{dim}', c_main is not None and c_main != 0 and c_main == frozen_main,
                     f"main(2,2) = {c_main} * two_form_identity", ratio=str(c_main), frozen=str(frozen_main))
    return ok


def suite_chern(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    w = standard_form(dim // 2)
    samples = _curvatures(dim, trials, seed)
    ok = True
    for q in (1, 2, 3):
        forms = _map_trials(lambda t: chern_generator(samples[t], w, q), trials, settings.threads)
        nonzero = _nonzero_count(forms)
        ok &= _check(f'chern.c{q}_antisymmetric', all(is_antisymmetric(f) for f in forms))
        if q % 2:
            ok &= _check(f'chern.c{q}_vanishes_dim{dim}', nonzero == 0, f"{nonzero}/{trials} nonzero",
                         nonzero=nonzero)
        elif dim >= 2 * q:
            ok &= _check(f'chern.c{q}_nonzero_dim{dim}', nonzero > 0, f"{nonzero}/{trials} nonzero",
                         nonzero=nonzero)
    return ok


def suite_main_theorem(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    ok = True
    structures = _structures(dim, 1, min(trials, 3), seed)
    for p in (0, 2, 4):
        E = builtin(f'main({p},2)')
        if dim >= 4 + p:
            results = [homogeneity_check(E, F, lam) for F in structures for lam in (2, 3)]
            measured = sorted({r.measured for r in results if r.measured is not None})
            ok &= _check(f'main({p},2).weight', measured == [p - 4],
                         f"measured {measured}, declared {p - 4}", measured=measured, declared=p - 4)
        low = 2 + p
        w = standard_form(low // 2)
        values = [main_theorem_form(R, w, p, 2) for R in _curvatures(low, trials, seed)]
        ok &= _check(f'main({p},2).vanishes_dim{low}', _nonzero_count(values) == 0)
    return ok


def suite_divergence(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    ok = True
    structures = _structures(dim, 3, trials, seed)

    expr1_div = _map_trials(lambda t: divergence(structures[t], BUILTINS['expr1']), trials, settings.threads)
    nonzero = _nonzero_count(expr1_div)
    ok &= _check(f'divergence.expr1_dim{dim}', nonzero == 0, f"{nonzero}/{trials} nonzero", nonzero=nonzero)

    omega_div = divergence(structures[0], BUILTINS['omega'])
    ok &= _check('divergence.omega', omega_div.is_zero())

    for p in (2, 4):
        if dim < 4 + p:
            continue
        E = builtin(f'main({p},2)')
        probe = [divergence(F, E) for F in structures[:2]]
        values = [[str(x) for x in v.data.reshape(-1) if x != 0][:4] for v in probe]
        _measured(f'divergence.{E.name}_dim{dim}',
                  f"{_nonzero_count(probe)}/{len(probe)} nonzero",
                  nonzero=_nonzero_count(probe), sample_components=values)
    return ok


def suite_bianchi(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    structures = _structures(dim, 3, trials, seed)
    residuals = _map_trials(lambda t: contracted_bianchi_residual(structures[t]), trials, settings.threads)
    nonzero = _nonzero_count(residuals)
    return _check(f'bianchi.contracted_dim{dim}', nonzero == 0, f"{nonzero}/{trials} nonzero residuals",
                  nonzero=nonzero)


def suite_sft(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    ok = True
    for n in (1, 2):
        for p in (2, 4, 6):
            if 2 * n + 1 <= p:
                ok &= _check(f'sft.vanishes_n{n}_p{p}', alternation_vanishes(p, 2 * n + 1, n, seed, trials))
            if 2 * n <= p:
                generic = not alternation_vanishes(p, 2 * n, n, seed, trials)
                ok &= _check(f'sft.nonzero_at_2n_n{n}_p{p}', generic)
            if 2 * n + 1 <= p:
                measured = minimal_vanishing_size(p, n, seed, trials)
                ok &= _check(f'sft.threshold_n{n}_p{p}', measured == 2 * n + 1,
                             f"alternations vanish from {measured} slots on in dim {2 * n}, n+1 = {n + 1}",
                             measured=measured, expected=2 * n + 1, n_plus_one=n + 1)
    return ok


def suite_homogeneity(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    ok = True
    structures = _structures(dim, 1, min(trials, 3), seed)
    names = ['omega', 'ricci', 'scalar_identity', 'two_form_identity', 'expr1',
             'main(0,2)', 'main(2,2)', 'main(4,2)']
    for name in names:
        E = builtin(name)
        results = [homogeneity_check(E, F, lam) for F in structures for lam in (2, 3)]
        measured = sorted({r.measured for r in results if r.measured is not None})
        if not measured:
            _measured(f'homogeneity.{name}', f"vanishes in dim {dim}", declared=E.delta)
            continue
        ok &= _check(f'homogeneity.{name}', measured == [E.delta],
                     f"measured {measured}, declared {E.delta}", measured=measured, declared=E.delta)
    return ok


def suite_equivariance(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    ok = True
    n = dim // 2
    w = standard_form(n)
    samples = _curvatures(dim, trials, seed)
    matrices = [random_symplectic(n, seed + t) for t in range(trials)]
    for name in ['omega', 'ricci', 'scalar_identity', 'two_form_identity', 'expr1', 'chern1', 'chern2', 'chern3',
                 'main(0,2)', 'main(2,2)', 'main(4,2)']:
        E = builtin(name)

        def commutes(t: int) -> bool:
            R, A = samples[t], matrices[t]
            return E.evaluate(act(A, R, w=w), w).equals(act(A, E.evaluate(R, w), w=w))

        results = _map_trials(commutes, trials, settings.threads)
        ok &= _check(f'equivariance.{name}_dim{dim}', all(results), f"{sum(results)}/{trials} commute")
    return ok


def reduction_check(E: NaturalExpression, F: PolyFedosov) -> Dict[str, bool]:
    """Extend F by the flat plane, evaluate, restrict, and compare with the direct value."""
    extended = reduce(E.on(F.product_with_flat()), F.n)
    direct = E.on(F)
    return {'consistent': bool(extended.equals(direct)), 'restriction_zero': bool(extended.is_zero())}


def suite_reduction(dim: int, trials: int, seed: int, settings: Settings) -> bool:
    ok = True
    structures = _structures(dim, 1, min(trials, 5), seed)
    for name in ('scalar_identity', 'two_form_identity'):
        E = BUILTINS[name]
        results = [reduction_check(E, F) for F in structures]
        ok &= _check(f'reduction.{name}_consistent_dim{dim}', all(r['consistent'] for r in results))
        if dim <= VANISHES_UP_TO[name]:
            ok &= _check(f'reduction.{name}_restriction_zero', all(r['restriction_zero'] for r in results))
    return ok


_SUITE_FUNCTIONS = {
    'scalar': suite_scalar,
    'two-form': suite_two_form,
    'chern': suite_chern,
    'main-theorem': suite_main_theorem,
    'divergence': suite_divergence,
    'sft': suite_sft,
    'homogeneity': suite_homogeneity,
    'equivariance': suite_equivariance,
    'bianchi': suite_bianchi,
    'reduction': suite_reduction,
}


def run_suite(name: str, dim: int, trials: int, seed: int, settings: Optional[Settings] = None) -> bool:
    """Run one named suite; returns True when every assertion passed."""
    if name not in _SUITE_FUNCTIONS:
        raise UnknownNameError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if dim < 2 or dim % 2:
        raise UsageError(f"dimension must be even and >= 2, got {dim}")
    settings = settings or Settings()
    start = time.time()
    logger.info(f"Running suite {name} in dim {dim} ({trials} trials, seed {seed})")
    ok = _SUITE_FUNCTIONS[name](dim, trials, seed, settings)
    duration = time.time() - start
    logger.info(f"{'✓' if ok else '✗'} suite {name} finished in {duration:.1f}s",
                extra={"log_type": "suite", "action": name, "status": 'pass' if ok else 'fail',
                       "duration_seconds": duration})
    return ok


def certificate_tensor(certificate: IdentityCertificate, R: Tensor, w: Tensor) -> Tensor:
    """
    A pure-curvature certificate as a contravariant p-tensor: its value on
    R (x) ... (x) R (x) e^{a_1} (x) ... (x) e^{a_p} for unit covectors e^a.
    """
    solution, p = certificate.solution, certificate.spec.p
    if any(d for d in solution[1:]):
        raise ShapeMismatchError(f"tuple {solution} involves higher normal tensors, not only curvature")
    copies = solution[0] if solution else 0
    winv = inverse_form(w)
    units = [Tensor.of(row, w.field) for row in np.eye(w.dim, dtype=np.int64)]
    out = np.zeros((w.dim,) * p, dtype=object)
    for idx in itertools.product(range(w.dim), repeat=p):
        out[idx] = certificate.evaluate(FactoredTensor([R] * copies + [units[a] for a in idx]), winv)
    return Tensor.of(out, w.field)


def certificate_ratio(certificate: IdentityCertificate, E: NaturalExpression, trials: int,
                      seed: int) -> Optional[object]:
    """
    Single constant c with certificate = c * E (slots of E raised) on random
    curvature samples in dimension 2(n+1); None when no such constant exists.
    """
    dim = certificate.spec.dim + 2
    w = standard_form(dim // 2)
    pairs = []
    for R in _curvatures(dim, trials, seed):
        value = E.evaluate(R, w)
        raised = raise_slots(value, w, range(value.order)) if value.order else value
        pairs.append((certificate_tensor(certificate, R, w), raised))
    return common_ratio(pairs)
