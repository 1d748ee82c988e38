"""
Dimensions of the spaces of natural tensors T_{p,delta}[2n] and detection of
dimensional identities.

A natural tensor with p covariant indices and weight delta is a sum, over the
solution tuples (d_1..d_r) of 2 d_1 + 3 d_2 + ... + (r+1) d_r = p - delta,
of invariant forms on R^{d_1} x N_2^{d_2} x ... x N_r^{d_r} x V^p. Each
summand is spanned by the matchings of its N = 4 d_1 + ... + (3+r) d_r + p slots,
so its dimension is the rank of the matching evaluation matrix on samples.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from scripts.invariants.matchings import Matching, combination_value, enumerate_matchings, eval_matching_batch
from scripts.tensors.linalg import Eliminator, left_nullspace, matrix_rank, nullspace
from scripts.tensors.scalars import Field, RATIONAL, select_primes
from scripts.tensors.symmetry_spaces import curvature_projector, normal_projector
from scripts.tensors.symplectic import inverse_form, standard_form
from scripts.tensors.tensor import FactoredTensor, Tensor
from scripts.utils.config import Settings
from scripts.utils.errors import CapExceededError, DegenerateSamplingError, RankDisagreementError, UsageError

logger = logging.getLogger(__name__)

T = TypeVar('T')
SolutionTuple = Tuple[int, ...]

# spare samples kept beyond the measured rank
SAMPLE_MARGIN = 4
INITIAL_SAMPLES = 24
WITNESS_RETRIES = 20


@dataclass(frozen=True)
class SpaceSpec:
    """T_{p,delta}[2n]."""
    p: int
    delta: int
    n: int

    def __post_init__(self):
        if self.delta % 2:
            raise UsageError(f"weight must be even, got {self.delta}")
        if self.p < 0:
            raise UsageError(f"p must be non-negative, got {self.p}")
        if self.n < 1:
            raise UsageError(f"n must be at least 1, got {self.n}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def at(self, n: int) -> 'SpaceSpec':
        return SpaceSpec(self.p, self.delta, n)

    def __str__(self):
        return f"T(p={self.p}, delta={self.delta})[{self.dim}]"


# ============================================================================
# SOLUTION TUPLES
# ============================================================================

def weight_solutions(p: int, delta: int, r_max: Optional[int] = None) -> List[SolutionTuple]:
    """
    All (d_1..d_r) with sum((i+1) d_i) = p - delta, trailing zeros trimmed.
    p - delta = 0 gives the empty tuple; p - delta < 0 gives nothing.
    """
    target = p - delta
    if target < 0:
        return []
    r_max = target if r_max is None else r_max
    found: List[SolutionTuple] = []

    def extend(prefix: List[int], remaining: int):
        i = len(prefix) + 1
        if remaining == 0:
            trimmed = list(prefix)
            while trimmed and trimmed[-1] == 0:
                trimmed.pop()
            found.append(tuple(trimmed))
            return
        if i > r_max or i + 1 > remaining:
            return
        for d in range(remaining // (i + 1) + 1):
            extend(prefix + [d], remaining - d * (i + 1))

    extend([], target)
    return sorted(set(found), key=lambda t: (len(t), t))


def tuple_order(solution: SolutionTuple, p: int) -> int:
    """N = 4 d_1 + 5 d_2 + ... + (3 + r) d_r + p."""
    return sum((3 + i) * d for i, d in enumerate(solution, start=1)) + p


def factor_layout(solution: SolutionTuple, p: int) -> List[int]:
    """Order of every sample factor: d_i copies of an order-(i+3) tensor, then p covectors."""
    layout = []
    for i, d in enumerate(solution, start=1):
        layout.extend([i + 3] * d)
    return layout + [1] * p


# ============================================================================
# SAMPLING AND EVALUATION
# ============================================================================

def _projector(i: int, n: int, settings: Settings):
    # R and N_1 are isomorphic as Sp-modules; curvature samples stand for N_1
    if i == 1:
        return curvature_projector(n)
    return normal_projector(i, n, settings.max_normal_order, settings.max_normal_dim)


def sample_batches(solution: SolutionTuple, p: int, n: int, field: Field, seed: int, tuple_index: int,
                   batch: int, count: int, settings: Optional[Settings] = None,
                   integral: bool = False) -> List[np.ndarray]:
    """
    Sample factors for `count` samples, one array per slot group with a
    leading sample axis. Repeated factors reuse the same array, so every
    sample is a polynomial evaluation point. Each sample is keyed by
    (seed, tuple_index, batch, sample index).
    """
    settings = settings or Settings()
    dim = 2 * n
    arrays: List[np.ndarray] = []
    for i, d in enumerate(solution, start=1):
        if d == 0:
            continue
        P = _projector(i, n, settings)
        stacked = np.stack([
            P.random_element([seed, tuple_index, batch, s, i], field, integral=integral).data
            for s in range(count)
        ]) if count else np.zeros((0,) + (dim,) * (i + 3), dtype=field.dtype)
        arrays.extend([stacked] * d)
    if p:
        raw = np.stack([
            np.random.default_rng([seed, tuple_index, batch, s, 0]).integers(-9, 10, size=(p, dim))
            for s in range(count)
        ]) if count else np.zeros((0, p, dim), dtype=np.int64)
        for j in range(p):
            arrays.append(field.array(raw[:, j, :]))
    return arrays


def evaluation_matrix(matchings: Sequence[Matching], batches: Sequence[np.ndarray], n: int, field: Field,
                      threads: int = 1) -> np.ndarray:
    """M[matching, sample]; rows are filled in parallel and placed by position."""
    winv = inverse_form(standard_form(n)).to(field)
    count = batches[0].shape[0] if batches else 1
    out = np.zeros((len(matchings), count), dtype=field.dtype)

    def fill(position: int):
        out[position] = eval_matching_batch(matchings[position], batches, winv, field)

    if threads > 1 and len(matchings) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            list(executor.map(fill, range(len(matchings))))
    else:
        for position in range(len(matchings)):
            fill(position)
    return out


def retry_on_rank_disagreement(func: Callable[[int], T], samples: int, max_retries: int = 3) -> T:
    """
    Call func(samples), doubling the sample count on RankDisagreementError.

    Args:
        func: callable taking the sample count
        samples: initial sample count
        max_retries: maximum number of retry attempts

    Returns:
        Result of the function call

    Raises:
        The last RankDisagreementError if all retries fail
    """
    for attempt in range(max_retries + 1):
        try:
            return func(samples)
        except RankDisagreementError as e:
            if attempt < max_retries:
                samples *= 2
                logger.warning(
                    f"Rank disagreement (attempt {attempt + 1}/{max_retries + 1}): {e}; "
                    f"retrying with {samples} samples..."
                )
                continue
            raise


@dataclass
class TupleRank:
    solution: SolutionTuple
    order: int
    matchings: int
    rank: int
    samples: int


@dataclass
class SpaceDimension:
    """Result of space_dim with its per-tuple breakdown."""
    spec: SpaceSpec
    tuples: List[TupleRank] = dataclass_field(default_factory=list)
    primes: Tuple[int, ...] = ()

    @property
    def total(self) -> int:
        return sum(t.rank for t in self.tuples)

    def __int__(self):
        return self.total

    def breakdown(self) -> Dict[SolutionTuple, int]:
        return {t.solution: t.rank for t in self.tuples}

    def to_dict(self) -> Dict:
        return {
            'p': self.spec.p, 'delta': self.spec.delta, 'dim': self.spec.dim, 'total': self.total,
            'primes': list(self.primes),
            'tuples': [{'tuple': list(t.solution), 'N': t.order, 'matchings': t.matchings,
                        'rank': t.rank, 'samples': t.samples} for t in self.tuples],
        }


def _check_caps(order: int, n: int, settings: Settings):
    if order > settings.max_matching_order:
        raise CapExceededError(f"tuple order {order} exceeds the cap N <= {settings.max_matching_order}")
    if 2 * n > settings.max_matching_dim:
        raise CapExceededError(f"dimension {2 * n} exceeds the cap 2n <= {settings.max_matching_dim}")


def tuple_rank(spec: SpaceSpec, solution: SolutionTuple, tuple_index: int, seed: int,
               samples: Optional[int] = None, settings: Optional[Settings] = None,
               exact: bool = False) -> TupleRank:
    """
    Rank of the evaluation matrix of one solution tuple.

    The rank is computed over two primes on two disjoint sample batches and
    the results must agree. Without an explicit sample count, the count
    grows until the rank leaves SAMPLE_MARGIN spare samples or every
    matching is covered.
    """
    settings = settings or Settings()
    order = tuple_order(solution, spec.p)
    if order % 2:
        return TupleRank(solution, order, 0, 0, 0)
    _check_caps(order, spec.n, settings)
    matchings = enumerate_matchings(order)
    layout_p = spec.p

    def measure(count: int) -> Tuple[int, int]:
        if exact:
            batches = sample_batches(solution, layout_p, spec.n, RATIONAL, seed, tuple_index, 0, count,
                                     settings, integral=True)
            M = evaluation_matrix(matchings, batches, spec.n, RATIONAL, settings.threads)
            return matrix_rank(M, RATIONAL), count
        ranks = []
        for batch, prime in enumerate(select_primes(seed)):
            batches = sample_batches(solution, layout_p, spec.n, prime, seed, tuple_index, batch, count, settings)
            M = evaluation_matrix(matchings, batches, spec.n, prime, settings.threads)
            ranks.append(matrix_rank(M, prime))
        if len(set(ranks)) > 1:
            raise RankDisagreementError(f"{spec} tuple {solution}: ranks {ranks} with {count} samples")
        return ranks[0], count

    def adaptive(count: int) -> Tuple[int, int]:
        rank, used = measure(count)
        while samples is None and rank > used - SAMPLE_MARGIN and used < len(matchings) + SAMPLE_MARGIN:
            used = min(2 * used, len(matchings) + SAMPLE_MARGIN)
            rank, used = measure(used)
        return rank, used

    start = samples or (settings.sample_factor * len(matchings) if settings.sample_factor
                        else min(len(matchings) + SAMPLE_MARGIN, INITIAL_SAMPLES))
    rank, used = retry_on_rank_disagreement(adaptive, start)
    logger.debug(f"{spec} tuple {solution}: N={order}, {len(matchings)} matchings, rank {rank} ({used} samples)")
    return TupleRank(solution, order, len(matchings), rank, used)


def space_dim(spec: SpaceSpec, seed: int, samples: Optional[int] = None,
              settings: Optional[Settings] = None, exact: bool = False) -> SpaceDimension:
    """dim T_{p,delta}[2n] with its per-tuple breakdown."""
    settings = settings or Settings()
    result = SpaceDimension(spec, primes=tuple(f.p for f in select_primes(seed)))
    for index, solution in enumerate(weight_solutions(spec.p, spec.delta)):
        result.tuples.append(tuple_rank(spec, solution, index, seed, samples, settings, exact))
    return result


def identity_space_dim(spec: SpaceSpec, seed: int, samples: Optional[int] = None,
                       settings: Optional[Settings] = None) -> int:
    """dim K_{p,delta}[2n] = dim T[2(n+1)] - dim T[2n]."""
    low = space_dim(spec, seed, samples, settings).total
    high = space_dim(spec.at(spec.n + 1), seed, samples, settings).total
    if high < low:
        raise RankDisagreementError(f"dimension drops from {low} to {high} between {spec} and {spec.at(spec.n + 1)}")
    return high - low


# ============================================================================
# IDENTITY CERTIFICATES
# ============================================================================

@dataclass
class IdentityCertificate:
    """
    A combination of matchings vanishing on natural tensors in dim 2n and
    nonzero at a witness sample in dim 2(n+1).
    """
    spec: SpaceSpec
    solution: SolutionTuple
    coefficients: Dict[Tuple[Tuple[int, int], ...], object]
    witness: Tuple[int, ...] = ()

    def evaluate(self, factors: Union[FactoredTensor, Sequence[Tensor]], w_inverse: Tensor):
        """Value on one sample (covariant factors in tuple layout), paired with w^{-1}."""
        return combination_value(self.coefficients, factors, w_inverse)

    def to_text(self) -> str:
        lines = [
            f"p={self.spec.p} delta={self.spec.delta} n={self.spec.n} "
            f"tuple={','.join(str(d) for d in self.solution)}",
            f"witness={','.join(str(x) for x in self.witness)}",
        ]
        for key in sorted(self.coefficients):
            lines.append(f"{Matching(key).label()}\t{self.coefficients[key]}")
        return '\n'.join(lines) + '\n'

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> 'IdentityCertificate':
        lines = [line for line in text.splitlines() if line.strip()]
        header = dict(token.split('=', 1) for token in lines[0].split())
        spec = SpaceSpec(int(header['p']), int(header['delta']), int(header['n']))
        solution = tuple(int(d) for d in header.get('tuple', '').split(',') if d)
        body = lines[1:]
        witness = ()
        if body and body[0].startswith('witness='):
            witness = tuple(int(x) for x in body[0].split('=', 1)[1].split(',') if x)
            body = body[1:]
        coefficients = {}
        for line in body:
            label, value = line.split('\t')
            coeff = Fraction(value)
            coefficients[Matching.parse(label).key] = int(coeff) if coeff.denominator == 1 else coeff
        return cls(spec, solution, coefficients, witness)

    @classmethod
    def load(cls, path: str) -> 'IdentityCertificate':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_text(f.read())


def _integral(vector: Dict[int, object]) -> Dict[int, int]:
    """Scale to coprime integers with a positive leading coefficient."""
    values = {k: Fraction(v) for k, v in vector.items() if v != 0}
    scale = math.lcm(*[v.denominator for v in values.values()])
    ints = {k: int(v * scale) for k, v in values.items()}
    g = math.gcd(*ints.values())
    lead = ints[min(ints)]
    g = -g if lead < 0 else g
    return {k: v // g for k, v in ints.items()}


def _tuple_identities(spec: SpaceSpec, solution: SolutionTuple, tuple_index: int, seed: int,
                      low: TupleRank, high: TupleRank, settings: Settings) -> List[IdentityCertificate]:
    target = high.rank - low.rank
    if target <= 0:
        return []
    matchings = enumerate_matchings(low.order)

    # exact kernel of the dim-2n evaluation matrix
    count = low.rank + SAMPLE_MARGIN
    for _ in range(4):
        batches = sample_batches(solution, spec.p, spec.n, RATIONAL, seed, tuple_index, 2, count,
                                 settings, integral=True)
        M_low = evaluation_matrix(matchings, batches, spec.n, RATIONAL, settings.threads)
        pivots, nrows = left_nullspace(M_low, RATIONAL)
        if len(pivots) >= low.rank:
            break
        count *= 2
    kernel = list(nullspace(pivots, nrows))

    prime = select_primes(seed)[0]
    for attempt in range(WITNESS_RETRIES):
        batch = 3 + attempt
        batches = sample_batches(solution, spec.p, spec.n + 1, prime, seed, tuple_index, batch,
                                 high.rank + SAMPLE_MARGIN, settings)
        M_high = evaluation_matrix(matchings, batches, spec.n + 1, prime, settings.threads)
        eliminator = Eliminator(prime)
        chosen = []
        for vector in kernel:
            image = np.zeros(M_high.shape[1], dtype=np.int64)
            for row, coeff in vector.items():
                image = np.mod(image + prime.scalar(coeff) * M_high[row], prime.p)
            if eliminator.add({k: int(v) for k, v in enumerate(image) if v}):
                sample = int(np.nonzero(image)[0][0])
                chosen.append((vector, sample))
                if len(chosen) == target:
                    break
        if len(chosen) == target:
            return [
                IdentityCertificate(
                    spec, solution,
                    {matchings[k].key: v for k, v in sorted(_integral(vector).items())},
                    witness=(seed, tuple_index, batch, sample),
                )
                for vector, sample in chosen
            ]
        logger.warning(f"{spec} tuple {solution}: {len(chosen)}/{target} witnesses (attempt {attempt + 1})")
    raise DegenerateSamplingError(f"no nonzero witness found for {spec} tuple {solution}")


def find_identity(spec: SpaceSpec, seed: int, samples: Optional[int] = None,
                  settings: Optional[Settings] = None) -> List[IdentityCertificate]:
    """
    Certificates spanning the dimensional identities K_{p,delta}[2n], one per
    basis vector, grouped by solution tuple.
    """
    settings = settings or Settings()
    certificates = []
    for index, solution in enumerate(weight_solutions(spec.p, spec.delta)):
        low = tuple_rank(spec, solution, index, seed, samples, settings)
        if low.order % 2:
            continue
        high = tuple_rank(spec.at(spec.n + 1), solution, index, seed, samples, settings)
        certificates.extend(_tuple_identities(spec, solution, index, seed, low, high, settings))
    logger.info(f"{spec}: {len(certificates)} identity certificate(s)")
    return certificates


def witness_sample(certificate: IdentityCertificate, settings: Optional[Settings] = None,
                   field: Field = RATIONAL) -> List[Tensor]:
    """Rebuild the witness sample of a certificate in dimension 2(n+1)."""
    seed, tuple_index, batch, sample = certificate.witness
    n = certificate.spec.n + 1
    arrays = sample_batches(certificate.solution, certificate.spec.p, n, field, seed, tuple_index,
                            batch, sample + 1, settings)
    return [Tensor(arr[sample], field) for arr in arrays]
