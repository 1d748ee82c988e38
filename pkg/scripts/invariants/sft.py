"""
Alternation relations among matchings: the formal sum of sgn(sigma) * w_sigma
over the permutations sigma of a slot subset I.
"""

import itertools
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from scripts.invariants.matchings import Matching, combination_value
from scripts.tensors.scalars import RATIONAL
from scripts.tensors.symplectic import inverse_form, standard_form
from scripts.tensors.tensor import FactoredTensor, Tensor, perm_sign
from scripts.utils.errors import ShapeMismatchError

logger = logging.getLogger(__name__)

Key = Tuple[Tuple[int, int], ...]


def sft_alternation(p: int, subset: Sequence[int]) -> Dict[Key, int]:
    """
    Coefficients over canonical matchings of sum(sgn(sigma) * w_sigma), where
    w_sigma pairs (sigma(0), sigma(1)), (sigma(2), sigma(3)), ... and sigma
    permutes `subset` (0-based slots), fixing every other slot.
    """
    if p % 2:
        raise ShapeMismatchError(f"matchings need an even number of slots, got {p}")
    subset = tuple(subset)
    if len(set(subset)) != len(subset) or any(not 0 <= s < p for s in subset):
        raise ShapeMismatchError(f"invalid slot subset {subset} for p={p}")
    coefficients: Dict[Key, int] = {}
    for images in itertools.permutations(subset):
        sigma = list(range(p))
        for source, target in zip(subset, images):
            sigma[source] = target
        m = Matching.from_pairs([(sigma[2 * i], sigma[2 * i + 1]) for i in range(p // 2)])
        coeff = perm_sign([subset.index(x) for x in images]) * m.sign
        coefficients[m.key] = coefficients.get(m.key, 0) + coeff
    return {k: v for k, v in coefficients.items() if v != 0}


def alternation_vanishes(p: int, size: int, n: int, seed: int, trials: int = 10) -> bool:
    """True when the alternation over the first `size` slots is 0 on `trials` random covector samples in dim 2n."""
    combination = sft_alternation(p, range(size))
    if not combination:
        return True
    winv = inverse_form(standard_form(n))
    for trial in range(trials):
        rng = np.random.default_rng([seed, n, p, size, trial])
        vectors = [Tensor.of(rng.integers(-9, 10, size=2 * n), RATIONAL) for _ in range(p)]
        if combination_value(combination, FactoredTensor(vectors), winv) != 0:
            return False
    return True


def minimal_vanishing_size(p: int, n: int, seed: int, trials: int = 10) -> Optional[int]:
    """
    Smallest |I| from which the alternation vanishes for every larger subset
    of the first slots, measured on random samples; None if it never does.
    """
    found = None
    for size in range(p, 0, -1):
        if alternation_vanishes(p, size, n, seed, trials):
            found = size
        else:
            break
    logger.debug(f"alternation threshold for p={p}, dim {2 * n}: {found}")
    return found
