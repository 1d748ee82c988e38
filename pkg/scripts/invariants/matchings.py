"""
Perfect matchings of N slots and their evaluation as invariant linear forms.

A matching with pairs (a_1, b_1), ..., (a_k, b_k) evaluates an order-N
covariant tensor X to sign * sum X_{i_1..i_N} * prod w^{i_a i_b}, where w is
the (inverse) symplectic form passed by the caller.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, Hashable, Iterator, List, Sequence, Tuple, Union

import numpy as np

from scripts.tensors.scalars import Field
from scripts.tensors.tensor import ContractionPlan, FactoredTensor, Tensor, contract, contract_arrays
from scripts.utils.errors import ShapeMismatchError, UsageError

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]
_PAIR_RE = re.compile(r'\((\d+)\s+(\d+)\)')


def all_pairings(items) -> Iterator[List[Pair]]:
    """
    Yields all pairings (i.e., partitions in which each part
    has size 2) of the given items.
    """
    items = list(items)
    if len(items) == 0:
        yield []
        return

    first_item = items.pop(0)
    for i, item in enumerate(items):
        first_pair = (first_item, item)
        for pairing in all_pairings(items[:i] + items[i + 1:]):
            yield [first_pair] + pairing


@dataclass(frozen=True)
class Matching:
    """Canonical matching: pairs (a, b) with a < b, sorted by a; slots are 0-based."""
    pairs: Tuple[Pair, ...]
    sign: int = 1

    @classmethod
    def from_pairs(cls, pairs: Sequence[Pair]) -> 'Matching':
        sign = 1
        canonical = []
        for a, b in pairs:
            if a == b:
                raise ShapeMismatchError(f"slot {a} paired with itself")
            if a > b:
                a, b = b, a
                sign = -sign
            canonical.append((a, b))
        canonical.sort()
        slots = [s for pair in canonical for s in pair]
        if len(set(slots)) != len(slots):
            raise ShapeMismatchError(f"pairs {pairs} reuse a slot")
        return cls(tuple(canonical), sign)

    @property
    def order(self) -> int:
        return 2 * len(self.pairs)

    @property
    def key(self) -> Tuple[Pair, ...]:
        return self.pairs

    def label(self) -> str:
        """Text form with 1-based slots, e.g. '(1 2)(3 4)'."""
        return ''.join(f"({a + 1} {b + 1})" for a, b in self.pairs)

    @classmethod
    def parse(cls, text: str) -> 'Matching':
        pairs = [(int(a) - 1, int(b) - 1) for a, b in _PAIR_RE.findall(text)]
        if not pairs and text.strip():
            raise UsageError(f"cannot parse matching {text!r}")
        return cls.from_pairs(pairs)

    def plan(self, factor_orders: Sequence[int], batch: Hashable = None) -> ContractionPlan:
        """Plan contracting one w-factor per pair against factors of the given orders."""
        labels: List[Tuple[Hashable, ...]] = [(('s', a), ('s', b)) for a, b in self.pairs]
        start = 0
        for order in factor_orders:
            slots = tuple(('s', k) for k in range(start, start + order))
            labels.append(((batch,) + slots) if batch is not None else slots)
            start += order
        if start != self.order:
            raise ShapeMismatchError(f"matching of order {self.order} applied to order {start}")
        output = (batch,) if batch is not None else ()
        return ContractionPlan(tuple(labels), output, frozenset(output))


def enumerate_matchings(N: int) -> List[Matching]:
    """All (N-1)!! canonical matchings of N slots; none when N is odd."""
    if N < 0 or N % 2:
        return []
    return [Matching(tuple(p)) for p in all_pairings(range(N))]


def _factor_list(factors: Union[Tensor, FactoredTensor, Sequence[Tensor]]) -> List[Tensor]:
    if isinstance(factors, FactoredTensor):
        return list(factors.factors)
    if isinstance(factors, Tensor):
        return [factors]
    return list(factors)


def eval_matching(m: Matching, factors: Union[Tensor, FactoredTensor, Sequence[Tensor]], w: Tensor):
    """
    Full contraction of the (factored) order-N input with one w per pair,
    times the canonical sign.
    """
    parts = _factor_list(factors)
    orders = [f.order for f in parts]
    if sum(orders) != m.order:
        raise ShapeMismatchError(f"matching of order {m.order} applied to order {sum(orders)}")
    value = contract(m.plan(orders), [w] * len(m.pairs) + parts).scalar()
    return value if m.sign > 0 else w.field.scalar(-value)


def eval_matching_batch(m: Matching, batches: Sequence[np.ndarray], w: Tensor, field: Field) -> np.ndarray:
    """
    Evaluate m on S samples at once.

    batches: one array per factor with a leading sample axis, shape (S, dim, ..., dim);
    the same array may appear several times for repeated factors.
    """
    orders = [b.ndim - 1 for b in batches]
    plan = m.plan(orders, batch='sample')
    parts = [(w.data, labels) for labels in plan.inputs[:len(m.pairs)]]
    parts += [(arr, labels) for arr, labels in zip(batches, plan.inputs[len(m.pairs):])]
    values = contract_arrays(parts, plan.output, field, plan.batch)
    return values if m.sign > 0 else field.reduce(-values)


def combination_value(coefficients: Dict[Tuple[Pair, ...], object],
                      factors: Union[Tensor, FactoredTensor, Sequence[Tensor]], w: Tensor):
    """sum(coeff * eval_matching(matching)) over a {matching key: coefficient} map."""
    total = w.field.scalar(0)
    for key, coeff in coefficients.items():
        if coeff == 0:
            continue
        value = eval_matching(Matching(key), factors, w)
        total = w.field.scalar(total + coeff * value)
    return total
