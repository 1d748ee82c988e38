"""
Dense and factored multi-index arrays with contraction, symmetrization,
alternation and wedge products.

Slots are numbered from 0. A permutation `perm` acting on a tensor means
new[idx] = old[idx[perm[0]], idx[perm[1]], ...].
"""

import itertools
import logging
import math
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from scripts.tensors.scalars import (
    INT64_LIMIT,
    Field,
    PrimeField,
    RATIONAL,
    int_magnitude,
)
from scripts.utils.errors import CapExceededError, MembershipError, ShapeMismatchError

logger = logging.getLogger(__name__)

MAX_DENSE_SCALARS = 10 ** 8
_LETTERS = string.ascii_letters


def perm_sign(perm: Sequence[int]) -> int:
    """Sign of a permutation given as a sequence of distinct ints."""
    order = sorted(perm)
    position = {v: i for i, v in enumerate(order)}
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = position[perm[j]]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def permute_array(arr: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """new[idx] = arr[idx[perm[0]], idx[perm[1]], ...]"""
    return np.transpose(arr, np.argsort(perm))


# ============================================================================
# TENSOR TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class Tensor:
    """Immutable dense tensor of shape (dim,)*order over a scalar field."""
    data: np.ndarray
    field: Field = RATIONAL

    def __post_init__(self):
        arr = np.array(self.data, dtype=self.field.dtype, copy=True)
        if arr.size > MAX_DENSE_SCALARS:
            raise CapExceededError(f"dense tensor with {arr.size} scalars exceeds {MAX_DENSE_SCALARS}")
        if arr.ndim and len(set(arr.shape)) > 1:
            raise ShapeMismatchError(f"tensor axes must share one dimension, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, 'data', arr)

    @classmethod
    def of(cls, data, field: Field = RATIONAL) -> 'Tensor':
        """Convert raw data (ints, Fractions, floats) into `field`."""
        return cls(field.array(data), field)

    @classmethod
    def zeros(cls, dim: int, order: int, field: Field = RATIONAL) -> 'Tensor':
        return cls(field.array(np.zeros((dim,) * order, dtype=np.int64)), field)

    @property
    def order(self) -> int:
        return self.data.ndim

    @property
    def dim(self) -> int:
        return self.data.shape[0] if self.data.ndim else 0

    def scalar(self):
        if self.order != 0:
            raise ShapeMismatchError(f"order-{self.order} tensor is not a scalar")
        return self.data.item()

    def to(self, field: Field) -> 'Tensor':
        return Tensor.of(self.data, field)

    def _combine(self, other: 'Tensor', op) -> 'Tensor':
        if self.data.shape != other.data.shape:
            raise ShapeMismatchError(f"shapes {self.data.shape} and {other.data.shape} differ")
        return Tensor(self.field.reduce(op(self.data, other.data)), self.field)

    def __add__(self, other: 'Tensor') -> 'Tensor':
        return self._combine(other, np.add)

    def __sub__(self, other: 'Tensor') -> 'Tensor':
        return self._combine(other, np.subtract)

    def __neg__(self) -> 'Tensor':
        return Tensor(self.field.reduce(-self.data), self.field)

    def scale(self, factor) -> 'Tensor':
        return Tensor(scale_array(self.data, factor, self.field), self.field)

    def permute(self, perm: Sequence[int]) -> 'Tensor':
        return Tensor(permute_array(self.data, perm), self.field)

    def outer(self, other: 'Tensor') -> 'Tensor':
        return contract(
            ContractionPlan((tuple(range(self.order)), tuple(range(self.order, self.order + other.order))),
                            tuple(range(self.order + other.order))),
            [self, other])

    def is_zero(self, scale: float = 0.0) -> bool:
        return self.field.is_zero_array(self.data, scale)

    def equals(self, other: 'Tensor') -> bool:
        return self.data.shape == other.data.shape and (self - other).is_zero(
            scale=float(np.max(np.abs(np.asarray(self.data, dtype=float)))) if not self.field.exact and self.data.size else 0.0)

    def __repr__(self):
        return f"Tensor(order={self.order}, dim={self.dim}, field={self.field})"


@dataclass(frozen=True)
class FactoredTensor:
    """Tensor product of smaller tensors; slot order is the concatenation of factor slots."""
    factors: Tuple[Tensor, ...]

    def __post_init__(self):
        object.__setattr__(self, 'factors', tuple(self.factors))
        dims = {f.dim for f in self.factors if f.order}
        if len(dims) > 1:
            raise ShapeMismatchError(f"factors have different dimensions {sorted(dims)}")

    @property
    def order(self) -> int:
        return sum(f.order for f in self.factors)

    @property
    def dim(self) -> int:
        return next((f.dim for f in self.factors if f.order), 0)

    @property
    def field(self) -> Field:
        return self.factors[0].field if self.factors else RATIONAL

    def densify(self) -> Tensor:
        labels, start = [], 0
        for f in self.factors:
            labels.append(tuple(range(start, start + f.order)))
            start += f.order
        return contract(ContractionPlan(tuple(labels), tuple(range(start))), list(self.factors))


def scale_array(arr: np.ndarray, factor, field: Field) -> np.ndarray:
    if isinstance(field, PrimeField):
        factor = Fraction(factor)
        f = (factor.numerator % field.p) * pow(factor.denominator % field.p, -1, field.p) % field.p
        return np.mod(arr * f, field.p)
    if field.exact:
        factor = Fraction(factor)
        if factor.denominator == 1:
            return arr * int(factor)
        return field.reduce(arr * factor)
    return arr * float(factor)


# ============================================================================
# CONTRACTION
# ============================================================================

@dataclass(frozen=True)
class ContractionPlan:
    """
    Einstein-summation plan.

    inputs: slot labels per factor; output: free label order;
    batch: labels shared by several factors and kept in the output (sample axes).
    """
    inputs: Tuple[Tuple[Hashable, ...], ...]
    output: Tuple[Hashable, ...]
    batch: FrozenSet[Hashable] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'inputs', tuple(tuple(x) for x in self.inputs))
        object.__setattr__(self, 'output', tuple(self.output))
        object.__setattr__(self, 'batch', frozenset(self.batch))
        counts: Dict[Hashable, int] = {}
        for labels in self.inputs:
            for label in labels:
                counts[label] = counts.get(label, 0) + 1
        if len(set(self.output)) != len(self.output):
            raise ShapeMismatchError("output labels repeat")
        for label, count in counts.items():
            if label in self.batch:
                if label not in self.output:
                    raise ShapeMismatchError(f"batch label {label!r} missing from output")
            elif count == 1 and label not in self.output:
                raise ShapeMismatchError(f"free label {label!r} missing from output")
            elif count == 2 and label in self.output:
                raise ShapeMismatchError(f"contracted label {label!r} appears in output")
            elif count > 2:
                raise ShapeMismatchError(f"label {label!r} occurs {count} times")
        for label in self.output:
            if label not in counts:
                raise ShapeMismatchError(f"output label {label!r} does not occur in any factor")


def _letters(labels: Iterable[Hashable]) -> Dict[Hashable, str]:
    mapping: Dict[Hashable, str] = {}
    for label in labels:
        if label not in mapping:
            if len(mapping) >= len(_LETTERS):
                raise CapExceededError("more than 52 distinct labels in one contraction step")
            mapping[label] = _LETTERS[len(mapping)]
    return mapping


def _einsum(spec: str, operands: List[np.ndarray], summed_size: int, field: Field) -> np.ndarray:
    """Exact-aware einsum: int64 kernels whenever overflow is impossible."""
    if isinstance(field, PrimeField):
        if summed_size * (field.p - 1) ** len(operands) < INT64_LIMIT:
            return np.mod(np.einsum(spec, *operands), field.p)
        wide = [op.astype(object) for op in operands]
        return np.mod(np.einsum(spec, *wide), field.p).astype(np.int64)
    if field.exact:
        bound = summed_size
        for op in operands:
            mag = int_magnitude(op)
            if mag is None:
                bound = None
                break
            bound *= max(mag, 1)
        if bound is not None and bound < INT64_LIMIT:
            narrow = [op.astype(np.int64) for op in operands]
            return np.asarray(np.einsum(spec, *narrow), dtype=object)
        return field.reduce(np.einsum(spec, *operands))
    return np.einsum(spec, *operands)


def _contract_pair(a, b, needed: set, field: Field):
    arr_a, lab_a = a
    arr_b, lab_b = b
    sizes = {}
    for arr, labs in ((arr_a, lab_a), (arr_b, lab_b)):
        for axis, label in enumerate(labs):
            sizes[label] = arr.shape[axis]
    keep = []
    for label in list(lab_a) + list(lab_b):
        if label in needed and label not in keep:
            keep.append(label)
    summed = math.prod(sizes[l] for l in sizes if l not in keep)
    letters = _letters(list(lab_a) + list(lab_b))
    spec = (''.join(letters[l] for l in lab_a) + ',' + ''.join(letters[l] for l in lab_b)
            + '->' + ''.join(letters[l] for l in keep))
    return _einsum(spec, [arr_a, arr_b], summed, field), tuple(keep)


def _self_trace(node, needed: set, field: Field):
    arr, labs = node
    keep = []
    for label in labs:
        if labs.count(label) == 1 or label in needed:
            if label not in keep:
                keep.append(label)
    if len(keep) == len(labs):
        return node
    letters = _letters(labs)
    summed = math.prod(arr.shape[labs.index(l)] for l in set(labs) if l not in keep)
    spec = ''.join(letters[l] for l in labs) + '->' + ''.join(letters[l] for l in keep)
    return _einsum(spec, [arr], summed, field), tuple(keep)


def plan_order(shapes: Sequence[Dict[Hashable, int]], output: Sequence[Hashable],
               batch: FrozenSet[Hashable] = frozenset()) -> List[Tuple[int, int]]:
    """
    Greedy pairwise order: repeatedly merge the pair with the smallest
    intermediate, preferring pairs that share a contracted label.
    Returns (i, j) positions into the shrinking node list.
    """
    nodes = [dict(s) for s in shapes]
    steps = []
    while len(nodes) > 1:
        best = None
        for i, j in itertools.combinations(range(len(nodes)), 2):
            others = set(output)
            for k, n in enumerate(nodes):
                if k not in (i, j):
                    others.update(n)
            merged = {**nodes[i], **nodes[j]}
            kept = {l: s for l, s in merged.items() if l in others}
            shares = any(l in nodes[j] and l not in batch for l in nodes[i])
            key = (0 if shares else 1, math.prod(kept.values()), i, j)
            if best is None or key < best[0]:
                best = (key, i, j, kept)
        _, i, j, kept = best
        steps.append((i, j))
        nodes = [n for k, n in enumerate(nodes) if k not in (i, j)] + [kept]
    return steps


def contract(plan: ContractionPlan, factors: Sequence[Union[Tensor, FactoredTensor]],
             order: Optional[List[Tuple[int, int]]] = None) -> Tensor:
    """
    Einstein summation of `factors` following `plan`.

    Factored inputs are split into their parts so they are never densified.
    Batch labels may have any size; every other axis must share one dimension.
    """
    parts: List[Tuple[np.ndarray, Tuple[Hashable, ...]]] = []
    if len(factors) != len(plan.inputs):
        raise ShapeMismatchError(f"plan has {len(plan.inputs)} inputs, got {len(factors)} factors")
    field = None
    for factor, labels in zip(factors, plan.inputs):
        pieces = factor.factors if isinstance(factor, FactoredTensor) else (factor,)
        if sum(p.data.ndim for p in pieces) != len(labels):
            raise ShapeMismatchError(f"factor of order {sum(p.data.ndim for p in pieces)} given {len(labels)} labels")
        start = 0
        for piece in pieces:
            if field is None:
                field = piece.field
            elif piece.field != field:
                raise ShapeMismatchError(f"mixed fields {field} and {piece.field}")
            parts.append((piece.data, tuple(labels[start:start + piece.data.ndim])))
            start += piece.data.ndim
    field = field or RATIONAL
    return Tensor(contract_arrays(parts, plan.output, field, plan.batch, order), field)


def contract_arrays(parts: List[Tuple[np.ndarray, Tuple[Hashable, ...]]], output: Sequence[Hashable],
                    field: Field, batch: FrozenSet[Hashable] = frozenset(),
                    order: Optional[List[Tuple[int, int]]] = None) -> np.ndarray:
    """Array-level engine behind contract(); also used directly by batched evaluation."""
    dim = None
    for arr, labels in parts:
        for axis, label in enumerate(labels):
            if label in batch:
                continue
            if dim is None:
                dim = arr.shape[axis]
            elif arr.shape[axis] != dim:
                raise ShapeMismatchError(f"dimension mismatch: {arr.shape[axis]} vs {dim}")
    output = tuple(output)
    nodes = list(parts)

    def needed_except(skip: Tuple[int, ...]) -> set:
        need = set(output)
        for k, (_, labs) in enumerate(nodes):
            if k not in skip:
                need.update(labs)
        return need

    nodes = [_self_trace(n, needed_except((k,)), field) for k, n in enumerate(nodes)]
    if order is None:
        order = plan_order([{l: a.shape[x] for x, l in enumerate(labs)} for a, labs in nodes], output, batch)
    for i, j in order:
        merged = _contract_pair(nodes[i], nodes[j], needed_except((i, j)), field)
        nodes = [n for k, n in enumerate(nodes) if k not in (i, j)] + [merged]
    if not nodes:
        return field.array(np.array(1))
    arr, labs = nodes[0]
    if tuple(labs) != output:
        letters = _letters(labs)
        arr = np.einsum(''.join(letters[l] for l in labs) + '->' + ''.join(letters[l] for l in output), arr)
    return arr


# ============================================================================
# SYMMETRIZATION, ALTERNATION, WEDGE
# ============================================================================

def _check_slots(T: Tensor, slots: Sequence[int]) -> Tuple[int, ...]:
    slots = tuple(slots)
    if len(set(slots)) != len(slots):
        raise ShapeMismatchError(f"repeated slots {slots}")
    for s in slots:
        if not 0 <= s < T.order:
            raise ShapeMismatchError(f"slot {s} out of range for order {T.order}")
    return slots


def _orbit_sum(T: Tensor, slots: Sequence[int], signed: bool) -> Tensor:
    slots = _check_slots(T, slots)
    count = math.factorial(len(slots))
    arr = T.data
    if T.field.exact and not isinstance(T.field, PrimeField):
        mag = int_magnitude(arr)
        if mag is not None and mag * count < INT64_LIMIT:
            arr = arr.astype(np.int64)
    total = np.zeros(arr.shape, dtype=arr.dtype)
    for sigma in itertools.permutations(range(len(slots))):
        perm = list(range(T.order))
        for pos, s in enumerate(slots):
            perm[s] = slots[sigma[pos]]
        term = permute_array(arr, perm)
        if signed and perm_sign(sigma) < 0:
            total = total - term
        else:
            total = total + term
        if isinstance(T.field, PrimeField):
            total = np.mod(total, T.field.p)
    if total.dtype != T.field.dtype:
        total = total.astype(T.field.dtype)
    return Tensor(T.field.reduce(total), T.field)


def _alternate_all(T: Tensor) -> Tensor:
    """Full alternation, computed once per sorted index subset and spread by sign."""
    order, dim = T.order, T.dim
    out = np.zeros(T.data.shape, dtype=object)
    perms = [(perm, perm_sign(perm)) for perm in itertools.permutations(range(order))]
    for subset in itertools.combinations(range(dim), order):
        total = 0
        for perm, sign in perms:
            value = T.data[tuple(subset[k] for k in perm)]
            total = total + value if sign > 0 else total - value
        if total == 0:
            continue
        for perm, sign in perms:
            out[tuple(subset[k] for k in perm)] = total if sign > 0 else -total
    return Tensor.of(out, T.field)


def alternate(T: Tensor, slots: Sequence[int]) -> Tensor:
    """Sum over sgn(sigma) * T with `slots` permuted by sigma; no 1/k! factor."""
    if sorted(_check_slots(T, slots)) == list(range(T.order)) and T.order > 1:
        return _alternate_all(T)
    return _orbit_sum(T, slots, signed=True)


def symmetrize(T: Tensor, slots: Sequence[int]) -> Tensor:
    """Sum over T with `slots` permuted; no 1/k! factor."""
    return _orbit_sum(T, slots, signed=False)


def is_antisymmetric(T: Tensor, slots: Optional[Sequence[int]] = None) -> bool:
    slots = tuple(range(T.order)) if slots is None else _check_slots(T, slots)
    scale = float(np.max(np.abs(np.asarray(T.data, dtype=float)))) if not T.field.exact and T.data.size else 0.0
    for a, b in zip(slots, slots[1:]):
        perm = list(range(T.order))
        perm[a], perm[b] = b, a
        if not (T + T.permute(perm)).is_zero(scale):
            return False
    return True


def is_symmetric(T: Tensor, slots: Sequence[int]) -> bool:
    slots = _check_slots(T, slots)
    scale = float(np.max(np.abs(np.asarray(T.data, dtype=float)))) if not T.field.exact and T.data.size else 0.0
    for a, b in zip(slots, slots[1:]):
        perm = list(range(T.order))
        perm[a], perm[b] = b, a
        if not (T - T.permute(perm)).is_zero(scale):
            return False
    return True


def wedge(alpha: Tensor, beta: Tensor) -> Tensor:
    """
    Shuffle-sum wedge product:
    (a^b)(v_1..v_{p+q}) = sum over (p,q)-shuffles of sgn * a(..) b(..).
    """
    for name, form in (('alpha', alpha), ('beta', beta)):
        if not is_antisymmetric(form):
            raise MembershipError(f"{name} is not antisymmetric")
    p, q = alpha.order, beta.order
    outer = alpha.outer(beta)
    if p == 0 or q == 0:
        return outer
    arr = outer.data
    total = None
    for first in itertools.combinations(range(p + q), p):
        rest = [i for i in range(p + q) if i not in first]
        perm = list(first) + rest
        term = permute_array(arr, perm)
        if perm_sign(perm) < 0:
            term = -term
        total = term if total is None else total + term
        total = alpha.field.reduce(total)
    return Tensor(total, alpha.field)


def pfaffian(matrix: np.ndarray):
    """Pfaffian of an antisymmetric matrix by expansion along the first row."""
    size = matrix.shape[0]
    if size == 0:
        return 1
    if size % 2:
        return 0
    total = 0
    rest = list(range(1, size))
    for pos, j in enumerate(rest):
        if matrix[0, j] == 0:
            continue
        keep = [k for k in rest if k != j]
        minor = matrix[np.ix_(keep, keep)]
        term = matrix[0, j] * pfaffian(minor)
        total = total + term if pos % 2 == 0 else total - term
    return total


def wedge_power_entries(w: Tensor, m: int) -> Iterable[Tuple[Tuple[int, ...], object]]:
    """
    Nonzero components of the m-fold wedge power of a 2-form, as
    (index tuple, value) pairs: value = sgn * m! * Pf(w restricted to the indices).
    """
    dim = w.dim
    field = w.field
    factor = math.factorial(m)
    for subset in itertools.combinations(range(dim), 2 * m):
        pf = pfaffian(w.data[np.ix_(subset, subset)]) if m else 1
        if pf == 0:
            continue
        base = field.scalar(pf * factor)
        for perm in itertools.permutations(range(2 * m)):
            idx = tuple(subset[k] for k in perm)
            yield idx, (base if perm_sign(perm) > 0 else field.scalar(-base))


def wedge_power(w: Tensor, m: int) -> Tensor:
    """Dense m-fold wedge power of a 2-form (shuffle convention)."""
    dim = w.dim
    if dim ** (2 * m) > MAX_DENSE_SCALARS:
        raise CapExceededError(f"wedge power of order {2 * m} in dim {dim} is too large to densify")
    out = np.zeros((dim,) * (2 * m), dtype=object)
    for idx, value in wedge_power_entries(w, m):
        out[idx] = value
    return Tensor.of(out, w.field)
