"""
Linear subspaces of tensor spaces cut out by slot symmetries and linear
permutation relations: the curvature space and the normal-tensor spaces.

Every constraint only permutes slots, so the system splits into blocks of
index tuples with the same content (multiset of index values). A block is
solved once per multiplicity pattern and reused for every content with
that pattern.

A relation is a tuple of (coefficient, perm) terms and states
sum(coeff * T[idx[perm[0]], idx[perm[1]], ...]) = 0 for every idx.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy.utilities.iterables import multiset_permutations

from scripts.tensors.linalg import inverse, row_reduce
from scripts.tensors.scalars import Field, PrimeField, RATIONAL
from scripts.tensors.symplectic import raise_slots
from scripts.tensors.tensor import Tensor, perm_sign, permute_array
from scripts.utils.errors import CapExceededError, MembershipError, ShapeMismatchError, SingularFormError

logger = logging.getLogger(__name__)

Relation = Tuple[Tuple[int, Tuple[int, ...]], ...]
Seed = Union[int, Sequence[int]]

MAX_NORMAL_ORDER = 3
MAX_NORMAL_DIM = 8
MAX_EQUIVARIANT_SCALARS = 2 * 10 ** 6


@dataclass(frozen=True)
class SymmetrySpace:
    """Constraint description of a tensor subspace; slots are 0-based."""
    name: str
    order: int
    symmetric: Tuple[Tuple[int, ...], ...] = ()
    antisymmetric: Tuple[Tuple[int, ...], ...] = ()
    relations: Tuple[Relation, ...] = ()
    relation_names: Tuple[str, ...] = ()

    def canonical(self, idx: Sequence[int]) -> Tuple[Optional[Tuple[int, ...]], int]:
        """
        Representative of idx under the slot symmetries and the sign relating
        them: T[idx] = sign * T[rep]. Returns (None, 0) when T[idx] is forced to 0.
        """
        rep = list(idx)
        sign = 1
        for group in self.symmetric:
            values = sorted(rep[s] for s in group)
            for s, v in zip(group, values):
                rep[s] = v
        for group in self.antisymmetric:
            values = [rep[s] for s in group]
            if len(set(values)) < len(values):
                return None, 0
            order = sorted(range(len(values)), key=values.__getitem__)
            sign *= perm_sign(order)
            for s, pos in zip(group, order):
                rep[s] = values[pos]
        return tuple(rep), sign

    def violations(self, T: Tensor) -> List[str]:
        """Names of the constraint families T fails, checked densely."""
        if T.order != self.order:
            raise ShapeMismatchError(f"{self.name} has order {self.order}, got {T.order}")
        scale = float(np.max(np.abs(np.asarray(T.data, dtype=float)))) if not T.field.exact and T.data.size else 0.0
        failed = []

        def vanishes(arr) -> bool:
            return T.field.is_zero_array(T.field.reduce(arr), scale)

        for group in self.symmetric:
            for a, b in zip(group, group[1:]):
                perm = list(range(self.order))
                perm[a], perm[b] = b, a
                if not vanishes(T.data - permute_array(T.data, perm)):
                    failed.append(f"symmetric{group}")
                    break
        for group in self.antisymmetric:
            for a, b in zip(group, group[1:]):
                perm = list(range(self.order))
                perm[a], perm[b] = b, a
                if not vanishes(T.data + permute_array(T.data, perm)):
                    failed.append(f"antisymmetric{group}")
                    break
        for pos, relation in enumerate(self.relations):
            total = np.zeros(T.data.shape, dtype=T.data.dtype)
            for coeff, perm in relation:
                total = total + coeff * permute_array(T.data, perm)
            if not vanishes(total):
                name = self.relation_names[pos] if pos < len(self.relation_names) else f"relation{pos}"
                failed.append(name)
        return failed

    def satisfied(self, T: Tensor) -> bool:
        return not self.violations(T)


def _full(perm_part: Sequence[int], order: int) -> Tuple[int, ...]:
    return tuple(perm_part) + tuple(range(len(perm_part), order))


def curvature_space() -> SymmetrySpace:
    """R_{ijkl}: symmetric in ij, antisymmetric in kl, R_{ijkl} + R_{iklj} + R_{iljk} = 0."""
    bianchi = ((1, (0, 1, 2, 3)), (1, (0, 2, 3, 1)), (1, (0, 3, 1, 2)))
    return SymmetrySpace('curvature', 4, symmetric=((0, 1),), antisymmetric=((2, 3),),
                         relations=(bianchi,), relation_names=('bianchi',))


def normal_space(m: int) -> SymmetrySpace:
    """
    N_m, tensors T_{ijk a_1..a_m}: symmetric in (j, k) and in (a_1..a_m);
    the symmetrization over j, k, a_1..a_m vanishes; T_{ikja..} - T_{jkia..}
    is symmetric in k and a_1.
    """
    if m < 0:
        raise ShapeMismatchError(f"normal tensors need m >= 0, got {m}")
    order = m + 3
    symmetric = ((1, 2),) + ((tuple(range(3, order)),) if m >= 2 else ())
    tail = list(range(1, order))
    sym_sum = tuple((1, (0,) + tuple(p)) for p in itertools.permutations(tail))
    relations = [sym_sum]
    names = ['symmetrization']
    if m >= 1:
        relations.append((
            (1, _full((0, 2, 1, 3), order)),
            (-1, _full((1, 2, 0, 3), order)),
            (-1, _full((0, 3, 1, 2), order)),
            (1, _full((1, 3, 0, 2), order)),
        ))
        names.append('exchange')
    return SymmetrySpace(f'normal{m}', order, symmetric=symmetric,
                         relations=tuple(relations), relation_names=tuple(names))


CURVATURE = curvature_space()


# ============================================================================
# BLOCK SOLVING
# ============================================================================

@dataclass(frozen=True)
class BlockSolution:
    """
    Solution of one content block in canonical labels 0..k-1.

    tuples: every index tuple of the block; free: the free representative tuples;
    entries: (tuple position, free position, coefficient) with
    T[tuples[t]] = sum(coeff * T[free[f]]).
    """
    tuples: Tuple[Tuple[int, ...], ...]
    free: Tuple[Tuple[int, ...], ...]
    entries: Tuple[Tuple[int, int, object], ...]


@lru_cache(maxsize=None)
def solve_block(space: SymmetrySpace, pattern: Tuple[int, ...], field: Field = RATIONAL) -> BlockSolution:
    """Solve the constraint block whose content has the given value multiplicities."""
    labels = [v for v, count in enumerate(pattern) for _ in range(count)]
    tuples = [tuple(t) for t in multiset_permutations(labels)]
    canon = {t: space.canonical(t) for t in tuples}
    reps = sorted({rep for rep, _ in canon.values() if rep is not None})
    column = {rep: c for c, rep in enumerate(reps)}

    seen = set()
    rows = []
    for t in tuples:
        for relation in space.relations:
            row: Dict[int, object] = {}
            for coeff, perm in relation:
                rep, sign = canon[tuple(t[p] for p in perm)]
                if rep is None:
                    continue
                c = column[rep]
                row[c] = row.get(c, 0) + coeff * sign
            row = {c: v for c, v in row.items() if v != 0}
            key = frozenset(row.items())
            if row and key not in seen:
                seen.add(key)
                rows.append(row)
    pivots = row_reduce(rows, field)
    free_cols = [c for c in range(len(reps)) if c not in pivots]
    free_pos = {c: f for f, c in enumerate(free_cols)}

    expressions: Dict[int, Dict[int, object]] = {}
    for c in range(len(reps)):
        if c in free_pos:
            expressions[c] = {free_pos[c]: 1}
        else:
            expressions[c] = {free_pos[f]: -v for f, v in pivots[c].items()}

    entries = []
    for pos, t in enumerate(tuples):
        rep, sign = canon[t]
        if rep is None:
            continue
        for f, coeff in expressions[column[rep]].items():
            value = coeff * sign
            if isinstance(field, PrimeField):
                value %= field.p
            entries.append((pos, f, value))
    return BlockSolution(tuple(tuples), tuple(reps[c] for c in free_cols), tuple(entries))


def _patterns(order: int) -> Iterator[Tuple[int, ...]]:
    """Compositions of `order`: multiplicity patterns of index contents."""
    for k in range(1, order + 1):
        for cuts in itertools.combinations(range(1, order), k - 1):
            bounds = (0,) + cuts + (order,)
            yield tuple(bounds[i + 1] - bounds[i] for i in range(k))


def space_rank(space: SymmetrySpace, dim: int, field: Field = RATIONAL) -> int:
    """Dimension of the subspace in dimension `dim`, summed block by block."""
    total = 0
    for pattern in _patterns(space.order):
        k = len(pattern)
        if k > dim:
            continue
        total += math.comb(dim, k) * len(solve_block(space, pattern, field).free)
    return total


# ============================================================================
# PROJECTOR
# ============================================================================

@dataclass(eq=False)
class SubspaceProjector:
    """
    Coordinate projection onto a symmetry space: P(T) = E . T[free], with E
    stored as coordinate lists. Idempotent and the identity on the subspace.
    """
    space: SymmetrySpace
    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    free_flat: np.ndarray
    _field_vals: Dict[Field, np.ndarray] = dataclass_field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, space: SymmetrySpace, dim: int, max_scalars: int = 10 ** 8) -> 'SubspaceProjector':
        if dim ** space.order > max_scalars:
            raise CapExceededError(f"{space.name} in dim {dim} has {dim ** space.order} components")
        shape = (dim,) * space.order
        rows, cols, vals, free_flat = [], [], [], []
        for content in itertools.combinations_with_replacement(range(dim), space.order):
            values = sorted(set(content))
            pattern = tuple(content.count(v) for v in values)
            block = solve_block(space, pattern)
            if not block.tuples:
                continue
            lookup = np.array(values, dtype=np.int64)
            block_flat = np.ravel_multi_index(tuple(lookup[np.array(block.tuples)].T), shape)
            offset = len(free_flat)
            if block.free:
                free_flat.extend(np.ravel_multi_index(tuple(lookup[np.array(block.free)].T), shape).tolist())
            for pos, f, coeff in block.entries:
                rows.append(int(block_flat[pos]))
                cols.append(offset + f)
                vals.append(coeff)
        vals_arr = np.empty(len(vals), dtype=object)
        vals_arr[:] = vals
        projector = cls(space, dim, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                        vals_arr, np.array(free_flat, dtype=np.int64))
        logger.debug(f"Built projector for {space.name} in dim {dim}: rank {projector.rank}")
        return projector

    @property
    def rank(self) -> int:
        return len(self.free_flat)

    @property
    def order(self) -> int:
        return self.space.order

    def _vals(self, field: Field) -> np.ndarray:
        if field not in self._field_vals:
            if isinstance(field, PrimeField):
                converted = field.array(self.vals) if len(self.vals) else np.zeros(0, dtype=np.int64)
            elif field.exact:
                converted = self.vals
            else:
                converted = np.array([float(v) for v in self.vals], dtype=np.float64)
            self._field_vals[field] = converted
        return self._field_vals[field]

    def scatter(self, coords: np.ndarray, field: Field) -> Tensor:
        """Tensor of the subspace with the given free coordinates."""
        size = self.dim ** self.order
        if isinstance(field, PrimeField):
            out = np.zeros(size, dtype=np.int64)
            terms = np.mod(self._vals(field) * np.mod(coords.astype(np.int64), field.p)[self.cols], field.p)
            np.add.at(out, self.rows, terms)
            out = np.mod(out, field.p)
        elif field.exact:
            out = np.zeros(size, dtype=object)
            coords = np.asarray(coords, dtype=object)
            if len(self.rows):
                np.add.at(out, self.rows, self._vals(field) * coords[self.cols])
            out = field.reduce(out)
        else:
            out = np.zeros(size, dtype=np.float64)
            np.add.at(out, self.rows, self._vals(field) * np.asarray(coords, dtype=np.float64)[self.cols])
        return Tensor(out.reshape((self.dim,) * self.order), field)

    def coordinates(self, T: Tensor) -> np.ndarray:
        self._check(T)
        return T.data.reshape(-1)[self.free_flat]

    def _check(self, T: Tensor):
        if T.order != self.order or (T.order and T.dim != self.dim):
            raise ShapeMismatchError(
                f"projector for order {self.order} dim {self.dim} applied to order {T.order} dim {T.dim}")

    def apply(self, T: Tensor) -> Tensor:
        return self.scatter(self.coordinates(T), T.field)

    def contains(self, T: Tensor) -> bool:
        self._check(T)
        return self.space.satisfied(T)

    def random_element(self, seed: Seed, field: Field = RATIONAL, integral: bool = False) -> Tensor:
        """
        Element with independent uniform integer free coordinates in [-9, 9].

        integral: multiply by the common denominator of the solved relations
        so that every component is an integer (exact fields only).
        """
        rng = np.random.default_rng(seed)
        coords = rng.integers(-9, 10, size=self.rank)
        if integral and field.exact and not isinstance(field, PrimeField):
            coords = coords.astype(object) * self.denominator
        return self.scatter(coords, field)

    @property
    def denominator(self) -> int:
        return math.lcm(1, *[Fraction(v).denominator for v in self.vals])

    def basis(self, field: Field = RATIONAL) -> Iterator[Tensor]:
        """Coordinate basis of the subspace, one tensor per free coordinate."""
        for f in range(self.rank):
            coords = np.zeros(self.rank, dtype=np.int64)
            coords[f] = 1
            yield self.scatter(coords, field)

    def equivariant_projection(self, T: Tensor, w: Tensor) -> Tensor:
        """
        Projection onto the subspace along its complement for the pairing
        <S, T> = S . raise_all(T); commutes with every A preserving w.
        """
        self._check(T)
        if self.rank * self.dim ** self.order > MAX_EQUIVARIANT_SCALARS:
            raise CapExceededError(f"equivariant projection of {self.space.name} in dim {self.dim} is too large")
        field = T.field
        if isinstance(field, PrimeField):
            raise ShapeMismatchError("equivariant projection needs a rational or float tensor")
        slots = range(self.order)
        basis = [b.data.reshape(-1) for b in self.basis(field)]
        raised = [raise_slots(b, w, slots).data.reshape(-1) for b in self.basis(field)]
        gram = np.array([[np.dot(b, r) for r in raised] for b in basis], dtype=object)
        try:
            gram_inv = inverse(gram, RATIONAL) if field.exact else np.linalg.inv(gram.astype(np.float64))
        except ZeroDivisionError as exc:
            raise SingularFormError(f"pairing is degenerate on {self.space.name}") from exc
        target = raise_slots(T, w, slots).data.reshape(-1)
        rhs = np.array([np.dot(b, target) for b in basis], dtype=object)
        coords = np.dot(gram_inv, rhs)
        return self.scatter(coords, field)


@lru_cache(maxsize=32)
def _cached_projector(space: SymmetrySpace, dim: int) -> SubspaceProjector:
    return SubspaceProjector.build(space, dim)


def curvature_projector(n: int) -> SubspaceProjector:
    if n < 1:
        raise ShapeMismatchError(f"half-dimension must be at least 1, got {n}")
    return _cached_projector(CURVATURE, 2 * n)


def normal_projector(m: int, n: int, max_order: int = MAX_NORMAL_ORDER,
                     max_dim: int = MAX_NORMAL_DIM) -> SubspaceProjector:
    if not 0 <= m <= max_order:
        raise CapExceededError(f"normal tensors are supported for 0 <= m <= {max_order}, got {m}")
    if n < 1 or 2 * n > max_dim:
        raise CapExceededError(f"normal tensors are supported up to dim {max_dim}, got {2 * n}")
    return _cached_projector(normal_space(m), 2 * n)


def random_element(P: SubspaceProjector, seed: Seed, field: Field = RATIONAL) -> Tensor:
    return P.random_element(seed, field)


def is_curvature(T: Tensor) -> bool:
    return T.order == 4 and CURVATURE.satisfied(T)


def normal_to_curvature(T: Tensor, check: bool = True) -> Tensor:
    """R_{ijkl} = T_{ijlk} - T_{ijkl} for T in N_1."""
    if T.order != 4:
        raise ShapeMismatchError(f"N_1 tensors have order 4, got {T.order}")
    if check:
        failed = normal_space(1).violations(T)
        if failed:
            raise MembershipError(f"tensor is not in N_1: fails {', '.join(failed)}")
    return T.permute((0, 1, 3, 2)) - T
