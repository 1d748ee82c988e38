"""
Tensor fields with polynomial coefficients on R^{2n}, in exact arithmetic.

A PolyField maps monomial exponents (e_1..e_d) to coefficient arrays of
shape (d,)*order; the field is sum(coeff_e * x^e).
"""

import itertools
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from scripts.tensors.scalars import RATIONAL
from scripts.tensors.tensor import Tensor, permute_array
from scripts.utils.errors import ShapeMismatchError

Exponent = Tuple[int, ...]


def monomials(dim: int, degree: int) -> Iterable[Exponent]:
    """Exponents of total degree <= `degree` in `dim` variables, by degree."""
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), total):
            exp = [0] * dim
            for i in combo:
                exp[i] += 1
            yield tuple(exp)


@dataclass
class PolyField:
    dim: int
    order: int
    terms: Dict[Exponent, np.ndarray] = dataclass_field(default_factory=dict)

    @classmethod
    def zero(cls, dim: int, order: int) -> 'PolyField':
        return cls(dim, order, {})

    @classmethod
    def constant(cls, data, dim: Optional[int] = None) -> 'PolyField':
        arr = RATIONAL.array(data)
        dim = arr.shape[0] if dim is None else dim
        return cls(dim, arr.ndim, {(0,) * dim: arr})

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def _zero_array(self) -> np.ndarray:
        return np.zeros((self.dim,) * self.order, dtype=np.int64).astype(object)

    def _clean(self) -> 'PolyField':
        self.terms = {e: c for e, c in self.terms.items() if np.any(c != 0)}
        return self

    def truncated(self, max_degree: Optional[int]) -> 'PolyField':
        if max_degree is None:
            return self
        return PolyField(self.dim, self.order, {e: c for e, c in self.terms.items() if sum(e) <= max_degree})

    def _combine(self, other: 'PolyField', sign: int) -> 'PolyField':
        if (self.dim, self.order) != (other.dim, other.order):
            raise ShapeMismatchError(f"cannot combine fields of order {self.order} and {other.order}")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = RATIONAL.reduce(terms[e] + sign * c) if e in terms else sign * c
        return PolyField(self.dim, self.order, terms)._clean()

    def __add__(self, other: 'PolyField') -> 'PolyField':
        return self._combine(other, 1)

    def __sub__(self, other: 'PolyField') -> 'PolyField':
        return self._combine(other, -1)

    def __neg__(self) -> 'PolyField':
        return PolyField(self.dim, self.order, {e: -c for e, c in self.terms.items()})

    def scale(self, factor) -> 'PolyField':
        factor = Fraction(factor)
        return PolyField(self.dim, self.order,
                         {e: RATIONAL.reduce(c * factor) for e, c in self.terms.items()})._clean()

    def permute(self, perm: Sequence[int]) -> 'PolyField':
        """Slot permutation applied to every coefficient (see permute_array)."""
        return PolyField(self.dim, self.order, {e: permute_array(c, perm) for e, c in self.terms.items()})

    def partial(self, i: int) -> 'PolyField':
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            lowered = list(e)
            lowered[i] -= 1
            terms[tuple(lowered)] = c * e[i]
        return PolyField(self.dim, self.order, terms)

    def gradient(self) -> 'PolyField':
        """Coordinate derivative with the derivative index appended as the last slot."""
        terms: Dict[Exponent, np.ndarray] = {}
        for i in range(self.dim):
            for e, c in self.partial(i).terms.items():
                if e not in terms:
                    terms[e] = np.zeros((self.dim,) * (self.order + 1), dtype=np.int64).astype(object)
                terms[e][..., i] = c
        return PolyField(self.dim, self.order + 1, terms)

    def value(self) -> np.ndarray:
        """Coefficients at the origin."""
        return self.terms.get((0,) * self.dim, self._zero_array())

    def value_tensor(self) -> Tensor:
        return Tensor.of(self.value(), RATIONAL)

    def embed(self, index_map: Sequence[int], new_dim: int) -> 'PolyField':
        """Extend by zero to `new_dim` variables; old index i becomes index_map[i]."""
        terms = {}
        grid = np.ix_(*[list(index_map)] * self.order) if self.order else ()
        for e, c in self.terms.items():
            new_e = [0] * new_dim
            for i, power in enumerate(e):
                new_e[index_map[i]] = power
            arr = np.zeros((new_dim,) * self.order, dtype=np.int64).astype(object)
            if self.order:
                arr[grid] = c
            else:
                arr = c
            terms[tuple(new_e)] = arr
        return PolyField(new_dim, self.order, terms)

    def transform_slots(self, B: np.ndarray) -> 'PolyField':
        """Contract every slot with B: X'_{i..} = X_{a..} B_{a i} ..."""
        terms = {}
        for e, c in self.terms.items():
            out = c
            for slot in range(self.order):
                out = np.moveaxis(np.tensordot(out, B, axes=([slot], [0])), -1, slot)
            terms[e] = RATIONAL.reduce(out)
        return PolyField(self.dim, self.order, terms)._clean()

    def substitute(self, B: np.ndarray, max_degree: Optional[int] = None) -> 'PolyField':
        """The field composed with the linear map x = B y, as a polynomial in y."""
        linear = []
        for i in range(self.dim):
            # x_i = sum_j B_ij y_j
            forms = {}
            for j in range(self.dim):
                if B[i, j] != 0:
                    exp = [0] * self.dim
                    exp[j] = 1
                    forms[tuple(exp)] = B[i, j]
            linear.append(forms)
        terms: Dict[Exponent, np.ndarray] = {}
        for e, c in self.terms.items():
            expansion = {(0,) * self.dim: Fraction(1)}
            for i, power in enumerate(e):
                for _ in range(power):
                    product = {}
                    for left, a in expansion.items():
                        for right, b in linear[i].items():
                            key = tuple(x + y for x, y in zip(left, right))
                            product[key] = product.get(key, 0) + a * b
                    expansion = product
            for key, coeff in expansion.items():
                if coeff == 0 or (max_degree is not None and sum(key) > max_degree):
                    continue
                terms[key] = RATIONAL.reduce(terms[key] + c * coeff) if key in terms else RATIONAL.reduce(c * coeff)
        return PolyField(self.dim, self.order, terms)._clean()


def poly_einsum(spec: str, *fields: PolyField, max_degree: Optional[int] = None) -> PolyField:
    """np.einsum on the coefficients of a product of fields, truncated at `max_degree`."""
    dim = next(f.dim for f in fields)
    out_order = len(spec.split('->')[1]) if '->' in spec else None
    terms: Dict[Exponent, np.ndarray] = {}
    for combo in itertools.product(*[list(f.terms.items()) for f in fields]):
        exp = tuple(sum(parts) for parts in zip(*[e for e, _ in combo]))
        if max_degree is not None and sum(exp) > max_degree:
            continue
        value = np.einsum(spec, *[c for _, c in combo])
        terms[exp] = terms[exp] + value if exp in terms else value
    if out_order is None:
        out_order = next(iter(terms.values())).ndim if terms else 0
    terms = {e: RATIONAL.reduce(np.asarray(c, dtype=object)) for e, c in terms.items()}
    return PolyField(dim, out_order, terms)._clean()
