"""
The standard symplectic form, index raising and lowering, the form pairing
used by the main-theorem forms, and random symplectic matrices.

Coordinates are ordered (x_1..x_n, y_1..y_n); w(e_i, e_{n+i}) = +1.
The inverse form satisfies w^{ab} w_{bc} = delta^a_c.
"""

import logging
import math
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from scripts.tensors.linalg import inverse
from scripts.tensors.scalars import FLOAT, Field, RATIONAL
from scripts.tensors.tensor import ContractionPlan, Tensor, contract, is_antisymmetric
from scripts.utils.errors import ShapeMismatchError, SingularFormError

logger = logging.getLogger(__name__)

# Hamiltonian entries are drawn from {-3..3}/2
_HAMILTONIAN_RANGE = 3


def standard_form(n: int, field: Field = RATIONAL) -> Tensor:
    if n < 1:
        raise ShapeMismatchError(f"half-dimension must be at least 1, got {n}")
    w = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for i in range(n):
        w[i, n + i] = 1
        w[n + i, i] = -1
    return Tensor.of(w, field)


def _matrix_inverse(matrix: np.ndarray, field: Field) -> np.ndarray:
    if field.exact:
        try:
            return inverse(matrix, field)
        except ZeroDivisionError as exc:
            raise SingularFormError("matrix is singular") from exc
    if abs(np.linalg.det(matrix.astype(np.float64))) < FLOAT.tolerance:
        raise SingularFormError("matrix is singular")
    return np.linalg.inv(matrix.astype(np.float64))


def inverse_form(w: Tensor) -> Tensor:
    """Contravariant w^{ab} with w^{ab} w_{bc} = delta^a_c."""
    if w.order != 2:
        raise ShapeMismatchError(f"a bilinear form has order 2, got {w.order}")
    if not is_antisymmetric(w):
        raise ShapeMismatchError("symplectic form must be antisymmetric")
    return Tensor(_matrix_inverse(w.data, w.field), w.field)


def _check_dim(T: Tensor, w: Tensor):
    if T.order and T.dim != w.dim:
        raise ShapeMismatchError(f"tensor dim {T.dim} does not match form dim {w.dim}")


def raise_slot(T: Tensor, w: Tensor, slot: int = 0, winv: Optional[Tensor] = None) -> Tensor:
    """(raise T)^{a..} = w^{ad} T_{..d..}, the raised index staying in `slot`."""
    _check_dim(T, w)
    if not 0 <= slot < T.order:
        raise ShapeMismatchError(f"slot {slot} out of range for order {T.order}")
    winv = inverse_form(w) if winv is None else winv
    labels = tuple(range(T.order))
    out = list(labels)
    out[slot] = 'raised'
    return contract(ContractionPlan((('raised', slot), labels), tuple(out)), [winv, T])


def raise_first(T: Tensor, w: Tensor) -> Tensor:
    return raise_slot(T, w, 0)


def raise_slots(T: Tensor, w: Tensor, slots: Sequence[int]) -> Tensor:
    """Raise several slots, one after another from left to right."""
    winv = inverse_form(w)
    for slot in slots:
        T = raise_slot(T, w, slot, winv)
    return T


def lower_slot(T: Tensor, w: Tensor, slot: int = 0) -> Tensor:
    """(lower X)_{d..} = w_{da} X^{a..}"""
    _check_dim(T, w)
    if not 0 <= slot < T.order:
        raise ShapeMismatchError(f"slot {slot} out of range for order {T.order}")
    labels = tuple(range(T.order))
    out = list(labels)
    out[slot] = 'lowered'
    return contract(ContractionPlan((('lowered', slot), labels), tuple(out)), [w, T])


def lower_first(T: Tensor, w: Tensor) -> Tensor:
    return lower_slot(T, w, 0)


def pair_forms(big: Tensor, small: Tensor, w: Tensor) -> Tensor:
    """
    Contraction of a (2k+p)-form with a 2k-form induced by w.

    Every slot of `small` is raised with w^{ab}; the raised indices are then
    summed against the first 2k slots of `big`.
    """
    if small.order > big.order:
        raise ShapeMismatchError(f"cannot pair a {big.order}-form with a {small.order}-form")
    for name, form in (('big', big), ('small', small)):
        if not is_antisymmetric(form):
            raise ShapeMismatchError(f"{name} is not antisymmetric")
    k2 = small.order
    raised = raise_slots(small, w, range(k2))
    shared = tuple(('s', i) for i in range(k2))
    free = tuple(('f', i) for i in range(big.order - k2))
    return contract(ContractionPlan((shared, shared + free), free), [raised, big])


# ============================================================================
# SYMPLECTIC MATRICES
# ============================================================================

def cayley(M: np.ndarray, field: Field = RATIONAL) -> np.ndarray:
    """A = (I - M)^{-1} (I + M); raises SingularFormError when I - M is singular."""
    size = M.shape[0]
    eye = np.eye(size, dtype=np.int64).astype(object)
    left = _matrix_inverse(field.array(eye - M), field)
    return field.reduce(np.dot(left, field.array(eye + M)))


def random_symplectic(n: int, seed: int, w: Optional[Tensor] = None) -> np.ndarray:
    """
    Random rational matrix A with A^T w A = w, from the Cayley transform of a
    Hamiltonian matrix M = w^{-1} S with S symmetric.
    """
    w = standard_form(n) if w is None else w
    winv = inverse_form(w).data
    rng = np.random.default_rng([seed, n])
    attempt = 0
    while True:
        raw = rng.integers(-_HAMILTONIAN_RANGE, _HAMILTONIAN_RANGE + 1, size=(2 * n, 2 * n))
        sym = np.triu(raw) + np.triu(raw, 1).T
        S = RATIONAL.array(sym.astype(object) * Fraction(1, 2))
        M = RATIONAL.reduce(np.dot(winv, S))
        try:
            return cayley(M)
        except SingularFormError:
            attempt += 1
            logger.debug(f"Cayley transform singular, retry {attempt}")


def is_symplectic(A: np.ndarray, w: Tensor) -> bool:
    lhs = w.field.reduce(np.dot(np.dot(w.field.array(A).T, w.data), w.field.array(A)))
    return Tensor(lhs, w.field).equals(w)


def symplectic_inverse(A: np.ndarray, w: Tensor) -> np.ndarray:
    """A^{-1} = w^{-1} A^T w for a symplectic A."""
    winv = inverse_form(w).data
    At = w.field.array(A).T
    return w.field.reduce(np.dot(np.dot(winv, At), w.data))


def act(A: np.ndarray, T: Tensor, variance: Optional[str] = None, w: Optional[Tensor] = None) -> Tensor:
    """
    Push T forward by A on every slot.

    variance: one character per slot, '_' covariant (default) or '^'
    contravariant. Covariant slots are contracted with A^{-1}, contravariant
    slots with A. When `w` is given, A^{-1} is taken as w^{-1} A^T w.
    """
    field = T.field
    variance = variance or '_' * T.order
    if len(variance) != T.order:
        raise ShapeMismatchError(f"variance {variance!r} does not match order {T.order}")
    if T.order == 0:
        return T
    if '_' in variance:
        B = symplectic_inverse(A, w) if w is not None else _matrix_inverse(RATIONAL.array(A), RATIONAL)
    else:
        B = None
    fwd = RATIONAL.array(A) if field.exact else np.asarray(A, dtype=np.float64)
    if B is not None and not field.exact:
        B = np.asarray(B, dtype=np.float64)

    mats = []
    denominator = 1
    for mark in variance:
        mat = B if mark == '_' else fwd
        mats.append(mat)
    if field.exact:
        # clear denominators so the contraction runs on integers
        scaled = []
        for mat in mats:
            den = math.lcm(*[Fraction(x).denominator for x in mat.reshape(-1)])
            denominator *= den
            scaled.append(field.array(mat * den))
        mats = scaled
    else:
        mats = [field.array(m) for m in mats]

    inputs = [tuple(('a', s) for s in range(T.order))]
    factors = [T]
    for s, (mark, mat) in enumerate(zip(variance, mats)):
        # covariant: B_{a i}; contravariant: A_{i a}
        inputs.append((('a', s), ('i', s)) if mark == '_' else (('i', s), ('a', s)))
        factors.append(Tensor(mat, field))
    out = contract(ContractionPlan(tuple(inputs), tuple(('i', s) for s in range(T.order))), factors)
    if denominator != 1:
        out = out.scale(Fraction(1, denominator))
    return out
