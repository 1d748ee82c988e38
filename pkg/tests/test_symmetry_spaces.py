import numpy as np
import pytest

from scripts.tensors.linalg import matrix_rank
from scripts.tensors.scalars import FLOAT, PrimeField, RATIONAL, select_primes
from scripts.tensors.symplectic import act, random_symplectic, standard_form
from scripts.tensors.tensor import Tensor
from scripts.tensors.symmetry_spaces import (
    CURVATURE,
    curvature_projector,
    is_curvature,
    normal_projector,
    normal_space,
    normal_to_curvature,
    random_element,
    space_rank,
)
from scripts.utils.errors import CapExceededError, MembershipError, ShapeMismatchError


def _raw(dim, order, seed):
    rng = np.random.default_rng(seed)
    return Tensor.of(rng.integers(-9, 10, size=(dim,) * order))


def _stack(tensors):
    return np.array([t.data.reshape(-1) for t in tensors], dtype=object)


def test_curvature_rank_small_dimensions():
    assert curvature_projector(1).rank == 3
    assert curvature_projector(2).rank == 45
    assert space_rank(CURVATURE, 4) == 45


def test_curvature_projection_is_idempotent_and_valid():
    P = curvature_projector(2)
    projected = P.apply(_raw(4, 4, seed=1))
    assert is_curvature(projected)
    assert CURVATURE.violations(projected) == []
    assert P.apply(projected).equals(projected)


def test_raw_tensor_violates_curvature_symmetries():
    raw = _raw(2, 4, seed=2)
    assert CURVATURE.violations(raw)
    assert not is_curvature(raw)


def test_random_element_satisfies_membership_and_is_generic():
    P = curvature_projector(2)
    a = random_element(P, 1)
    b = random_element(P, 2)
    assert P.contains(a) and P.contains(b)
    assert matrix_rank(_stack([a, b]), RATIONAL) == 2


def test_integral_random_element_has_integer_components():
    P = normal_projector(1, 1)
    T = P.random_element(5, RATIONAL, integral=True)
    assert all(isinstance(x, int) for x in T.data.reshape(-1))


def test_normal_zero_space():
    P = normal_projector(0, 2)
    assert P.rank == 0
    assert random_element(P, 3).is_zero()


def test_normal_one_rank_matches_curvature():
    for n in (1, 2):
        assert normal_projector(1, n).rank == curvature_projector(n).rank


def test_normal_projection_satisfies_all_families():
    for m in (1, 2):
        P = normal_projector(m, 1)
        T = P.apply(_raw(2, m + 3, seed=m))
        assert normal_space(m).violations(T) == []


def test_normal_rank_is_field_independent():
    space = normal_space(2)
    exact = space_rank(space, 4, RATIONAL)
    for field in select_primes(7, 2):
        assert space_rank(space, 4, field) == exact


def test_normal_caps():
    with pytest.raises(CapExceededError):
        normal_projector(4, 1)
    with pytest.raises(CapExceededError):
        normal_projector(1, 5)
    with pytest.raises(ShapeMismatchError):
        curvature_projector(0)


def test_normal_to_curvature_is_injective():
    for n in (1, 2):
        P = normal_projector(1, n)
        images = [normal_to_curvature(T) for T in P.basis()]
        assert all(is_curvature(R) for R in images)
        assert matrix_rank(_stack(images), RATIONAL) == P.rank


def test_normal_to_curvature_rejects_non_members():
    with pytest.raises(MembershipError):
        normal_to_curvature(_raw(2, 4, seed=3))
    with pytest.raises(ShapeMismatchError):
        normal_to_curvature(_raw(2, 3, seed=3))


def test_projector_over_prime_and_float_fields():
    P = curvature_projector(1)
    field = PrimeField(101)
    T = P.random_element(4, field)
    assert T.field == field
    assert CURVATURE.satisfied(T)
    assert CURVATURE.satisfied(P.random_element(4, FLOAT))


def test_equivariant_projection_is_identity_on_the_space():
    P = curvature_projector(1)
    w = standard_form(1)
    R = P.random_element(6)
    assert P.equivariant_projection(R, w).equals(R)


def test_equivariant_projection_commutes_with_symplectic_action():
    P = curvature_projector(1)
    w = standard_form(1)
    A = random_symplectic(1, seed=8)
    T = _raw(2, 4, seed=9)
    left = P.equivariant_projection(act(A, T, w=w), w)
    right = act(A, P.equivariant_projection(T, w), w=w)
    assert left.equals(right)
    assert is_curvature(left)
