import math
from fractions import Fraction

import numpy as np
import pytest

from scripts.tensors.linalg import Eliminator, inverse, left_nullspace, matrix_rank, nullspace, rank, rank_mod_p
from scripts.tensors.scalars import FLOAT, PrimeField, RATIONAL, field_from_name, int_magnitude, select_primes
from scripts.tensors.symplectic import (
    act,
    inverse_form,
    is_symplectic,
    lower_slot,
    pair_forms,
    raise_slot,
    random_symplectic,
    standard_form,
    symplectic_inverse,
)
from scripts.tensors.tensor import (
    ContractionPlan,
    FactoredTensor,
    Tensor,
    _orbit_sum,
    alternate,
    contract,
    is_antisymmetric,
    is_symmetric,
    perm_sign,
    pfaffian,
    symmetrize,
    wedge,
    wedge_power,
)
from scripts.utils.errors import MembershipError, ShapeMismatchError


def _random(dim, order, seed=0):
    rng = np.random.default_rng(seed)
    return Tensor.of(rng.integers(-3, 4, size=(dim,) * order))


# ============================================================================
# SCALARS AND LINEAR ALGEBRA
# ============================================================================

def test_rational_field_normalizes_integral_fractions():
    arr = RATIONAL.array([Fraction(4, 2), Fraction(1, 3)])
    assert type(arr[0]) is int and arr[0] == 2
    assert arr[1] == Fraction(1, 3)


def test_prime_field_maps_fractions():
    field = PrimeField(101)
    value = field.array(np.array([Fraction(1, 2)], dtype=object))[0]
    assert (value * 2) % 101 == 1


def test_prime_field_rejects_composites_and_large_primes():
    with pytest.raises(ValueError):
        PrimeField(100)
    with pytest.raises(ValueError):
        PrimeField(2 ** 31 - 1)


def test_field_from_name():
    assert field_from_name('rational') is RATIONAL
    assert field_from_name('float') is FLOAT
    assert field_from_name('prime:7') == PrimeField(7)
    assert field_from_name('prime', seed=3) == select_primes(3, 1)[0]
    with pytest.raises(ValueError):
        field_from_name('complex')


def test_select_primes_is_deterministic_and_distinct():
    first = select_primes(11, 2)
    assert first == select_primes(11, 2)
    assert first[0].p != first[1].p


def test_rank_over_fields():
    matrix = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert matrix_rank(matrix, RATIONAL) == 2
    assert matrix_rank(matrix, PrimeField(101)) == 2
    assert matrix_rank(matrix, FLOAT) == 2
    # 2 = 0 mod 2 kills the second pivot
    assert rank_mod_p(np.array([[1, 1], [1, 3]]), 2) == 1


def test_eliminator_reports_dependent_rows():
    elim = Eliminator()
    assert elim.add({0: 1, 1: 1})
    assert elim.add({1: 2})
    assert not elim.add({0: 3, 1: 5})
    assert elim.rank == 2


def test_left_nullspace_vectors_annihilate_matrix():
    matrix = np.array([[1, 2], [2, 4], [0, 1]], dtype=object)
    pivots, nrows = left_nullspace(matrix)
    vectors = list(nullspace(pivots, nrows))
    assert len(vectors) == 1
    lam = np.array([vectors[0].get(i, 0) for i in range(nrows)], dtype=object)
    assert not np.any(lam.dot(matrix) != 0)


def test_inverse_exact():
    matrix = np.array([[2, 1], [1, 1]], dtype=object)
    inv = inverse(matrix)
    assert not np.any(np.dot(matrix, inv) - np.eye(2, dtype=np.int64) != 0)
    with pytest.raises(ZeroDivisionError):
        inverse(np.array([[1, 2], [2, 4]], dtype=object))


def test_rank_of_sparse_rows():
    assert rank([{0: 1}, {0: Fraction(1, 2)}, {2: 1}]) == 2


# ============================================================================
# TENSORS
# ============================================================================

def test_perm_sign():
    assert perm_sign((0, 1, 2)) == 1
    assert perm_sign((1, 0, 2)) == -1
    assert perm_sign((1, 2, 0)) == 1
    assert perm_sign((3, 2, 1, 0)) == 1


def test_permute_convention():
    T = Tensor.of([[1, 2], [3, 4]])
    assert T.permute((1, 0)).equals(Tensor.of([[1, 3], [2, 4]]))


def test_tensor_rejects_ragged_shapes():
    with pytest.raises(ShapeMismatchError):
        Tensor.of(np.zeros((2, 3), dtype=np.int64))


def test_tensor_is_immutable():
    T = Tensor.of([1, 2])
    with pytest.raises(ValueError):
        T.data[0] = 5


def test_contract_matrix_product_and_trace():
    A = Tensor.of([[1, 2], [3, 4]])
    B = Tensor.of([[0, 1], [1, 0]])
    product = contract(ContractionPlan((('i', 'j'), ('j', 'k')), ('i', 'k')), [A, B])
    assert product.equals(Tensor.of([[2, 1], [4, 3]]))
    trace = contract(ContractionPlan((('i', 'i'),), ()), [A])
    assert trace.scalar() == 5


def test_contraction_plan_validation():
    with pytest.raises(ShapeMismatchError):
        ContractionPlan((('i', 'j'),), ('i',))
    with pytest.raises(ShapeMismatchError):
        ContractionPlan((('i', 'j'), ('j', 'k')), ('i', 'j', 'k'))
    with pytest.raises(ShapeMismatchError):
        ContractionPlan((('i', 'i', 'i'),), ())


def test_contract_order_does_not_change_result():
    a, b, c = _random(3, 2, 1), _random(3, 2, 2), _random(3, 2, 3)
    plan = ContractionPlan((('i', 'j'), ('j', 'k'), ('k', 'l')), ('i', 'l'))
    greedy = contract(plan, [a, b, c])
    assert greedy.equals(contract(plan, [a, b, c], order=[(1, 2), (0, 1)]))
    assert greedy.equals(contract(plan, [a, b, c], order=[(0, 2), (0, 1)]))


def test_outer_product():
    u, v = Tensor.of([1, 2]), Tensor.of([3, 5])
    assert u.outer(v).equals(Tensor.of([[3, 5], [6, 10]]))


def test_alternate_pair():
    u, v = Tensor.of([1, 2, 0]), Tensor.of([0, 1, 4])
    T = u.outer(v)
    assert alternate(T, (0, 1)).equals(T - T.permute((1, 0)))


def test_full_alternation_matches_orbit_sum():
    T = _random(4, 3, seed=5)
    fast = alternate(T, (0, 1, 2))
    assert fast.equals(_orbit_sum(T, (0, 1, 2), signed=True))
    assert is_antisymmetric(fast)


def test_symmetrize():
    T = _random(3, 3, seed=7)
    S = symmetrize(T, (0, 2))
    assert is_symmetric(S, (0, 2))
    assert S.equals(T + T.permute((2, 1, 0)))


def test_repeated_slot_is_rejected():
    with pytest.raises(ShapeMismatchError):
        alternate(_random(2, 2), (0, 0))


def test_pfaffian():
    assert pfaffian(np.array([[0, 3], [-3, 0]], dtype=object)) == 3
    assert pfaffian(standard_form(2).data) == -1
    assert pfaffian(np.zeros((3, 3), dtype=object)) == 0


def test_wedge_power_matches_shuffle_wedge():
    w = standard_form(2)
    assert wedge(w, w).equals(wedge_power(w, 2))
    w3 = standard_form(3)
    assert wedge(wedge(w3, w3), w3).equals(wedge_power(w3, 3))


def test_top_wedge_power_is_volume_multiple():
    w = standard_form(2)
    top = wedge_power(w, 2)
    # 2! * Pf(w) with Pf(w) = -1 in the (x1, x2, y1, y2) ordering
    assert top.data[0, 1, 2, 3] == -2
    assert top.data[1, 0, 2, 3] == 2


def test_wedge_requires_forms():
    with pytest.raises(MembershipError):
        wedge(Tensor.of([[1, 1], [0, 0]]), Tensor.of([1, 0]))


def test_float_field_tolerance():
    T = Tensor.of([1e-12, -1e-12], FLOAT)
    assert T.is_zero()
    assert not Tensor.of([1e-3, 0.0], FLOAT).is_zero()


# ============================================================================
# SYMPLECTIC ALGEBRA
# ============================================================================

def test_standard_form_and_inverse():
    w = standard_form(2)
    assert w.data[0, 2] == 1 and w.data[2, 0] == -1
    winv = inverse_form(w)
    product = np.dot(winv.data, w.data)
    assert not np.any(product - np.eye(4, dtype=np.int64) != 0)
    assert winv.equals(-w)


def test_standard_form_rejects_zero_half_dimension():
    with pytest.raises(ShapeMismatchError):
        standard_form(0)


def test_raise_then_lower_is_identity():
    w = standard_form(2)
    T = _random(4, 3, seed=11)
    for slot in range(3):
        assert lower_slot(raise_slot(T, w, slot), w, slot).equals(T)


def test_omega_contracted_with_inverse():
    w = standard_form(3)
    total = contract(ContractionPlan((('a', 'b'), ('a', 'b')), ()), [inverse_form(w), w]).scalar()
    # w^{ab} w_{ab} = -tr(w^{-1} w) = -2n
    assert total == -6


def test_random_symplectic_preserves_form():
    w = standard_form(2)
    A = random_symplectic(2, seed=4)
    assert is_symplectic(A, w)
    product = np.dot(RATIONAL.array(A), symplectic_inverse(A, w))
    assert not np.any(RATIONAL.reduce(product) - np.eye(4, dtype=np.int64) != 0)


def test_action_fixes_the_form():
    w = standard_form(2)
    A = random_symplectic(2, seed=9)
    assert act(A, w, w=w).equals(w)
    assert act(A, inverse_form(w), variance='^^').equals(inverse_form(w))


def test_pair_forms_with_top_power():
    w = standard_form(2)
    paired = pair_forms(wedge_power(w, 2), w, w)
    assert paired.order == 2
    assert is_antisymmetric(paired)
    assert not paired.is_zero()


# ============================================================================
# CONTRACTION TO SCALARS, FACTORED INPUTS AND ALGEBRAIC LAWS
# ============================================================================

def test_full_contraction_through_several_integer_steps():
    u, v = Tensor.of([1, 2, -1, 3]), Tensor.of([2, 0, 5, -1])
    winv = inverse_form(standard_form(2))
    plan = ContractionPlan((('a',), ('a', 'b'), ('b',)), ())
    value = contract(plan, [u, winv, v])
    assert value.order == 0
    expected = sum(u.data[a] * winv.data[a, b] * v.data[b] for a in range(4) for b in range(4))
    assert value.scalar() == expected
    assert contract(plan, [u, winv, v], order=[(0, 1), (0, 1)]).scalar() == expected


def test_int_magnitude_on_scalars_and_fractions():
    assert int_magnitude(np.asarray(-7, dtype=object)) == 7
    assert int_magnitude(np.asarray(Fraction(1, 2), dtype=object)) is None
    assert int_magnitude(np.array([3, -9], dtype=np.int64)) == 9


def test_factored_tensor_densifies_to_outer_product():
    a, b, c = _random(3, 1, 1), _random(3, 2, 2), _random(3, 1, 3)
    factored = FactoredTensor((a, b, c))
    assert (factored.order, factored.dim) == (4, 3)
    assert factored.densify().equals(a.outer(b).outer(c))


def test_factored_and_dense_contraction_agree_exactly():
    a, b = _random(4, 2, 4), _random(4, 2, 5)
    winv = inverse_form(standard_form(2))
    plan = ContractionPlan((('i', 'j'), ('j', 'k', 'l', 'm'), ('k', 'l', 'm', 'n')), ('i', 'n'))
    dense = a.outer(b)
    factored = FactoredTensor((a, b))
    T = _random(4, 4, 6)
    lhs = contract(ContractionPlan((('j', 'k'), ('l', 'x'), ('j', 'k', 'l', 'x')), ()), [winv, winv, dense])
    rhs = contract(ContractionPlan((('j', 'k'), ('l', 'x'), ('j', 'k', 'l', 'x')), ()), [winv, winv, factored])
    assert lhs.scalar() == rhs.scalar()
    assert contract(plan, [winv, dense, T]).equals(contract(plan, [winv, factored, T]))


def test_factored_tensor_rejects_mixed_dimensions():
    with pytest.raises(ShapeMismatchError):
        FactoredTensor((_random(2, 1), _random(3, 1)))


def test_contraction_is_multilinear():
    x, y, M = _random(3, 2, 7), _random(3, 2, 8), _random(3, 2, 9)
    plan = ContractionPlan((('i', 'j'), ('j', 'k')), ('i', 'k'))
    a = Fraction(5, 3)
    combined = contract(plan, [x.scale(a) + y, M])
    assert combined.equals(contract(plan, [x, M]).scale(a) + contract(plan, [y, M]))


def test_repeated_alternation_scales_by_factorial():
    T = _random(3, 3, seed=11)
    for slots in ((0, 1), (0, 1, 2), (2, 0)):
        once = alternate(T, slots)
        assert alternate(once, slots).equals(once.scale(math.factorial(len(slots))))


def _form(dim, order, seed):
    return alternate(_random(dim, order, seed), range(order))


def test_wedge_is_associative():
    alpha, beta, gamma = _form(5, 1, 1), _form(5, 2, 2), _form(5, 1, 3)
    assert wedge(wedge(alpha, beta), gamma).equals(wedge(alpha, wedge(beta, gamma)))


def test_wedge_is_graded_commutative():
    for p, q in ((1, 1), (1, 2), (2, 2), (1, 3)):
        alpha, beta = _form(5, p, 10 + p), _form(5, q, 20 + q)
        assert wedge(alpha, beta).equals(wedge(beta, alpha).scale((-1) ** (p * q)))
