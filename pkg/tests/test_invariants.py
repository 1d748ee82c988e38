from fractions import Fraction

import numpy as np
import pytest

from scripts.invariants.matchings import Matching, enumerate_matchings, eval_matching, eval_matching_batch
from scripts.invariants.natural_spaces import (
    IdentityCertificate,
    SpaceSpec,
    _integral,
    evaluation_matrix,
    factor_layout,
    find_identity,
    identity_space_dim,
    retry_on_rank_disagreement,
    sample_batches,
    space_dim,
    tuple_order,
    weight_solutions,
)
from scripts.invariants.sft import alternation_vanishes, minimal_vanishing_size, sft_alternation
from scripts.tensors.scalars import PrimeField
from scripts.tensors.symplectic import inverse_form, standard_form
from scripts.tensors.tensor import FactoredTensor, Tensor
from scripts.utils.config import Settings
from scripts.utils.errors import RankDisagreementError, ShapeMismatchError

SEED = 20240601


# ============================================================================
# MATCHINGS
# ============================================================================

def test_matching_counts():
    assert len(enumerate_matchings(4)) == 3
    assert len(enumerate_matchings(6)) == 15
    assert len(enumerate_matchings(10)) == 945
    assert enumerate_matchings(5) == []
    assert enumerate_matchings(0) == [Matching(())]


def test_matchings_are_canonical_and_distinct():
    matchings = enumerate_matchings(8)
    assert len({m.key for m in matchings}) == 105
    for m in matchings:
        assert all(a < b for a, b in m.pairs)
        assert list(m.pairs) == sorted(m.pairs)


def test_from_pairs_canonicalizes_with_sign():
    m = Matching.from_pairs([(3, 2), (0, 1)])
    assert m.pairs == ((0, 1), (2, 3))
    assert m.sign == -1
    with pytest.raises(ShapeMismatchError):
        Matching.from_pairs([(0, 1), (1, 2)])
    with pytest.raises(ShapeMismatchError):
        Matching.from_pairs([(2, 2)])


def test_matching_label_round_trip():
    m = Matching(((0, 3), (1, 2)))
    assert m.label() == '(1 4)(2 3)'
    assert Matching.parse(m.label()) == m
    with pytest.raises(ValueError):
        Matching.parse('1 4')


def test_eval_matching_on_the_form():
    w = standard_form(2)
    winv = inverse_form(w)
    assert eval_matching(Matching(((0, 1),)), w, winv) == -4
    assert eval_matching(Matching.from_pairs([(1, 0)]), w, winv) == 4


def test_eval_matching_on_covectors():
    winv = inverse_form(standard_form(1))
    u, v = Tensor.of([1, 2]), Tensor.of([3, 5])
    # w^{01} = -1, w^{10} = 1
    assert eval_matching(Matching(((0, 1),)), [u, v], winv) == -(1 * 5) + 2 * 3
    with pytest.raises(ShapeMismatchError):
        eval_matching(Matching(((0, 1), (2, 3))), [u, v], winv)


def test_eval_matching_on_factored_samples():
    winv = inverse_form(standard_form(2))
    rng = np.random.default_rng(SEED)
    u, v = (Tensor.of(rng.integers(-5, 6, size=4)) for _ in range(2))
    B = Tensor.of(rng.integers(-5, 6, size=(4, 4)))
    dense = u.outer(B).outer(v)
    for m in enumerate_matchings(4):
        factored = eval_matching(m, FactoredTensor((u, B, v)), winv)
        assert factored == eval_matching(m, [u, B, v], winv)
        assert factored == eval_matching(m, dense, winv)


def test_batch_evaluation_agrees_with_single_samples():
    n, field = 1, PrimeField(1000003)
    batches = sample_batches((1,), 2, n, field, SEED, 0, 0, 3)
    winv = inverse_form(standard_form(n)).to(field)
    for m in enumerate_matchings(6)[:5]:
        values = eval_matching_batch(m, batches, winv, field)
        for s in range(3):
            factors = [Tensor(arr[s], field) for arr in batches]
            assert values[s] == eval_matching(m, factors, winv)


def test_evaluation_matrix_threads_do_not_change_result():
    n, field = 1, PrimeField(1000003)
    batches = sample_batches((1,), 2, n, field, SEED, 0, 0, 6)
    matchings = enumerate_matchings(6)
    serial = evaluation_matrix(matchings, batches, n, field, threads=1)
    parallel = evaluation_matrix(matchings, batches, n, field, threads=4)
    assert np.array_equal(serial, parallel)


# ============================================================================
# ALTERNATION RELATIONS
# ============================================================================

def test_two_point_alternation_is_twice_one_matching():
    assert sft_alternation(4, (0, 1)) == {((0, 1), (2, 3)): 2}


def test_alternation_threshold_in_dimension_two():
    assert alternation_vanishes(4, 3, 1, SEED)
    assert not alternation_vanishes(4, 2, 1, SEED)
    assert minimal_vanishing_size(4, 1, SEED) == 3


def test_alternation_threshold_in_dimension_four():
    assert alternation_vanishes(6, 5, 2, SEED, trials=4)
    assert not alternation_vanishes(6, 4, 2, SEED, trials=4)


def test_alternation_rejects_bad_subsets():
    with pytest.raises(ShapeMismatchError):
        sft_alternation(3, (0, 1))
    with pytest.raises(ShapeMismatchError):
        sft_alternation(4, (0, 4))


# ============================================================================
# SOLUTION TUPLES AND SPACE DIMENSIONS
# ============================================================================

def test_weight_solutions():
    assert weight_solutions(0, -4) == [(2,), (0, 0, 1)]
    assert weight_solutions(2, -2) == [(2,), (0, 0, 1)]
    assert weight_solutions(1, -2) == [(0, 1)]
    assert weight_solutions(2, 2) == [()]
    assert weight_solutions(0, 2) == []


def test_tuple_order_and_layout():
    assert tuple_order((2,), 0) == 8
    assert tuple_order((2,), 2) == 10
    assert tuple_order((0, 0, 1), 2) == 8
    assert factor_layout((2,), 2) == [4, 4, 1, 1]
    assert factor_layout((0, 1), 1) == [5, 1]


def test_space_spec_validation():
    with pytest.raises(ValueError):
        SpaceSpec(0, -3, 1)
    with pytest.raises(ValueError):
        SpaceSpec(-1, 0, 1)
    with pytest.raises(ValueError):
        SpaceSpec(0, 0, 0)
    assert SpaceSpec(2, -2, 2).dim == 4
    assert SpaceSpec(2, -2, 2).at(3).dim == 6


def test_weights_without_solution_tuples_give_zero():
    result = space_dim(SpaceSpec(1, 0, 1), SEED)
    assert result.total == 0
    assert all(t.rank == 0 for t in result.tuples)


def test_exact_and_modular_ranks_agree():
    spec = SpaceSpec(2, 0, 1)
    settings = Settings(threads=1)
    modular = space_dim(spec, SEED, settings=settings)
    exact = space_dim(spec, SEED, settings=settings, exact=True)
    assert modular.total == exact.total
    assert modular.breakdown() == exact.breakdown()


def test_ranks_are_seed_independent():
    spec = SpaceSpec(1, -2, 2)
    settings = Settings(threads=1)
    assert space_dim(spec, 1, settings=settings).total == space_dim(spec, 2, settings=settings).total


def test_no_identities_for_odd_p_below_the_bound():
    settings = Settings(threads=1)
    assert identity_space_dim(SpaceSpec(1, -2, 1), SEED, settings=settings) == 0


def test_no_identities_for_odd_half_weight():
    settings = Settings(threads=1)
    assert identity_space_dim(SpaceSpec(2, 0, 1), SEED, settings=settings) == 0


@pytest.mark.slow
def test_scalar_identity_exists_only_in_dimension_two():
    assert identity_space_dim(SpaceSpec(0, -4, 1), SEED) == 1
    assert identity_space_dim(SpaceSpec(0, -4, 2), SEED) == 0


def test_dimensions_do_not_decrease_with_the_dimension():
    settings = Settings(threads=1)
    totals = [space_dim(SpaceSpec(2, 0, n), SEED, settings=settings).total for n in (1, 2, 3)]
    assert totals == sorted(totals)
    # the Ricci form lives here in every dimension
    assert totals[0] >= 1


@pytest.mark.slow
def test_two_form_identity_exists_only_in_dimension_four():
    assert identity_space_dim(SpaceSpec(2, -2, 2), SEED) == 1


@pytest.mark.slow
def test_no_two_form_identity_in_dimension_six():
    assert identity_space_dim(SpaceSpec(2, -2, 3), SEED) == 0


@pytest.mark.slow
def test_scalar_identity_certificate():
    certificates = find_identity(SpaceSpec(0, -4, 1), SEED)
    assert len(certificates) == 1
    certificate = certificates[0]
    assert certificate.solution == (2,)
    assert all(isinstance(v, int) for v in certificate.coefficients.values())


def test_retry_doubles_samples_after_disagreement():
    seen = []

    def flaky(count):
        seen.append(count)
        if len(seen) < 3:
            raise RankDisagreementError("ranks differ")
        return count

    assert retry_on_rank_disagreement(flaky, 10) == 40
    assert seen == [10, 20, 40]


def test_retry_gives_up():
    def always(count):
        raise RankDisagreementError("ranks differ")

    with pytest.raises(RankDisagreementError):
        retry_on_rank_disagreement(always, 4, max_retries=1)


# ============================================================================
# CERTIFICATES
# ============================================================================

def test_integral_scaling():
    assert _integral({0: Fraction(1, 2), 2: Fraction(-3, 4)}) == {0: 2, 2: -3}
    assert _integral({0: -2, 1: 4}) == {0: 1, 1: -2}


def test_certificate_text_round_trip(tmp_path):
    certificate = IdentityCertificate(
        SpaceSpec(0, -4, 1), (2,),
        {((0, 1), (2, 3), (4, 5), (6, 7)): 3, ((0, 2), (1, 3), (4, 6), (5, 7)): Fraction(-1, 2)},
        witness=(SEED, 0, 3, 2),
    )
    path = tmp_path / 'identity.cert'
    certificate.save(str(path))
    loaded = IdentityCertificate.load(str(path))
    assert loaded.spec == certificate.spec
    assert loaded.solution == (2,)
    assert loaded.witness == (SEED, 0, 3, 2)
    assert loaded.coefficients == certificate.coefficients


def test_certificate_evaluates_a_combination():
    winv = inverse_form(standard_form(1))
    u, v = Tensor.of([1, 0]), Tensor.of([0, 1])
    certificate = IdentityCertificate(SpaceSpec(2, 2, 1), (), {((0, 1),): 2})
    assert certificate.evaluate([u, v], winv) == 2 * winv.data[0, 1]
    assert certificate.evaluate([v, u], winv) == -2 * winv.data[0, 1]
