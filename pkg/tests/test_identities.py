from fractions import Fraction

import numpy as np
import pytest

from scripts.geometry.fedosov import curvature_derivatives, random_fedosov, ricci
from scripts.geometry.identities import (
    BUILTINS,
    EXPR1_VARIANTS,
    NaturalExpression,
    _derivative_weights,
    builtin,
    chern_generator,
    common_ratio,
    divergence,
    expr1,
    expr1_variant,
    homogeneity_check,
    main_theorem_form,
    random_curvature,
    ratio,
    ratio_constants,
    resolve_expr1_variant,
    scalar_identity,
    two_form_identity,
)
from scripts.tensors.symplectic import standard_form
from scripts.tensors.tensor import ContractionPlan, Tensor, contract, is_antisymmetric
from scripts.utils.errors import InsufficientJetError, ShapeMismatchError


def _sample(n, seed=0):
    return random_curvature(n, [seed, n]), standard_form(n)


# ============================================================================
# RATIOS
# ============================================================================

def test_ratio_statuses():
    b = Tensor.of([[0, 2], [-2, 0]])
    assert ratio(b.scale(Fraction(3, 2)), b) == ('ratio', Fraction(3, 2))
    assert ratio(Tensor.zeros(2, 2), b) == ('ratio', 0)
    assert ratio(Tensor.zeros(2, 2), Tensor.zeros(2, 2)) == ('zero', None)
    assert ratio(b, Tensor.zeros(2, 2)) == ('none', None)
    assert ratio(Tensor.of([[0, 1], [-1, 1]]), b) == ('none', None)
    with pytest.raises(ShapeMismatchError):
        ratio(Tensor.zeros(2, 1), b)


def test_common_ratio_skips_double_zeros():
    b = Tensor.of([1, 2])
    zero = Tensor.zeros(2, 1)
    assert common_ratio([(b.scale(5), b), (zero, zero), (Tensor.of([5, 10]), b)]) == 5
    assert common_ratio([(b.scale(5), b), (b.scale(4), b)]) is None


# ============================================================================
# BUILT-INS
# ============================================================================

def test_builtin_lookup():
    assert builtin('omega') is BUILTINS['omega']
    main = builtin('main(2,3)')
    assert (main.p, main.delta, main.r_degree) == (2, -4, 3)
    chern = builtin('chern4')
    assert (chern.p, chern.delta) == (8, 0)
    with pytest.raises(KeyError):
        builtin('pontryagin')


def test_declared_order_is_enforced():
    R, w = _sample(1)
    wrong = NaturalExpression('wrong', 0, 0, 0, lambda R, w: w)
    with pytest.raises(ShapeMismatchError):
        wrong.evaluate(R, w)


def test_scalar_identity_vanishes_in_dimension_two():
    R, w = _sample(1)
    value = scalar_identity(R, w)
    assert value.order == 0
    assert value.is_zero()


def test_scalar_identity_is_nonzero_in_dimension_four():
    nonzero = [not scalar_identity(*_sample(2, seed)).is_zero() for seed in range(3)]
    assert any(nonzero)


def test_two_form_identity_by_dimension():
    R, w = _sample(2)
    assert two_form_identity(R, w).is_zero()
    R, w = _sample(3)
    value = two_form_identity(R, w)
    assert not value.is_zero()
    assert is_antisymmetric(value)


def test_chern_generators():
    R, w = _sample(2, seed=4)
    assert chern_generator(R, w, 1).is_zero()
    c2 = chern_generator(R, w, 2)
    assert not c2.is_zero()
    assert is_antisymmetric(c2)
    with pytest.raises(ShapeMismatchError):
        chern_generator(R, w, 0)


def test_third_chern_generator_vanishes():
    R, w = _sample(3, seed=5)
    assert chern_generator(R, w, 3).is_zero()


def test_main_theorem_form_arguments():
    R, w = _sample(2)
    with pytest.raises(ShapeMismatchError):
        main_theorem_form(R, w, 1, 2)
    with pytest.raises(ShapeMismatchError):
        main_theorem_form(R, w, 2, 0)
    assert main_theorem_form(R, w, 2, 2).order == 2


def test_main_theorem_form_vanishes_below_its_wedge_degree():
    # main(2,2) pairs with a 6-form, which is zero in dim 4
    R, w = _sample(2, seed=6)
    assert main_theorem_form(R, w, 2, 2).is_zero()


def test_expr1_readings_are_two_forms():
    R, w = _sample(2, seed=7)
    K = ricci(R, w)
    for variant in EXPR1_VARIANTS:
        assert is_antisymmetric(expr1_variant(R, K, w, variant))
    with pytest.raises(ValueError):
        expr1_variant(R, K, w, 'printed/unknown')


def test_expr1_vanishes_in_dimension_four():
    assert resolve_expr1_variant() == 'printed/raise-sign'
    for seed in range(3):
        R, w = _sample(2, seed=10 + seed)
        assert expr1(R, ricci(R, w), w).is_zero()


def test_ratio_constants_are_measured():
    table = ratio_constants()
    for key in ('main(0,2)/scalar_identity', 'main(2,2)/two_form_identity', 'expr1/two_form_identity'):
        constant = table[key]
        assert constant.value is not None and constant.value != 0
        assert 'seed' in constant.provenance


def test_ratio_constants_hold_on_fresh_samples():
    constant = ratio_constants()['main(0,2)/scalar_identity'].value
    R, w = _sample(2, seed=99)
    assert builtin('main(0,2)').evaluate(R, w).equals(scalar_identity(R, w).scale(constant))


# ============================================================================
# DERIVATIVES AND WEIGHTS
# ============================================================================

def test_derivative_weights():
    assert _derivative_weights(1) == [-1, 1]
    assert _derivative_weights(2) == [Fraction(-3, 2), 2, Fraction(-1, 2)]
    # exact on t^3 for g = 3
    weights = _derivative_weights(3)
    assert sum(c * t ** 3 for t, c in enumerate(weights)) == 0
    assert sum(c * t for t, c in enumerate(weights)) == 1


def test_divergence_of_the_form_vanishes():
    F = random_fedosov(2, 1, seed=3)
    assert divergence(F, BUILTINS['omega']).is_zero()


def test_divergence_of_ricci_matches_the_curvature_jet():
    F = random_fedosov(2, 1, seed=4)
    winv = F.w_inverse
    dR = curvature_derivatives(F, 1)[1]
    # nabla_i K_{ka} = w^{md} nabla_i R_{dkma}
    dK = contract(ContractionPlan((('m', 'd'), ('d', 'k', 'm', 'a', 'i')), ('k', 'a', 'i')), [winv, dR])
    expected = contract(ContractionPlan((('k', 'i'), ('k', 'a', 'i')), ('a',)), [winv, dK])
    assert divergence(F, BUILTINS['ricci']).equals(expected)


def test_divergence_arguments():
    with pytest.raises(ShapeMismatchError):
        divergence(random_fedosov(1, 1, seed=0), BUILTINS['scalar_identity'])
    with pytest.raises(InsufficientJetError):
        divergence(random_fedosov(1, 0, seed=0), BUILTINS['ricci'])


@pytest.mark.slow
def test_divergence_of_expr1_vanishes_in_dimension_six():
    for seed in range(2):
        F = random_fedosov(3, 3, seed=[20, seed])
        assert divergence(F, BUILTINS['expr1']).is_zero()


def test_declared_weights_are_measured():
    F = random_fedosov(2, 1, seed=12)
    for name in ('omega', 'ricci', 'scalar_identity', 'chern2'):
        result = homogeneity_check(BUILTINS[name], F)
        assert result.passed, result


def test_homogeneity_reports_vanishing_expressions():
    F = random_fedosov(1, 0, seed=13)
    result = homogeneity_check(BUILTINS['scalar_identity'], F)
    assert result.measured is None
    assert not result.passed


def test_evaluators_on_trivial_inputs():
    R, w = _sample(1)
    flat_value = np.zeros((2, 2), dtype=object)
    assert BUILTINS['ricci'].evaluate(Tensor.zeros(2, 4), w).equals(Tensor.of(flat_value))
    assert BUILTINS['omega'].evaluate(R, w).equals(w)
