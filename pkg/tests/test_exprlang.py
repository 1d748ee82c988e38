from fractions import Fraction
from pathlib import Path

import pytest

from scripts.exprlang.analysis import (
    as_natural_expression,
    compile_expr,
    evaluate,
    infer,
    standard_bindings,
)
from scripts.exprlang.parser import parse, parse_file, to_text
from scripts.geometry.fedosov import ricci
from scripts.geometry.identities import (
    BUILTINS,
    common_ratio,
    expr1_variant,
    random_curvature,
    resolve_expr1_variant,
    scalar_identity,
    two_form_identity,
)
from scripts.tensors.symplectic import standard_form
from scripts.utils.errors import (
    ExprArityError,
    ExprSyntaxError,
    ExprVarianceError,
    InconsistentTermsError,
    MissingBindingError,
)

CORPUS = Path(__file__).resolve().parents[1] / 'scripts' / 'exprlang' / 'corpus'


def _corpus(name):
    return parse_file(str(CORPUS / f'{name}.ten'))


def _bindings(n, seed):
    return standard_bindings(random_curvature(n, [seed, n]), standard_form(n))


# ============================================================================
# PARSING
# ============================================================================

def test_unclosed_index_list_reports_position():
    with pytest.raises(ExprSyntaxError) as exc:
        parse('omega[_a,_b')
    assert (exc.value.line, exc.value.column) == (1, 12)


def test_unexpected_character_on_second_line():
    with pytest.raises(ExprSyntaxError) as exc:
        parse('omega[_a,_b]\n  + $')
    assert (exc.value.line, exc.value.column) == (2, 5)


def test_unknown_symbol_and_bad_denominator():
    with pytest.raises(ExprSyntaxError):
        parse('F[_a,_b]')
    with pytest.raises(ExprSyntaxError):
        parse('1/0 * omega[_a,_b]')


def test_arity_errors():
    with pytest.raises(ExprArityError) as exc:
        parse('omega[_a]')
    assert exc.value.column == 1
    with pytest.raises(ExprArityError):
        parse('R[_a,_b,_c]')


def test_leading_sign_and_coefficients():
    expr = parse('-omega[_a,_b] + 3/2 K[_a,_b]')
    assert [t.coefficient for t in expr.terms] == [-1, Fraction(3, 2)]


def test_comments_are_ignored():
    expr = parse('# the form\nomega[_a,_b] # trailing\n')
    assert len(expr.terms) == 1


def test_printer_round_trip():
    for name in ('eq1', 'eq2', 'eq4', 'omega', 'ricci'):
        expr = _corpus(name)
        assert parse(to_text(expr)) == expr


# ============================================================================
# INDEX CHECKING AND WEIGHTS
# ============================================================================

def test_fixed_variance_is_enforced():
    with pytest.raises(ExprVarianceError):
        infer(parse('omega[^a,^b]'))
    with pytest.raises(ExprVarianceError):
        infer(parse('omegaInv[_a,_b]'))


def test_contracted_index_needs_opposite_variance():
    with pytest.raises(ExprVarianceError) as exc:
        infer(parse('omega[_a,_b] * K[_a,_c]'))
    assert exc.value.line == 1


def test_index_used_three_times():
    with pytest.raises(ExprVarianceError):
        infer(parse('omega[_a,_b] * omegaInv[^a,^c] * K[_a,_c]'))


def test_free_indices_must_be_covariant():
    with pytest.raises(ExprVarianceError):
        infer(parse('omegaInv[^a,^b]'))


def test_alt_indices_must_be_free_in_the_body():
    with pytest.raises(ExprVarianceError):
        infer(parse('alt(_a,_c){ omega[_a,_b] }'))


def test_inconsistent_terms():
    with pytest.raises(InconsistentTermsError):
        infer(parse('omega[_a,_b] + K[_a,_b]'))
    with pytest.raises(InconsistentTermsError):
        infer(parse('omega[_a,_b] + omega[_a,_c]'))


def test_corpus_weights():
    expected = {
        'eq1': (-2, 2),
        'eq2': (-4, 0),
        'eq4': (-2, 2),
        'omega': (2, 2),
        'ricci': (0, 2),
        'ricci_primitive': (0, 2),
    }
    for name, (delta, p) in expected.items():
        report = infer(_corpus(name))
        assert (report.delta, report.p) == (delta, p), name


def test_free_index_order_follows_the_first_term():
    assert infer(_corpus('ricci')).free == ('i', 'j')
    assert infer(_corpus('eq4')).free == ('a', 'b')


def test_planner_keeps_intermediates_small():
    compiled = compile_expr(_corpus('eq4'))
    assert compiled.terms[0].max_intermediate_order(6) <= 6


# ============================================================================
# EVALUATION
# ============================================================================

def test_form_and_ricci_expressions():
    bindings = _bindings(2, seed=1)
    w, R = bindings['omega'], bindings['R']
    assert evaluate(_corpus('omega'), bindings).equals(w)
    spelled = evaluate(_corpus('ricci'), bindings)
    assert spelled.equals(evaluate(_corpus('ricci_primitive'), bindings))
    assert spelled.equals(ricci(R, w))


def test_scalar_expression_matches_builtin():
    for seed in range(2):
        bindings = _bindings(2, seed)
        value = evaluate(_corpus('eq2'), bindings)
        assert value.order == 0
        assert value.equals(scalar_identity(bindings['R'], bindings['omega']))


def test_expanded_two_form_matches_builtin():
    bindings = _bindings(2, seed=3)
    R, w = bindings['R'], bindings['omega']
    value = evaluate(_corpus('eq1'), bindings)
    assert value.equals(BUILTINS['expr1'].evaluate(R, w))
    assert value.equals(expr1_variant(R, ricci(R, w), w, resolve_expr1_variant()))


@pytest.mark.slow
def test_expanded_two_form_is_proportional_to_identity_in_dimension_six():
    pairs = []
    for seed in range(3):
        bindings = _bindings(3, seed=10 + seed)
        pairs.append((evaluate(_corpus('eq1'), bindings),
                      two_form_identity(bindings['R'], bindings['omega'])))
    c = common_ratio(pairs)
    assert c is not None and c != 0


def test_two_form_expression_vanishes_in_dimension_four():
    assert evaluate(_corpus('eq4'), _bindings(2, seed=4)).is_zero()


@pytest.mark.slow
def test_two_form_expression_matches_builtin_in_dimension_six():
    bindings = _bindings(3, seed=5)
    expected = two_form_identity(bindings['R'], bindings['omega'])
    assert not expected.is_zero()
    assert evaluate(_corpus('eq4'), bindings).equals(expected)


def test_contraction_order_does_not_change_values():
    bindings = _bindings(1, seed=6)
    for name in ('eq1', 'eq2', 'eq4', 'ricci'):
        expr = _corpus(name)
        greedy = evaluate(expr, bindings)
        for shuffle_seed in range(3):
            assert evaluate(expr, bindings, shuffle_seed=shuffle_seed).equals(greedy), name


def test_missing_binding():
    bindings = _bindings(1, seed=7)
    del bindings['K']
    with pytest.raises(MissingBindingError) as exc:
        evaluate(parse('delta[^a,_b]\n  * K[_a,_c]'), bindings)
    assert exc.value.line == 2


def test_as_natural_expression():
    E = as_natural_expression(_corpus('eq1'), 'eq1')
    assert (E.name, E.p, E.delta, E.r_degree) == ('eq1', 2, -2, 2)
    bindings = _bindings(2, seed=8)
    R, w = bindings['R'], bindings['omega']
    assert E.evaluate(R, w).equals(BUILTINS['expr1'].evaluate(R, w))
    assert as_natural_expression(_corpus('omega'), 'omega').r_degree == 0
