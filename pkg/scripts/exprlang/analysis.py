"""
Index checking, weight inference, plan compilation and evaluation of parsed
.ten expressions.

Every symbol has a fixed variance (omega, R, K lower; omegaInv upper; delta
upper-lower), so raising and lowering are spelled out with omegaInv and
omega. Within a term an index name occurs once (free) or twice with opposite
variance (contracted). Free indices of a top-level expression are covariant;
their output slot order is their order of first appearance in the first term.

Weights: omega +2, omegaInv -2, R +2, K 0, delta 0, summed per term.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from scripts.exprlang.parser import Alt, Expr, Index, Symbol, Term
from scripts.geometry.fedosov import ricci
from scripts.geometry.identities import NaturalExpression
from scripts.tensors.scalars import Field
from scripts.tensors.symplectic import inverse_form
from scripts.tensors.tensor import ContractionPlan, Tensor, alternate, contract, plan_order
from scripts.utils.errors import ExprVarianceError, InconsistentTermsError, MissingBindingError

logger = logging.getLogger(__name__)

VARIANCE = {'omega': (True, True), 'omegaInv': (False, False), 'R': (True,) * 4,
            'K': (True, True), 'delta': (False, True)}
WEIGHT = {'omega': 2, 'omegaInv': -2, 'R': 2, 'K': 0, 'delta': 0}


@dataclass(frozen=True)
class WeightReport:
    delta: int
    p: int
    free: Tuple[str, ...]


def _where(node) -> Tuple[int, int]:
    return node.line, node.column


# ============================================================================
# CHECKING AND INFERENCE
# ============================================================================

def _symbol_indices(symbol: Symbol) -> List[Index]:
    for index, covariant in zip(symbol.indices, VARIANCE[symbol.name]):
        if index.covariant != covariant:
            kind = 'lower' if covariant else 'upper'
            raise ExprVarianceError(f"{symbol.name} carries {kind} indices only, got {index}", *_where(index))
    return list(symbol.indices)


def _term_indices(term: Term) -> Tuple[List[Index], int]:
    """Free indices of a term in first-appearance order, and the term weight."""
    seen: Dict[str, List[Index]] = {}
    order: List[str] = []
    weight = 0
    for factor in term.factors:
        if isinstance(factor, Alt):
            report = _check(factor.body, top_level=False)
            listed = {i.name for i in factor.indices}
            if len(listed) != len(factor.indices):
                raise ExprVarianceError("alt lists an index twice", *_where(factor))
            body_free = {i.name: i for i in report_indices(factor.body)}
            for index in factor.indices:
                if index.name not in body_free or body_free[index.name].covariant != index.covariant:
                    raise ExprVarianceError(f"alt index {index} is not a free index of its body", *_where(index))
            indices = list(body_free.values())
            weight += report.delta
        else:
            indices = _symbol_indices(factor)
            weight += WEIGHT[factor.name]
        for index in indices:
            if index.name not in seen:
                seen[index.name] = []
                order.append(index.name)
            seen[index.name].append(index)
    free = []
    for name in order:
        occurrences = seen[name]
        if len(occurrences) > 2:
            raise ExprVarianceError(f"index {name} occurs {len(occurrences)} times", *_where(occurrences[2]))
        if len(occurrences) == 2:
            if occurrences[0].covariant == occurrences[1].covariant:
                raise ExprVarianceError(f"index {name} is repeated with the same variance; "
                                        f"insert omegaInv or omega explicitly", *_where(occurrences[1]))
        else:
            free.append(occurrences[0])
    return free, weight


def report_indices(expr: Expr) -> List[Index]:
    """Free indices of an expression, in the order of its first term."""
    free, _ = _term_indices(expr.terms[0])
    return free


def _check(expr: Expr, top_level: bool = True) -> WeightReport:
    reference: Optional[Tuple[List[Index], int]] = None
    for term in expr.terms:
        free, weight = _term_indices(term)
        if reference is None:
            reference = (free, weight)
            continue
        ref_free, ref_weight = reference
        if {(i.name, i.covariant) for i in free} != {(i.name, i.covariant) for i in ref_free}:
            raise InconsistentTermsError(
                f"free indices {sorted(map(str, free))} differ from {sorted(map(str, ref_free))}", *_where(term))
        if weight != ref_weight:
            raise InconsistentTermsError(f"term weight {weight} differs from {ref_weight}", *_where(term))
    free, weight = reference
    if top_level:
        for index in free:
            if not index.covariant:
                raise ExprVarianceError(f"free index {index} must be covariant", *_where(index))
    return WeightReport(weight, len(free), tuple(i.name for i in free))


def infer(expr: Expr) -> WeightReport:
    """Weight delta and covariant order p of a top-level expression."""
    return _check(expr, top_level=True)


# ============================================================================
# COMPILATION
# ============================================================================

@dataclass
class CompiledAlt:
    slots: Tuple[int, ...]
    body: 'CompiledExpr'


@dataclass
class CompiledTerm:
    coefficient: Fraction
    factors: List[Union[Symbol, CompiledAlt]]
    plan: ContractionPlan

    def order(self, dim: int) -> List[Tuple[int, int]]:
        """Greedy pairwise order of this term's contraction in dimension `dim`."""
        shapes = [{label: dim for label in labels} for labels in self.plan.inputs]
        return plan_order(shapes, self.plan.output, self.plan.batch)

    def max_intermediate_order(self, dim: int) -> int:
        """Largest order among the intermediates of the greedy order."""
        nodes = [list(dict.fromkeys(labels)) for labels in self.plan.inputs]
        traced = []
        for k, labels in enumerate(nodes):
            others = set(self.plan.output)
            for j, other in enumerate(self.plan.inputs):
                if j != k:
                    others.update(other)
            traced.append([l for l in labels if list(self.plan.inputs[k]).count(l) == 1 or l in others])
        nodes = traced
        largest = 0
        for i, j in self.order(dim):
            needed = set(self.plan.output)
            for k, node in enumerate(nodes):
                if k not in (i, j):
                    needed.update(node)
            merged = [l for l in dict.fromkeys(nodes[i] + nodes[j]) if l in needed]
            largest = max(largest, len(merged))
            nodes = [n for k, n in enumerate(nodes) if k not in (i, j)] + [merged]
        return largest


@dataclass
class CompiledExpr:
    free: Tuple[str, ...]
    terms: List[CompiledTerm]


def _compile(expr: Expr, top_level: bool) -> CompiledExpr:
    report = _check(expr, top_level)
    terms = []
    for term in expr.terms:
        inputs, factors = [], []
        for factor in term.factors:
            if isinstance(factor, Alt):
                body = _compile(factor.body, top_level=False)
                listed = {i.name for i in factor.indices}
                slots = tuple(k for k, name in enumerate(body.free) if name in listed)
                factors.append(CompiledAlt(slots, body))
                inputs.append(body.free)
            else:
                factors.append(factor)
                inputs.append(tuple(i.name for i in factor.indices))
        terms.append(CompiledTerm(term.coefficient, factors, ContractionPlan(tuple(inputs), report.free)))
    return CompiledExpr(report.free, terms)


def compile_expr(expr: Expr) -> CompiledExpr:
    """Per-term contraction plans over index-name labels."""
    return _compile(expr, top_level=True)


# ============================================================================
# EVALUATION
# ============================================================================

def standard_bindings(R: Tensor, w: Tensor) -> Dict[str, Tensor]:
    """Bindings for every symbol from a curvature tensor and a form, with K = ricci(R)."""
    field: Field = w.field
    identity = np.eye(w.dim, dtype=np.int64)
    return {
        'omega': w,
        'omegaInv': inverse_form(w),
        'R': R,
        'K': ricci(R, w),
        'delta': Tensor.of(identity, field),
    }


def _shuffled_order(count: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    order = []
    while count > 1:
        i, j = sorted(rng.choice(count, size=2, replace=False).tolist())
        order.append((i, j))
        count -= 1
    return order


def _evaluate(compiled: CompiledExpr, bindings: Dict[str, Tensor], rng: Optional[np.random.Generator]) -> Tensor:
    total = None
    for term in compiled.terms:
        values = []
        for factor in term.factors:
            if isinstance(factor, CompiledAlt):
                inner = _evaluate(factor.body, bindings, rng)
                values.append(alternate(inner, factor.slots) if len(factor.slots) > 1 else inner)
            else:
                if factor.name not in bindings:
                    raise MissingBindingError(f"no value bound to {factor.name}", factor.line, factor.column)
                values.append(bindings[factor.name])
        order = _shuffled_order(len(values), rng) if rng is not None else None
        value = contract(term.plan, values, order).scale(term.coefficient)
        total = value if total is None else total + value
    return total


def evaluate(expr: Union[Expr, CompiledExpr], bindings: Dict[str, Tensor],
             shuffle_seed: Optional[int] = None) -> Tensor:
    """
    Sum of the compiled term evaluations.

    With `shuffle_seed`, every term is contracted in a random pairwise order
    instead of the greedy one; exact results must not change.
    """
    compiled = compile_expr(expr) if isinstance(expr, Expr) else expr
    rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
    return _evaluate(compiled, bindings, rng)


def _r_degree(expr: Expr) -> int:
    degrees = []
    for term in expr.terms:
        degree = 0
        for factor in term.factors:
            if isinstance(factor, Alt):
                degree += _r_degree(factor.body)
            elif factor.name in ('R', 'K'):
                degree += 1
        degrees.append(degree)
    return max(degrees)


def as_natural_expression(expr: Expr, name: str) -> NaturalExpression:
    """Wrap a checked expression so the identity, reduction and divergence tools accept it."""
    report = infer(expr)
    compiled = compile_expr(expr)
    return NaturalExpression(name, report.p, report.delta, _r_degree(expr),
                             lambda R, w: evaluate(compiled, standard_bindings(R, w)))
