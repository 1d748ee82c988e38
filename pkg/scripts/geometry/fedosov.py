"""
Polynomial Fedosov structures on R^{2n} with the standard form w (times a
constant scale), and their curvature jets at the origin.

A structure is stored through its lowered Christoffel field
Gamma_{c,ab} = w_{cd} Gamma^d_{ab}. For a constant w, torsion-freeness and
parallel w together say exactly that Gamma_{c,ab} is totally symmetric.

Curvature convention:
    R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
    R_{ijkl} = w_{im} R^m_{jkl}
Covariant derivatives append the derivative index as the last slot.
"""

import itertools
import logging
import string
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

import numpy as np

from scripts.geometry.polynomials import PolyField, monomials, poly_einsum
from scripts.tensors.scalars import RATIONAL
from scripts.tensors.symmetry_spaces import CURVATURE
from scripts.tensors.symplectic import inverse_form, standard_form, symplectic_inverse
from scripts.tensors.tensor import ContractionPlan, Tensor, contract, permute_array
from scripts.utils.errors import CapExceededError, ConventionAuditError, InsufficientJetError, MembershipError

logger = logging.getLogger(__name__)

MAX_DEGREE = 3
_SLOT_LETTERS = [c for c in string.ascii_lowercase if c not in 'mz']


@dataclass
class JetTensor:
    """Value of a tensor field at the origin and its derivatives there; derivative slots come last."""
    name: str
    jets: List[Tensor]
    covariant: bool = True

    def __getitem__(self, r: int) -> Tensor:
        return self.jets[r]

    @property
    def max_order(self) -> int:
        return len(self.jets) - 1


def _symmetrize3(arr: np.ndarray) -> np.ndarray:
    total = None
    for perm in itertools.permutations(range(3)):
        term = permute_array(arr, perm)
        total = term if total is None else total + term
    return total


@dataclass
class PolyFedosov:
    n: int
    degree: int
    gamma: PolyField
    omega_scale: Fraction = Fraction(1)

    def __post_init__(self):
        self.omega_scale = Fraction(self.omega_scale)
        for e, c in self.gamma.terms.items():
            if not np.all(_symmetrize3(c) == 6 * c):
                raise MembershipError(f"lowered Christoffel coefficient at {e} is not totally symmetric")

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def w(self) -> Tensor:
        return standard_form(self.n).scale(self.omega_scale)

    @property
    def w_inverse(self) -> Tensor:
        return inverse_form(self.w)

    def christoffel(self) -> PolyField:
        """Gamma^d_{ab} = w^{dc} Gamma_{c,ab}."""
        winv = PolyField.constant(self.w_inverse.data, self.dim)
        return poly_einsum('dc,cab->dab', winv, self.gamma)

    def curvature_field(self, keep: Optional[int] = None) -> PolyField:
        """Lowered curvature R_{ijkl}(x) as a polynomial field, truncated at degree `keep`."""
        G = self.christoffel()
        dgamma = self.gamma.gradient()
        # dgamma[i, l, j, k] = d_k Gamma_{i,lj}
        R = poly_einsum('iljk->ijkl', dgamma) - poly_einsum('ikjl->ijkl', dgamma)
        R = R + poly_einsum('ikm,mlj->ijkl', self.gamma, G, max_degree=keep)
        R = R - poly_einsum('ilm,mkj->ijkl', self.gamma, G, max_degree=keep)
        return R.truncated(keep)

    def rescaled(self, lam) -> 'PolyFedosov':
        """w -> lam^2 w with the same Gamma^k_{ij}."""
        factor = Fraction(lam) ** 2
        return PolyFedosov(self.n, self.degree, self.gamma.scale(factor), self.omega_scale * factor)

    def product_with_flat(self) -> 'PolyFedosov':
        """Product with a flat symplectic plane; x_{n+1} follows x_n and y_{n+1} follows y_n."""
        return PolyFedosov(self.n + 1, self.degree,
                           self.gamma.embed(old_index_map(self.n), 2 * self.n + 2), self.omega_scale)

    def pushforward(self, A: np.ndarray) -> 'PolyFedosov':
        """Image of the structure under the linear symplectomorphism y = A x."""
        B = symplectic_inverse(A, standard_form(self.n))
        gamma = self.gamma.substitute(B).transform_slots(B)
        return PolyFedosov(self.n, self.degree, gamma, self.omega_scale)

    # ------------------------------------------------------------------------
    # text format
    # ------------------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"{self.n} {self.degree} {self.omega_scale}"]
        for e in sorted(self.gamma.terms, key=lambda x: (sum(x), x)):
            c = self.gamma.terms[e]
            for idx in itertools.combinations_with_replacement(range(self.dim), 3):
                if c[idx] != 0:
                    lines.append(f"{idx[0]} {idx[1]} {idx[2]} : {' '.join(map(str, e))} : {c[idx]}")
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'PolyFedosov':
        lines = [line for line in text.splitlines() if line.strip() and not line.startswith('#')]
        n_text, degree_text, scale_text = lines[0].split()
        n, degree = int(n_text), int(degree_text)
        dim = 2 * n
        terms = {}
        for line in lines[1:]:
            idx_text, exp_text, value_text = (part.strip() for part in line.split(':'))
            idx = tuple(int(x) for x in idx_text.split())
            exp = tuple(int(x) for x in exp_text.split())
            if exp not in terms:
                terms[exp] = np.zeros((dim,) * 3, dtype=np.int64).astype(object)
            value = Fraction(value_text)
            value = int(value) if value.denominator == 1 else value
            for perm in set(itertools.permutations(idx)):
                terms[exp][perm] = value
        return cls(n, degree, PolyField(dim, 3, terms), Fraction(scale_text))

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path: str) -> 'PolyFedosov':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_text(f.read())


def old_index_map(n: int) -> List[int]:
    """Positions of the 2n old coordinates inside dimension 2n+2."""
    return [i if i < n else i + 1 for i in range(2 * n)]


def random_fedosov(n: int, degree: int, seed, max_degree: int = MAX_DEGREE) -> PolyFedosov:
    """Random structure with symmetrized integer coefficients of degree <= `degree`."""
    if not 0 <= degree <= max_degree:
        raise CapExceededError(f"polynomial degree must be in [0, {max_degree}], got {degree}")
    dim = 2 * n
    rng = np.random.default_rng(seed)
    terms = {}
    for e in monomials(dim, degree):
        raw = rng.integers(-3, 4, size=(dim, dim, dim))
        terms[e] = _symmetrize3(raw).astype(object)
    return PolyFedosov(n, degree, PolyField(dim, 3, terms)._clean())


def flat(n: int) -> PolyFedosov:
    return PolyFedosov(n, 0, PolyField.zero(2 * n, 3))


# ============================================================================
# CURVATURE JETS
# ============================================================================

def curvature(F: PolyFedosov, audit: bool = True) -> Tensor:
    """R_{ijkl} at the origin; fails the convention audit if it leaves the curvature space."""
    R = Tensor.of(F.curvature_field(keep=0).value(), RATIONAL)
    if audit:
        failed = CURVATURE.violations(R)
        if failed:
            raise ConventionAuditError(f"curvature fails {', '.join(failed)}")
    return R


def ricci(R: Tensor, w: Tensor) -> Tensor:
    """K_{ij} = R^k_{ikj} = w^{kd} R_{dikj}."""
    return contract(ContractionPlan((('k', 'd'), ('d', 'i', 'k', 'j')), ('i', 'j')), [inverse_form(w), R])


def covariant_derivative(X: PolyField, christoffel: PolyField, keep: Optional[int] = None) -> PolyField:
    """(nabla X)_{a_1..a_N i} = d_i X_{a..} - sum_s Gamma^m_{i a_s} X_{..m..}."""
    result = X.gradient().truncated(keep)
    letters = _SLOT_LETTERS[:X.order]
    out = ''.join(letters) + 'z'
    for s in range(X.order):
        x_spec = ''.join('m' if t == s else letters[t] for t in range(X.order))
        spec = f"mz{letters[s]},{x_spec}->{out}"
        result = result - poly_einsum(spec, christoffel, X, max_degree=keep)
    return result


def curvature_derivatives(F: PolyFedosov, r: int) -> JetTensor:
    """nabla^k R at the origin for k = 0..r."""
    if r > F.degree:
        raise InsufficientJetError(f"covariant derivatives of order {r} need polynomial degree >= {r}, got {F.degree}")
    G = F.christoffel()
    X = F.curvature_field(keep=r)
    jets = [Tensor.of(X.value(), RATIONAL)]
    for k in range(1, r + 1):
        X = covariant_derivative(X, G, keep=r - k)
        jets.append(Tensor.of(X.value(), RATIONAL))
    return JetTensor('nabla^r R', jets)


def curvature_partials(F: PolyFedosov) -> Tensor:
    """Coordinate derivative d_a R_{ijkl} at the origin, index order (i, j, k, l, a)."""
    if F.degree < 1:
        return Tensor.zeros(F.dim, 5)
    return Tensor.of(F.curvature_field(keep=1).gradient().value(), RATIONAL)


def contracted_bianchi_residual(F: PolyFedosov) -> Tensor:
    """
    w^{ia} nabla_a R_{ijkl} - (-nabla_k K_{jl} + nabla_l K_{jk}) at the origin, where the
    contraction pairs the first index of w^{-1} with the first slot of R.
    """
    dR = curvature_derivatives(F, 1)[1]
    winv = F.w_inverse
    lhs = contract(ContractionPlan((('i', 'a'), ('i', 'j', 'k', 'l', 'a')), ('j', 'k', 'l')), [winv, dR])
    # dK[j, l, k] = nabla_k K_{jl}
    dK = contract(ContractionPlan((('m', 'd'), ('d', 'j', 'm', 'l', 'k')), ('j', 'l', 'k')), [winv, dR])
    rhs = dK - dK.permute((0, 2, 1))
    return lhs - rhs


def reduce(T_high: Tensor, n: int) -> Tensor:
    """Restriction of a dimension-(2n+2) tensor to the old coordinates of the product."""
    keep = old_index_map(n)
    if T_high.order == 0:
        return T_high
    return Tensor(T_high.data[np.ix_(*[keep] * T_high.order)], T_high.field)
