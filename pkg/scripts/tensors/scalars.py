"""
Scalar fields: exact rationals, residues modulo a prime, and doubles.

Exact tensors are numpy object arrays holding Python ints and Fractions;
prime-field tensors are int64 arrays reduced into [0, p); float tensors are float64.
"""

from fractions import Fraction
from typing import Any, Optional

import numpy as np
import sympy

from scripts.utils.errors import UsageError

# Residues stay below 2**21 so an int64 product sum over < 2**21 terms cannot overflow.
PRIME_CEILING = 2 ** 21
INT64_LIMIT = 2 ** 62

_is_int = np.frompyfunc(lambda x: isinstance(x, (int, np.integer)), 1, 1)
_normalize = np.frompyfunc(lambda x: int(x) if isinstance(x, Fraction) and x.denominator == 1 else x, 1, 1)


class Field:
    """Common interface of the three scalar fields."""
    name: str = 'field'
    dtype: Any = object
    exact: bool = True

    def array(self, data) -> np.ndarray:
        raise NotImplementedError

    def scalar(self, value):
        return self.array(np.array(value, dtype=object)).item()

    def reduce(self, arr: np.ndarray) -> np.ndarray:
        return arr

    def inv(self, value):
        raise NotImplementedError

    def is_zero_array(self, arr: np.ndarray, scale: float = 0.0) -> bool:
        return not np.any(arr != 0)

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__.items()))))

    def __repr__(self):
        return self.name


class RationalField(Field):
    name = 'rational'
    dtype = object
    exact = True

    def array(self, data) -> np.ndarray:
        arr = np.array(data, dtype=object)
        if arr.dtype != object:
            arr = arr.astype(object)
        out = np.empty(arr.shape, dtype=object)
        flat_in, flat_out = arr.reshape(-1), out.reshape(-1)
        for pos, value in enumerate(flat_in):
            if isinstance(value, (int, np.integer)):
                flat_out[pos] = int(value)
            else:
                value = Fraction(value)
                flat_out[pos] = int(value) if value.denominator == 1 else value
        return out

    def reduce(self, arr: np.ndarray) -> np.ndarray:
        # ufuncs on 0-d object arrays hand back bare scalars
        arr = np.asarray(arr, dtype=object)
        return np.asarray(_normalize(arr), dtype=object) if arr.size else arr

    def inv(self, value):
        return Fraction(1) / value


class PrimeField(Field):
    exact = True
    dtype = np.int64

    def __init__(self, p: int):
        if p >= PRIME_CEILING or not sympy.isprime(p):
            raise UsageError(f"{p} is not a prime below {PRIME_CEILING}")
        self.p = int(p)

    @property
    def name(self):
        return f"GF({self.p})"

    def array(self, data) -> np.ndarray:
        arr = np.asarray(data)
        if arr.dtype == object:
            p = self.p

            def conv(x):
                if isinstance(x, Fraction):
                    return (x.numerator % p) * pow(x.denominator % p, -1, p) % p
                return int(x) % p

            arr = np.frompyfunc(conv, 1, 1)(arr) if arr.size else arr
            return np.asarray(arr, dtype=np.int64).reshape(np.shape(data))
        if np.issubdtype(arr.dtype, np.floating):
            raise TypeError("float data cannot be mapped into a prime field")
        return np.mod(arr.astype(np.int64), self.p)

    def reduce(self, arr: np.ndarray) -> np.ndarray:
        return np.asarray(np.mod(arr, self.p))

    def inv(self, value):
        return pow(int(value) % self.p, -1, self.p)


class FloatField(Field):
    name = 'float'
    dtype = np.float64
    exact = False
    tolerance = 1e-9

    def array(self, data) -> np.ndarray:
        arr = np.asarray(data)
        if arr.dtype == object:
            arr = np.frompyfunc(float, 1, 1)(arr) if arr.size else arr
        return np.asarray(arr, dtype=np.float64).reshape(np.shape(data))

    def inv(self, value):
        return 1.0 / value

    def is_zero_array(self, arr: np.ndarray, scale: float = 0.0) -> bool:
        if arr.size == 0:
            return True
        return float(np.max(np.abs(arr))) <= self.tolerance * max(scale, 1.0)


RATIONAL = RationalField()
FLOAT = FloatField()


def select_primes(seed: int, count: int = 2):
    """Deterministically pick `count` distinct primes just below PRIME_CEILING."""
    rng = np.random.default_rng([seed, 0x9E37])
    primes = []
    while len(primes) < count:
        candidate = sympy.prevprime(PRIME_CEILING - int(rng.integers(1, 2 ** 18)))
        if candidate not in primes:
            primes.append(candidate)
    return [PrimeField(p) for p in primes]


def field_from_name(name: str, seed: int = 0) -> Field:
    """Resolve 'rational' | 'float' | 'prime' | 'prime:<p>' to a Field."""
    if name == 'rational':
        return RATIONAL
    if name == 'float':
        return FLOAT
    if name == 'prime':
        return select_primes(seed, 1)[0]
    if name.startswith('prime:'):
        return PrimeField(int(name.split(':', 1)[1]))
    raise UsageError(f"Unknown field: {name}")


def int_magnitude(arr: np.ndarray) -> Optional[int]:
    """
    Largest |entry| of an exact object array whose entries are all Python ints;
    None when some entry is a Fraction.
    """
    arr = np.asarray(arr)
    if arr.size == 0:
        return 0
    if arr.dtype != object:
        return int(np.max(np.abs(arr)))
    if not np.all(_is_int(arr)):
        return None
    return max(abs(int(x)) for x in arr.reshape(-1))


def max_abs(arr: np.ndarray) -> int:
    if arr.size == 0:
        return 0
    return max(abs(x) for x in arr.reshape(-1))
