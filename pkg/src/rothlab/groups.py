"""Finite abelian groups as factor lists, with exact character arithmetic,
normalized Fourier transforms, and probability measures.

A group is a product Z/m_1 x ... x Z/m_k given by its factor list. Elements
and characters are both indexed 0..n-1 in row-major mixed-radix order (the
last factor varies fastest), so a character index a and an element index x
pair via

    gamma_a(x) = exp(2 pi i * sum_j a_j x_j / m_j).

Phase numerators are computed as exact integers modulo L = lcm(m_j); no
floating error enters before the final exp.

Transform conventions (n = |G|):

    fourier(f)(a)           = (1/n) sum_x f(x) conj(gamma_a(x))
    inverse_fourier(F)(x)   = sum_a F(a) gamma_a(x)
    convolve(f, g)(x)       = (1/n) sum_y f(x - y) g(y)        so (f*g)^ = f^ g^
    dual_convolve(F, G)(a)  = sum_b F(b) G(a - b)              so (f g)^ = f^ *' g^
    measure_fourier(f, mu)(a) = sum_x f(x) conj(gamma_a(x)) mu({x})

Measures are genuine probability measures: nonnegative masses summing to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GroupError(ValueError):
    """Malformed group data: bad factors, out-of-range indices, etc."""


MAX_ORDER = 1 << 20


@dataclass(frozen=True)
class Group:
    """Z/m_1 x ... x Z/m_k with row-major element and character indexing."""

    factors: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.factors:
            raise GroupError("factor list must be nonempty")
        fac = tuple(int(m) for m in self.factors)
        if any(m < 2 for m in fac):
            raise GroupError(f"all factors must be >= 2, got {fac}")
        object.__setattr__(self, "factors", fac)
        if self.order > MAX_ORDER:
            raise GroupError(f"group order {self.order} exceeds guard {MAX_ORDER}")

    @cached_property
    def order(self) -> int:
        return int(math.prod(self.factors))

    @cached_property
    def exponent(self) -> int:
        """lcm of the factors; every character phase lives in (1/exponent) Z."""
        return int(math.lcm(*self.factors))

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out = [1] * len(self.factors)
        for j in range(len(self.factors) - 2, -1, -1):
            out[j] = out[j + 1] * self.factors[j + 1]
        return tuple(out)

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def is_odd(self) -> bool:
        return self.order % 2 == 1

    @cached_property
    def _coords_table(self) -> np.ndarray:
        """(n, k) int64 digits of every index; built lazily, cached."""
        return self.coords_of(np.arange(self.order, dtype=np.int64))

    # -- index arithmetic ---------------------------------------------------

    def coords_of(self, idx):
        """Mixed-radix digits, shape (..., k). Accepts scalars or arrays."""
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty(idx.shape + (len(self.factors),), dtype=np.int64)
        rest = idx.copy()
        for j in range(len(self.factors) - 1, -1, -1):
            out[..., j] = rest % self.factors[j]
            rest //= self.factors[j]
        return out

    def index_of(self, coords):
        """Inverse of coords_of; digits are reduced mod the factors first."""
        coords = np.asarray(coords, dtype=np.int64)
        if coords.shape[-1] != len(self.factors):
            raise GroupError(
                f"expected {len(self.factors)} coordinates, got {coords.shape[-1]}"
            )
        fac = np.asarray(self.factors, dtype=np.int64)
        w = np.asarray(self.strides, dtype=np.int64)
        return ((coords % fac) * w).sum(axis=-1)

    def add(self, i, j):
        if len(self.factors) == 1:
            return (np.asarray(i, np.int64) + np.asarray(j, np.int64)) % self.order
        return self.index_of(self.coords_of(i) + self.coords_of(j))

    def neg(self, i):
        if len(self.factors) == 1:
            return (-np.asarray(i, np.int64)) % self.order
        return self.index_of(-self.coords_of(i))

    def sub(self, i, j):
        if len(self.factors) == 1:
            return (np.asarray(i, np.int64) - np.asarray(j, np.int64)) % self.order
        return self.index_of(self.coords_of(i) - self.coords_of(j))

    def scale(self, t: int, i):
        """t * x for an integer scalar t (negative t allowed)."""
        if len(self.factors) == 1:
            return (int(t) * np.asarray(i, np.int64)) % self.order
        return self.index_of(int(t) * self.coords_of(i))

    def unit_inverses(self, t: int) -> tuple[int, ...]:
        """Per-factor inverses of t; raises if t is not a unit in some factor."""
        out = []
        for m in self.factors:
            if math.gcd(t % m, m) != 1:
                raise GroupError(f"{t} is not invertible mod {m}")
            out.append(pow(t % m, -1, m))
        return tuple(out)

    def scale_inverse(self, t: int, i):
        """x such that t * x = i, componentwise (t must be a unit)."""
        inv = self.unit_inverses(t)
        if len(self.factors) == 1:
            return (inv[0] * np.asarray(i, np.int64)) % self.order
        coords = self.coords_of(i) * np.asarray(inv, dtype=np.int64)
        return self.index_of(coords)

    def validate_indices(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.order):
            raise GroupError(
                f"element index out of range [0, {self.order}) in {idx!r}"
            )
        return idx

    # -- characters ---------------------------------------------------------

    def phase_numerators(self, char_index: int) -> np.ndarray:
        """Exact t(x) with gamma_a(x) = exp(2 pi i t(x) / exponent), all x."""
        L = self.exponent
        a = self.coords_of(int(char_index))
        weights = a * np.asarray([L // m for m in self.factors], dtype=np.int64)
        return (self._coords_table @ (weights % L)) % L

    def character_column(self, char_index: int) -> np.ndarray:
        t = self.phase_numerators(char_index)
        return np.exp((2j * np.pi / self.exponent) * t)

    def character_value(self, char_index: int, elem_index: int) -> complex:
        L = self.exponent
        a = self.coords_of(int(char_index))
        x = self.coords_of(int(elem_index))
        t = 0
        for aj, xj, m in zip(a, x, self.factors):
            t = (t + int(aj) * int(xj) * (L // m)) % L
        return complex(np.exp(2j * np.pi * t / L))

    def to_json(self) -> dict:
        return {"invariant_factors": list(self.factors)}

    @classmethod
    def from_json(cls, data: dict) -> "Group":
        try:
            factors = tuple(int(m) for m in data["invariant_factors"])
        except (KeyError, TypeError) as exc:
            raise GroupError(f"bad group JSON: {data!r}") from exc
        return cls(factors)


def cyclic(n: int) -> Group:
    return Group((int(n),))


@dataclass(frozen=True)
class Element:
    group: Group
    index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", int(self.index))
        if not 0 <= self.index < self.group.order:
            raise GroupError(f"element index {self.index} out of range")

    @property
    def coords(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.group.coords_of(self.index))

    @classmethod
    def from_coords(cls, group: Group, coords) -> "Element":
        return cls(group, int(group.index_of(np.asarray(coords))))

    def __add__(self, other: "Element") -> "Element":
        return Element(self.group, int(self.group.add(self.index, other.index)))

    def __neg__(self) -> "Element":
        return Element(self.group, int(self.group.neg(self.index)))

    def __sub__(self, other: "Element") -> "Element":
        return Element(self.group, int(self.group.sub(self.index, other.index)))

    def __rmul__(self, t: int) -> "Element":
        return Element(self.group, int(self.group.scale(t, self.index)))


@dataclass(frozen=True)
class Character:
    group: Group
    index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "index", int(self.index))
        if not 0 <= self.index < self.group.order:
            raise GroupError(f"character index {self.index} out of range")

    @property
    def coords(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.group.coords_of(self.index))

    @classmethod
    def from_coords(cls, group: Group, coords) -> "Character":
        return cls(group, int(group.index_of(np.asarray(coords))))

    def __call__(self, x) -> complex:
        idx = x.index if isinstance(x, Element) else int(x)
        return self.group.character_value(self.index, idx)

    def column(self) -> np.ndarray:
        return self.group.character_column(self.index)


# ---------------------------------------------------------------------------
# subsets


@dataclass
class GroupSubset:
    group: Group
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.group.order,):
            raise GroupError(
                f"mask length {mask.shape} does not match group order {self.group.order}"
            )
        self.mask = mask

    @classmethod
    def from_indices(cls, group: Group, indices) -> "GroupSubset":
        idx = group.validate_indices(np.asarray(list(indices), dtype=np.int64))
        mask = np.zeros(group.order, dtype=bool)
        mask[idx] = True
        return cls(group, mask)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask).astype(np.int64)

    @property
    def cardinality(self) -> int:
        return int(self.mask.sum())

    @property
    def density(self) -> float:
        return self.cardinality / self.group.order

    def indicator(self) -> np.ndarray:
        return self.mask.astype(np.float64)

    def translate(self, shift: int) -> "GroupSubset":
        """{x + shift : x in S}."""
        idx = self.group.add(self.indices(), int(shift))
        return GroupSubset.from_indices(self.group, idx)

    def scale(self, t: int) -> "GroupSubset":
        """{t x : x in S}; a bijective image when t is a unit."""
        return GroupSubset.from_indices(self.group, self.group.scale(t, self.indices()))

    def to_json(self) -> dict:
        return {
            "invariant_factors": list(self.group.factors),
            "elements": [int(i) for i in self.indices()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroupSubset":
        group = Group.from_json(data)
        try:
            elems = [int(e) for e in data["elements"]]
        except (KeyError, TypeError) as exc:
            raise GroupError(f"bad set JSON: {data!r}") from exc
        return cls.from_indices(group, elems)


# ---------------------------------------------------------------------------
# transforms


def _grid(group: Group, values: np.ndarray) -> np.ndarray:
    return np.asarray(values).reshape(group.factors)


def fourier(group: Group, values) -> np.ndarray:
    """fhat(a) = (1/n) sum_x f(x) conj(gamma_a(x))."""
    values = np.asarray(values, dtype=np.complex128)
    return np.fft.fftn(_grid(group, values)).ravel() / group.order


def inverse_fourier(group: Group, coeffs) -> np.ndarray:
    """f(x) = sum_a F(a) gamma_a(x); exact inverse of fourier()."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    return np.fft.ifftn(_grid(group, coeffs)).ravel() * group.order


def convolve(group: Group, f, g) -> np.ndarray:
    """(f * g)(x) = (1/n) sum_y f(x - y) g(y); transforms multiply."""
    F = np.fft.fftn(_grid(group, np.asarray(f, dtype=np.complex128)))
    G = np.fft.fftn(_grid(group, np.asarray(g, dtype=np.complex128)))
    return np.fft.ifftn(F * G).ravel() / group.order


def dual_convolve(group: Group, F, G) -> np.ndarray:
    """(F *' G)(a) = sum_b F(b) G(a - b) on the dual; (f g)^ = f^ *' g^."""
    A = np.fft.fftn(_grid(group, np.asarray(F, dtype=np.complex128)))
    B = np.fft.fftn(_grid(group, np.asarray(G, dtype=np.complex128)))
    return np.fft.ifftn(A * B).ravel()


def translate(group: Group, values, shift: int) -> np.ndarray:
    """(tau_t f)(y) = f(y + t); fourier picks up the phase gamma_a(t)."""
    idx = group.add(np.arange(group.order, dtype=np.int64), int(shift))
    return np.asarray(values)[idx]


def reflect(group: Group, values) -> np.ndarray:
    """f(-y)."""
    idx = group.neg(np.arange(group.order, dtype=np.int64))
    return np.asarray(values)[idx]


# ---------------------------------------------------------------------------
# measures


class MeasureError(ValueError):
    """Masses that are not a probability distribution."""


_NEG_TOL = 1e-12


@dataclass
class GroupMeasure:
    """Probability measure on G: nonnegative point masses summing to 1."""

    group: Group
    mass: np.ndarray
    _fourier: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.shape != (self.group.order,):
            raise MeasureError("mass vector length does not match group order")
        if mass.min() < -_NEG_TOL:
            raise MeasureError(f"negative mass {mass.min()}")
        mass = np.maximum(mass, 0.0)
        total = mass.sum()
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-6):
            raise MeasureError(f"total mass {total} is not 1")
        self.mass = mass / total

    @classmethod
    def haar(cls, group: Group) -> "GroupMeasure":
        return cls(group, np.full(group.order, 1.0 / group.order))

    @classmethod
    def uniform_on(cls, subset: GroupSubset) -> "GroupMeasure":
        c = subset.cardinality
        if c == 0:
            raise MeasureError("uniform measure on the empty set")
        return cls(subset.group, subset.mask / c)

    def expectation(self, values) -> complex:
        return complex(np.asarray(values) @ self.mass)

    def fourier_table(self) -> np.ndarray:
        """muhat(a) = sum_x conj(gamma_a(x)) mu({x}), all a at once."""
        if self._fourier is None:
            self._fourier = np.fft.fftn(_grid(self.group, self.mass)).ravel()
        return self._fourier

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0)

    def translate(self, shift: int) -> "GroupMeasure":
        """Pushforward under x -> x + shift."""
        idx = self.group.sub(np.arange(self.group.order, dtype=np.int64), int(shift))
        return GroupMeasure(self.group, self.mass[idx])

    def reflect(self) -> "GroupMeasure":
        """Pushforward under x -> -x."""
        idx = self.group.neg(np.arange(self.group.order, dtype=np.int64))
        return GroupMeasure(self.group, self.mass[idx])


def convolve_measures(mu: GroupMeasure, nu: GroupMeasure) -> GroupMeasure:
    """(mu * nu)({x}) = sum_y mu({x - y}) nu({y}); still a probability measure."""
    if mu.group != nu.group:
        raise MeasureError("measures live on different groups")
    g = mu.group
    raw = np.fft.ifftn(
        np.fft.fftn(_grid(g, mu.mass)) * np.fft.fftn(_grid(g, nu.mass))
    ).real.ravel()
    return GroupMeasure(g, raw)


def measure_fourier(group: Group, values, mu: GroupMeasure) -> np.ndarray:
    """(f d mu)^(a) = sum_x f(x) conj(gamma_a(x)) mu({x})."""
    weighted = np.asarray(values, dtype=np.complex128) * mu.mass
    return np.fft.fftn(_grid(group, weighted)).ravel()


def is_positive_definite(mu: GroupMeasure, tol: float = 1e-9) -> bool:
    """True when every Fourier coefficient of mu is (numerically) real >= 0."""
    F = mu.fourier_table()
    return bool(np.abs(F.imag).max() <= tol and F.real.min() >= -tol)
