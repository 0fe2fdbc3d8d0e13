"""Progression-free subsets of {1..N} and the exhaustive freeness oracle.

Generators: digit-sphere sets (behrend), thickened annuli with deletion
repair (elkin), the smallest-first greedy set, and Bernoulli samples.
Every structured generator verifies its output before returning it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ConstructionError",
    "GuardError",
    "IntegerSet",
    "behrend",
    "elkin",
    "greedy_ap_free",
    "random_set",
    "verify_ap_free",
]

ORACLE_GUARD = 100_000


class ConstructionError(RuntimeError):
    pass


class GuardError(ConstructionError):
    pass


@dataclass(frozen=True)
class IntegerSet:
    """A subset of {1..N} kept both as a sorted tuple and as a bitset."""

    n: int
    elements: tuple[int, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 0:
            raise ConstructionError(f"range bound {self.n} is negative")
        elems = tuple(int(e) for e in self.elements)
        if list(elems) != sorted(set(elems)):
            raise ConstructionError("elements must be sorted and deduplicated")
        if elems and not (1 <= elems[0] and elems[-1] <= self.n):
            raise ConstructionError(f"elements outside 1..{self.n}")
        object.__setattr__(self, "elements", elems)

    @property
    def size(self) -> int:
        return len(self.elements)

    def bitset(self) -> np.ndarray:
        mask = np.zeros(self.n + 1, dtype=bool)
        if self.elements:
            mask[np.asarray(self.elements)] = True
        return mask

    def restrict(self, m: int) -> "IntegerSet":
        return IntegerSet(min(m, self.n), tuple(e for e in self.elements if e <= m))

    def to_json(self) -> dict:
        return {"N": self.n, "elements": list(self.elements)}

    @classmethod
    def from_json(cls, data: dict) -> "IntegerSet":
        return cls(int(data["N"]), tuple(int(e) for e in data["elements"]))


def verify_ap_free(s, guard: int = ORACLE_GUARD):
    """Exhaustive pair scan: (True, None) or (False, witness (a, b, c)).

    a + c = 2b with a < b < c; O(|S|^2) via a bitset probe per pair.
    """
    elems = np.asarray(sorted(s.elements if isinstance(s, IntegerSet) else set(s)),
                       dtype=np.int64)
    if elems.size > guard:
        raise GuardError(f"{elems.size} elements exceed the oracle guard {guard}")
    if elems.size < 3:
        return True, None
    top = int(elems[-1])
    mask = np.zeros(2 * top + 1, dtype=bool)
    mask[elems] = True
    for i in range(elems.size - 2):
        a = int(elems[i])
        mids = elems[i + 1:]
        ends = 2 * mids - a
        hit = mask[ends] & (ends > mids)
        if hit.any():
            b = int(mids[int(np.argmax(hit))])
            return False, (a, b, 2 * b - a)
    return True, None


def _digit_vectors(d: int, k: int) -> np.ndarray:
    """All vectors in {0..d-1}^k, one row each."""
    grids = np.meshgrid(*([np.arange(d)] * k), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _pack(vectors: np.ndarray, base: int) -> np.ndarray:
    weights = base ** np.arange(vectors.shape[1], dtype=np.int64)
    return vectors @ weights + 1


def _parameter_grid(n: int):
    """(dimension, half-base) pairs whose packed range fits inside {1..n}."""
    out = []
    for k in range(1, 8):
        for d in range(2, 40):
            base = 2 * d
            top = (d - 1) * (base ** k - 1) // (base - 1) + 1
            if top > n:
                break
            out.append((k, d))
    return out


def behrend(n: int, dimension: int | None = None, half_base: int | None = None,
            verify: bool = True) -> IntegerSet:
    """Largest digit sphere over a small parameter grid.

    Digit vectors in {0..d-1}^k on a fixed sphere sum(x_i^2) = r, packed in
    base 2d so that adding two set elements never carries; a progression
    would force a midpoint on the same sphere, which only the zero
    difference achieves.
    """
    if n < 1:
        raise ConstructionError("range bound must be at least 1")
    if (dimension is None) != (half_base is None):
        raise ConstructionError("supply both dimension and half_base or neither")
    grid = [(dimension, half_base)] if dimension is not None else _parameter_grid(n)
    if dimension is not None:
        base = 2 * half_base
        top = (half_base - 1) * (base ** dimension - 1) // (base - 1) + 1
        if top > n:
            raise ConstructionError("requested parameters overflow the range")
    best = None
    for k, d in grid:
        vecs = _digit_vectors(d, k)
        radii = (vecs * vecs).sum(axis=1)
        counts = np.bincount(radii)
        r = int(np.argmax(counts))
        if best is None or counts[r] > best[0]:
            best = (int(counts[r]), k, d, r)
    if best is None or best[0] <= 1:
        out = IntegerSet(n, (1,), {"method": "behrend", "fallback": True})
        return out
    _, k, d, r = best
    vecs = _digit_vectors(d, k)
    on_sphere = vecs[(vecs * vecs).sum(axis=1) == r]
    values = np.sort(_pack(on_sphere, 2 * d))
    out = IntegerSet(n, tuple(int(v) for v in values),
                     {"method": "behrend", "dimension": k, "half_base": d,
                      "radius": r, "grid_size": len(grid)})
    if verify:
        ok, witness = verify_ap_free(out)
        if not ok:
            raise ConstructionError(f"behrend output failed the oracle at {witness}")
    return out


def elkin(n: int, thickness: int = 2, verify: bool = True) -> IntegerSet:
    """Thickened annulus with greedy deletion repair.

    Vectors with sum(x_i^2) in [r, r + thickness) packed carry-free; any
    progression inside the annulus has a difference of squared length
    below the thickness, and those few triples are repaired by deleting
    one endpoint each. The repaired size is reported, not asserted, to
    beat the single sphere.
    """
    if n < 1:
        raise ConstructionError("range bound must be at least 1")
    best = None
    for k, d in _parameter_grid(n):
        vecs = _digit_vectors(d, k)
        radii = (vecs * vecs).sum(axis=1)
        counts = np.bincount(radii, minlength=radii.max() + thickness + 1)
        window = np.convolve(counts, np.ones(thickness, dtype=np.int64), "full")
        window = window[thickness - 1:]
        r = int(np.argmax(window))
        if best is None or window[r] > best[0]:
            best = (int(window[r]), k, d, r)
    if best is None or best[0] <= 1:
        return IntegerSet(n, (1,), {"method": "elkin", "fallback": True})
    _, k, d, r = best
    vecs = _digit_vectors(d, k)
    radii = (vecs * vecs).sum(axis=1)
    band = vecs[(radii >= r) & (radii < r + thickness)]
    values = sorted(int(v) for v in _pack(band, 2 * d))
    removed = 0
    while True:
        ok, witness = verify_ap_free(IntegerSet(n, tuple(values)))
        if ok:
            break
        values.remove(witness[2])
        removed += 1
    out = IntegerSet(n, tuple(values),
                     {"method": "elkin", "dimension": k, "half_base": d,
                      "radius": r, "thickness": thickness, "removed": removed})
    if verify:
        ok, witness = verify_ap_free(out)
        if not ok:
            raise ConstructionError(f"elkin repair left a progression at {witness}")
    return out


def greedy_ap_free(n: int, verify: bool = True) -> IntegerSet:
    """Smallest-first greedy: x joins unless it completes a + x = 2b.

    Equals the integers whose base-3 digits avoid 2, shifted by one.
    """
    if n < 1:
        raise ConstructionError("range bound must be at least 1")
    buf = np.zeros(n, dtype=np.int64)
    count = 0
    mask = np.zeros(n + 1, dtype=bool)
    for x in range(1, n + 1):
        # only midpoints b with 2b - x >= 1 can complete a progression at x
        lo = int(np.searchsorted(buf[:count], (x + 1) // 2))
        mids = buf[lo:count]
        if mids.size == 0 or not mask[2 * mids - x].any():
            buf[count] = x
            count += 1
            mask[x] = True
    out = IntegerSet(n, tuple(int(v) for v in buf[:count]), {"method": "greedy"})
    if verify:
        ok, witness = verify_ap_free(out)
        if not ok:
            raise ConstructionError(f"greedy output failed the oracle at {witness}")
    return out


def random_set(n: int, alpha: float, seed: int = 0) -> IntegerSet:
    """Bernoulli(alpha) inclusion over {1..n}, reproducible per seed."""
    if not 0.0 <= alpha <= 1.0:
        raise ConstructionError(f"density {alpha} outside [0, 1]")
    if n < 0:
        raise ConstructionError("range bound must be nonnegative")
    rng = np.random.default_rng(seed)
    mask = rng.random(n) < alpha
    elems = tuple(int(i) for i in np.flatnonzero(mask) + 1)
    return IntegerSet(n, elems, {"method": "random", "alpha": alpha, "seed": seed})
