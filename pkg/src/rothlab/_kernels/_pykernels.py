"""Pure-numpy kernels: exact pair-loop counters and trilinear sums.

These are the fallback implementations selected when the compiled extension
is unavailable. Every function here enumerates all pairs (x, y) of group
elements (or all pairs of set elements) in chunks, so results are exact
integer counts / exact floating sums, bit-identical to the compiled path.

Groups are passed structurally (factor list + row-major strides) so this
module stays import-independent from the rest of the package.
"""

from __future__ import annotations

import numpy as np

# Upper bound on the number of int64 cells materialized per chunk. Three
# slot-index matrices live at once, so peak memory is ~3 * 8 bytes * this.
_CHUNK_CELLS = 1 << 21


def _coords(idx: np.ndarray, factors: np.ndarray) -> list[np.ndarray]:
    """Row-major mixed-radix digits of each index, most significant first."""
    digits = []
    rest = idx.astype(np.int64, copy=True)
    for m in factors[::-1]:
        digits.append(rest % m)
        rest //= m
    return digits[::-1]


def _slot_indices(
    xs: np.ndarray,
    ys: np.ndarray,
    a: int,
    b: int,
    factors: np.ndarray,
    strides: np.ndarray,
) -> np.ndarray:
    """Index matrix of a*x + b*y over the grid xs (rows) by ys (cols)."""
    if len(factors) == 1:
        n = int(factors[0])
        return (a * xs[:, None] + b * ys[None, :]) % n
    acc = np.zeros((len(xs), len(ys)), dtype=np.int64)
    xd = _coords(xs, factors)
    yd = _coords(ys, factors)
    for m, w, cx, cy in zip(factors, strides, xd, yd):
        acc += ((a * cx[:, None] + b * cy[None, :]) % m) * w
    return acc


def pattern_count(
    factors: np.ndarray,
    strides: np.ndarray,
    masks: tuple[np.ndarray, np.ndarray, np.ndarray],
    coeffs: tuple[tuple[int, int], ...],
) -> int:
    """#{(x, y) in G^2 : a_i x + b_i y lands in mask_i for i = 1, 2, 3}."""
    n = int(np.prod(factors))
    xs_all = np.arange(n, dtype=np.int64)
    block = max(1, _CHUNK_CELLS // n)
    total = 0
    for start in range(0, n, block):
        xs = xs_all[start : start + block]
        prod = None
        for (a, b), mask in zip(coeffs, masks):
            sl = mask[_slot_indices(xs, xs_all, a, b, factors, strides)]
            prod = sl if prod is None else prod & sl
        total += int(prod.sum())
    return total


def trilinear_sum(
    factors: np.ndarray,
    strides: np.ndarray,
    values: tuple[np.ndarray, np.ndarray, np.ndarray],
    coeffs: tuple[tuple[int, int], ...],
) -> complex:
    """sum over (x, y) in G^2 of f1(a1 x + b1 y) f2(...) f3(...), unnormalized."""
    n = int(np.prod(factors))
    xs_all = np.arange(n, dtype=np.int64)
    block = max(1, _CHUNK_CELLS // n)
    total = 0.0 + 0.0j
    for start in range(0, n, block):
        xs = xs_all[start : start + block]
        prod = None
        for (a, b), vals in zip(coeffs, values):
            sl = vals[_slot_indices(xs, xs_all, a, b, factors, strides)]
            prod = sl if prod is None else prod * sl
        total += prod.sum()
    return complex(total)


def pair_progression_count(
    factors: np.ndarray,
    strides: np.ndarray,
    membership: np.ndarray,
    elements: np.ndarray,
) -> int:
    """#{(u, w) in elements^2 : 2w - u is in membership}.

    With membership = elements this is the total three-term progression count
    (u, midpoint w, endpoint 2w - u), trivial pairs u = w included.
    """
    if len(elements) == 0:
        return 0
    block = max(1, _CHUNK_CELLS // max(1, len(elements)))
    total = 0
    for start in range(0, len(elements), block):
        us = elements[start : start + block]
        idx = _slot_indices(us, elements, -1, 2, factors, strides)
        total += int(membership[idx].sum())
    return total
