"""Three-term progression counting and trilinear averages.

Two sampling conventions for the trilinear average over pairs (x, y):

    midpoint:    E f(x - y) g(x) h(x + y)   (x is the middle of the triple)
    difference:  E f(x - y) g(y) h(x + y)   (y is the common difference slot)

On odd-order groups the midpoint average of (f, g, h) equals the dual-side
pairing sum_a fhat(a) ghat(-2a) hhat(a); both routes are exposed and the
acceptance tests compare them. Progression counts are exact integers: a
"total" count includes the |A| trivial (zero-difference) triples, and
"nontrivial" excludes them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import pair_progression_count, pattern_count, trilinear_sum
from .groups import Group, GroupSubset, cyclic, fourier

MIDPOINT = ((1, -1), (1, 0), (1, 1))
DIFFERENCE = ((1, -1), (0, 1), (1, 1))
# slots of the increment operator's count: x - 2y in A, y in A', x in A
OPERATOR = ((1, -2), (0, 1), (1, 0))

_CONVENTIONS = {"midpoint": MIDPOINT, "difference": DIFFERENCE}

DIRECT_GUARD = 4096


class ProgressionError(ValueError):
    pass


def _coeffs(convention: str):
    try:
        return _CONVENTIONS[convention]
    except KeyError:
        raise ProgressionError(
            f"unknown convention {convention!r}, expected one of {sorted(_CONVENTIONS)}"
        ) from None


def trilinear_direct(group: Group, f, g, h, convention: str = "midpoint") -> complex:
    """Trilinear average by exhaustive pair loop; guarded to |G| <= 4096."""
    if group.order > DIRECT_GUARD:
        raise ProgressionError(
            f"direct trilinear loop guarded to |G| <= {DIRECT_GUARD}, got {group.order}"
        )
    coeffs = _coeffs(convention)
    vals = tuple(np.asarray(v, dtype=np.complex128) for v in (f, g, h))
    raw = trilinear_sum(
        np.asarray(group.factors, np.int64),
        np.asarray(group.strides, np.int64),
        vals,
        coeffs,
    )
    return raw / group.order**2


def trilinear_fourier(group: Group, f, g, h) -> complex:
    """Dual-side pairing sum_a fhat(a) ghat(-2a) hhat(a).

    Equals the midpoint trilinear average when |G| is odd (the substitution
    x = (u + w)/2 is then a bijection); computed in O(n log n).
    """
    F = fourier(group, f)
    G = fourier(group, g)
    H = fourier(group, h)
    idx = group.scale(-2, np.arange(group.order, dtype=np.int64))
    return complex(np.sum(F * G[idx] * H))


def pattern_pair_count(group: Group, sets, coeffs) -> int:
    """#{(x, y) : a_i x + b_i y in S_i for each of the three slots}. Exact."""
    masks = tuple(np.ascontiguousarray(s.mask, dtype=np.uint8) for s in sets)
    return pattern_count(
        np.asarray(group.factors, np.int64),
        np.asarray(group.strides, np.int64),
        masks,
        coeffs,
    )


@dataclass(frozen=True)
class ProgressionCount:
    total: int
    nontrivial: int


def count_3aps(subset: GroupSubset) -> ProgressionCount:
    """Exact count of pairs (a, d) with a, a+d, a+2d all in the set.

    total includes the |A| pairs with d = 0; nontrivial = total - |A|.
    Runs on the (u, w) = (a, a+d) pair loop: u, w in A and 2w - u in A.
    """
    g = subset.group
    elems = subset.indices()
    memb = np.ascontiguousarray(subset.mask, dtype=np.uint8)
    total = pair_progression_count(
        np.asarray(g.factors, np.int64),
        np.asarray(g.strides, np.int64),
        memb,
        elems,
    )
    return ProgressionCount(int(total), int(total) - subset.cardinality)


def brute_force_3aps(subset: GroupSubset) -> ProgressionCount:
    """Independent O(|G|^2) oracle: loops over all (a, d), no pair-loop kernel."""
    g = subset.group
    n = g.order
    m = subset.mask
    arange = np.arange(n, dtype=np.int64)
    total = 0
    for d in range(n):
        i1 = g.add(arange, d)
        i2 = g.add(i1, d)
        total += int((m & m[i1] & m[i2]).sum())
    return ProgressionCount(total, total - subset.cardinality)


def find_nontrivial_3ap(subset: GroupSubset):
    """Smallest (lexicographic in (a, a+d)) triple with d != 0, or None."""
    g = subset.group
    n = g.order
    elems = subset.indices()
    memb = subset.mask
    for u in elems:
        thirds = g.sub(g.scale(2, elems), int(u))
        hits = memb[thirds] & (elems != u)
        if hits.any():
            w = int(elems[np.argmax(hits)])
            return (int(u), w, int(g.sub(g.scale(2, w), int(u))))
    return None


# ---------------------------------------------------------------------------
# integer-side counting and the 3AP-preserving embedding


def count_integer_3aps(elements) -> ProgressionCount:
    """Exact (a, d) count, d ranging over nonzero integers of both signs.

    Matches the group-side convention: each increasing triple contributes 2.
    """
    elems = sorted({int(e) for e in elements})
    if not elems:
        return ProgressionCount(0, 0)
    if any(e < 0 for e in elems):
        raise ProgressionError("integer sets must be nonnegative")
    top = elems[-1]
    mask = np.zeros(2 * top + 1, dtype=bool)
    arr = np.asarray(elems, dtype=np.int64)
    mask[arr] = True
    nontrivial = 0
    for b in elems:
        c = 2 * b - arr
        ok = (c >= 0) & (arr != b)
        nontrivial += int(mask[c[ok]].sum())
    return ProgressionCount(nontrivial + len(elems), nontrivial)


def freiman_embed(elements, n_bound: int) -> tuple[Group, GroupSubset]:
    """Embed S in {1..N} into Z/(4N+1) preserving 3-term progressions.

    Since 3 * N < 4N + 1, a progression a + c = 2b mod 4N+1 with entries in
    {1..N} forces a + c = 2b over the integers, so nontrivial counts agree
    exactly in both directions.
    """
    elems = sorted({int(e) for e in elements})
    n_bound = int(n_bound)
    if elems and not (1 <= elems[0] and elems[-1] <= n_bound):
        raise ProgressionError(f"elements must lie in 1..{n_bound}")
    group = cyclic(4 * n_bound + 1)
    return group, GroupSubset.from_indices(group, elems)
