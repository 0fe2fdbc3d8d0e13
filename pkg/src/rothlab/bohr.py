"""Bohr sets: exact enumeration, dilation, regularity, and scalar images.

A Bohr set is determined by dual frequencies gamma and widths delta via

    B_rho = { x : |1 - gamma(x)| <= rho * delta_gamma  for every gamma }.

Radii |1 - gamma(x)| = 2 sin(pi t / L) come from exact integer phase
numerators t, so membership reduces to one float compare per element: each x
carries a critical scale crit(x) = max_gamma radius/width, and x is in B_rho
iff crit(x) <= rho * scale. Dilation just multiplies the carried scale; the
per-lineage crit array is computed once and shared by every dilate, which is
what makes the regularity scans cheap. The clamp of reported widths at 2 is
cosmetic: radii never exceed 2, so it cannot change membership.

Every Bohr set here contains 0 and is symmetric (radii are even functions).
"""

from __future__ import annotations

import math
import os
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .groups import Group, GroupMeasure, GroupSubset


class BohrError(ValueError):
    pass


class EnumerationGuardError(MemoryError):
    """Enumeration would exceed the ROTHLAB_GUARD_BYTES memory cap."""


class RegularitySearchError(RuntimeError):
    """No dilate in the scanned window passed the regularity envelope."""


DEFAULT_GUARD_BYTES = 1 << 28


def _guard_bytes() -> int:
    raw = os.environ.get("ROTHLAB_GUARD_BYTES", "")
    try:
        return int(raw)
    except ValueError:
        return DEFAULT_GUARD_BYTES


# crit arrays keyed by (factors, frequencies, base widths); small LRU
_CRIT_CACHE: OrderedDict[tuple, tuple[np.ndarray, np.ndarray]] = OrderedDict()
_CRIT_CACHE_MAX = 128


def _crit_arrays(group: Group, freqs: tuple[int, ...], widths: tuple[float, ...]):
    """(crit, sorted crit) for the lineage; crit(x) = max radius/width."""
    key = (group.factors, freqs, widths)
    hit = _CRIT_CACHE.get(key)
    if hit is not None:
        _CRIT_CACHE.move_to_end(key)
        return hit
    n = group.order
    need = n * 8 * (len(group.factors) + 3)
    if need > _guard_bytes():
        raise EnumerationGuardError(
            f"enumerating |G| = {n} with rank {len(freqs)} needs ~{need} bytes, "
            f"over the ROTHLAB_GUARD_BYTES cap {_guard_bytes()}"
        )
    L = group.exponent
    crit = np.zeros(n, dtype=np.float64)
    for a, delta in zip(freqs, widths):
        t = group.phase_numerators(a)
        t = np.minimum(t, L - t)
        radius = 2.0 * np.sin(np.pi * t / L)
        np.maximum(crit, radius / delta, out=crit)
    out = (crit, np.sort(crit))
    _CRIT_CACHE[key] = out
    while len(_CRIT_CACHE) > _CRIT_CACHE_MAX:
        _CRIT_CACHE.popitem(last=False)
    return out


@dataclass(frozen=True)
class BohrSet:
    """Frequencies are character indices; widths pair up positionally."""

    group: Group
    frequencies: tuple[int, ...]
    widths: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self) -> None:
        freqs = [int(a) for a in self.frequencies]
        widths = [float(d) for d in self.widths]
        if len(freqs) != len(widths):
            raise BohrError("frequency and width lists differ in length")
        if any(not 0 <= a < self.group.order for a in freqs):
            raise BohrError("frequency index out of range")
        if any(not 0.0 < d <= 2.0 for d in widths):
            raise BohrError(f"widths must lie in (0, 2], got {widths}")
        if not 0.0 < self.scale:
            raise BohrError(f"scale must be positive, got {self.scale}")
        # duplicate frequencies keep the most restrictive width
        merged: dict[int, float] = {}
        order: list[int] = []
        for a, d in zip(freqs, widths):
            if a in merged:
                merged[a] = min(merged[a], d)
            else:
                merged[a] = d
                order.append(a)
        object.__setattr__(self, "frequencies", tuple(order))
        object.__setattr__(self, "widths", tuple(merged[a] for a in order))
        object.__setattr__(self, "scale", float(self.scale))

    # -- structure -----------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.frequencies)

    def effective_widths(self) -> tuple[float, ...]:
        return tuple(min(self.scale * d, 2.0) for d in self.widths)

    def dilate(self, rho: float) -> "BohrSet":
        if rho <= 0:
            raise BohrError(f"dilation factor must be positive, got {rho}")
        return BohrSet(self.group, self.frequencies, self.widths, self.scale * rho)

    def frequency_coords(self) -> list[list[int]]:
        return [[int(c) for c in self.group.coords_of(a)] for a in self.frequencies]

    # -- membership ------------------------------------------------------------

    def _crit(self):
        if not self.frequencies:
            # rank 0: the whole group at every scale
            n = self.group.order
            z = np.zeros(n)
            return z, z
        return _crit_arrays(self.group, self.frequencies, self.widths)

    def member_mask(self, rho: float = 1.0) -> np.ndarray:
        crit, _ = self._crit()
        return crit <= self.scale * rho

    def members(self, rho: float = 1.0) -> GroupSubset:
        return GroupSubset(self.group, self.member_mask(rho))

    def size(self, rho: float = 1.0) -> int:
        _, sc = self._crit()
        return int(np.searchsorted(sc, self.scale * rho, side="right"))

    def density(self, rho: float = 1.0) -> float:
        return self.size(rho) / self.group.order

    def contains(self, subset: GroupSubset, rho: float = 1.0) -> bool:
        return bool((subset.mask <= self.member_mask(rho)).all())

    def beta(self, rho: float = 1.0) -> GroupMeasure:
        return GroupMeasure.uniform_on(self.members(rho))

    # -- images ---------------------------------------------------------------

    def scalar_image(self, t: int) -> "BohrSet":
        """The Bohr-set description of t * B (t a unit): frequencies map to
        t^{-1} gamma, widths and scale are untouched."""
        mapped = tuple(
            int(self.group.scale_inverse(t, a)) for a in self.frequencies
        )
        return BohrSet(self.group, mapped, self.widths, self.scale)

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "invariant_factors": list(self.group.factors),
            "frequencies": self.frequency_coords(),
            "widths": [float(d) for d in self.effective_widths()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BohrSet":
        group = Group.from_json(data)
        try:
            freqs = [group.index_of(np.asarray(c, dtype=np.int64)) for c in data["frequencies"]]
            widths = [float(d) for d in data["widths"]]
        except (KeyError, TypeError) as exc:
            raise BohrError(f"bad Bohr JSON: {data!r}") from exc
        return cls(group, tuple(int(a) for a in freqs), tuple(widths))


def meet(b1: BohrSet, b2: BohrSet) -> BohrSet:
    """Intersection system: union of frequencies, min effective widths."""
    if b1.group != b2.group:
        raise BohrError("Bohr sets live on different groups")
    freqs = b1.frequencies + b2.frequencies
    widths = b1.effective_widths() + b2.effective_widths()
    return BohrSet(b1.group, freqs, widths)


DEFAULT_DOUBLING_GRID = tuple(2.0**-j for j in range(8))


def dimension_estimate(b: BohrSet, grid: tuple[float, ...] = DEFAULT_DOUBLING_GRID) -> float:
    """Smallest d >= 1 with |B_{2 rho}| <= 2^d |B_rho| at every grid scale."""
    worst = 1.0
    for rho in grid:
        num = b.size(2 * rho)
        den = b.size(rho)
        # 0 is always a member, so den >= 1
        worst = max(worst, math.log2(num / den))
    return worst


@dataclass(frozen=True)
class RegularityReport:
    lam: float
    dimension: float
    c_reg: float
    etas: tuple[float, ...]
    ratios: tuple[float, ...]
    passed: bool


def find_regular_dilate(
    b: BohrSet,
    c_reg: float = 16.0,
    n_lambda: int = 48,
    n_eta: int = 32,
) -> tuple[BohrSet, RegularityReport]:
    """First lambda in [1/2, 1) whose dilate meets the two-sided envelope

        1/(1 + C d |eta|) <= |B_{lam(1+eta)}| / |B_lam| <= 1 + C d |eta|

    for all |eta| <= 1/(C d). Deterministic grid scan; failure is an error."""
    lams = [0.5 + 0.5 * i / n_lambda for i in range(n_lambda)]
    last_report = None
    for lam in lams:
        cand = b.dilate(lam)
        d = dimension_estimate(cand)
        bound = 1.0 / (c_reg * d)
        etas = np.linspace(-bound, bound, n_eta)
        base = cand.size()
        ratios = np.array([cand.size(1.0 + e) / base for e in etas])
        envelope = 1.0 + c_reg * d * np.abs(etas)
        ok = bool(
            (ratios <= envelope + 1e-12).all()
            and (ratios >= 1.0 / envelope - 1e-12).all()
        )
        report = RegularityReport(
            lam=lam,
            dimension=d,
            c_reg=c_reg,
            etas=tuple(float(e) for e in etas),
            ratios=tuple(float(r) for r in ratios),
            passed=ok,
        )
        if ok:
            return cand, report
        last_report = report
    raise RegularitySearchError(
        f"no regular dilate in [1/2, 1) for rank-{b.rank} Bohr set "
        f"(last report: lam={last_report.lam}, d={last_report.dimension})"
    )


@dataclass(frozen=True)
class SizeReport:
    size: int
    lower_bound: float
    passed: bool


def size_lower_bound(b: BohrSet, c0: float = 4.0) -> SizeReport:
    """Soft check of |B| >= exp(-c0 rank) prod(delta/4) |G|."""
    prod = 1.0
    for d in b.effective_widths():
        prod *= d / 4.0
    bound = math.exp(-c0 * b.rank) * prod * b.group.order
    size = b.size()
    return SizeReport(size=size, lower_bound=bound, passed=size >= bound)
