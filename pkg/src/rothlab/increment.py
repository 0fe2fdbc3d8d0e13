"""Density-increment engines on Bohr sets, with machine-checkable certificates.

The operations in this module drive a set toward one of four recorded
outcomes: an explicit three-term progression count ("many_progressions"),
a translate of a Bohr set fully inside the set ("density_cap"), a collapse
of the ambient scale ("scale_degenerate"), or an exhausted iteration budget
("budget_exhausted").  Every inequality a certificate records is recomputed
from scratch before it is written; a claimed bound that fails to verify is a
fatal error, never a warning.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .bohr import (
    BohrSet,
    RegularityReport,
    RegularitySearchError,
    dimension_estimate,
    find_regular_dilate,
    meet,
)
from .groups import (
    Group,
    GroupMeasure,
    GroupSubset,
    convolve_measures,
    fourier,
    measure_fourier,
)
from .progressions import MIDPOINT, pattern_pair_count
from .riesz import (
    DissociatedSelection,
    PreconditionError,
    RetryBudgetError,
    RieszProduct,
    greedy_dissociated_subset,
    riesz_block_dichotomy,
    riesz_values,
)
from .spectrum import GreedySelection, dyadic_shells, greedy_orthogonal_subset, large_spectrum

__all__ = [
    "AnnihilationError",
    "AnnihilationReport",
    "DichotomyOutcome",
    "EnergyIncrement",
    "EngineConfig",
    "EntryCheckError",
    "IncrementCertificate",
    "IncrementError",
    "ReplayReport",
    "RieszIncrement",
    "VerificationError",
    "annihilate_spectrum",
    "energy_to_density",
    "progression_dichotomy",
    "replay_certificate",
    "riesz_to_density",
    "roth_engine_energy",
    "roth_engine_main",
]

CERTIFICATE_SCHEMA = "rothlab.certificate/1"

# relative slack on inequalities verified at emission / at replay
_TOL = 1e-12
_REPLAY_TOL = 1e-9
_FLAT_TOL = 1e-9


class IncrementError(RuntimeError):
    """Base class for engine failures."""


class EntryCheckError(IncrementError):
    """A named precondition of an operation does not hold."""

    def __init__(self, name: str, message: str) -> None:
        super().__init__(f"{name}: {message}")
        self.name = name


class VerificationError(IncrementError):
    """A claimed inequality failed when recomputed; always fatal."""


class AnnihilationError(IncrementError):
    """No dilation scale passed the pointwise annihilation check."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class EngineConfig:
    """All engine constants in one place.

    The two gain floors are derived, not free: with S = c_energy * c_dichotomy
    the translated-intersection branch loses a factor (1 - 3g) and the energy
    route then multiplies by at least (1 + c_energy * K).  The energy engine
    guarantees K >= c_dichotomy and needs S(1 - 3g) >= 4g, met by g = S/8; the
    main engine may split the concentrated mass in half before annihilating,
    so its guaranteed constant is S/2 and the same algebra forces g = S/16.
    """

    c_dichotomy: float = 1.0 / 64.0
    c_energy: float = 1.0 / 16.0
    rho_dichotomy: float = 0.125
    rho_energy: float = 8.0
    c_main_eps: float = 0.25
    c_trim: float = 0.125
    c_orth: float = 0.125
    riesz_c_low: float = 4.0
    riesz_c_high: float = 0.125
    annihilate_mode: str = "orthogonal"
    annihilate_eta: float = 1.0
    annihilate_k_cap: int = 64
    scale_bits: int = 20
    step_budget: int = 32
    density_cap: float = 1.0
    theta_ratio: float = 2.0
    order_cap: int = 1 << 20
    c_reg: float = 16.0

    @property
    def gain_energy(self) -> float:
        return self.c_energy * self.c_dichotomy / 8.0

    @property
    def gain_main(self) -> float:
        return self.c_energy * self.c_dichotomy / 16.0

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, data: dict) -> "EngineConfig":
        return cls(**data)


DEFAULT_CONFIG = EngineConfig()


# ---------------------------------------------------------------------------
# small shared helpers


def _conv_mu(group: Group, values: np.ndarray, mu: GroupMeasure) -> np.ndarray:
    """(f * mu)(x) = sum_y f(x - y) mu({y}), real part."""
    shape = group.factors
    F = np.fft.fftn(np.asarray(values, dtype=np.float64).reshape(shape))
    M = np.fft.fftn(mu.mass.reshape(shape))
    return np.fft.ifftn(F * M).real.ravel()


def _require(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise EntryCheckError(name, message)


def _verify(name: str, lhs: float, rhs: float) -> dict:
    """Check lhs >= rhs up to relative slack and return the recorded form."""
    slack = _TOL * max(1.0, abs(lhs), abs(rhs))
    if not lhs >= rhs - slack:
        raise VerificationError(f"{name}: {lhs!r} < {rhs!r}")
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs)}


def _exact_translate_density(
    set_a: GroupSubset, x: int, members: np.ndarray
) -> tuple[float, int]:
    """|(x - A) cap B| / |B| by direct membership counting."""
    hits = int(set_a.mask[set_a.group.sub(int(x), members)].sum())
    return hits / members.size, hits


def _sup_density(set_a: GroupSubset, b: BohrSet) -> tuple[float, int, np.ndarray]:
    """max_x (1_A * beta_B)(x); argmax from the transform, value recounted."""
    conv = _conv_mu(set_a.group, set_a.mask.astype(np.float64), b.beta())
    x = int(np.argmax(conv))
    members = b.members().indices()
    value, _ = _exact_translate_density(set_a, x, members)
    if abs(value - float(conv[x])) > 1e-7:
        raise VerificationError(
            f"transform and direct count disagree at {x}: {conv[x]} vs {value}"
        )
    return value, x, members


def _flat_deviation(group: Group, chars: Sequence[int], members: np.ndarray) -> float:
    worst = 0.0
    for a in chars:
        col = group.character_column(int(a))[members]
        worst = max(worst, float(np.abs(1.0 - col).max()))
    return worst


def _bohr_json(b: BohrSet) -> dict:
    return {
        "rank": b.rank,
        "size": int(b.size()),
        "dimension": float(dimension_estimate(b)),
        "frequencies": b.frequency_coords(),
        "widths": [float(d) for d in b.effective_widths()],
    }


def _centered_power(ambient_mask: np.ndarray, set_a: GroupSubset, alpha: float) -> np.ndarray:
    """|fhat|^2 for f = (1_A - alpha) 1_B, in the 1/n-normalized transform."""
    f = (set_a.mask.astype(np.float64) - alpha) * ambient_mask
    return np.abs(fourier(set_a.group, f)) ** 2


def _minus_two(group: Group) -> np.ndarray:
    return group.scale(-2, np.arange(group.order, dtype=np.int64))


def _restrict_mass(
    power: np.ndarray, weights: np.ndarray | None, minus2: np.ndarray, chars: Sequence[int]
) -> float:
    sel = np.zeros(power.size, dtype=bool)
    sel[np.asarray(list(chars), dtype=np.int64)] = True
    picked = sel[minus2]
    if weights is None:
        return float(power[picked].sum())
    return float((power[picked] * weights[minus2][picked]).sum())


# ---------------------------------------------------------------------------
# dichotomy


@dataclass(frozen=True)
class DichotomyOutcome:
    """Either many progressions or concentrated centered mass; never neither."""

    case: str
    alpha: float
    alpha_prime: float
    rho: float
    count: int = 0
    nontrivial: int = 0
    pair_lhs: int = 0
    pair_rhs: int = 0
    triple: tuple[int, int, int] | None = None
    spectrum: tuple[int, ...] = ()
    weighted_mass: float = 0.0
    mass_threshold: float = 0.0
    unweighted_mass: float = 0.0
    kappa: float = 0.0


def _find_midpoint_triple(
    group: Group, set_a: GroupSubset, set_mid: GroupSubset
) -> tuple[int, int, int] | None:
    """First (m - y, m, m + y) with y != 0, ends in A and middle in the mid set."""
    mids = set_mid.indices()
    if mids.size == 0:
        return None
    for y in range(1, group.order):
        ok = set_a.mask[group.sub(mids, y)] & set_a.mask[group.add(mids, y)]
        if ok.any():
            m = int(mids[int(np.argmax(ok))])
            return (int(group.sub(m, y)), m, int(group.add(m, y)))
    return None


def progression_dichotomy(
    ambient: BohrSet,
    inner: BohrSet,
    set_a: GroupSubset,
    set_a_prime: GroupSubset,
    config: EngineConfig = DEFAULT_CONFIG,
) -> DichotomyOutcome:
    """Count midpoint patterns (ends in A, middle in A') or locate their lack.

    With A inside the ambient Bohr set B and A' inside the stated dilate,
    either the exact pattern count satisfies 2 count |B| >= |A|^2 |A'|, or
    the centered transform of A concentrates on the large spectrum of A':

        sum over {-2 c in Spec} |fhat(c)|^2 |mhat(-2c)|
            >= c_dichotomy alpha^2 alpha' mu(B).

    The second bound is forced by exact counting once the entry checks pass
    (the annulus check replaces any appeal to regularity estimates), so a
    verification failure here means a genuine bug, and raising is correct.
    """
    group = ambient.group
    _require(group == inner.group == set_a.group == set_a_prime.group,
             "group_mismatch", "all arguments must share one group")
    _require(group.is_odd, "odd_order", f"group order {group.order} is even")
    _require(group.order <= config.order_cap, "order_cap",
             f"order {group.order} exceeds cap {config.order_cap}")
    _require(inner.frequencies == ambient.frequencies
             and inner.widths == ambient.widths
             and inner.scale <= ambient.scale,
             "inner_dilate", "inner set must be a dilate of the ambient set")

    amb_mask = ambient.member_mask()
    inn_mask = inner.member_mask()
    _require(bool(np.all(amb_mask[set_a.indices()])), "containment",
             "A is not contained in the ambient Bohr set")
    _require(bool(np.all(inn_mask[set_a_prime.indices()])), "containment",
             "A' is not contained in the inner Bohr set")

    size_b = int(amb_mask.sum())
    size_inner = int(inn_mask.sum())
    card_a = set_a.cardinality
    card_ap = set_a_prime.cardinality
    _require(card_a > 0 and card_ap > 0, "positive_density", "A and A' must be nonempty")

    alpha = card_a / size_b
    alpha_p = card_ap / size_inner
    rho = inner.scale / ambient.scale
    dim = dimension_estimate(ambient)
    # rank 0 means every dilate is the whole group: the guard bound alpha/dim
    # is infinite and the annulus is empty, so only positive rank is checked
    if ambient.rank > 0:
        _require(rho <= config.rho_dichotomy * alpha / max(dim, 1.0) * (1 + 1e-9),
                 "rho_guard",
                 f"rho={rho} exceeds {config.rho_dichotomy} * alpha / dim")
        # exact annulus control: |B_{1-2 rho}| >= (1 - alpha/12) |B| keeps the
        # boundary error below half of the structured count, with no constants
        # borrowed from regularity
        core = int(ambient.member_mask(1.0 - 2.0 * rho).sum())
        _require(core >= (1.0 - alpha / 12.0) * size_b, "annulus",
                 f"annulus at 1-2rho holds {size_b - core} of {size_b} points")

    count = pattern_pair_count(group, (set_a, set_a_prime, set_a), MIDPOINT)
    pair_lhs = 2 * count * size_b
    pair_rhs = card_a * card_a * card_ap
    if pair_lhs >= pair_rhs:
        trivial = int(np.sum(set_a.mask & set_a_prime.mask))
        nontrivial = count - trivial
        triple = None
        if nontrivial > 0:
            triple = _find_midpoint_triple(group, set_a, set_a_prime)
            if triple is None:
                raise VerificationError("positive nontrivial count but no witness found")
        return DichotomyOutcome(
            case="many_progressions",
            alpha=alpha, alpha_prime=alpha_p, rho=rho,
            count=count, nontrivial=nontrivial,
            pair_lhs=pair_lhs, pair_rhs=pair_rhs, triple=triple,
        )

    beta_inner = inner.beta()
    spec = large_spectrum(group, set_a_prime.mask.astype(np.float64), beta_inner,
                          config.c_dichotomy * alpha)
    power = _centered_power(amb_mask, set_a, alpha)
    mhat = np.abs(measure_fourier(group, set_a_prime.mask, beta_inner))
    minus2 = _minus_two(group)
    weighted = _restrict_mass(power, mhat, minus2, spec.char_indices)
    unweighted = _restrict_mass(power, None, minus2, spec.char_indices)
    mu_b = size_b / group.order
    threshold = config.c_dichotomy * alpha * alpha * alpha_p * mu_b
    _verify("concentrated_mass", weighted, threshold)
    kappa = unweighted / (alpha * alpha * mu_b)
    return DichotomyOutcome(
        case="mass_concentration",
        alpha=alpha, alpha_prime=alpha_p, rho=rho,
        count=count, pair_lhs=pair_lhs, pair_rhs=pair_rhs,
        spectrum=tuple(int(a) for a in spec.char_indices),
        weighted_mass=weighted, mass_threshold=threshold,
        unweighted_mass=unweighted, kappa=kappa,
    )


# ---------------------------------------------------------------------------
# energy increment


@dataclass(frozen=True)
class EnergyIncrement:
    bohr_out: BohrSet
    witness_index: int
    witness_density: float
    required_density: float
    kappa: float
    entry_mass: float
    entry_threshold: float
    regularity: RegularityReport


def energy_to_density(
    ambient: BohrSet,
    set_a: GroupSubset,
    chars: Sequence[int],
    inner: BohrSet,
    kappa: float,
    rho: float,
    config: EngineConfig = DEFAULT_CONFIG,
) -> EnergyIncrement:
    """Convert concentrated centered mass on flat characters into density.

    Requires the mass bound sum over {-2 c in chars} |fhat(c)|^2 >=
    kappa alpha^2 mu(B), pointwise flatness |1 - c(x)| <= 1/2 on the inner
    set for every listed character, and the scale guard.  Builds the image
    of the halved inner set under x -> -2x, regularizes it, and certifies a
    translate of density at least alpha (1 + c_energy kappa).
    """
    group = ambient.group
    _require(group == inner.group == set_a.group, "group_mismatch",
             "all arguments must share one group")
    _require(group.is_odd, "odd_order", f"group order {group.order} is even")
    _require(group.order <= config.order_cap, "order_cap",
             f"order {group.order} exceeds cap {config.order_cap}")
    _require(kappa > 0, "positive_energy", f"kappa={kappa} must be positive")
    _require(0 < rho <= 1, "rho_range", f"rho={rho} outside (0, 1]")

    amb_mask = ambient.member_mask()
    _require(bool(np.all(amb_mask[set_a.indices()])), "containment",
             "A is not contained in the ambient Bohr set")
    size_b = int(amb_mask.sum())
    card_a = set_a.cardinality
    _require(card_a > 0, "positive_density", "A must be nonempty")
    alpha = card_a / size_b

    inner_members = inner.members().indices()
    rho_mask = ambient.member_mask(rho * (1 + 1e-9))
    _require(bool(np.all(rho_mask[inner_members])), "inner_containment",
             "inner set is not contained in the stated dilate of the ambient set")
    dim = dimension_estimate(ambient)
    # rank-0 ambient sets have no boundary to control; see progression_dichotomy
    _require(ambient.rank == 0
             or rho <= config.rho_energy * alpha * kappa / max(dim, 1.0) * (1 + 1e-9),
             "rho_guard", f"rho={rho} exceeds {config.rho_energy} * alpha kappa / dim")

    char_list = sorted({int(a) for a in chars})
    deviation = _flat_deviation(group, char_list, inner_members)
    _require(deviation <= 0.5 + _FLAT_TOL, "flatness",
             f"max |1 - c(x)| = {deviation} on the inner set exceeds 1/2")

    power = _centered_power(amb_mask, set_a, alpha)
    mass = _restrict_mass(power, None, _minus_two(group), char_list) if char_list else 0.0
    mu_b = size_b / group.order
    entry_threshold = kappa * alpha * alpha * mu_b
    _require(mass >= entry_threshold * (1 - 1e-9), "entry_mass",
             f"restricted mass {mass} below kappa alpha^2 mu(B) = {entry_threshold}")

    image = inner.dilate(0.5).scalar_image(-2)
    bohr_out, reg = find_regular_dilate(image, config.c_reg)
    value, x_star, _members = _sup_density(set_a, bohr_out)
    required = alpha * (1.0 + config.c_energy * kappa)
    _verify("energy_witness", value, required)
    return EnergyIncrement(
        bohr_out=bohr_out, witness_index=x_star, witness_density=value,
        required_density=required, kappa=kappa,
        entry_mass=mass, entry_threshold=entry_threshold, regularity=reg,
    )


# ---------------------------------------------------------------------------
# correlation increment


@dataclass(frozen=True)
class RieszIncrement:
    bohr_out: BohrSet
    witness_index: int
    witness_density: float
    required_density: float
    hypothesis_lhs: float
    hypothesis_rhs: float
    rho_prime: float
    regularity: RegularityReport


def riesz_to_density(
    ambient: BohrSet,
    rho: float,
    set_a: GroupSubset,
    lam_indices: Sequence[int],
    omega: Sequence[complex],
    eps: float,
    config: EngineConfig = DEFAULT_CONFIG,
    mu: GroupMeasure | None = None,
) -> RieszIncrement:
    """Convert correlation with a Riesz product into a density increment.

    Hypothesis: <1_A, p> over the ambient measure >= alpha (1 + eps) times
    the mu-integral of the all-ones product on the same frequencies, with A
    kept away from the boundary (A inside the (1 - 3 rho)-dilate).  Meets the
    frequency Bohr set at a small scale and certifies a translate of density
    at least alpha (1 + eps/2).
    """
    group = ambient.group
    _require(group == set_a.group, "group_mismatch", "arguments share one group")
    _require(group.order <= config.order_cap, "order_cap",
             f"order {group.order} exceeds cap {config.order_cap}")
    _require(eps > 0, "eps_positive", f"eps={eps} must be positive")
    _require(0 < rho < 1.0 / 3.0, "rho_range", f"rho={rho} outside (0, 1/3)")
    lams = [int(a) for a in lam_indices]
    om = [complex(w) for w in omega]
    _require(len(lams) == len(om), "phase_shape", "one phase per frequency")

    amb_mask = ambient.member_mask()
    _require(bool(np.all(amb_mask[set_a.indices()])), "containment",
             "A is not contained in the ambient Bohr set")
    core_mask = ambient.member_mask(1.0 - 3.0 * rho)
    _require(bool(np.all(core_mask[set_a.indices()])), "boundary",
             "A must avoid the boundary annulus at scale 1 - 3 rho")
    size_b = int(amb_mask.sum())
    card_a = set_a.cardinality
    _require(card_a > 0, "positive_density", "A must be nonempty")
    alpha = card_a / size_b

    if mu is None:
        inner_beta = ambient.dilate(rho).beta()
        mu = convolve_measures(inner_beta, inner_beta)
    beta = ambient.beta()
    p = riesz_values(RieszProduct(group, tuple(lams), tuple(om)))
    p_plain = riesz_values(RieszProduct.plain(group, tuple(lams)))
    lhs = float((set_a.mask * p) @ beta.mass)
    rhs = alpha * (1.0 + eps) * float(p_plain @ mu.mass)
    _require(lhs >= rhs * (1 - 1e-9), "hypothesis",
             f"correlation {lhs} below required {rhs}")

    k = len(lams)
    rho_prime = min(0.5, eps * alpha / (2.0 * max(k, 1)))
    # the small scale applies to the new frequencies only, not to the rho-dilate
    candidate = meet(
        ambient.dilate(rho),
        BohrSet(group, tuple(lams), (1.0,) * k).dilate(rho_prime),
    ) if k else ambient.dilate(rho)
    bohr_out, reg = find_regular_dilate(candidate, config.c_reg)
    if bohr_out.rank > ambient.rank + k:
        raise VerificationError("output rank exceeds the ambient rank plus k")
    value, x_star, _members = _sup_density(set_a, bohr_out)
    required = alpha * (1.0 + eps / 2.0)
    _verify("riesz_witness", value, required)
    return RieszIncrement(
        bohr_out=bohr_out, witness_index=x_star, witness_density=value,
        required_density=required, hypothesis_lhs=lhs, hypothesis_rhs=rhs,
        rho_prime=rho_prime, regularity=reg,
    )


# ---------------------------------------------------------------------------
# spectrum annihilation


@dataclass(frozen=True)
class AnnihilationReport:
    bohr_out: BohrSet
    mode: str
    extracted: tuple[int, ...]
    scale: float
    max_deviation: float
    rank_in: int
    rank_out: int
    selection: GreedySelection | DissociatedSelection | None
    regularity: RegularityReport | None


def annihilate_spectrum(
    ambient: BohrSet,
    delta: Sequence[int],
    mode: str = "orthogonal",
    eta: float = 1.0,
    config: EngineConfig = DEFAULT_CONFIG,
) -> AnnihilationReport:
    """Find a sub-Bohr set on which every character of delta is nearly 1.

    Greedily extracts a structured core from delta (near-orthogonal or
    dissociated, by mode), meets the ambient set with a Bohr set on the
    extracted frequencies, then walks a descending dyadic scale grid until
    the pointwise check max |1 - c(x)| <= 1/2 holds over all of delta.
    The output rank never exceeds the ambient rank plus the core size.
    """
    group = ambient.group
    _require(group.order <= config.order_cap, "order_cap",
             f"order {group.order} exceeds cap {config.order_cap}")
    delta_list = sorted({int(a) % group.order for a in delta})
    if not delta_list:
        return AnnihilationReport(
            bohr_out=ambient, mode=mode, extracted=(), scale=1.0,
            max_deviation=0.0, rank_in=ambient.rank, rank_out=ambient.rank,
            selection=None, regularity=None,
        )

    if mode == "orthogonal":
        selection = greedy_orthogonal_subset(
            group, delta_list, ambient.beta(), eta, k_cap=config.annihilate_k_cap)
    elif mode == "dissociated":
        beta = ambient.beta()
        selection = greedy_dissociated_subset(
            group, delta_list, convolve_measures(beta, beta), eta,
            k_cap=config.annihilate_k_cap)
    else:
        raise EntryCheckError("mode", f"unknown annihilation mode {mode!r}")

    lam = tuple(int(a) for a in selection.selected)
    candidate = meet(ambient, BohrSet(group, lam, (2.0,) * len(lam))) if lam else ambient

    best_dev = math.inf
    for j in range(config.scale_bits):
        s = 2.0 ** (-(j + 1))
        try:
            bohr_out, reg = find_regular_dilate(candidate.dilate(s), config.c_reg)
        except RegularitySearchError:
            continue
        members = bohr_out.members().indices()
        dev = _flat_deviation(group, delta_list, members)
        best_dev = min(best_dev, dev)
        if dev <= 0.5 + _FLAT_TOL:
            if bohr_out.rank > ambient.rank + len(lam):
                raise VerificationError("annihilation output rank exceeds its budget")
            return AnnihilationReport(
                bohr_out=bohr_out, mode=mode, extracted=lam, scale=s,
                max_deviation=dev, rank_in=ambient.rank, rank_out=bohr_out.rank,
                selection=selection, regularity=reg,
            )
    raise AnnihilationError(
        f"no dyadic scale down to 2^-{config.scale_bits} flattened "
        f"{len(delta_list)} characters (best deviation {best_dev})")


# ---------------------------------------------------------------------------
# certificates


@dataclass
class IncrementCertificate:
    """Deterministic, timestamp-free record of one engine run."""

    engine: str
    group: Group
    bohr: BohrSet
    set_indices: tuple[int, ...]
    config: EngineConfig
    seed: int
    steps: list[dict]
    outcome: dict
    schema: str = CERTIFICATE_SCHEMA

    def to_json(self) -> dict:
        return {
            "schema": self.schema,
            "engine": self.engine,
            "group": {"invariant_factors": list(self.group.factors)},
            "bohr": self.bohr.to_json(),
            "set": [int(i) for i in self.set_indices],
            "config": self.config.to_json(),
            "seed": int(self.seed),
            "steps": self.steps,
            "outcome": self.outcome,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, data: dict) -> "IncrementCertificate":
        if data.get("schema") != CERTIFICATE_SCHEMA:
            raise VerificationError(f"unknown certificate schema {data.get('schema')!r}")
        group = Group.from_json(data["group"])
        return cls(
            engine=str(data["engine"]),
            group=group,
            bohr=BohrSet.from_json(data["bohr"]),
            set_indices=tuple(int(i) for i in data["set"]),
            config=EngineConfig.from_json(data["config"]),
            seed=int(data["seed"]),
            steps=list(data["steps"]),
            outcome=dict(data["outcome"]),
        )


def _make_step(
    kind: str,
    index: int,
    bohr_in: BohrSet,
    bohr_out: BohrSet,
    alpha_before: float,
    alpha_after: float,
    inequalities: list[dict],
    data: dict,
) -> dict:
    if not 0.0 <= alpha_before <= 1.0 + _TOL or not 0.0 <= alpha_after <= 1.0 + _TOL:
        raise VerificationError(
            f"density outside [0, 1]: {alpha_before}, {alpha_after}")
    if alpha_after < alpha_before - _TOL:
        raise VerificationError(
            f"density decreased across a step: {alpha_before} -> {alpha_after}")
    return {
        "kind": kind,
        "index": int(index),
        "bohr_in": _bohr_json(bohr_in),
        "bohr_out": _bohr_json(bohr_out),
        "alpha_before": float(alpha_before),
        "alpha_after": float(alpha_after),
        "inequalities": inequalities,
        "data": data,
    }


# ---------------------------------------------------------------------------
# engine internals


def _density_cap_outcome(
    group: Group, set_a: GroupSubset, b_cur: BohrSet, alpha: float, x0: int, index: int
) -> dict:
    """Terminal outcome once the density reaches the cap.

    At the default cap of 1 the witness translate of the Bohr set lies fully
    inside A, so its midpoint patterns are genuine progressions in A and the
    local count is exact. A cap configured below 1 may fire without full
    containment; then only the witness is reported.
    """
    members = b_cur.members()
    idx = members.indices()
    if idx.size < 3:
        return {
            "kind": "scale_degenerate",
            "reason": "bohr_trivial",
            "alpha": float(alpha),
            "step_index": int(index),
        }
    if not bool(np.all(set_a.mask[group.sub(int(x0), idx)])):
        return {
            "kind": "density_cap",
            "alpha": float(alpha),
            "witness": int(x0),
            "step_index": int(index),
        }
    count = pattern_pair_count(group, (members, members, members), MIDPOINT)
    local = _find_midpoint_triple(group, members, members)
    if local is None:
        raise VerificationError("symmetric set of size >= 3 lacks a midpoint triple")
    triple = _map_triple_back(group, set_a, int(x0), local)
    return {
        "kind": "many_progressions",
        "reason": "density_cap",
        "count": int(count),
        "nontrivial": int(count - idx.size),
        "witness": int(x0),
        "triple": list(triple),
        "step_index": int(index),
    }


def _map_triple_back(
    group: Group, set_a: GroupSubset, x_prime: int, triple: tuple[int, int, int]
) -> tuple[int, int, int]:
    """Translated midpoint pattern (m-y, m, m+y) back to a progression in A."""
    p, m, q = triple
    a0 = int(group.sub(x_prime, q))
    a1 = int(group.sub(x_prime, m))
    a2 = int(group.sub(x_prime, p))
    d = int(group.sub(a1, a0))
    if d == 0:
        raise VerificationError("mapped progression has zero difference")
    if int(group.add(a1, d)) != a2:
        raise VerificationError("mapped triple is not an arithmetic progression")
    if not (set_a.mask[a0] and set_a.mask[a1] and set_a.mask[a2]):
        raise VerificationError("mapped progression leaves A")
    return (a0, a1, a2)


def _progressions_outcome(
    group: Group,
    set_a: GroupSubset,
    x_prime: int,
    dich: DichotomyOutcome,
    index: int,
) -> dict:
    out = {
        "kind": "many_progressions",
        "count": int(dich.count),
        "nontrivial": int(dich.nontrivial),
        "pair_lhs": int(dich.pair_lhs),
        "pair_rhs": int(dich.pair_rhs),
        "step_index": int(index),
        "triple": None,
    }
    if dich.nontrivial > 0 and dich.triple is not None:
        out["triple"] = list(_map_triple_back(group, set_a, x_prime, dich.triple))
    return out


def _pick_regular_scale(b: BohrSet, target: float, config: EngineConfig):
    """Regular dilate of b near the target ratio (never above it)."""
    t = min(target, 0.5)
    inner, reg = find_regular_dilate(b.dilate(t), config.c_reg)
    return inner, reg, inner.scale / b.scale


def _phi_image(lam_subset: Sequence[int], selection: GreedySelection) -> list[int]:
    """The subset plus every rejected character linked into it."""
    inside = {int(a) for a in lam_subset}
    out = sorted(inside | {
        int(r.char_index) for r in selection.rejections if int(r.link) in inside
    })
    return out


def _halving_prune(
    lam: list[int], weight_of: dict[int, float], selection: GreedySelection
) -> list[int]:
    """Strip light halves while the canonical witness stays light.

    Whether *every* large subset is heavy is never asserted; downstream
    energy steps re-measure their own entry mass on the realized image.
    """
    k = len(lam)
    if k <= 1:
        return list(lam)
    total = sum(weight_of.get(a, 0.0) for a in _phi_image(lam, selection))
    cur = list(lam)
    for _ in range(max(1, int(math.log2(max(k, 2))) + 1)):
        if len(cur) <= 1:
            break
        half = len(cur) // 2
        lightest = sorted(cur, key=lambda a: (weight_of.get(a, 0.0), a))[:half]
        w_light = sum(weight_of.get(a, 0.0) for a in _phi_image(lightest, selection))
        if w_light <= total / math.log(2 * k) and half >= 1:
            cur = [a for a in cur if a not in set(lightest)]
        else:
            break
    return cur


def _scale_degenerate(reason: str, alpha: float, index: int, extra: dict | None = None) -> dict:
    out = {
        "kind": "scale_degenerate",
        "reason": reason,
        "alpha": float(alpha),
        "step_index": int(index),
    }
    if extra:
        out.update(extra)
    return out


def _attempt_iteration(
    mode: str,
    group: Group,
    set_a: GroupSubset,
    b_cur: BohrSet,
    alpha_i: float,
    gain: float,
    config: EngineConfig,
    rng: np.random.Generator,
    index: int,
    steps: list[dict],
):
    """Run one iteration, halving the inner scale while the exact annulus or
    guard checks reject it; partial step records from failed attempts are
    discarded so the certificate only keeps the attempt that went through."""
    dim = max(dimension_estimate(b_cur), 1.0)
    # half the guard bound, leaving headroom for the regularity search
    b_rho, _reg1, _r1 = _pick_regular_scale(
        b_cur, 0.5 * config.rho_dichotomy * alpha_i / dim, config)
    mem_rho = b_rho.members().indices()
    dim_rho = max(dimension_estimate(b_rho), 1.0)

    t2 = 0.5 * config.rho_dichotomy * alpha_i / dim_rho
    for _attempt in range(20):
        mark = len(steps)
        try:
            return _engine_iteration(
                mode, group, set_a, b_cur, b_rho, mem_rho, t2,
                alpha_i, gain, config, rng, index, steps)
        except EntryCheckError as exc:
            del steps[mark:]
            if exc.name in ("annulus", "rho_guard"):
                t2 /= 2.0
                continue
            raise
    return "outcome", _scale_degenerate("annulus", alpha_i, index)


def _run_energy_loop(
    bohr0: BohrSet,
    set_a: GroupSubset,
    config: EngineConfig,
    seed: int,
    steps: list[dict],
    start_index: int,
    budget: int,
    rng: np.random.Generator | None = None,
) -> dict:
    group = bohr0.group
    _require(group.is_odd, "odd_order", f"group order {group.order} is even")
    _require(group.order <= config.order_cap, "order_cap",
             f"order {group.order} exceeds cap {config.order_cap}")
    _require(set_a.cardinality > 0, "positive_density", "the set is empty")
    if rng is None:
        rng = np.random.default_rng(seed)

    gain = config.gain_energy
    b_cur = bohr0
    index = start_index

    while index < start_index + budget:
        alpha_i, x0, _ = _sup_density(set_a, b_cur)
        if alpha_i >= config.density_cap - _TOL:
            return _density_cap_outcome(group, set_a, b_cur, alpha_i, x0, index)
        status, payload = _attempt_iteration(
            "energy", group, set_a, b_cur, alpha_i, gain, config, rng, index, steps)
        if status == "outcome":
            return payload
        b_cur = payload
        index += 1

    alpha_f, _, _ = _sup_density(set_a, b_cur)
    return {
        "kind": "budget_exhausted",
        "alpha": float(alpha_f),
        "steps_taken": int(index - start_index),
        "step_index": int(index),
    }


def _engine_iteration(
    mode: str,
    group: Group,
    set_a: GroupSubset,
    b_cur: BohrSet,
    b_rho: BohrSet,
    mem_rho: np.ndarray,
    t2: float,
    alpha_i: float,
    gain: float,
    config: EngineConfig,
    rng: np.random.Generator,
    index: int,
    steps: list[dict],
):
    """One iteration: pick the inner scale, branch, and either emit a step
    (returning the next ambient set) or a terminal outcome."""
    b_rho2, _reg2, _r2 = _pick_regular_scale(b_rho, t2, config)
    mem_rho2 = b_rho2.members().indices()

    conv1 = _conv_mu(group, set_a.mask.astype(np.float64), b_rho.beta())
    conv2 = _conv_mu(group, set_a.mask.astype(np.float64), b_rho2.beta())
    x_prime = int(np.argmax(conv1 + conv2))
    a1, _h1 = _exact_translate_density(set_a, x_prime, mem_rho)
    a2, _h2 = _exact_translate_density(set_a, x_prime, mem_rho2)

    if a1 + a2 < 2.0 * alpha_i * (1.0 - gain):
        return "outcome", _scale_degenerate(
            "averaging", alpha_i, index,
            {"lhs": float(a1 + a2), "rhs": float(2.0 * alpha_i * (1.0 - gain))})

    for b_next, value, branch in ((b_rho, a1, "rho"), (b_rho2, a2, "rho_rho_prime")):
        if value >= alpha_i * (1.0 + gain):
            alpha_next, _, _ = _sup_density(set_a, b_next)
            ineqs = [_verify("direct_gain", alpha_next, alpha_i * (1.0 + gain))]
            steps.append(_make_step(
                "translate", index, b_cur, b_next, alpha_i, alpha_next, ineqs,
                {"branch": branch, "witness": x_prime, "witness_density": float(value)}))
            return "next", b_next

    mask_shift = set_a.mask[group.sub(int(x_prime), np.arange(group.order, dtype=np.int64))]
    set_loc = GroupSubset(group, mask_shift & b_rho.member_mask())
    set_loc_p = GroupSubset(group, mask_shift & b_rho2.member_mask())
    if set_loc.cardinality == 0 or set_loc_p.cardinality == 0:
        return "outcome", _scale_degenerate("empty_intersection", alpha_i, index)
    alpha_loc = set_loc.cardinality / mem_rho.size
    alpha_loc_p = set_loc_p.cardinality / mem_rho2.size
    floor_ineqs = [
        _verify("translate_floor", alpha_loc, alpha_i * (1.0 - 3.0 * gain)),
        _verify("translate_floor_inner", alpha_loc_p, alpha_i * (1.0 - 3.0 * gain)),
    ]

    if mode == "main":
        trimmed = _trim_inner_set(group, set_loc_p, b_rho2, alpha_loc_p, config)
        if trimmed is None:
            return "outcome", _scale_degenerate("trim", alpha_i, index)
        set_mid, b_trim, sigma_eff, trim_ineq = trimmed
        floor_ineqs.append(trim_ineq)
    else:
        set_mid, b_trim, sigma_eff = set_loc_p, b_rho2, 1.0
    alpha_mid = set_mid.cardinality / mem_rho2.size

    if not (alpha_loc <= config.theta_ratio * alpha_mid
            and alpha_mid <= config.theta_ratio * alpha_loc):
        return "outcome", _scale_degenerate(
            "theta", alpha_i, index,
            {"alpha_local": float(alpha_loc), "alpha_inner": float(alpha_mid)})

    dich = progression_dichotomy(b_rho, b_rho2, set_loc, set_mid, config)
    if dich.case == "many_progressions":
        steps.append(_make_step(
            "dichotomy", index, b_cur, b_rho, alpha_i, alpha_i,
            floor_ineqs + [_verify("pair_count", float(dich.pair_lhs), float(dich.pair_rhs))],
            {"witness": x_prime, "count": int(dich.count),
             "nontrivial": int(dich.nontrivial)}))
        return "outcome", _progressions_outcome(group, set_a, x_prime, dich, index)

    steps.append(_make_step(
        "dichotomy", index, b_cur, b_rho, alpha_i, alpha_i,
        floor_ineqs + [_verify("concentrated_mass", dich.weighted_mass, dich.mass_threshold)],
        {"witness": x_prime, "spectrum_size": len(dich.spectrum),
         "count": int(dich.count)}))

    if mode == "energy":
        return _energy_route(
            group, set_a, b_cur, b_rho, b_rho2, set_loc, alpha_i, alpha_loc,
            dich.spectrum, dich.kappa, gain, config, index, steps,
            route="dichotomy_mass", terminal=False, ann_ambient=b_rho2)
    return _main_route(
        group, set_a, b_cur, b_rho, b_rho2, b_trim, set_loc, set_mid,
        alpha_i, alpha_loc, alpha_mid, sigma_eff, dich, gain, config, rng,
        index, steps)


def _trim_inner_set(
    group: Group,
    set_loc_p: GroupSubset,
    b_rho2: BohrSet,
    alpha_loc_p: float,
    config: EngineConfig,
):
    """Shrink A' away from the inner boundary, keeping an exact density floor."""
    dim2 = max(dimension_estimate(b_rho2), 1.0)
    size2 = b_rho2.size()
    sigma = 0.5 * config.c_trim * alpha_loc_p ** 2 / dim2
    for _ in range(20):
        try:
            b_trim, _reg = find_regular_dilate(b_rho2.dilate(min(sigma, 0.5)), config.c_reg)
        except RegularitySearchError:
            sigma /= 2.0
            continue
        sigma_eff = b_trim.scale / b_rho2.scale
        core_mask = b_rho2.member_mask(1.0 - 3.0 * sigma_eff)
        core = int(core_mask.sum())
        if size2 - core <= alpha_loc_p ** 2 / 128.0 * size2:
            set_mid = GroupSubset(group, set_loc_p.mask & core_mask)
            if set_mid.cardinality == 0:
                return None
            alpha_mid = set_mid.cardinality / size2
            ineq = _verify("trim_floor", alpha_mid,
                           alpha_loc_p * (1.0 - alpha_loc_p / 128.0))
            return set_mid, b_trim, sigma_eff, ineq
        sigma /= 2.0
    return None


def _energy_route(
    group: Group,
    set_a: GroupSubset,
    b_cur: BohrSet,
    b_rho: BohrSet,
    b_rho2: BohrSet,
    set_loc: GroupSubset,
    alpha_i: float,
    alpha_loc: float,
    chars: Sequence[int],
    kappa: float,
    gain: float,
    config: EngineConfig,
    index: int,
    steps: list[dict],
    route: str,
    terminal: bool,
    ann_ambient: BohrSet,
    ann_mode: str | None = None,
):
    """Annihilate the characters, run the energy increment, record the step."""
    ann = annihilate_spectrum(
        ann_ambient, chars, ann_mode or config.annihilate_mode,
        config.annihilate_eta, config)
    steps.append(_make_step(
        "annihilate", index, ann_ambient, ann.bohr_out, alpha_i, alpha_i,
        [_verify("flatness", 0.5 + _FLAT_TOL, ann.max_deviation),
         _verify("rank_budget", float(ann.rank_in + len(ann.extracted)),
                 float(ann.rank_out))],
        {"mode": ann.mode, "extracted": len(ann.extracted),
         "delta_size": len(set(int(a) for a in chars)), "scale": float(ann.scale),
         "route": route}))

    rho_en = ann_ambient.scale / b_rho.scale
    energy = energy_to_density(
        b_rho, set_loc, chars, ann.bohr_out, kappa, rho_en, config)
    alpha_next, _, _ = _sup_density(set_a, energy.bohr_out)
    ineqs = [
        _verify("energy_witness", energy.witness_density, energy.required_density),
        _verify("lifted_witness", alpha_next, energy.witness_density),
    ]
    if terminal:
        ineqs.append(_verify("chain_monotone", alpha_next, alpha_i))
    else:
        ineqs.append(_verify("chain_gain", alpha_next, alpha_i * (1.0 + gain)))
    steps.append(_make_step(
        "energy", index, b_rho, energy.bohr_out, alpha_i, alpha_next, ineqs,
        {"kappa": float(kappa), "witness": int(energy.witness_index),
         "route": route, "terminal": bool(terminal)}))
    return "next", energy.bohr_out


def _main_route(
    group: Group,
    set_a: GroupSubset,
    b_cur: BohrSet,
    b_rho: BohrSet,
    b_rho2: BohrSet,
    b_trim: BohrSet,
    set_loc: GroupSubset,
    set_mid: GroupSubset,
    alpha_i: float,
    alpha_loc: float,
    alpha_mid: float,
    sigma_eff: float,
    dich: DichotomyOutcome,
    gain: float,
    config: EngineConfig,
    rng: np.random.Generator,
    index: int,
    steps: list[dict],
):
    """Route the concentrated mass: split at eps = c sqrt(alpha), then either
    annihilate the large coefficients directly, or extract a near-orthogonal
    core from the heaviest dyadic shell and run the block dichotomy."""
    amb_mask = b_rho.member_mask()
    power = _centered_power(amb_mask, set_loc, alpha_loc)
    minus2 = _minus_two(group)
    beta_inn = b_rho2.beta()
    mhat = np.abs(measure_fourier(group, set_mid.mask, beta_inn))
    mu_b = amb_mask.sum() / group.order

    def kappa_of(chars: Sequence[int]) -> float:
        unw = _restrict_mass(power, None, minus2, chars)
        return unw / (alpha_loc * alpha_loc * mu_b)

    def prefix_route():
        # heaviest characters until they carry half the concentrated mass;
        # the unweighted mass then forces kappa >= c_dichotomy / 2
        contrib = [(float(power[group.scale_inverse(-2, a)] * mhat[a]), int(a))
                   for a in dich.spectrum]
        contrib.sort(key=lambda t: (-t[0], t[1]))
        total = dich.weighted_mass
        acc, chosen = 0.0, []
        for w, a in contrib:
            chosen.append(a)
            acc += w
            if acc >= total / 2.0:
                break
        return chosen

    def guarded_route(chars, route, terminal, ann_mode=None, note=None):
        # the mass prefix is the unconditional fallback: its kappa floor of
        # c_dichotomy / 2 always clears the chain requirement
        mark = len(steps)
        try:
            status, b_next = _energy_route(
                group, set_a, b_cur, b_rho, b_rho2, set_loc, alpha_i, alpha_loc,
                chars, kappa_of(chars), gain, config, index, steps,
                route=route, terminal=terminal, ann_ambient=b_trim,
                ann_mode=ann_mode)
        except (VerificationError, EntryCheckError, AnnihilationError) as exc:
            if isinstance(exc, EntryCheckError) and exc.name in ("annulus", "rho_guard"):
                raise
            del steps[mark:]
            chosen = prefix_route()
            status, b_next = _energy_route(
                group, set_a, b_cur, b_rho, b_rho2, set_loc, alpha_i, alpha_loc,
                chosen, kappa_of(chosen), gain, config, index, steps,
                route="mass_prefix", terminal=False, ann_ambient=b_trim)
            return status, b_next
        if note:
            steps[-1]["data"].update(note)
        if terminal:
            steps[-1]["data"]["spawned"] = "energy"
            return "spawn", b_next
        return status, b_next

    eps_split = config.c_main_eps * math.sqrt(alpha_loc)
    large = [int(a) for a in dich.spectrum if mhat[a] >= eps_split * alpha_mid]
    m_large = _restrict_mass(power, mhat, minus2, large) if large else 0.0

    if large and m_large >= dich.weighted_mass / 2.0:
        return guarded_route(large, "spec_eps", terminal=False)

    shells = dyadic_shells(group, set_mid.mask.astype(np.float64), beta_inn,
                           config.c_dichotomy * alpha_loc)
    small_shells = [s for s in shells.shells if s.tau < eps_split and s.char_indices]
    if not small_shells:
        return guarded_route(prefix_route(), "mass_prefix", terminal=False)

    shell = max(small_shells,
                key=lambda s: (_restrict_mass(power, mhat, minus2, s.char_indices), s.tau))
    tau = shell.tau
    mu_sq = convolve_measures(b_trim.beta(), b_trim.beta())
    weight_of = {int(a): float(power[group.scale_inverse(-2, a)])
                 for a in shell.char_indices}
    selection = greedy_orthogonal_subset(
        group, list(shell.char_indices), mu_sq, config.c_orth * tau,
        weights=[weight_of[int(a)] for a in shell.char_indices])
    lam = _halving_prune(list(selection.selected), weight_of, selection)
    if not lam:
        return guarded_route(prefix_route(), "mass_prefix", terminal=False)

    k = len(lam)
    small_bound = (1.0 / tau) * alpha_loc ** (-2.0 / 3.0)
    note: dict = {}
    if k > small_bound:
        m_blocks = int(math.ceil(alpha_loc ** (-4.0 / 3.0)))
        lo = config.riesz_c_low * math.log(2.0 / tau)
        hi = config.riesz_c_high * min(tau * k, math.sqrt(m_blocks))
        if lo <= hi and int(math.ceil(lo)) >= 1:
            d = int(math.ceil(lo))
            try:
                block = riesz_block_dichotomy(
                    group, set_mid.mask.astype(np.float64), beta_inn, mu_sq,
                    lam, tau, m_blocks, d, rng,
                    c_low=config.riesz_c_low, c_high=config.riesz_c_high,
                    c_orth=config.c_orth)
            except (PreconditionError, RetryBudgetError) as exc:
                note = {"block_dichotomy": f"fell back: {exc}"}
                block = None
            if block is not None and block.case == "entropy_half":
                delta = _phi_image(block.residual, selection)
                return guarded_route(delta, "entropy_half", terminal=True,
                                     ann_mode="dissociated")
            if block is not None and block.case == "riesz_correlation":
                try:
                    inc = riesz_to_density(
                        b_rho2, sigma_eff, set_mid, block.lam3, block.omega3,
                        tau * d / 4.0, config, mu=mu_sq)
                    alpha_next, _, _ = _sup_density(set_a, inc.bohr_out)
                    if alpha_next >= alpha_i * (1.0 + gain):
                        steps.append(_make_step(
                            "riesz", index, b_rho2, inc.bohr_out, alpha_i, alpha_next,
                            [_verify("riesz_witness", inc.witness_density,
                                     inc.required_density),
                             _verify("chain_gain", alpha_next, alpha_i * (1.0 + gain))],
                            {"tau": float(tau), "d": int(d),
                             "frequencies": len(block.lam3)}))
                        return "next", inc.bohr_out
                    note = {"riesz_route": "gain below the chain floor, fell back"}
                except (EntryCheckError, VerificationError) as exc:
                    note = {"riesz_route": f"fell back: {exc}"}
        else:
            note = {"d_window_empty": True}

    # small spectrum (or any fallback): an averaging subset of the core
    take = max(1, int(1.0 / alpha_loc))
    lam_small = sorted(lam, key=lambda a: (-weight_of.get(a, 0.0), a))[:take]
    delta = _phi_image(lam_small, selection)
    return guarded_route(delta, "averaging_core", terminal=True, note=note)


# ---------------------------------------------------------------------------
# public engines


def roth_engine_energy(
    bohr: BohrSet,
    set_a: GroupSubset,
    config: EngineConfig = DEFAULT_CONFIG,
    seed: int = 0,
) -> IncrementCertificate:
    """Iterate the dichotomy-plus-energy increment until a terminal outcome."""
    steps: list[dict] = []
    outcome = _run_energy_loop(bohr, set_a, config, seed, steps, 0,
                               config.step_budget)
    return IncrementCertificate(
        engine="energy", group=bohr.group, bohr=bohr,
        set_indices=tuple(int(i) for i in sorted(set_a.indices())),
        config=config, seed=int(seed), steps=steps, outcome=outcome,
    )


def roth_engine_main(
    group: Group,
    set_a: GroupSubset,
    config: EngineConfig = DEFAULT_CONFIG,
    seed: int = 0,
) -> IncrementCertificate:
    """Full engine from the whole group, with shell and block-product routes.

    Terminal big-increment routes hand the improved Bohr set to the plain
    energy engine, whose steps are spliced onto the same certificate.
    """
    bohr0 = BohrSet(group, (), ())
    steps: list[dict] = []
    rng = np.random.default_rng(seed)
    outcome = _run_main_with_spawn(bohr0, set_a, config, seed, steps, rng)
    return IncrementCertificate(
        engine="main", group=group, bohr=bohr0,
        set_indices=tuple(int(i) for i in sorted(set_a.indices())),
        config=config, seed=int(seed), steps=steps, outcome=outcome,
    )


def _run_main_with_spawn(
    bohr0: BohrSet,
    set_a: GroupSubset,
    config: EngineConfig,
    seed: int,
    steps: list[dict],
    rng: np.random.Generator,
) -> dict:
    group = bohr0.group
    _require(group.is_odd, "odd_order", f"group order {group.order} is even")
    _require(group.order <= config.order_cap, "order_cap",
             f"order {group.order} exceeds cap {config.order_cap}")
    _require(set_a.cardinality > 0, "positive_density", "the set is empty")

    gain = config.gain_main
    b_cur = bohr0
    index = 0
    while index < config.step_budget:
        alpha_i, x0, _ = _sup_density(set_a, b_cur)
        if alpha_i >= config.density_cap - _TOL:
            return _density_cap_outcome(group, set_a, b_cur, alpha_i, x0, index)
        status, payload = _attempt_iteration(
            "main", group, set_a, b_cur, alpha_i, gain, config, rng, index, steps)
        if status == "outcome":
            return payload
        if status == "spawn":
            remaining = config.step_budget - (index + 1)
            if remaining <= 0:
                alpha_f, _, _ = _sup_density(set_a, payload)
                return {"kind": "budget_exhausted", "alpha": float(alpha_f),
                        "steps_taken": int(index + 1), "step_index": int(index + 1)}
            return _run_energy_loop(payload, set_a, config, seed, steps,
                                    index + 1, remaining, rng=rng)
        b_cur = payload
        index += 1

    alpha_f, _, _ = _sup_density(set_a, b_cur)
    return {"kind": "budget_exhausted", "alpha": float(alpha_f),
            "steps_taken": int(index), "step_index": int(index)}


# ---------------------------------------------------------------------------
# replay


@dataclass(frozen=True)
class ReplayReport:
    matched: bool
    reverified: bool
    detail: str | None

    @property
    def passed(self) -> bool:
        return self.matched and self.reverified


def _reverify_inequalities(cert: IncrementCertificate) -> str | None:
    for step in cert.steps:
        for ineq in step.get("inequalities", []):
            lhs, rhs = float(ineq["lhs"]), float(ineq["rhs"])
            slack = _REPLAY_TOL * max(1.0, abs(lhs), abs(rhs))
            if not lhs >= rhs - slack:
                return (f"step {step['index']} inequality {ineq['name']}: "
                        f"{lhs} < {rhs}")
        before, after = step["alpha_before"], step["alpha_after"]
        if after < before - _REPLAY_TOL or not 0.0 <= after <= 1.0 + _REPLAY_TOL:
            return f"step {step['index']} densities {before} -> {after}"
    return None


def replay_certificate(cert: IncrementCertificate | dict) -> ReplayReport:
    """Re-run the certified computation from its recorded inputs.

    The rerun must reproduce the certificate byte for byte (canonical JSON),
    and every recorded inequality must hold on re-reading.  Budget-exhausted
    outcomes replay like any other outcome.
    """
    if isinstance(cert, dict):
        cert = IncrementCertificate.from_json(cert)
    detail = _reverify_inequalities(cert)
    reverified = detail is None

    group = cert.group
    subset = GroupSubset.from_indices(group, list(cert.set_indices))
    if cert.engine == "energy":
        fresh = roth_engine_energy(cert.bohr, subset, cert.config, cert.seed)
    elif cert.engine == "main":
        fresh = roth_engine_main(group, subset, cert.config, cert.seed)
    else:
        return ReplayReport(False, reverified, f"unknown engine {cert.engine!r}")

    matched = fresh.dumps() == cert.dumps()
    if not matched and detail is None:
        detail = "rerun produced a different certificate"
    return ReplayReport(matched=matched, reverified=reverified, detail=detail)
