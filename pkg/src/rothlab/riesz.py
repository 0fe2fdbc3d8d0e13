"""Riesz products, dissociativity certificates, block decompositions, and
the Riesz-product correlation dichotomy.

The Riesz product of a frequency list Lambda with phases omega (|omega| <= 1)
is

    p_{omega, Lambda}(x) = prod_{lam in Lambda} (1 + Re(omega_lam lam(x))),

a nonnegative function. Its integral against a measure mu expands into
signed character sums; the dissociativity constant of Lambda w.r.t. mu is

    K(Lambda, mu) = sup_omega log integral p_{omega, Lambda} d mu  (>= 0).

For positive-definite mu the supremum is attained at omega = 1 (every
expansion term is then nonnegative and maximal), which gives an exact K;
otherwise a multi-start coordinate ascent produces a certified lower bound,
labeled as such. Alignment phases are omega_lam = c_lam / |c_lam| where
c_lam = (f dmu)^(lam), which maximizes the first-order correlation term
Re(omega_lam conj(c_lam)) = |c_lam|.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .groups import Group, GroupMeasure, is_positive_definite, measure_fourier
from .spectrum import orthogonality_constant

ASCENT_GUARD = 24
EXPANSION_GUARD = 12


class RieszError(ValueError):
    pass


class PreconditionError(RuntimeError):
    """A dichotomy was invoked outside its hypotheses; names the first failure."""

    def __init__(self, name: str, detail: str):
        self.name = name
        super().__init__(f"precondition {name!r} failed: {detail}")


class RetryBudgetError(RuntimeError):
    """All random draws failed the claimed inequality; carries diagnostics."""


@dataclass(frozen=True)
class RieszProduct:
    group: Group
    lam_indices: tuple[int, ...]
    omega: tuple[complex, ...]

    def __post_init__(self) -> None:
        lams = tuple(int(a) for a in self.lam_indices)
        om = tuple(complex(w) for w in self.omega)
        if len(lams) != len(om):
            raise RieszError("frequency and phase lists differ in length")
        if any(abs(w) > 1 + 1e-12 for w in om):
            raise RieszError("phases must satisfy |omega| <= 1")
        object.__setattr__(self, "lam_indices", lams)
        object.__setattr__(self, "omega", om)

    @classmethod
    def plain(cls, group: Group, lams) -> "RieszProduct":
        lams = tuple(int(a) for a in lams)
        return cls(group, lams, tuple(1.0 + 0.0j for _ in lams))


def riesz_values(p: RieszProduct) -> np.ndarray:
    """Pointwise values over G; each factor is clamped at 0 against roundoff."""
    out = np.ones(p.group.order, dtype=np.float64)
    for a, w in zip(p.lam_indices, p.omega):
        col = p.group.character_column(a)
        factor = 1.0 + (w * col).real
        out *= np.maximum(factor, 0.0)
    return out


def riesz_integral(p: RieszProduct, mu: GroupMeasure) -> float:
    return float(riesz_values(p) @ mu.mass)


def riesz_integral_expansion(p: RieszProduct, mu: GroupMeasure) -> complex:
    """Same integral via the dual-side expansion; cross-check for the
    pointwise route (guarded to |Lambda| <= 12 as the term count is 3^k)."""
    if len(p.lam_indices) > EXPANSION_GUARD:
        raise RieszError(f"expansion cross-check guarded to {EXPANSION_GUARD} factors")
    g = p.group
    n = g.order
    arange = np.arange(n, dtype=np.int64)
    coeffs = np.zeros(n, dtype=np.complex128)
    coeffs[0] = 1.0
    for a, w in zip(p.lam_indices, p.omega):
        shift_down = coeffs[g.sub(arange, int(a))]
        shift_up = coeffs[g.add(arange, int(a))]
        coeffs = coeffs + (w / 2.0) * shift_down + (np.conj(w) / 2.0) * shift_up
    return complex(coeffs @ np.conj(mu.fourier_table()))


# ---------------------------------------------------------------------------
# dissociativity


@dataclass(frozen=True)
class DissociativityCertificate:
    lam_indices: tuple[int, ...]
    k_value: float
    method: str  # "exact_pd" or "ascent_lower_bound"
    omega: tuple[complex, ...]
    integral: float


def _ascent_lower_bound(
    group: Group, lams: tuple[int, ...], mu: GroupMeasure, starts: int = 4
) -> tuple[float, tuple[complex, ...]]:
    """Block-coordinate ascent over the phases; the integral is affine in
    each omega_lam, so every coordinate step is solved in closed form."""
    cols = [group.character_column(a) for a in lams]
    mass = mu.mass
    rng = np.random.default_rng(1234 + 17 * len(lams))
    best_val, best_om = -np.inf, None
    for s in range(starts):
        if s == 0:
            om = np.ones(len(lams), dtype=np.complex128)
        else:
            om = np.exp(2j * np.pi * rng.random(len(lams)))
        factors = [np.maximum(1.0 + (w * c).real, 0.0) for w, c in zip(om, cols)]
        for _ in range(200):
            improved = 0.0
            for j, c in enumerate(cols):
                others = np.ones(group.order)
                for i, f in enumerate(factors):
                    if i != j:
                        others *= f
                w_others = others * mass
                # integral is u + Re(omega_j z): affine in the phase
                u = float(w_others.sum())
                z = complex(w_others @ c)
                r = abs(z)
                before = float(w_others @ factors[j])
                om[j] = np.conj(z) / r if r > 0 else 1.0 + 0.0j
                factors[j] = np.maximum(1.0 + (om[j] * c).real, 0.0)
                improved = max(improved, (u + r) - before)
            if improved < 1e-12:
                break
        val = float(np.prod(np.stack(factors), axis=0) @ mass) if factors else 1.0
        if val > best_val:
            best_val, best_om = val, tuple(complex(w) for w in om)
    return best_val, best_om


def dissociativity_constant(
    group: Group, lams, mu: GroupMeasure, method: str = "auto"
) -> DissociativityCertificate:
    lams = tuple(int(a) for a in lams)
    if method not in ("auto", "exact", "ascent"):
        raise RieszError(f"unknown method {method!r}")
    pd = is_positive_definite(mu)
    if method == "exact" and not pd:
        raise RieszError("exact dissociativity requires a positive-definite measure")
    if method in ("auto", "exact") and pd:
        p = RieszProduct.plain(group, lams)
        integral = riesz_integral(p, mu)
        return DissociativityCertificate(
            lam_indices=lams,
            k_value=math.log(max(integral, 1.0)),
            method="exact_pd",
            omega=p.omega,
            integral=integral,
        )
    if len(lams) > ASCENT_GUARD:
        raise RieszError(f"ascent guarded to |Lambda| <= {ASCENT_GUARD}")
    val, om = _ascent_lower_bound(group, lams, mu)
    return DissociativityCertificate(
        lam_indices=lams,
        k_value=math.log(max(val, 1.0)),
        method="ascent_lower_bound",
        omega=om,
        integral=val,
    )


# ---------------------------------------------------------------------------
# greedy dissociated extraction


@dataclass(frozen=True)
class DissociatedRejection:
    char_index: int
    integral: float
    bound: float
    eta_threshold: float


@dataclass(frozen=True)
class DissociatedSelection:
    selected: tuple[int, ...]
    eta: float
    k_cap: int
    certificate: DissociativityCertificate
    rejections: tuple[DissociatedRejection, ...]


def greedy_dissociated_subset(
    group: Group,
    chars,
    mu: GroupMeasure,
    eta: float,
    weights=None,
    k_cap: int | None = None,
) -> DissociatedSelection:
    """Greedy K-dissociated subset under the ladder eta_i = i eta/(2(k_cap+1)).

    Acceptance tests are exact (running-product integrals) and require a
    positive-definite measure; K(Lambda union gamma) <= eta_i is equivalent
    to integral p_{1, .} dmu <= exp(eta_i).
    """
    if eta <= 0:
        raise RieszError(f"eta must be positive, got {eta}")
    if not is_positive_definite(mu):
        raise RieszError(
            "greedy dissociated extraction requires a positive-definite measure"
        )
    ordered = _order(chars, weights)
    cap = len(ordered) if k_cap is None else int(k_cap)
    denom = 2.0 * (cap + 1)
    mass = mu.mass

    selected: list[int] = []
    product = np.ones(group.order, dtype=np.float64)

    def integral_with(cand: int) -> float:
        col = group.character_column(cand)
        return float((product * np.maximum(1.0 + col.real, 0.0)) @ mass)

    remaining = list(ordered)
    while True:
        kept = []
        progressed = False
        for cand in remaining:
            thr = math.exp((len(selected) + 1) * eta / denom)
            val = integral_with(cand)
            if val <= thr:
                selected.append(int(cand))
                col = group.character_column(cand)
                product *= np.maximum(1.0 + col.real, 0.0)
                progressed = True
            else:
                kept.append(cand)
        remaining = kept
        if not progressed or not remaining:
            break

    thr_final = math.exp((len(selected) + 1) * eta / denom)
    rejections = tuple(
        DissociatedRejection(
            char_index=int(c),
            integral=integral_with(c),
            bound=thr_final,
            eta_threshold=math.log(thr_final),
        )
        for c in remaining
    )
    cert = dissociativity_constant(group, selected, mu)
    return DissociatedSelection(
        selected=tuple(selected),
        eta=float(eta),
        k_cap=cap,
        certificate=cert,
        rejections=rejections,
    )


def _order(chars, weights) -> list[int]:
    chars = [int(a) for a in chars]
    if weights is None:
        return sorted(chars)
    return [a for a, _ in sorted(zip(chars, weights), key=lambda p: (-p[1], p[0]))]


# ---------------------------------------------------------------------------
# block decomposition


@dataclass(frozen=True)
class BourgainDecomposition:
    block_size: int
    blocks: tuple[tuple[int, ...], ...]
    residual: tuple[int, ...]
    method: str  # "exhaustive" (certified) or "greedy" (best effort)


_EXHAUSTIVE_BLOCK_LIMIT = 4
_EXHAUSTIVE_COMBO_GUARD = 200_000


def _greedy_block(
    group: Group, pool: list[int], block_size: int, mu: GroupMeasure
) -> tuple[int, ...] | None:
    block: list[int] = []
    product = np.ones(group.order, dtype=np.float64)
    mass = mu.mass
    for cand in pool:
        col = group.character_column(cand)
        trial = product * np.maximum(1.0 + col.real, 0.0)
        if float(trial @ mass) <= math.e:
            block.append(cand)
            product = trial
            if len(block) == block_size:
                return tuple(block)
    return None


def _exhaustive_block(
    group: Group, pool: list[int], block_size: int, mu: GroupMeasure
) -> tuple[int, ...] | None:
    for combo in itertools.combinations(pool, block_size):
        p = RieszProduct.plain(group, combo)
        if riesz_integral(p, mu) <= math.e:
            return combo
    return None


def bourgain_decomposition(
    group: Group, chars, block_size: int, mu: GroupMeasure
) -> BourgainDecomposition:
    """Strip out 1-dissociated blocks of exactly `block_size` frequencies.

    The residual is certified to contain no further block exhaustively when
    block_size <= 4 and the combination count is small (and mu is positive
    definite, making the K test exact); otherwise the certification is the
    repeated failure of the greedy scan, and the result says so.
    """
    block_size = int(block_size)
    if block_size < 1:
        raise RieszError(f"block size must be >= 1, got {block_size}")
    remaining = [int(a) for a in chars]
    blocks: list[tuple[int, ...]] = []
    while True:
        blk = _greedy_block(group, remaining, block_size, mu)
        if blk is None:
            break
        blocks.append(blk)
        remaining = [a for a in remaining if a not in set(blk)]

    method = "greedy"
    if (
        is_positive_definite(mu)
        and block_size <= _EXHAUSTIVE_BLOCK_LIMIT
        and math.comb(len(remaining), block_size) <= _EXHAUSTIVE_COMBO_GUARD
    ):
        while True:
            blk = _exhaustive_block(group, remaining, block_size, mu)
            if blk is None:
                break
            blocks.append(blk)
            remaining = [a for a in remaining if a not in set(blk)]
        method = "exhaustive"

    return BourgainDecomposition(
        block_size=block_size,
        blocks=tuple(blocks),
        residual=tuple(remaining),
        method=method,
    )


# ---------------------------------------------------------------------------
# verifiers


@dataclass(frozen=True)
class ChangReport:
    eps: float
    ratio: float
    spectrum_size: int
    selected_size: int
    bound: float
    c_chang: float
    passed: bool


def verify_chang(
    group: Group,
    values,
    mu: GroupMeasure,
    eps: float,
    c_chang: float = 8.0,
    eta: float = 1.0,
) -> ChangReport:
    """Greedy dissociated subset of Spec_eps obeys
    |Lambda| <= c_chang eps^-2 ceil(log 2L)."""
    from .spectrum import large_spectrum

    rep = large_spectrum(group, values, mu, eps)
    sel = greedy_dissociated_subset(
        group, rep.char_indices, mu, eta, weights=rep.magnitudes
    )
    bound = c_chang * math.ceil(math.log(2.0 * rep.ratio)) / eps**2
    return ChangReport(
        eps=float(eps),
        ratio=rep.ratio,
        spectrum_size=len(rep.char_indices),
        selected_size=len(sel.selected),
        bound=bound,
        c_chang=float(c_chang),
        passed=len(sel.selected) <= bound + 1e-9,
    )


@dataclass(frozen=True)
class ChernoffReport:
    k_value: float
    n_samples: int
    violations: int
    min_log_slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def verify_chernoff(
    group: Group,
    lams,
    mu: GroupMeasure,
    k_value: float | None = None,
    n_samples: int = 1000,
    seed: int = 0,
) -> ChernoffReport:
    """Sampled check of integral exp(Re g_vee) dmu <= exp(K + ||g||^2 / 2).

    Half the draws are complex-Gaussian coefficient vectors at log-uniform
    scales, half are adversarial: coefficient phases aligned to spike
    g_vee at one uniformly chosen point. Slack is measured on the log scale.
    """
    lams = tuple(int(a) for a in lams)
    if k_value is None:
        k_value = dissociativity_constant(group, lams, mu).k_value
    cols = np.column_stack([group.character_column(a) for a in lams])
    rng = np.random.default_rng(seed)
    min_slack = np.inf
    violations = 0
    for i in range(n_samples):
        sigma = float(np.exp(rng.uniform(np.log(0.05), np.log(2.0))))
        if i % 2 == 0:
            g = sigma * (
                rng.standard_normal(len(lams)) + 1j * rng.standard_normal(len(lams))
            ) / math.sqrt(2.0)
        else:
            x0 = int(rng.integers(0, group.order))
            radii = np.exp(rng.uniform(np.log(0.05), np.log(2.0), len(lams)))
            g = sigma * radii * np.conj(cols[x0, :])
        gv = cols @ g
        lhs = float(np.exp(gv.real) @ mu.mass)
        rhs_log = k_value + 0.5 * float(np.sum(np.abs(g) ** 2))
        slack = rhs_log - math.log(lhs)
        min_slack = min(min_slack, slack)
        if slack < -1e-9:
            violations += 1
    return ChernoffReport(
        k_value=float(k_value),
        n_samples=n_samples,
        violations=violations,
        min_log_slack=float(min_slack),
    )


# ---------------------------------------------------------------------------
# Riesz-product correlation dichotomy


@dataclass(frozen=True)
class RieszDichotomyOutcome:
    case: str  # "entropy_half" or "riesz_correlation"
    block_size: int
    decomposition: BourgainDecomposition
    # entropy_half payload
    residual: tuple[int, ...] = ()
    # riesz_correlation payload
    lam3: tuple[int, ...] = ()
    omega3: tuple[complex, ...] = ()
    lhs: float = 0.0
    rhs: float = 0.0
    draws: int = 0
    theta: float = 0.0


def riesz_block_dichotomy(
    group: Group,
    set_values,
    mu: GroupMeasure,
    mu_prime: GroupMeasure,
    lams,
    tau: float,
    m: int,
    d: int,
    rng: np.random.Generator,
    c_low: float = 4.0,
    c_high: float = 0.125,
    c_orth: float = 0.125,
    max_retries: int = 64,
) -> RieszDichotomyOutcome:
    """Either half of Lambda resists block decomposition (entropy_half), or a
    random sparse sub-product of the aligned Riesz product correlates with
    the set (riesz_correlation). Every precondition is re-verified on entry;
    the correlation inequality is verified before a draw is accepted."""
    lams = tuple(int(a) for a in lams)
    k = len(lams)
    set_values = np.asarray(set_values, dtype=np.float64)
    alpha = float(set_values @ mu.mass)

    if k == 0:
        raise PreconditionError("nonempty_spectrum", "Lambda is empty")
    if alpha <= 0:
        raise PreconditionError("positive_density", "set has zero mu-mass")
    coeffs = measure_fourier(group, set_values, mu)
    lam_coeffs = coeffs[np.asarray(lams, dtype=np.int64)]
    low = np.abs(lam_coeffs).min()
    if low < tau * alpha * (1 - 1e-12):
        raise PreconditionError(
            "spectrum_membership",
            f"min |coefficient| {low} below tau * alpha = {tau * alpha}",
        )
    k_orth = orthogonality_constant(group, lams, mu_prime).k_min
    if k_orth > c_orth * tau + 1e-12:
        raise PreconditionError(
            "near_orthogonality",
            f"K = {k_orth} exceeds c_orth * tau = {c_orth * tau}",
        )
    d = int(d)
    if d < 1 or d > k:
        raise PreconditionError("d_range", f"need 1 <= d <= k, got d={d}, k={k}")
    lo_d = c_low * math.log(2.0 / tau)
    hi_d = c_high * min(tau * k, math.sqrt(m))
    if not lo_d <= d <= hi_d + 1e-12:
        raise PreconditionError(
            "d_window", f"need {lo_d} <= d <= {hi_d}, got {d}"
        )

    block_size = max(1, math.ceil(2.0 * m * math.log(2.0 * k)))
    decomp = bourgain_decomposition(group, lams, block_size, mu_prime)
    if len(decomp.residual) >= k / 2.0:
        return RieszDichotomyOutcome(
            case="entropy_half",
            block_size=block_size,
            decomposition=decomp,
            residual=decomp.residual,
        )

    # blocks side: aligned phases, thin random sub-product
    lam2 = tuple(a for blk in decomp.blocks for a in blk)
    phase = {int(a): complex(coeffs[a] / abs(coeffs[a])) for a in lam2}
    theta = d / k
    count_cap = 2.0 * math.e * d
    last = None
    for t in range(max_retries):
        pick = rng.random(len(lam2)) < theta
        lam3 = tuple(a for a, take in zip(lam2, pick) if take)
        if len(lam3) > count_cap:
            continue
        om3 = tuple(phase[a] for a in lam3)
        p = RieszProduct(group, lam3, om3)
        lhs = float((set_values * riesz_values(p)) @ mu.mass)
        rhs = (
            alpha
            * (1.0 + tau * d / 4.0)
            * riesz_integral(RieszProduct.plain(group, lam3), mu_prime)
        )
        last = (lam3, om3, lhs, rhs)
        if lhs >= rhs * (1 - 1e-12):
            return RieszDichotomyOutcome(
                case="riesz_correlation",
                block_size=block_size,
                decomposition=decomp,
                lam3=lam3,
                omega3=om3,
                lhs=lhs,
                rhs=rhs,
                draws=t + 1,
                theta=theta,
            )
    lam3, om3, lhs, rhs = last if last is not None else ((), (), 0.0, 0.0)
    raise RetryBudgetError(
        f"correlation inequality failed on all {max_retries} draws "
        f"(last draw: |Lambda'''| = {len(lam3)}, lhs = {lhs}, rhs = {rhs})"
    )
