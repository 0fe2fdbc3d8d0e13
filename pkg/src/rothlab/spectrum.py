"""Large spectra, dyadic shells, and near-orthogonality certificates.

The epsilon-large spectrum of f against a measure mu is

    Spec_eps(f, mu) = { gamma : |(f dmu)^(gamma)| >= eps ||f||_{L1(mu)} }.

Near-orthogonality of a frequency list Lambda w.r.t. mu is quantified by
K = lambda_max(Gram) - 1 where the Gram matrix runs over [0] + Lambda with
entries integral of lambda_j conj(lambda_i) dmu. K = 0 means exact
orthonormality; the quantity also equals the supremum of the Rayleigh
quotient of |h_0 + sum g_i lambda_i|^2 integrals minus 1.

The greedy extractor scans candidates in descending-weight order and accepts
gamma as the i-th member only while K stays under the ladder threshold
eta_i = i eta / (2 (k_cap + 1)); it loops to a fixpoint, so every rejected
candidate carries a witness certified against the final selection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .groups import Group, GroupMeasure, measure_fourier

ORTHOGONALITY_GUARD = 2000


class SpectrumError(ValueError):
    pass


class ZeroFunctionError(SpectrumError):
    """Spectra of the zero function are undefined (the L1 norm vanishes)."""


# ---------------------------------------------------------------------------
# large spectra


@dataclass(frozen=True)
class SpectrumReport:
    eps: float
    l1: float
    l2: float
    char_indices: tuple[int, ...]
    magnitudes: tuple[float, ...]

    @property
    def ratio(self) -> float:
        """L = ||f||_2 / ||f||_1 w.r.t. mu; >= 1 by Cauchy-Schwarz."""
        return self.l2 / self.l1

    @property
    def threshold(self) -> float:
        return self.eps * self.l1


def large_spectrum(group: Group, values, mu: GroupMeasure, eps: float) -> SpectrumReport:
    if eps <= 0:
        raise SpectrumError(f"eps must be positive, got {eps}")
    values = np.asarray(values, dtype=np.complex128)
    l1 = float(np.abs(values) @ mu.mass)
    if l1 == 0.0:
        raise ZeroFunctionError("function vanishes mu-almost everywhere")
    l2 = float(np.sqrt((np.abs(values) ** 2) @ mu.mass))
    coeffs = np.abs(measure_fourier(group, values, mu))
    idx = np.flatnonzero(coeffs >= eps * l1)
    return SpectrumReport(
        eps=float(eps),
        l1=l1,
        l2=l2,
        char_indices=tuple(int(a) for a in idx),
        magnitudes=tuple(float(c) for c in coeffs[idx]),
    )


@dataclass(frozen=True)
class Shell:
    """Frequencies with tau * l1 <= |coefficient| < 2 tau * l1 (top: no cap)."""

    tau: float
    is_top: bool
    char_indices: tuple[int, ...]
    magnitudes: tuple[float, ...]

    @property
    def mass(self) -> float:
        return float(sum(m * m for m in self.magnitudes))


@dataclass(frozen=True)
class ShellDecomposition:
    eps_floor: float
    l1: float
    shells: tuple[Shell, ...]

    def heaviest(self) -> Shell:
        best = max(self.shells, key=lambda s: (s.mass, -s.tau))
        return best


def dyadic_shells(
    group: Group, values, mu: GroupMeasure, eps_floor: float
) -> ShellDecomposition:
    """Partition Spec_{eps_floor} into dyadic magnitude shells, capped at tau = 1.

    Shell tau collects tau l1 <= |c| < 2 tau l1 for tau = eps_floor 2^j < 1;
    the final shell keeps everything at or above l1 with no upper cut. The
    union over shells is exactly Spec_{eps_floor}.
    """
    if not 0 < eps_floor:
        raise SpectrumError(f"eps_floor must be positive, got {eps_floor}")
    base = large_spectrum(group, values, mu, eps_floor)
    taus = []
    t = eps_floor
    while t < 1.0:
        taus.append(t)
        t *= 2.0
    shells = []
    mags = np.asarray(base.magnitudes)
    chars = np.asarray(base.char_indices, dtype=np.int64)
    for j, tau in enumerate(taus):
        lo = tau * base.l1
        if j + 1 < len(taus):
            sel = (mags >= lo) & (mags < 2 * tau * base.l1)
        else:
            sel = (mags >= lo) & (mags < base.l1)
        shells.append(
            Shell(
                tau=float(tau),
                is_top=False,
                char_indices=tuple(int(a) for a in chars[sel]),
                magnitudes=tuple(float(m) for m in mags[sel]),
            )
        )
    sel = mags >= base.l1
    shells.append(
        Shell(
            tau=1.0,
            is_top=True,
            char_indices=tuple(int(a) for a in chars[sel]),
            magnitudes=tuple(float(m) for m in mags[sel]),
        )
    )
    return ShellDecomposition(eps_floor=float(eps_floor), l1=base.l1, shells=tuple(shells))


# ---------------------------------------------------------------------------
# orthogonality constant


def _gram(group: Group, lams, mu: GroupMeasure) -> np.ndarray:
    """Gram of [0] + Lambda: entry (i, j) = integral lambda_j conj(lambda_i) dmu."""
    table = mu.fourier_table()
    idx = np.concatenate(([0], np.asarray(lams, dtype=np.int64)))
    diff = group.sub(idx[None, :], idx[:, None])
    return np.conj(table[diff])


@dataclass(frozen=True)
class OrthogonalityCertificate:
    lam_indices: tuple[int, ...]
    k_min: float
    top_eigenvalue: float
    top_eigenvector: np.ndarray
    gram: np.ndarray


def orthogonality_constant(
    group: Group, lams, mu: GroupMeasure
) -> OrthogonalityCertificate:
    """K = lambda_max(Gram([0] + Lambda, mu)) - 1, clamped at 0.

    Duplicates in Lambda are allowed and contribute (a repeated frequency
    pushes lambda_max to at least 2)."""
    lams = tuple(int(a) for a in lams)
    if len(lams) > ORTHOGONALITY_GUARD:
        raise SpectrumError(
            f"orthogonality constant guarded to |Lambda| <= {ORTHOGONALITY_GUARD}"
        )
    G = _gram(group, lams, mu)
    w, v = np.linalg.eigh(G)
    top = float(w[-1])
    return OrthogonalityCertificate(
        lam_indices=lams,
        k_min=max(0.0, top - 1.0),
        top_eigenvalue=top,
        top_eigenvector=v[:, -1].copy(),
        gram=G,
    )


def rayleigh_quotient(group: Group, lams, mu: GroupMeasure, h) -> float:
    """integral |h_0 + sum h_i lambda_i|^2 dmu / ||h||^2, computed pointwise."""
    h = np.asarray(h, dtype=np.complex128)
    lams = tuple(int(a) for a in lams)
    if h.shape != (len(lams) + 1,):
        raise SpectrumError("coefficient vector must have length |Lambda| + 1")
    norm2 = float(np.sum(np.abs(h) ** 2))
    if norm2 == 0.0:
        raise SpectrumError("zero coefficient vector")
    w = np.full(group.order, h[0], dtype=np.complex128)
    for hj, a in zip(h[1:], lams):
        w += hj * group.character_column(a)
    return float((np.abs(w) ** 2) @ mu.mass) / norm2


# ---------------------------------------------------------------------------
# greedy near-orthogonal extraction


@dataclass(frozen=True)
class RejectionWitness:
    """Data certifying that adding the candidate would break the ladder.

    The recorded inequality is lhs > rhs with
    lhs = integral |h_0 + sum_j h_j lambda_j + h_cand gamma|^2 dmu and
    rhs = (1 + eta_threshold) ||h||^2, re-evaluated pointwise in the group.
    link is the dual index of the dominant witness coordinate among
    [0] + Lambda (the candidate slot is excluded), used for routing."""

    char_index: int
    coefficients: np.ndarray
    lhs: float
    rhs: float
    eta_threshold: float
    link: int


@dataclass(frozen=True)
class GreedySelection:
    selected: tuple[int, ...]
    eta: float
    k_cap: int
    certificate: OrthogonalityCertificate
    rejections: tuple[RejectionWitness, ...]

    def ladder(self, i: int) -> float:
        return i * self.eta / (2.0 * (self.k_cap + 1))


def _ordered_candidates(chars, weights) -> list[int]:
    chars = [int(a) for a in chars]
    if weights is None:
        return sorted(chars)
    pairs = sorted(zip(chars, weights), key=lambda p: (-p[1], p[0]))
    return [a for a, _ in pairs]


def greedy_orthogonal_subset(
    group: Group,
    chars,
    mu: GroupMeasure,
    eta: float,
    weights=None,
    k_cap: int | None = None,
) -> GreedySelection:
    """Maximal-under-the-scan near-orthogonal subset of the candidate pool.

    Candidates are scanned in descending weight order (ties by index;
    unweighted pools by index) and re-scanned until a pass accepts nothing,
    so the final rejections are certified against the final selection.
    """
    if eta <= 0:
        raise SpectrumError(f"eta must be positive, got {eta}")
    ordered = _ordered_candidates(chars, weights)
    cap = len(ordered) if k_cap is None else int(k_cap)
    denom = 2.0 * (cap + 1)
    table = mu.fourier_table()

    selected: list[int] = []
    # gram of [0] + selected, grown incrementally; upper holds a certified
    # upper bound for its top eigenvalue (exact after any eigh call)
    gram = np.ones((1, 1), dtype=np.complex128)
    upper = 1.0

    def border_column(cand: int) -> np.ndarray:
        idx = np.concatenate(([0], np.asarray(selected, dtype=np.int64)))
        return np.conj(table[group.sub(int(cand), idx)])

    def try_accept(cand: int) -> bool:
        nonlocal gram, upper
        thr = 1.0 + (len(selected) + 1) * eta / denom
        col = border_column(cand)
        cnorm = float(np.linalg.norm(col))
        m = len(col)
        bordered = np.empty((m + 1, m + 1), dtype=np.complex128)
        bordered[:m, :m] = gram
        bordered[:m, m] = col
        bordered[m, :m] = np.conj(col)
        bordered[m, m] = 1.0
        if upper + cnorm <= thr:
            # Weyl bordering bound certifies acceptance without an eigensolve
            gram = bordered
            upper = upper + cnorm
            selected.append(int(cand))
            return True
        top = float(np.linalg.eigvalsh(bordered)[-1])
        if top <= thr:
            gram = bordered
            upper = top
            selected.append(int(cand))
            return True
        return False

    remaining = list(ordered)
    while True:
        kept = []
        progressed = False
        for cand in remaining:
            if try_accept(cand):
                progressed = True
            else:
                kept.append(cand)
        remaining = kept
        if not progressed or not remaining:
            break

    # witness pass against the final selection
    rejections = []
    thr = 1.0 + (len(selected) + 1) * eta / denom
    for cand in remaining:
        witness = _rejection_witness(group, selected, cand, mu, thr)
        rejections.append(witness)

    cert = orthogonality_constant(group, selected, mu)
    return GreedySelection(
        selected=tuple(selected),
        eta=float(eta),
        k_cap=cap,
        certificate=cert,
        rejections=tuple(rejections),
    )


def _rejection_witness(
    group: Group, selected: list[int], cand: int, mu: GroupMeasure, thr: float
) -> RejectionWitness:
    lams = list(selected) + [int(cand)]
    cert = orthogonality_constant(group, lams, mu)
    v = cert.top_eigenvector
    h = v
    if abs(v[0]) > 1e-9:
        h = v / v[0]
    else:
        # push mass onto the constant slot until the quotient clears thr
        for j in range(1, 60):
            h_try = v.copy()
            h_try[0] += 2.0**-j
            if rayleigh_quotient(group, lams, mu, h_try) > thr:
                h = h_try
                break
        else:  # pragma: no cover - eigenvector itself already exceeds thr
            h = v
    lhs = rayleigh_quotient(group, lams, mu, h) * float(np.sum(np.abs(h) ** 2))
    rhs = thr * float(np.sum(np.abs(h) ** 2))
    dominant = int(np.argmax(np.abs(h[:-1])))
    link = 0 if dominant == 0 else int(selected[dominant - 1])
    return RejectionWitness(
        char_index=int(cand),
        coefficients=h,
        lhs=lhs,
        rhs=rhs,
        eta_threshold=thr - 1.0,
        link=link,
    )


# ---------------------------------------------------------------------------
# Bessel verifier


@dataclass(frozen=True)
class BesselReport:
    eps: float
    eta: float
    ratio: float
    spectrum_size: int
    selected_size: int
    bound: float
    passed: bool


def verify_bessel(
    group: Group, values, mu: GroupMeasure, eps: float, eta: float = 1.0
) -> BesselReport:
    """Greedy near-orthogonal subset of Spec_eps obeys |Lambda| <= 2 L^2 / eps^2."""
    rep = large_spectrum(group, values, mu, eps)
    sel = greedy_orthogonal_subset(
        group, rep.char_indices, mu, eta, weights=rep.magnitudes
    )
    bound = 2.0 * rep.ratio**2 / eps**2
    return BesselReport(
        eps=float(eps),
        eta=float(eta),
        ratio=rep.ratio,
        spectrum_size=len(rep.char_indices),
        selected_size=len(sel.selected),
        bound=bound,
        passed=len(sel.selected) <= bound + 1e-9,
    )
