"""End-to-end acceptance: one test per shipped guarantee.

Each test is a single pass/fail gate with pinned tolerances; the slow
sweeps carry their own wall-clock budgets.
"""

import json
import time

import numpy as np
import pytest

from rothlab.bohr import BohrSet, dimension_estimate, find_regular_dilate
from rothlab.cli import main
from rothlab.constructions import behrend, elkin, greedy_ap_free, verify_ap_free
from rothlab.groups import Group, GroupMeasure, GroupSubset, cyclic, fourier, inverse_fourier
from rothlab.increment import (
    DEFAULT_CONFIG,
    EntryCheckError,
    energy_to_density,
    progression_dichotomy,
    replay_certificate,
    roth_engine_main,
)
from rothlab.progressions import count_3aps, freiman_embed, trilinear_direct, trilinear_fourier
from rothlab.riesz import verify_chang, verify_chernoff
from rothlab.spectrum import orthogonality_constant, rayleigh_quotient, verify_bessel


def random_subset(g, density, seed):
    rng = np.random.default_rng(seed)
    mask = np.zeros(g.order, dtype=bool)
    count = max(1, round(density * g.order))
    mask[rng.choice(g.order, size=count, replace=False)] = True
    return GroupSubset(g, mask)


def test_01_fourier_roundtrip_and_parseval():
    rng = np.random.default_rng(1)
    start = time.monotonic()
    for order in ({9: (9,), 21: (3, 7), 81: (81,), 625: (625,),
                   5040: (720, 7)}).values():
        g = Group(order)
        for _ in range(5):
            f = rng.standard_normal(g.order) + 1j * rng.standard_normal(g.order)
            fhat = fourier(g, f)
            back = inverse_fourier(g, fhat)
            assert np.abs(back - f).max() <= 1e-9
            lhs = float(np.sum(np.abs(fhat) ** 2))
            rhs = float(np.mean(np.abs(f) ** 2))
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, rhs)
    assert time.monotonic() - start < 5.0


def test_02_trilinear_identity():
    rng = np.random.default_rng(2)
    start = time.monotonic()
    for order in (9, 81, 2001):
        g = cyclic(order)
        for _ in range(100):
            f, h, k = (rng.standard_normal(order) for _ in range(3))
            direct = trilinear_direct(g, f, h, k, "midpoint")
            spectral = trilinear_fourier(g, f, h, k)
            assert abs(direct - spectral) <= 1e-9 * max(1.0, abs(direct))
    assert time.monotonic() - start < 30.0


def test_03_counting_matches_brute_force():
    rng = np.random.default_rng(3)
    start = time.monotonic()
    for n in range(2, 501):
        g = cyclic(n)
        masks = rng.random((50, n)) < rng.uniform(0.05, 0.95, size=(50, 1))
        brute = np.zeros(50, dtype=np.int64)
        for d in range(n):
            rolled1 = np.roll(masks, -d, axis=1)
            rolled2 = np.roll(masks, -2 * d, axis=1)
            brute += (masks & rolled1 & rolled2).sum(axis=1)
        for row in range(50):
            pc = count_3aps(GroupSubset(g, masks[row]))
            assert pc.total == int(brute[row])
            assert pc.nontrivial == int(brute[row]) - int(masks[row].sum())
    assert time.monotonic() - start < 60.0


def test_04_embedding_preserves_counts():
    rng = np.random.default_rng(4)
    for _ in range(200):
        elems = sorted(set(rng.integers(1, 201, size=rng.integers(2, 60)).tolist()))
        member = set(elems)
        direct = sum(1 for a in elems for c in elems
                     if a != c and (a + c) % 2 == 0 and (a + c) // 2 in member)
        _, subset = freiman_embed(elems, 200)
        assert count_3aps(subset).nontrivial == direct


def test_05_constructions_are_progression_free():
    assert greedy_ap_free(14).elements == (1, 2, 4, 5, 10, 11, 13, 14)
    grid = (1, 5, 14, 50, 100, 250, 500, 1000, 2000, 4000, 8000, 10_000)
    for n in grid:
        for maker in (behrend, elkin, greedy_ap_free):
            ok, witness = verify_ap_free(maker(n))
            assert ok, (maker.__name__, n, witness)


def test_06_bessel_bound_never_violated():
    rng = np.random.default_rng(6)
    g = cyclic(499)
    mu = GroupMeasure.haar(g)
    for _ in range(200):
        mask = rng.random(499) < rng.uniform(0.05, 0.8)
        if not mask.any():
            continue
        eps = float(rng.uniform(0.05, 0.9))
        report = verify_bessel(g, mask.astype(float), mu, eps)
        assert report.passed
        assert report.selected_size <= 2.0 * report.ratio**2 / eps**2 + 1e-9


def test_07_chang_bound_never_violated():
    rng = np.random.default_rng(7)
    g = cyclic(499)
    mu = GroupMeasure.haar(g)
    for _ in range(200):
        mask = rng.random(499) < rng.uniform(0.05, 0.8)
        if not mask.any():
            continue
        eps = float(rng.uniform(0.05, 0.9))
        report = verify_chang(g, mask.astype(float), mu, eps)
        assert report.passed
        assert report.c_chang == 8.0


def test_08_chernoff_bound_sampled():
    rng = np.random.default_rng(8)
    g = cyclic(1009)
    mu = GroupMeasure.haar(g)
    for trial in range(20):
        lam, freqs = int(rng.integers(1, 40)), []
        while lam < 505 and len(freqs) < 9:
            freqs.append(lam)
            lam = int(lam * 2 + rng.integers(0, 3))
        report = verify_chernoff(g, freqs, mu, n_samples=1000, seed=trial)
        assert report.violations == 0
        assert report.min_log_slack >= -1e-9


def test_09_rayleigh_quotients_respect_the_eigenvalue():
    rng = np.random.default_rng(9)
    g = cyclic(499)
    mu = GroupMeasure.haar(g)
    for _ in range(40):
        k = int(rng.integers(2, 11))
        lams = tuple(int(a) for a in rng.choice(np.arange(1, 499), k, replace=False))
        cert = orthogonality_constant(g, lams, mu)
        top = cert.top_eigenvalue
        best = 0.0
        for _ in range(60):
            h = rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1)
            q = rayleigh_quotient(g, lams, mu, h)
            assert q <= top + 1e-8
            best = max(best, q)
        if k <= 6:
            for _ in range(20):
                h = cert.top_eigenvector + 0.05 * (
                    rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1))
                q = rayleigh_quotient(g, lams, mu, h)
                assert q <= top + 1e-8
                best = max(best, q)
            assert best >= 0.95 * top


def test_10_dichotomy_soundness_and_energy_pin():
    g9 = cyclic(9)
    mask = np.zeros(9, dtype=bool)
    mask[[0, 3, 6]] = True
    res = energy_to_density(BohrSet(g9, (), ()), GroupSubset(g9, mask),
                            [3, 6], BohrSet(g9, (3,), (0.5,)), kappa=2.0, rho=1.0)
    assert res.witness_density == 1.0

    rng = np.random.default_rng(10)
    verified = 0
    while verified < 500:
        n = int(rng.choice([101, 401]))
        g = cyclic(n)
        rank = int(rng.integers(0, 3))
        freqs = tuple(int(f) for f in
                      rng.choice(np.arange(1, n), size=rank, replace=False))
        widths = tuple(float(w) for w in rng.uniform(0.3, 1.4, size=rank))
        amb, _ = find_regular_dilate(BohrSet(g, freqs, widths))
        memb = amb.member_mask()
        size_b = int(memb.sum())
        if size_b < 8:
            continue
        mask_a = memb & (rng.random(n) < rng.uniform(0.2, 0.9))
        if not mask_a.any():
            continue
        alpha = mask_a.sum() / size_b
        target = 0.5 * DEFAULT_CONFIG.rho_dichotomy * alpha
        target /= max(dimension_estimate(amb), 1.0)
        out = None
        for _ in range(20):
            inner, _ = find_regular_dilate(amb.dilate(min(target, 0.5)))
            inn = inner.member_mask()
            if not inn.any():
                target *= 0.5
                continue
            mask_ap = inn & (rng.random(n) < rng.uniform(0.3, 1.0))
            if not mask_ap.any():
                mask_ap = inn.copy()
            try:
                out = progression_dichotomy(
                    amb, inner, GroupSubset(g, mask_a), GroupSubset(g, mask_ap))
            except EntryCheckError as err:
                if err.name in ("annulus", "rho_guard"):
                    target *= 0.5
                    continue
                raise
            break
        if out is None:
            continue
        if out.case == "many_progressions":
            assert out.pair_lhs >= out.pair_rhs
        else:
            assert out.weighted_mass >= out.mass_threshold * (1 - 1e-12)
        verified += 1


def test_11_engines_end_to_end(tmp_path):
    g = cyclic(101)
    for seed in range(20):
        a = random_subset(g, 0.4, seed)
        cert = roth_engine_main(g, a, seed=seed)
        assert cert.outcome["kind"] == "many_progressions"
        t = cert.outcome["triple"]
        d = g.sub(t[1], t[0])
        assert d != 0 and g.sub(t[2], t[1]) == d
        assert all(a.mask[x] for x in t)

    for top in (25, 50, 100):
        image = behrend(top)
        group, subset = freiman_embed(image.elements, 100)
        assert group.order == 401
        cert = roth_engine_main(group, subset)
        assert len(cert.steps) <= 3 * DEFAULT_CONFIG.step_budget
        assert cert.outcome["kind"] != "budget_exhausted"
        path = tmp_path / f"behrend{top}.json"
        path.write_text(cert.dumps())
        assert main(["replay", str(path)]) == 0


def test_12_identical_seeds_identical_certificates():
    g = cyclic(101)
    a = random_subset(g, 0.4, 77)
    one = roth_engine_main(g, a, seed=77)
    two = roth_engine_main(g, a, seed=77)
    assert one.dumps() == two.dumps()
    assert replay_certificate(json.loads(one.dumps())).passed
