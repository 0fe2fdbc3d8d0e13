"""Dichotomy, density conversions, annihilation, and the two engine loops."""

import numpy as np
import pytest

from rothlab.bohr import BohrSet, dimension_estimate, find_regular_dilate
from rothlab.groups import GroupSubset, cyclic
from rothlab.increment import (
    DEFAULT_CONFIG,
    EngineConfig,
    EntryCheckError,
    IncrementCertificate,
    annihilate_spectrum,
    energy_to_density,
    progression_dichotomy,
    replay_certificate,
    riesz_to_density,
    roth_engine_energy,
    roth_engine_main,
)
from rothlab.progressions import count_3aps


def whole_group(n):
    g = cyclic(n)
    return g, BohrSet(g, (), ()), GroupSubset(g, np.ones(n, dtype=bool))


def random_subset(g, density, seed):
    rng = np.random.default_rng(seed)
    mask = np.zeros(g.order, dtype=bool)
    count = round(density * g.order)
    mask[rng.choice(g.order, size=count, replace=False)] = True
    return GroupSubset(g, mask)


def greedy_progression_free(n):
    """Greedily pick residues mod n avoiding every 3AP role (n odd)."""
    g = cyclic(n)
    inv2 = pow(2, -1, n)
    mask = np.zeros(n, dtype=bool)
    chosen = []
    for x in range(n):
        if all(not (mask[(2 * b - x) % n] or mask[(2 * x - b) % n]
                    or mask[(b + x) * inv2 % n]) for b in chosen):
            chosen.append(x)
            mask[x] = True
    return g, GroupSubset(g, mask)


def assert_genuine_triple(g, mask, triple):
    a0, a1, a2 = triple
    d = g.sub(a1, a0)
    assert d != 0
    assert g.sub(a2, a1) == d
    assert mask[a0] and mask[a1] and mask[a2]


class TestProgressionDichotomy:
    def test_whole_group_z5(self):
        """A = A' = B = Z/5: every (m, y) pair counts, case one by a mile."""
        g, b, full = whole_group(5)
        out = progression_dichotomy(b, b, full, full)
        assert out.case == "many_progressions"
        assert out.count == 25
        assert (out.pair_lhs, out.pair_rhs) == (250, 125)
        assert out.nontrivial == 20
        assert_genuine_triple(g, full.mask, out.triple)

    def test_rho_guard_rejects_oversized_inner(self):
        g = cyclic(101)
        amb = BohrSet(g, (1,), (1.0,))
        inner = amb.dilate(0.9)
        a = GroupSubset(g, amb.member_mask())
        ap = GroupSubset(g, inner.member_mask())
        with pytest.raises(EntryCheckError) as exc:
            progression_dichotomy(amb, inner, a, ap)
        assert exc.value.name == "rho_guard"

    def test_even_order_rejected(self):
        g, b, full = whole_group(8)
        with pytest.raises(EntryCheckError) as exc:
            progression_dichotomy(b, b, full, full)
        assert exc.value.name == "odd_order"

    def test_containment_enforced(self):
        g = cyclic(101)
        amb, _ = find_regular_dilate(BohrSet(g, (1,), (0.8,)))
        outside = ~amb.member_mask()
        a = GroupSubset(g, outside)
        inner, _ = find_regular_dilate(amb.dilate(0.01))
        ap = GroupSubset(g, inner.member_mask())
        with pytest.raises(EntryCheckError) as exc:
            progression_dichotomy(amb, inner, a, ap)
        assert exc.value.name == "containment"

    def test_empty_sets_rejected(self):
        g, b, full = whole_group(5)
        empty = GroupSubset(g, np.zeros(5, dtype=bool))
        with pytest.raises(EntryCheckError) as exc:
            progression_dichotomy(b, b, empty, full)
        assert exc.value.name == "positive_density"

    def test_progression_free_set_lands_in_case_two(self):
        """Greedy progression-free residues mod 401: count stays diagonal."""
        g, a = greedy_progression_free(401)
        assert a.cardinality == 32
        assert count_3aps(a).nontrivial == 0
        b = BohrSet(g, (), ())
        out = progression_dichotomy(b, b, a, a)
        assert out.case == "mass_concentration"
        assert out.weighted_mass >= out.mass_threshold > 0
        assert out.kappa > 0
        assert len(out.spectrum) > 0

    def test_returned_case_always_verifies(self):
        """Random admissible instances: the stated inequality re-checks."""
        rng = np.random.default_rng(2026)
        verified = 0
        cases = set()
        for _ in range(400):
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
            for _attempt in range(20):
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
            verified += 1
            cases.add(out.case)
            if out.case == "many_progressions":
                assert out.pair_lhs >= out.pair_rhs
                if out.nontrivial > 0:
                    pm, m, pp = out.triple
                    assert mask_a[pm] and mask_ap[m] and mask_a[pp]
                    assert g.sub(m, pm) == g.sub(pp, m) != 0
            else:
                assert out.weighted_mass >= out.mass_threshold * (1 - 1e-12)
            if verified >= 100:
                break
        assert verified >= 100
        assert "many_progressions" in cases


class TestEnergyToDensity:
    def z9_instance(self):
        g = cyclic(9)
        mask = np.zeros(9, dtype=bool)
        mask[[0, 3, 6]] = True
        return g, BohrSet(g, (), ()), GroupSubset(g, mask), BohrSet(g, (3,), (0.5,))

    def test_subgroup_z9_witness_is_exactly_one(self):
        """The order-3 subgroup: entry mass 2/9 with kappa = 2, witness 1."""
        g, b, a, inner = self.z9_instance()
        res = energy_to_density(b, a, [3, 6], inner, kappa=2.0, rho=1.0)
        assert res.witness_density == 1.0
        assert res.entry_mass == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert res.entry_threshold == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert res.required_density == pytest.approx(
            (1.0 / 3.0) * (1.0 + 2.0 * DEFAULT_CONFIG.c_energy), abs=1e-12)
        assert res.witness_density >= res.required_density

    def test_empty_character_set_rejected(self):
        g, b, a, inner = self.z9_instance()
        with pytest.raises(EntryCheckError) as exc:
            energy_to_density(b, a, [], inner, kappa=2.0, rho=1.0)
        assert exc.value.name == "entry_mass"

    def test_flatness_rejected_on_wide_inner_set(self):
        g, b, a, _ = self.z9_instance()
        with pytest.raises(EntryCheckError) as exc:
            energy_to_density(b, a, [1], b, kappa=0.01, rho=1.0)
        assert exc.value.name == "flatness"

    def test_random_instances_reverify(self):
        """kappa measured from the true restricted mass: witness always meets
        the requirement."""
        from rothlab.increment import _centered_power, _minus_two, _restrict_mass

        rng = np.random.default_rng(99)
        done = 0
        for _ in range(120):
            n = int(rng.choice([101, 149, 401]))
            g = cyclic(n)
            b = BohrSet(g, (), ())
            mask = rng.random(n) < rng.uniform(0.1, 0.6)
            if mask.sum() < 3:
                continue
            a = GroupSubset(g, mask)
            alpha = mask.sum() / n
            power = _centered_power(np.ones(n, dtype=bool), a, alpha)
            k = int(rng.integers(1, 6))
            order = np.argsort(power)[::-1]
            top = [int(c) for c in order if c != 0][:k]
            minus2 = _minus_two(g)
            chars = sorted({int(minus2[c]) for c in top})
            ann = annihilate_spectrum(b, chars)
            mass = _restrict_mass(power, None, minus2, chars)
            kappa = mass / (alpha * alpha)
            if kappa <= 0:
                continue
            res = energy_to_density(b, a, chars, ann.bohr_out, kappa,
                                    rho=ann.bohr_out.scale)
            assert res.witness_density >= res.required_density - 1e-12
            done += 1
        assert done >= 60


class TestRieszToDensity:
    def test_empty_lambda_hypothesis_fails(self):
        """p is identically 1, so the correlation reads alpha >= alpha(1+eps)."""
        g = cyclic(9)
        mask = np.zeros(9, dtype=bool)
        mask[[0, 3, 6]] = True
        a = GroupSubset(g, mask)
        with pytest.raises(EntryCheckError) as exc:
            riesz_to_density(BohrSet(g, (), ()), 0.25, a, [], [], eps=0.1)
        assert exc.value.name == "hypothesis"

    def test_correlated_set_yields_witness(self):
        """A = {x : cos(2 pi x / 101) > 0.9} correlates with the lam = 1
        product; the output set gains exactly one frequency."""
        g = cyclic(101)
        b = BohrSet(g, (), ())
        xs = np.arange(101)
        a = GroupSubset(g, np.cos(2 * np.pi * xs / 101) > 0.9)
        res = riesz_to_density(b, 0.25, a, [1], [1.0 + 0.0j], eps=0.5)
        assert res.witness_density >= res.required_density - 1e-12
        assert res.bohr_out.rank == 1

    def test_boundary_containment_enforced(self):
        g = cyclic(101)
        b = BohrSet(g, (1,), (0.6,))
        a = GroupSubset(g, b.member_mask())
        with pytest.raises(EntryCheckError) as exc:
            riesz_to_density(b, 0.3, a, [2], [1.0 + 0.0j], eps=0.5)
        assert exc.value.name == "boundary"

    def test_rho_range_enforced(self):
        g, b, full = whole_group(5)
        with pytest.raises(EntryCheckError) as exc:
            riesz_to_density(b, 0.4, full, [1], [1.0 + 0.0j], eps=0.5)
        assert exc.value.name == "rho_range"


class TestAnnihilateSpectrum:
    def test_empty_delta_returns_ambient(self):
        g = cyclic(9)
        b = BohrSet(g, (), ())
        rep = annihilate_spectrum(b, [])
        assert rep.bohr_out is b
        assert rep.scale == 1.0
        assert rep.max_deviation == 0.0

    def test_subgroup_characters_annihilated_exactly(self):
        """{3, 6} on Z/9 vanish on the order-3 subgroup: deviation 0."""
        g = cyclic(9)
        rep = annihilate_spectrum(BohrSet(g, (), ()), [3, 6])
        assert rep.max_deviation == 0.0
        assert rep.rank_out <= rep.rank_in + len(rep.extracted)
        members = rep.bohr_out.members().indices()
        for c in (3, 6):
            vals = np.exp(2j * np.pi * c * members / 9)
            assert np.abs(1 - vals).max() <= 0.5 + 1e-9

    @pytest.mark.parametrize("mode", ["orthogonal", "dissociated"])
    def test_pointwise_bound_holds_on_random_spectra(self, mode):
        rng = np.random.default_rng(5)
        g = cyclic(401)
        b = BohrSet(g, (), ())
        for _ in range(5):
            delta = sorted(int(c) for c in
                           rng.choice(np.arange(1, 401), size=8, replace=False))
            rep = annihilate_spectrum(b, delta, mode=mode)
            members = rep.bohr_out.members().indices()
            assert members.size >= 1
            for c in delta:
                vals = np.exp(2j * np.pi * c * members / 401)
                assert np.abs(1 - vals).max() <= 0.5 + 1e-9
            assert rep.rank_out <= rep.rank_in + len(rep.extracted)


class TestEnergyEngine:
    def test_whole_group_immediate(self):
        """A = B = G terminates before the first increment step."""
        g, b, full = whole_group(7)
        cert = roth_engine_energy(b, full)
        assert cert.outcome["kind"] == "many_progressions"
        assert cert.outcome["count"] == 49
        assert cert.outcome["nontrivial"] == 42
        assert len(cert.steps) == 0
        assert_genuine_triple(g, full.mask, cert.outcome["triple"])

    @pytest.mark.parametrize("seed", range(5))
    def test_dense_random_z101_exhibits_triple(self, seed):
        g = cyclic(101)
        a = random_subset(g, 0.4, seed)
        cert = roth_engine_energy(BohrSet(g, (), ()), a, seed=seed)
        assert cert.outcome["kind"] == "many_progressions"
        assert_genuine_triple(g, a.mask, cert.outcome["triple"])

    def test_progression_free_chain_terminates_and_replays(self):
        g, a = greedy_progression_free(401)
        cert = roth_engine_energy(BohrSet(g, (), ()), a)
        assert cert.outcome["kind"] in (
            "many_progressions", "scale_degenerate", "budget_exhausted")
        if cert.outcome["kind"] == "many_progressions":
            assert cert.outcome["nontrivial"] == 0
        report = replay_certificate(cert)
        assert report.passed, report.detail

    def test_density_chain_monotone(self):
        g, a = greedy_progression_free(401)
        cert = roth_engine_energy(BohrSet(g, (), ()), a)
        assert len(cert.steps) > 0
        last = 0.0
        for step in cert.steps:
            assert 0.0 <= step["alpha_before"] <= step["alpha_after"] <= 1.0
            assert step["alpha_before"] >= last - 1e-12
            last = step["alpha_after"]

    def test_budget_exhaustion_reported_with_chain(self):
        g = cyclic(9)
        mask = np.zeros(9, dtype=bool)
        mask[[0, 3, 6]] = True
        a = GroupSubset(g, mask)
        cert = roth_engine_energy(BohrSet(g, (), ()), a,
                                  config=EngineConfig(step_budget=0))
        assert cert.outcome["kind"] == "budget_exhausted"
        assert cert.outcome["steps_taken"] == 0
        assert replay_certificate(cert).passed

    def test_same_seed_byte_identical(self):
        g = cyclic(101)
        a = random_subset(g, 0.4, 7)
        b = BohrSet(g, (), ())
        first = roth_engine_energy(b, a, seed=7)
        second = roth_engine_energy(b, a, seed=7)
        assert first.dumps() == second.dumps()


class TestMainEngine:
    @pytest.mark.parametrize("seed", range(3))
    def test_dense_random_z401_exhibits_triple(self, seed):
        g = cyclic(401)
        a = random_subset(g, 0.25, seed)
        cert = roth_engine_main(g, a, seed=seed)
        assert cert.outcome["kind"] == "many_progressions"
        assert_genuine_triple(g, a.mask, cert.outcome["triple"])

    def test_progression_free_chain_replays(self):
        g, a = greedy_progression_free(401)
        cert = roth_engine_main(g, a)
        assert cert.outcome["kind"] in (
            "many_progressions", "scale_degenerate", "budget_exhausted")
        if cert.outcome["kind"] == "many_progressions":
            assert cert.outcome["nontrivial"] == 0
        report = replay_certificate(cert)
        assert report.passed, report.detail

    def test_step_count_within_budget_and_ranks_nondecreasing(self):
        g, a = greedy_progression_free(401)
        cert = roth_engine_main(g, a)
        assert len(cert.steps) <= 3 * DEFAULT_CONFIG.step_budget
        index = 0
        for step in cert.steps:
            assert step["bohr_out"]["rank"] >= step["bohr_in"]["rank"]
            assert step["index"] >= index
            index = step["index"]

    def test_whole_group_immediate(self):
        g, _, full = whole_group(7)
        cert = roth_engine_main(g, full)
        assert cert.outcome["kind"] == "many_progressions"
        assert_genuine_triple(g, full.mask, cert.outcome["triple"])


class TestCertificates:
    def make_cert(self):
        g = cyclic(101)
        a = random_subset(g, 0.4, 3)
        return roth_engine_energy(BohrSet(g, (), ()), a, seed=3), g, a

    def test_json_roundtrip(self):
        cert, _, _ = self.make_cert()
        clone = IncrementCertificate.from_json(cert.to_json())
        assert clone.dumps() == cert.dumps()

    def test_schema_field_required(self):
        from rothlab.increment import VerificationError

        cert, _, _ = self.make_cert()
        payload = cert.to_json()
        payload["schema"] = "other/1"
        with pytest.raises(VerificationError):
            IncrementCertificate.from_json(payload)

    def test_replay_accepts_dict_payload(self):
        cert, _, _ = self.make_cert()
        report = replay_certificate(cert.to_json())
        assert report.passed

    def test_replay_detects_tampered_inequality(self):
        g, a = greedy_progression_free(401)
        cert = roth_engine_energy(BohrSet(g, (), ()), a)
        payload = cert.to_json()
        tampered = False
        for step in payload["steps"]:
            for ineq in step["inequalities"]:
                ineq["lhs"] = ineq["lhs"] - 1.0
                tampered = True
                break
            if tampered:
                break
        assert tampered
        report = replay_certificate(payload)
        assert not report.passed

    def test_replay_detects_tampered_outcome(self):
        cert, _, _ = self.make_cert()
        payload = cert.to_json()
        payload["outcome"]["triple"] = [0, 1, 2]
        report = replay_certificate(payload)
        assert not report.passed


class TestEngineConfig:
    def test_json_roundtrip(self):
        cfg = EngineConfig(step_budget=5, c_energy=0.25)
        clone = EngineConfig.from_json(cfg.to_json())
        assert clone == cfg

    def test_gains_track_the_case_constants(self):
        cfg = DEFAULT_CONFIG
        shared = cfg.c_dichotomy * cfg.c_energy
        assert cfg.gain_energy == pytest.approx(shared / 8.0, rel=1e-12)
        assert cfg.gain_main == pytest.approx(shared / 16.0, rel=1e-12)

    def test_theta_window_enforced(self):
        """The inner density must stay within a factor two of the outer."""
        assert DEFAULT_CONFIG.theta_ratio == 2.0
