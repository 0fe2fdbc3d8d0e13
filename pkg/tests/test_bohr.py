"""Bohr set enumeration, dilation, meets, regularity, and scalar images."""

import numpy as np
import pytest

from rothlab.bohr import (
    BohrError,
    BohrSet,
    RegularitySearchError,
    dimension_estimate,
    find_regular_dilate,
    meet,
    size_lower_bound,
)
from rothlab.groups import Group, GroupSubset, cyclic


def brute_members(b: BohrSet, rho=1.0):
    """Literal membership: every frequency within rho * width of 1."""
    g = b.group
    out = []
    for x in range(g.order):
        ok = True
        for a, d in zip(b.frequencies, b.widths):
            ok &= abs(1 - g.character_value(a, x)) <= rho * b.scale * d + 1e-12
        if ok:
            out.append(x)
    return out


class TestMembership:
    def test_frozen_z15_window(self):
        b = BohrSet(cyclic(15), (1,), (0.5,))
        assert sorted(b.members().indices().tolist()) == [0, 1, 14]
        assert sorted(b.dilate(2).members().indices().tolist()) == [0, 1, 2, 13, 14]

    def test_zero_always_member_and_symmetric(self):
        g = Group((3, 5, 7))
        rng = np.random.default_rng(0)
        freqs = tuple(int(a) for a in rng.integers(0, g.order, 3))
        b = BohrSet(g, freqs, (0.3, 0.7, 1.1))
        m = b.member_mask()
        assert m[0]
        idx = b.members().indices()
        assert np.array_equal(np.sort(g.neg(idx)), idx)

    @pytest.mark.parametrize("factors", [(15,), (3, 5), (4, 9)])
    def test_matches_literal_definition(self, factors):
        g = Group(factors)
        rng = np.random.default_rng(sum(factors))
        freqs = tuple(int(a) for a in rng.integers(0, g.order, 2))
        b = BohrSet(g, freqs, (0.6, 1.3))
        for rho in (0.25, 0.5, 1.0):
            assert b.members(rho).indices().tolist() == brute_members(b, rho)

    def test_zero_frequency_is_vacuous(self):
        b = BohrSet(cyclic(9), (0, 1), (0.5, 2.0))
        assert b.size() == 9  # width 2 and the trivial character exclude nothing

    def test_duplicate_frequencies_keep_min_width(self):
        b = BohrSet(cyclic(15), (1, 1), (1.5, 0.5))
        assert b.frequencies == (1,)
        assert b.widths == (0.5,)

    def test_validation(self):
        g = cyclic(9)
        with pytest.raises(BohrError):
            BohrSet(g, (1,), (0.0,))
        with pytest.raises(BohrError):
            BohrSet(g, (1,), (2.5,))
        with pytest.raises(BohrError):
            BohrSet(g, (9,), (1.0,))
        with pytest.raises(BohrError):
            BohrSet(g, (1, 2), (1.0,))

    def test_nesting_in_dilation(self):
        b = BohrSet(cyclic(101), (1, 7), (0.8, 1.2))
        sizes = [b.size(rho) for rho in (0.1, 0.3, 0.5, 1.0, 2.0)]
        assert sizes == sorted(sizes)
        assert b.dilate(0.5).size() == b.size(0.5)

    def test_json_round_trip(self):
        g = Group((3, 5))
        b = BohrSet(g, (2, 7), (0.4, 1.0))
        b2 = BohrSet.from_json(b.to_json())
        assert b2.frequencies == b.frequencies
        assert b2.widths == pytest.approx(b.widths)
        assert b2.member_mask().tolist() == b.member_mask().tolist()


class TestMeetAndDimension:
    def test_meet_is_intersection(self):
        g = cyclic(45)
        b1 = BohrSet(g, (1,), (0.9,))
        b2 = BohrSet(g, (3,), (1.1,))
        both = meet(b1, b2)
        expect = b1.member_mask() & b2.member_mask()
        assert np.array_equal(both.member_mask(), expect)

    def test_meet_duplicate_takes_tighter_width(self):
        g = cyclic(45)
        joined = meet(BohrSet(g, (1,), (1.4,)), BohrSet(g, (1,), (0.6,)))
        assert joined.widths == (0.6,)

    def test_dimension_at_least_one_and_monotone_data(self):
        b = BohrSet(cyclic(101), (1,), (1.0,))
        d = dimension_estimate(b)
        assert d >= 1.0
        # interval-like Bohr sets of rank 1 double gently
        assert d <= 3.0

    def test_doubling_never_exceeds_exp_bound(self):
        g = cyclic(301)
        rng = np.random.default_rng(2)
        for _ in range(5):
            freqs = tuple(int(a) for a in rng.integers(1, 301, 2))
            b = BohrSet(g, freqs, (0.7, 1.0))
            d = dimension_estimate(b)
            for rho in (0.25, 0.5, 1.0):
                assert b.size(2 * rho) <= 2**d * b.size(rho) + 1e-9


class TestRegularity:
    def test_search_returns_passing_dilate(self):
        b = BohrSet(cyclic(499), (1, 5), (1.0, 1.0))
        reg, report = find_regular_dilate(b)
        assert report.passed
        assert 0.5 <= report.lam < 1.0
        assert reg.scale == pytest.approx(report.lam)
        # envelope re-check from the report data
        for e, r in zip(report.etas, report.ratios):
            env = 1 + report.c_reg * report.dimension * abs(e)
            assert 1 / env - 1e-9 <= r <= env + 1e-9

    def test_search_failure_is_loud(self):
        # a 2-element group slice: every dilate in [1/2, 1) has the same two
        # sizes, and the jump breaks the envelope for a tiny c_reg
        b = BohrSet(cyclic(9), (1,), (0.05,))
        with pytest.raises(RegularitySearchError):
            find_regular_dilate(b, c_reg=0.01)


class TestSizeAndImages:
    def test_size_lower_bound_soft_check(self):
        rng = np.random.default_rng(3)
        g = cyclic(625)
        for _ in range(8):
            freqs = tuple(int(a) for a in rng.integers(0, 625, 3))
            widths = tuple(float(w) for w in rng.uniform(0.2, 2.0, 3))
            rep = size_lower_bound(BohrSet(g, freqs, widths))
            assert rep.passed

    def test_scalar_image_frozen(self):
        b = BohrSet(cyclic(15), (1,), (0.5,))
        img = b.scalar_image(-2)
        assert sorted(img.members().indices().tolist()) == [0, 2, 13]

    @pytest.mark.parametrize("t", [2, -2, 7])
    def test_scalar_image_matches_pointwise_image(self, t):
        g = Group((3, 5))
        b = BohrSet(g, (2, 11), (0.8, 1.3))
        img = b.scalar_image(t)
        direct = GroupSubset.from_indices(
            g, g.scale(t, b.members().indices())
        )
        assert np.array_equal(img.member_mask(), direct.mask)

    def test_rank_zero_is_whole_group(self):
        b = BohrSet(cyclic(7), (), ())
        assert b.size() == 7
        assert dimension_estimate(b) == 1.0
