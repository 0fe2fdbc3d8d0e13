"""Progression-free generators and the exhaustive freeness oracle."""

import numpy as np
import pytest

from rothlab.constructions import (
    ConstructionError,
    GuardError,
    IntegerSet,
    behrend,
    elkin,
    greedy_ap_free,
    random_set,
    verify_ap_free,
)
from rothlab.progressions import count_3aps, freiman_embed


def brute_force_free(elements):
    elems = sorted(elements)
    for i, a in enumerate(elems):
        for b in elems[i + 1:]:
            if 2 * b - a in elems[i + 1:]:
                return False
    return True


class TestIntegerSet:
    def test_rejects_unsorted_or_duplicate(self):
        with pytest.raises(ConstructionError):
            IntegerSet(5, (3, 1))
        with pytest.raises(ConstructionError):
            IntegerSet(5, (1, 1, 3))

    def test_rejects_out_of_range(self):
        with pytest.raises(ConstructionError):
            IntegerSet(5, (0, 3))
        with pytest.raises(ConstructionError):
            IntegerSet(5, (1, 6))

    def test_json_roundtrip(self):
        s = IntegerSet(9, (1, 4, 9))
        assert s.to_json() == {"N": 9, "elements": [1, 4, 9]}
        assert IntegerSet.from_json(s.to_json()) == s

    def test_bitset_matches_elements(self):
        s = IntegerSet(6, (2, 5))
        mask = s.bitset()
        assert mask.shape == (7,)
        assert list(np.flatnonzero(mask)) == [2, 5]

    def test_restrict_keeps_prefix(self):
        s = IntegerSet(20, (1, 5, 12, 19))
        assert s.restrict(12).elements == (1, 5, 12)


class TestVerifyApFree:
    def test_empty_and_tiny_sets_are_free(self):
        assert verify_ap_free(IntegerSet(5, ())) == (True, None)
        assert verify_ap_free(IntegerSet(5, (2, 4))) == (True, None)

    def test_odd_progression_found_with_witness(self):
        ok, witness = verify_ap_free(IntegerSet(5, (1, 3, 5)))
        assert not ok
        assert witness == (1, 3, 5)

    def test_four_element_free_set(self):
        assert verify_ap_free(IntegerSet(5, (1, 2, 4, 5))) == (True, None)

    def test_accepts_plain_iterables(self):
        ok, witness = verify_ap_free([10, 20, 30])
        assert not ok
        assert witness == (10, 20, 30)

    def test_witness_is_a_progression_inside_the_set(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            elems = sorted(set(rng.integers(1, 300, size=25).tolist()))
            s = IntegerSet(300, tuple(elems))
            ok, witness = verify_ap_free(s)
            assert ok == brute_force_free(elems)
            if not ok:
                a, b, c = witness
                assert a + c == 2 * b and a < b < c
                assert {a, b, c} <= set(elems)

    def test_guard_exceeded(self):
        s = IntegerSet(10, (1, 2, 4, 8))
        with pytest.raises(GuardError):
            verify_ap_free(s, guard=3)


class TestGreedy:
    def test_two_elements(self):
        assert greedy_ap_free(2).elements == (1, 2)

    def test_frozen_fourteen(self):
        assert greedy_ap_free(14).elements == (1, 2, 4, 5, 10, 11, 13, 14)

    def test_matches_base_three_digit_set(self):
        """Greedy equals {v + 1 : v has only digits 0, 1 in base 3}."""
        def no_two(v):
            while v:
                if v % 3 == 2:
                    return False
                v //= 3
            return True

        got = greedy_ap_free(500).elements
        expected = tuple(x for x in range(1, 501) if no_two(x - 1))
        assert got == expected

    def test_large_run_verifies(self):
        s = greedy_ap_free(100_000, verify=False)
        assert s.size == 2048
        ok, _ = verify_ap_free(s)
        assert ok


class TestBehrend:
    def test_n_one_is_singleton(self):
        assert behrend(1).elements == (1,)

    def test_small_n_nonempty_and_free(self):
        s = behrend(10)
        assert s.size >= 1
        assert verify_ap_free(s) == (True, None)

    def test_regression_sizes(self):
        """Sphere sizes recorded from the first verified run."""
        assert behrend(100).size == 6
        assert behrend(1000).size == 12
        assert behrend(10_000).size == 48

    def test_metadata_records_grid_choice(self):
        meta = behrend(1000).meta
        assert meta["method"] == "behrend"
        assert {"dimension", "half_base", "radius", "grid_size"} <= set(meta)

    def test_explicit_parameters(self):
        s = behrend(10_000, dimension=4, half_base=6)
        assert s.size == 48
        with pytest.raises(ConstructionError):
            behrend(10, dimension=4, half_base=6)

    def test_monotone_coherence(self):
        full = behrend(10_000)
        for m in (50, 500, 5000):
            assert verify_ap_free(full.restrict(m)) == (True, None)

    def test_all_elements_in_range(self):
        for n in (10, 100, 1000, 10_000):
            s = behrend(n)
            assert all(1 <= e <= n for e in s.elements)


class TestElkin:
    def test_n_one_is_singleton(self):
        assert elkin(1).elements == (1,)

    def test_thousand_is_free(self):
        s = elkin(1000)
        assert verify_ap_free(s) == (True, None)
        assert s.size >= behrend(1000).size

    def test_repair_path_deletes_progressions(self):
        """Thickness three admits in-annulus progressions that get repaired."""
        s = elkin(10_000, thickness=3)
        assert s.meta["removed"] > 0
        assert verify_ap_free(s) == (True, None)

    def test_size_report_against_behrend(self):
        """Recorded comparison at the default thickness; not a theorem."""
        for n in (100, 1000, 10_000):
            assert elkin(n).size >= behrend(n).size


class TestRandomSet:
    def test_density_zero_empty(self):
        assert random_set(10, 0.0).elements == ()

    def test_density_one_full(self):
        assert random_set(10, 1.0).elements == tuple(range(1, 11))

    def test_seed_reproducible(self):
        a = random_set(500, 0.3, seed=42)
        b = random_set(500, 0.3, seed=42)
        assert a.elements == b.elements

    def test_density_out_of_range(self):
        with pytest.raises(ConstructionError):
            random_set(10, 1.5)


class TestEmbeddingProperty:
    @pytest.mark.parametrize("maker", [
        lambda: behrend(1000),
        lambda: elkin(1000),
        lambda: greedy_ap_free(200),
    ])
    def test_free_sets_stay_free_in_the_cyclic_image(self, maker):
        s = maker()
        _, subset = freiman_embed(s.elements, s.n)
        assert count_3aps(subset).nontrivial == 0

    def test_progression_counts_agree_for_random_sets(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            elems = sorted(set(rng.integers(1, 120, size=30).tolist()))
            direct = sum(1 for a in elems for c in elems
                         if a < c and (a + c) % 2 == 0 and (a + c) // 2 in elems)
            _, subset = freiman_embed(elems, 120)
            assert count_3aps(subset).nontrivial == 2 * direct
