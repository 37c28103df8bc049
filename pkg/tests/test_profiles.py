import itertools
import math
from collections import Counter

import numpy as np
import pytest

from symprop import (
    BudgetExceededError,
    Budgets,
    DiscreteDistribution,
    Profile,
    ValidationError,
    count_partitions,
    enumerate_profiles,
    profile_of,
    profile_probability,
    profile_space_bounds,
    sample,
)
from symprop.profiles import profiles_from_count_rows
from conftest import random_distribution


def dd(*values):
    return DiscreteDistribution(np.asarray(values, dtype=float))


def batch_of(draws, k):
    from symprop import SampleBatch

    return SampleBatch(draws=np.asarray(draws), n=len(draws), k=k)


def partition_count_oracle(n, max_parts):
    # independent recurrence: q(n, m) = partitions of n into parts of size <= m
    table = np.zeros((n + 1, max_parts + 1), dtype=np.int64)
    table[0, :] = 1
    for total in range(1, n + 1):
        for largest in range(1, max_parts + 1):
            table[total, largest] = table[total, largest - 1]
            if total - largest >= 0:
                table[total, largest] += table[total - largest, largest]
    return int(table[n, max_parts])


def sequence_probability_oracle(p, phi):
    # brute force over all k**n sequences
    total = 0.0
    for seq in itertools.product(range(1, p.k + 1), repeat=phi.n):
        counts = Counter(seq)
        mult_hist = Counter(counts.get(sym, 0) for sym in range(1, p.k + 1))
        profile_counts = tuple(mult_hist.get(i, 0) for i in range(phi.n + 1))
        if profile_counts == phi.counts:
            total += math.prod(p.probs[s - 1] for s in seq)
    return total


class TestProfileType:
    def test_invariants_enforced(self):
        with pytest.raises(ValidationError):
            Profile(counts=(1, 1, 1), n=2, k=3)  # weighted sum is 3, not 2
        with pytest.raises(ValidationError):
            Profile(counts=(0, 2, 0), n=2, k=3)  # counts sum to 2, not 3
        with pytest.raises(ValidationError):
            Profile(counts=(0, 2), n=2, k=2)  # wrong length

    def test_json_roundtrip(self):
        phi = Profile(counts=(1, 1, 1, 0), n=3, k=3)
        assert Profile.from_json(phi.to_json()) == phi

    def test_multiplicities(self):
        phi = Profile(counts=(1, 1, 1, 0), n=3, k=3)
        assert phi.multiplicities() == (2, 1)


class TestProfileOf:
    def test_mixed_batch(self):
        phi = profile_of(batch_of([1, 1, 2], k=3))
        assert phi.counts == (1, 1, 1, 0)

    def test_all_distinct(self):
        phi = profile_of(batch_of([1, 2, 3], k=3))
        assert phi.counts == (0, 3, 0, 0)

    def test_matches_two_pass_counting_oracle(self, rng):
        for _ in range(50):
            k = int(rng.integers(1, 7))
            n = int(rng.integers(1, 12))
            p = random_distribution(rng, k)
            batch = sample(p, n, seed=int(rng.integers(2**31)))
            phi = profile_of(batch)
            sym_counts = Counter(batch.draws.tolist())
            hist = Counter(sym_counts.get(sym, 0) for sym in range(1, k + 1))
            expect = tuple(hist.get(i, 0) for i in range(n + 1))
            assert phi.counts == expect

    def test_vectorized_rows_agree(self, rng):
        n, k = 6, 4
        counts = rng.multinomial(n, [0.25] * k, size=200)
        rows = profiles_from_count_rows(counts, n, k)
        for row, c in zip(rows, counts):
            assert tuple(row) == tuple(np.bincount(c, minlength=n + 1))


class TestEnumerateProfiles:
    def test_n3_k2(self):
        space = enumerate_profiles(3, 2)
        # partitions of 3 into at most 2 parts: (3) and (2,1)
        assert len(space) == 2
        assert {phi.multiplicities() for phi in space} == {(3,), (2, 1)}

    def test_n1(self):
        for k in (1, 3, 9):
            assert len(enumerate_profiles(1, k)) == 1

    def test_n10_k10_is_42(self):
        space = enumerate_profiles(10, 10)
        assert len(space) == 42
        assert len(space) == partition_count_oracle(10, 10)

    def test_counts_match_recurrence_oracle(self):
        for n in range(1, 11):
            for k in range(1, 8):
                assert count_partitions(n, k) == partition_count_oracle(n, k)
                assert len(enumerate_profiles(n, k)) == count_partitions(n, min(n, k))

    def test_no_duplicates_and_valid(self):
        space = enumerate_profiles(7, 4)
        assert len(set(space.profiles)) == len(space)

    def test_deterministic_reverse_lex_order(self):
        space = enumerate_profiles(4, 3)
        mults = [phi.multiplicities() for phi in space]
        assert mults == [(4,), (3, 1), (2, 2), (2, 1, 1)]

    def test_budget_refusal(self):
        tight = Budgets(partition_cap=10)
        with pytest.raises(BudgetExceededError):
            enumerate_profiles(30, 30, budgets=tight)

    def test_cardinality_monotone_and_bounded(self):
        previous_by_k = {}
        for n in range(1, 9):
            prev_n = 0
            for k in range(1, 7):
                card = len(enumerate_profiles(n, k))
                bounds = profile_space_bounds(n, k)
                assert card <= bounds.bound_poly
                assert card <= bounds.bound_exp
                assert card >= prev_n  # nondecreasing in k
                prev_n = card
                if (n - 1, k) in previous_by_k:
                    assert card >= previous_by_k[(n - 1, k)]  # nondecreasing in n
                previous_by_k[(n, k)] = card

    def test_jsonl_roundtrip(self, tmp_path):
        space = enumerate_profiles(5, 3)
        path = tmp_path / "profiles.jsonl"
        space.write_jsonl(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == len(space)
        assert Profile.from_json(lines[0]) == space.profiles[0]


class TestProfileProbability:
    def test_single_support(self):
        phi = Profile(counts=(0, 0, 0, 1), n=3, k=1)
        assert profile_probability(dd(1.0), phi) == pytest.approx(1.0, abs=1e-15)

    def test_uniform_k2_n2(self):
        both = Profile(counts=(1, 0, 1), n=2, k=2)  # one symbol twice
        distinct = Profile(counts=(0, 2, 0), n=2, k=2)  # two distinct symbols
        p = dd(0.5, 0.5)
        # oracle: four equally likely sequences, two of each shape
        assert profile_probability(p, both) == pytest.approx(0.5, abs=1e-12)
        assert profile_probability(p, distinct) == pytest.approx(0.5, abs=1e-12)

    def test_matches_sequence_enumeration_oracle(self, rng):
        for n, k in [(2, 2), (3, 2), (3, 3), (4, 3), (5, 3)]:
            p = random_distribution(rng, k, allow_zero=True)
            for phi in enumerate_profiles(n, k):
                oracle = sequence_probability_oracle(p, phi)
                assert profile_probability(p, phi) == pytest.approx(oracle, abs=1e-12)

    def test_normalization(self, rng):
        for n, k in [(2, 2), (3, 3), (4, 3), (5, 4), (6, 4)]:
            for _ in range(5):
                p = random_distribution(rng, k)
                total = sum(profile_probability(p, phi) for phi in enumerate_profiles(n, k))
                assert total == pytest.approx(1.0, abs=1e-9)

    def test_permutation_invariance(self, rng):
        p = random_distribution(rng, 4)
        q = DiscreteDistribution(np.roll(p.probs, 2))
        for phi in enumerate_profiles(5, 4):
            assert profile_probability(p, phi) == pytest.approx(
                profile_probability(q, phi), abs=1e-14
            )

    def test_dimension_mismatch(self):
        phi = Profile(counts=(0, 2, 0), n=2, k=2)
        with pytest.raises(ValidationError):
            profile_probability(dd(0.2, 0.3, 0.5), phi)

    @pytest.mark.parametrize(
        "n,k,probs",
        [
            (6, 4, (0.1, 0.2, 0.3, 0.4)),
            (4, 3, (0.2, 0.3, 0.5)),
            (5, 2, (0.35, 0.65)),
        ],
    )
    def test_sampling_consistency(self, n, k, probs):
        # empirical profile frequencies over 1e5 seeded batches vs exact P
        p = dd(*probs)
        reps = 10**5
        from symprop import generator

        draws = generator(424242).choice(k, size=(reps, n), p=p.probs)
        counts = np.stack([np.bincount(row, minlength=k) for row in draws])
        rows = profiles_from_count_rows(counts, n, k)
        observed = Counter(tuple(int(x) for x in row) for row in rows)
        for phi in enumerate_profiles(n, k):
            prob = profile_probability(p, phi)
            freq = observed.get(phi.counts, 0) / reps
            stderr = math.sqrt(max(prob * (1 - prob), 1e-12) / reps)
            assert abs(freq - prob) <= 4 * stderr + 1e-9


class TestBounds:
    def test_poly_bound_n3_k2(self):
        bounds = profile_space_bounds(3, 2)
        assert bounds.bound_poly == pytest.approx(16.0)
        assert len(enumerate_profiles(3, 2)) <= bounds.bound_poly

    def test_exp_bound_n4(self):
        bounds = profile_space_bounds(4, 6)
        assert bounds.bound_exp == pytest.approx(math.exp(6.0))
        assert len(enumerate_profiles(4, 6)) == 5  # partitions of 4

    def test_trivial_n1_k1(self):
        assert profile_space_bounds(1, 1).bound_poly == pytest.approx(2.0)

    def test_overflow_reported_in_log_domain(self):
        bounds = profile_space_bounds(10**6, 10**4)
        assert math.isinf(bounds.bound_poly)
        assert bounds.log_bound_poly == pytest.approx(10**4 * math.log(10**6 + 1))
