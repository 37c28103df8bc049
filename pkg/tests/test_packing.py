import itertools
import math

import numpy as np
import pytest

from symprop import (
    BudgetExceededError,
    Budgets,
    DiscreteDistribution,
    PackingInstance,
    ValidationError,
    build_packing,
    center_distribution,
    chi2,
    choose_delta,
    covers_center_intervals,
    gv_packing,
    kl,
    mi_upper_bound,
    perturb,
    sample_membership,
    separation_check,
    separation_threshold,
    tv,
)
from symprop.packing import delta_upper_limit, gv_size_certificate, hamming


class TestCenterDistribution:
    def test_k2(self):
        assert np.allclose(center_distribution(2).probs, [0.25, 0.75], atol=1e-15)

    def test_k4_formula_and_sum(self):
        p0 = center_distribution(4)
        expect = [1 / 8, 1 / 8 + 1 / 12, 1 / 8 + 2 / 12, 3 / 8]
        assert np.allclose(p0.probs, expect, atol=1e-15)
        assert p0.probs.sum() == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("k", [2, 4, 6, 8, 10, 16])
    def test_min_entry_and_constant_gap(self, k):
        p0 = center_distribution(k)
        assert p0.probs.min() == pytest.approx(1.0 / (2 * k), abs=1e-15)
        assert p0.probs.max() == pytest.approx(3.0 / (2 * k), abs=1e-15)
        gaps = np.diff(p0.probs)
        assert np.allclose(gaps, 1.0 / (k * (k - 1)), atol=1e-15)

    def test_odd_k_rejected(self):
        with pytest.raises(ValidationError):
            center_distribution(5)
        with pytest.raises(ValidationError):
            center_distribution(0)


class TestPerturb:
    def test_mass_conserved(self):
        pk = build_packing(6, 0.5 * delta_upper_limit(6))
        all_plus = (1, 1, 1)
        pu = perturb(pk, all_plus)
        assert pu.probs.sum() == pytest.approx(1.0, abs=1e-14)

    def test_strictly_increasing_for_every_u(self):
        k = 6
        pk = build_packing(k, 0.9 / (4 * k * (k - 1)))
        for u in itertools.product((-1, 1), repeat=k // 2):
            pu = perturb(pk, u)
            assert np.all(np.diff(pu.probs) > 0)

    def test_tv_to_center(self):
        k = 8
        pk = build_packing(k, 0.7 * delta_upper_limit(k))
        for u in pk.sign_vectors[:5]:
            assert tv(perturb(pk, u), pk.center) == pytest.approx(
                (k // 2) * pk.delta, abs=1e-14
            )

    def test_delta_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            build_packing(6, delta_upper_limit(6) * 1.01)
        with pytest.raises(ValidationError):
            build_packing(6, 0.0)

    def test_bad_sign_vector_rejected(self):
        pk = build_packing(4, 0.5 * delta_upper_limit(4))
        with pytest.raises(ValidationError):
            perturb(pk, (1, 0))


class TestGvPacking:
    def test_k_half_5_accepts_all_32(self):
        # minimum distance ceil(5/5) = 1 is vacuous for distinct vectors
        vectors = gv_packing(5)
        assert len(vectors) == 32

    def test_k_half_10_distance_2(self):
        vectors = gv_packing(10)
        certificate = gv_size_certificate(10, 2)
        assert certificate >= 2**10 // 11
        assert len(vectors) >= certificate
        assert len(vectors) >= math.exp(10 / 8.0)
        for a, b in itertools.combinations(vectors, 2):
            assert hamming(a, b) >= 2

    def test_pairwise_distance_recheck(self):
        for k_half in (3, 4, 6, 11):
            distance = max(1, math.ceil(k_half / 5))
            vectors = gv_packing(k_half)
            for a, b in itertools.combinations(vectors, 2):
                assert hamming(a, b) >= distance

    def test_deterministic(self):
        assert gv_packing(7) == gv_packing(7)

    def test_budget(self):
        with pytest.raises(BudgetExceededError):
            gv_packing(12, budgets=Budgets(gv_cap=2**10))


class TestMembershipRegion:
    @pytest.fixture
    def pk(self):
        return build_packing(10, 0.8 * delta_upper_limit(10))

    def test_center_is_member(self, pk):
        assert covers_center_intervals(pk.center, pk)

    def test_every_hypothesis_is_member(self, pk):
        for u in pk.sign_vectors:
            assert covers_center_intervals(perturb(pk, u), pk)

    def test_uniform_is_not_member_at_k10(self, pk):
        assert not covers_center_intervals(DiscreteDistribution.uniform(10), pk)

    def test_sampler_returns_members(self, pk):
        rows = sample_membership(pk, trials=256, seed=3)
        assert rows.shape == (256, 10)
        for row in rows:
            assert covers_center_intervals(DiscreteDistribution.normalized(row), pk)

    def test_open_interval_boundary_counts_as_miss(self):
        pk = build_packing(2, 0.1)
        # 0.5 sits exactly on the shared endpoint of both intervals
        boundary = DiscreteDistribution(np.array([0.5, 0.5]))
        assert not covers_center_intervals(boundary, pk)


class TestSeparation:
    @pytest.mark.parametrize("k", [6, 8])
    def test_minimum_respects_threshold(self, k):
        pk = build_packing(k, 0.8 * delta_upper_limit(k))
        minimum = separation_check(pk, trials=1000, seed=77)
        assert minimum >= separation_threshold(pk)

    def test_hypothesis_pair_value_consistent(self):
        # at q = p_u the pair sum is exactly 4 delta d_H(u, v)
        pk = build_packing(8, 0.6 * delta_upper_limit(8))
        u, v = pk.sign_vectors[0], pk.sign_vectors[3]
        from symprop import adversarial_property, evaluate

        q = perturb(pk, u)
        total = evaluate(adversarial_property(u, pk), q) + evaluate(
            adversarial_property(v, pk), q
        )
        assert total == pytest.approx(4 * pk.delta * hamming(u, v), abs=1e-12)
        assert total >= separation_threshold(pk)

    def test_single_vector_packing_rejected(self):
        lonely = PackingInstance(
            k=2,
            delta=0.05,
            sign_vectors=((1,),),
            min_hamming=1,
            certified_lower=1,
        )
        with pytest.raises(ValidationError):
            separation_check(lonely, trials=10, seed=0)


class TestChooseDelta:
    def test_unclamped_case(self):
        choice = choose_delta(10**6, 8, 0.1)
        assert not choice.clamped
        assert choice.delta == pytest.approx(0.1 / math.sqrt(8 * 10**6))

    def test_clamped_case(self):
        choice = choose_delta(10, 8, 0.1)
        assert choice.clamped
        assert choice.delta == pytest.approx(0.99 / (4 * 8 * 7))

    def test_c_zero_rejected(self):
        with pytest.raises(ValidationError):
            choose_delta(100, 8, 0.0)


class TestMiUpperBound:
    def test_zero_delta(self):
        assert mi_upper_bound(100, 4, 0.0) == 0.0

    def test_arithmetic(self):
        assert mi_upper_bound(100, 4, 0.01) == pytest.approx(0.32)

    def test_divergence_chain(self):
        # n E_u[kl] <= n E_u[chi2] <= 2 n k^2 delta^2
        n = 50
        for k in (4, 6, 8):
            pk = build_packing(k, 0.8 * delta_upper_limit(k))
            kls = [kl(perturb(pk, u), pk.center) for u in pk.sign_vectors]
            chis = [chi2(perturb(pk, u), pk.center) for u in pk.sign_vectors]
            assert n * np.mean(kls) <= n * np.mean(chis) + 1e-15
            assert n * np.mean(chis) <= mi_upper_bound(n, k, pk.delta) + 1e-15


class TestSerialization:
    def test_json_roundtrip(self):
        pk = build_packing(8, 0.5 * delta_upper_limit(8))
        back = PackingInstance.from_json(pk.to_json())
        assert back.k == pk.k
        assert back.delta == pk.delta
        assert back.sign_vectors == pk.sign_vectors
        assert np.array_equal(back.center.probs, pk.center.probs)
