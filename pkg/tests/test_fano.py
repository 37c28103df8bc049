import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symprop import (
    DiscreteDistribution,
    FanoInputs,
    FiniteExperiment,
    ValidationError,
    adversarial_property,
    build_packing,
    constant_estimator,
    empirical_estimator,
    experiment_from_packing,
    fano_bound,
    mi_upper_bound,
    mutual_information_exact,
    oracle_estimator,
    perturb,
    pml_plugin_estimator,
    test_rule as decision_rule,
    verify_lemma,
)
from symprop.packing import delta_upper_limit


def dd(*values):
    return DiscreteDistribution(np.asarray(values, dtype=float))


def mi_sequence_oracle(exp):
    """Raw k**n sequence enumeration, no count-vector grouping."""
    n, k, m = exp.n, exp.k, exp.m
    seqs = list(itertools.product(range(1, k + 1), repeat=n))
    probs = np.array(
        [[math.prod(p.probs[s - 1] for s in seq) for seq in seqs] for p in exp.hypotheses]
    )
    mix = probs.mean(axis=0)
    total = 0.0
    for u in range(m):
        mask = probs[u] > 0
        total += float(
            (probs[u][mask] * (np.log(probs[u][mask]) - np.log(mix[mask]))).sum()
        )
    return total / m


class TestFanoBound:
    def test_classical_reduction(self):
        for separation in (0.1, 1.0, 2.5):
            for m in (2, 3, 10, 100):
                value = fano_bound(FanoInputs(separation, 1.0, m, 0.0))
                expect = separation / 2 * (1 - math.log(2) / math.log(m))
                assert value == expect

    def test_algebraic_zero_boundary(self):
        # mi = p_min (log m - log 2) zeroes the bound
        p_min, m = 0.7, 5
        mi = p_min * (math.log(m) - math.log(2))
        assert fano_bound(FanoInputs(1.0, p_min, m, mi)) == pytest.approx(0.0, abs=1e-15)

    def test_m_below_2_rejected(self):
        with pytest.raises(ValidationError):
            FanoInputs(1.0, 1.0, 1, 0.0)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValidationError):
            FanoInputs(-1.0, 1.0, 2, 0.0)
        with pytest.raises(ValidationError):
            FanoInputs(1.0, 0.0, 2, 0.0)
        with pytest.raises(ValidationError):
            FanoInputs(1.0, 1.0, 2, -0.1)

    @given(
        st.floats(0.0, 5.0),
        st.floats(0.01, 1.0),
        st.integers(2, 50),
        st.floats(0.0, 3.0),
        st.floats(0.001, 1.0),
    )
    @settings(max_examples=200)
    def test_monotone_in_mi_and_separation(self, sep, p_min, m, mi, bump):
        base = fano_bound(FanoInputs(sep, p_min, m, mi))
        assert fano_bound(FanoInputs(sep, p_min, m, mi + bump)) <= base + 1e-12
        # the clamped-at-zero bound is what grows with the separation
        clamped = max(base, 0.0)
        wider = max(fano_bound(FanoInputs(sep + bump, p_min, m, mi)), 0.0)
        assert wider >= clamped - sep * 1e-12 - 1e-12


class TestMutualInformation:
    def test_identical_hypotheses_zero(self):
        p = dd(0.3, 0.7)
        exp = FiniteExperiment(
            hypotheses=(p, p), losses=(None, None), n=3, action_set_test=lambda a: True
        )
        assert mutual_information_exact(exp) == pytest.approx(0.0, abs=1e-15)

    def test_n0_zero(self):
        exp = FiniteExperiment(
            hypotheses=(dd(0.3, 0.7), dd(0.7, 0.3)),
            losses=(None, None),
            n=0,
            action_set_test=lambda a: True,
        )
        assert mutual_information_exact(exp) == 0.0

    def test_matches_raw_sequence_oracle(self, rng):
        for n, k in [(2, 2), (3, 2), (3, 3), (4, 3), (5, 3)]:
            hyps = []
            for _ in range(3):
                raw = rng.random(k)
                hyps.append(DiscreteDistribution(raw / raw.sum()))
            exp = FiniteExperiment(
                hypotheses=tuple(hyps),
                losses=(None,) * 3,
                n=n,
                action_set_test=lambda a: True,
            )
            assert mutual_information_exact(exp) == pytest.approx(
                mi_sequence_oracle(exp), abs=1e-10
            )

    def test_zero_mass_coordinates_handled(self):
        exp = FiniteExperiment(
            hypotheses=(dd(1.0, 0.0), dd(0.0, 1.0)),
            losses=(None, None),
            n=2,
            action_set_test=lambda a: True,
        )
        # perfectly distinguishable pair: I = log 2
        assert mutual_information_exact(exp) == pytest.approx(math.log(2), abs=1e-12)

    def test_packing_mi_below_closed_form(self):
        n, k = 4, 4
        pk = build_packing(k, 0.7 * delta_upper_limit(k))
        exp = experiment_from_packing(pk, n)
        mi = mutual_information_exact(exp)
        assert 0.0 <= mi <= mi_upper_bound(n, k, pk.delta)

    def test_bounded_by_log_m(self, rng):
        for _ in range(10):
            k = int(rng.integers(2, 4))
            m = int(rng.integers(2, 5))
            hyps = []
            for _ in range(m):
                raw = rng.random(k)
                hyps.append(DiscreteDistribution(raw / raw.sum()))
            exp = FiniteExperiment(
                hypotheses=tuple(hyps),
                losses=(None,) * m,
                n=3,
                action_set_test=lambda a: True,
            )
            assert mutual_information_exact(exp) <= math.log(m) + 1e-12

    def test_profile_observable_loses_information(self, rng):
        # data processing: profile MI never exceeds sequence MI
        for n, k in [(3, 2), (4, 3), (5, 3)]:
            hyps = []
            for _ in range(3):
                raw = rng.random(k)
                hyps.append(DiscreteDistribution(raw / raw.sum()))
            exp = FiniteExperiment(
                hypotheses=tuple(hyps),
                losses=(None,) * 3,
                n=n,
                action_set_test=lambda a: True,
            )
            seq_mi = mutual_information_exact(exp)
            prof_mi = mutual_information_exact(exp, observable="profile")
            assert prof_mi <= seq_mi + 1e-12


class TestTestRule:
    @pytest.fixture
    def experiment(self):
        pk = build_packing(4, 0.6 * delta_upper_limit(4))
        return pk, experiment_from_packing(pk, n=3)

    def test_recovers_own_hypothesis(self, experiment):
        pk, exp = experiment
        for i, u in enumerate(pk.sign_vectors):
            assert decision_rule(perturb(pk, u), exp) == i

    def test_tie_breaks_to_lowest_index(self, experiment):
        pk, exp = experiment
        # the center is equidistant from every hypothesis
        assert decision_rule(pk.center, exp) == 0

    def test_rejects_nonmember_action(self, experiment):
        pk, exp = experiment
        with pytest.raises(ValidationError):
            decision_rule(dd(0.0, 0.0, 0.0, 1.0), exp)


class TestVerifyLemma:
    def test_constant_center_closed_form(self):
        # data-independent estimator: p_min = 1, lhs = max_u F_u(center) = k delta
        k = 4
        pk = build_packing(k, 0.6 * delta_upper_limit(k))
        exp = experiment_from_packing(pk, n=3)
        est = constant_estimator(pk.center, name="constant-center")
        report = verify_lemma(exp, est, seed=1)
        assert report.method == "exact"
        assert report.applicable
        assert report.p_min == pytest.approx(1.0, abs=1e-12)
        assert report.lhs_risk == pytest.approx(k * pk.delta, abs=1e-12)
        assert report.delta == pytest.approx(2 * k * pk.delta, abs=1e-12)
        assert report.satisfied

    def test_empirical_exact_small(self):
        pk = build_packing(2, 0.05)
        exp = experiment_from_packing(pk, n=4, m=2)
        report = verify_lemma(exp, empirical_estimator(), seed=2)
        assert report.method == "exact"
        assert report.satisfied
        assert 0.0 <= report.p_min <= 1.0

    def test_identical_hypotheses_degenerate(self):
        pk = build_packing(2, 0.05)
        u = pk.sign_vectors[0]
        p_u = perturb(pk, u)
        prop = adversarial_property(u, pk)
        exp = FiniteExperiment(
            hypotheses=(p_u, p_u),
            losses=(prop, prop),
            n=2,
            action_set_test=lambda a: True,
        )
        report = verify_lemma(exp, constant_estimator(p_u), seed=3)
        assert report.mi == pytest.approx(0.0, abs=1e-15)
        assert report.delta == pytest.approx(0.0, abs=1e-15)
        assert report.fano_bound == pytest.approx(0.0, abs=1e-15)
        assert report.satisfied

    def test_p_min_zero_reported_not_raised(self):
        # narrow intervals at k=4 are unreachable for n=4 empirical estimates
        pk = build_packing(4, 0.5 * delta_upper_limit(4))
        exp = experiment_from_packing(pk, n=4)
        report = verify_lemma(exp, empirical_estimator(), seed=4)
        assert not report.applicable
        assert report.p_min == 0.0
        assert report.fano_bound <= 0.0
        assert report.satisfied

    def test_monte_carlo_mode(self):
        pk = build_packing(2, 0.05)
        exp = experiment_from_packing(pk, n=4, m=2)
        report = verify_lemma(exp, empirical_estimator(), seed=5, method="monte_carlo", reps=400)
        assert report.method == "monte_carlo"
        assert report.reps == 400
        assert report.satisfied
        exact = verify_lemma(exp, empirical_estimator(), seed=5)
        assert report.lhs_risk == pytest.approx(exact.lhs_risk, abs=6 * report.lhs_stderr + 1e-9)

    def test_pml_plugin_runs(self):
        pk = build_packing(2, 0.05)
        exp = experiment_from_packing(pk, n=3, m=2)
        report = verify_lemma(exp, pml_plugin_estimator(), seed=6)
        assert report.satisfied

    def test_oracle_rejected(self):
        pk = build_packing(2, 0.05)
        exp = experiment_from_packing(pk, n=3, m=2)
        with pytest.raises(ValidationError):
            verify_lemma(exp, oracle_estimator(), seed=7)

    def test_report_json_keys(self):
        pk = build_packing(2, 0.05)
        exp = experiment_from_packing(pk, n=3, m=2)
        report = verify_lemma(exp, empirical_estimator(), seed=8)
        import json

        payload = json.loads(report.to_json())
        for key in ("p_min", "mi", "delta", "lhs_risk", "fano_bound", "satisfied"):
            assert key in payload
