"""Budget resolution and the two-phase dependent-subset detector."""

import dataclasses
import math
import warnings

import numpy as np
import pytest

import chbound as cb
from chbound.entropy_core import kl_div
from chbound.witness import CONFIRM_Z, LAMBDA_CAP


def _quiet_budgets(*args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cb.default_budgets(*args, **kwargs)


# alpha pinned to the certified tail ceiling for (n=10, c=0.4, t=0.3);
# a Bernoulli(0.7) tail at threshold 0.7 n meets it with probability ~0.159
ALPHA_10 = math.exp(-10 * kl_div(0.7, 0.4))
WP_10 = cb.default_budgets(10, 0.4, 0.3, ALPHA_10)


class TestDefaultBudgets:
    def test_lambda_is_optimizing_tilt(self):
        wp = cb.default_budgets(4, 0.5, 0.25, 0.9)
        assert wp.lam == pytest.approx(2 / 3, rel=1e-15)

    def test_lambda_capped_below_one(self):
        # t = 1 - c makes the raw tilt exactly 1
        wp = cb.default_budgets(2, 0.5, 0.5, 0.9)
        assert wp.lam == LAMBDA_CAP == 1.0 - 1e-6

    def test_margin_closed_form(self):
        assert cb.default_budgets(2, 0.5, 0.5, 0.9).margin_threshold == 0.9**16 / 8
        assert cb.default_budgets(4, 0.5, 0.25, 0.9).margin_threshold == 0.9**32 / 8
        near_one = cb.default_budgets(2, 0.5, 0.5, 1 - 1e-12).margin_threshold
        assert near_one == pytest.approx(1 / 8, rel=1e-9)

    def test_round_budgets_uncapped_region(self):
        wp = cb.default_budgets(1, 0.5, 0.5, 0.999)
        assert wp.m_search == math.ceil(64 * 0.999**-16 * math.log(2.0)) == 46
        assert wp.m_confirm == math.ceil(64 * (0.999**16 / 8) ** -2 * math.log(100.0)) == 19477

    def test_round_budgets_hit_caps(self):
        wp = _quiet_budgets(10, 0.5, 0.5, 0.5)
        assert wp.m_search == 50_000 and wp.m_confirm == 20_000
        small = _quiet_budgets(10, 0.5, 0.5, 0.5, m_search_cap=123, m_confirm_cap=45)
        assert small.m_search == 123 and small.m_confirm == 45

    def test_margin_underflow_raises(self):
        with pytest.raises(cb.BudgetOverflowError):
            cb.default_budgets(2, 0.5, 0.5, 1e-200)

    def test_huge_inverse_power_still_caps(self):
        # the margin is subnormal but positive while alpha^(-4/(c t))
        # overflows a double; budgets must cap, not raise
        wp = _quiet_budgets(2, 0.1, 0.0376, 0.5)
        assert wp.m_search == 50_000 and wp.m_confirm == 20_000
        assert wp.margin_threshold > 0.0

    @pytest.mark.parametrize(
        "n,c,t,alpha",
        [
            (0, 0.5, 0.25, 0.5),
            (2, 0.0, 0.25, 0.5),
            (2, 1.0, 0.25, 0.5),
            (2, 0.5, 0.0, 0.5),
            (2, 0.5, 0.6, 0.5),
            (2, 0.5, 0.25, 0.0),
            (2, 0.5, 0.25, 1.0),
        ],
    )
    def test_rejects_out_of_range_inputs(self, n, c, t, alpha):
        with pytest.raises(cb.ValidationError):
            cb.default_budgets(n, c, t, alpha)


class TestWitnessParams:
    def test_tail_bound_value(self):
        assert WP_10.tail_bound == pytest.approx(ALPHA_10, rel=1e-15)

    def test_warns_when_alpha_below_tail_bound(self):
        with pytest.warns(UserWarning, match="below the certified tail bound"):
            cb.default_budgets(10, 0.4, 0.3, ALPHA_10 / 2)

    def test_no_warning_at_or_above_tail_bound(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cb.default_budgets(10, 0.4, 0.3, ALPHA_10)  # equality: guaranteed regime
            cb.default_budgets(10, 0.4, 0.3, 0.5)

    @pytest.mark.parametrize(
        "field,value",
        [
            ("lam", 0.0),
            ("lam", 1.0),
            ("m_search", 0),
            ("m_confirm", -3),
            ("margin_threshold", 0.0),
        ],
    )
    def test_constructor_validation(self, field, value):
        with pytest.raises(cb.ValidationError):
            dataclasses.replace(WP_10, **{field: value})


class TestWitnessReport:
    def test_found_requires_consistent_fields(self):
        with pytest.raises(cb.ValidationError, match="non-empty subset"):
            cb.WitnessReport("found", (), 0.5, 0.4, 0.01, 10, 1)
        with pytest.raises(cb.ValidationError, match="empirical_moment > threshold"):
            cb.WitnessReport("found", (0,), 0.3, 0.4, 0.01, 10, 1)

    def test_not_found_forbids_subset(self):
        with pytest.raises(cb.ValidationError, match="must not name"):
            cb.WitnessReport("not_found", (1,), 0.5, 0.4, 0.01, 10, 1)

    def test_verdict_vocabulary(self):
        with pytest.raises(cb.ValidationError, match="verdict"):
            cb.WitnessReport("maybe", (), 0.0, 0.0, 0.0, 1, 0)

    def test_subset_coerced_to_ints(self):
        rep = cb.WitnessReport("found", (np.int64(2), np.int64(0)), 0.9, 0.5, 0.01, 10, 1)
        assert rep.subset == (2, 0)
        assert all(type(i) is int for i in rep.subset)


class TestDetectionOnDependentModel:
    def test_fully_shared_bits_are_caught(self):
        # ten copies of one Bernoulli(0.7) bit: every subset product is 0.7,
        # wildly above 0.4^|S| for |S| >= 2
        model = cb.PlantedCliqueModel(10, 0.7, k=10)
        report = cb.find_dependent_set(model, WP_10, seed=0)
        assert report.verdict == "found"
        assert len(report.subset) >= 2
        assert report.note == ""
        assert report.samples_used == WP_10.m_search + WP_10.m_confirm
        assert report.candidates >= 1
        # every subset of identical coordinates has exact moment 0.7
        gap = report.empirical_moment - report.threshold
        assert gap >= CONFIRM_Z * report.confirm_std_error
        assert abs(report.empirical_moment - 0.7) < 5 * report.confirm_std_error

    def test_confirmation_matches_exact_moment(self):
        model = cb.PlantedCliqueModel(10, 0.7, k=10)
        report = cb.find_dependent_set(model, WP_10, seed=0)
        exact = cb.exact_moment(model, report.subset)
        assert exact == pytest.approx(0.7, rel=1e-12)
        assert abs(report.empirical_moment - exact) < 5 * report.confirm_std_error

    def test_single_variable_with_inflated_mean(self):
        wp = cb.default_budgets(1, 0.4, 0.3, 0.9)
        report = cb.find_dependent_set(cb.BooleanIIDModel(1, 0.7), wp, seed=0)
        assert report.verdict == "found"
        assert report.subset == (0,)
        assert report.threshold == pytest.approx(0.4 + wp.margin_threshold)


class TestDetectionOnNullModel:
    @pytest.mark.parametrize("seed", range(5))
    def test_independent_variables_stay_clean(self, seed):
        report = cb.find_dependent_set(cb.BooleanIIDModel(10, 0.4), WP_10, seed=seed)
        assert report.verdict == "not_found"
        assert report.subset == ()
        assert report.candidates > 0

    def test_rejected_candidate_is_described(self):
        wp = cb.default_budgets(3, 0.5, 0.25, 0.9)
        report = cb.find_dependent_set(cb.BooleanIIDModel(3, 0.5), wp, seed=0)
        assert report.verdict == "not_found"
        assert "did not clear" in report.note
        assert report.candidates > 0
        assert report.empirical_moment > 0.0
        assert report.samples_used == wp.m_search + wp.m_confirm


class TestDetectionMechanics:
    def test_same_seed_same_report(self):
        model = cb.PlantedCliqueModel(10, 0.7, k=10)
        assert cb.find_dependent_set(model, WP_10, seed=3) == cb.find_dependent_set(
            model, WP_10, seed=3
        )

    def test_worker_count_never_changes_report(self):
        model = cb.PlantedCliqueModel(10, 0.7, k=10)
        runs = [cb.find_dependent_set(model, WP_10, seed=0, workers=w) for w in (1, 4)]
        assert runs[0] == runs[1]
        null_runs = [
            cb.find_dependent_set(cb.BooleanIIDModel(10, 0.4), WP_10, seed=2, workers=w)
            for w in (1, 4)
        ]
        assert null_runs[0] == null_runs[1]

    def test_seed_moves_the_candidate(self):
        model = cb.PlantedCliqueModel(10, 0.7, k=10)
        a = cb.find_dependent_set(model, WP_10, seed=0)
        b = cb.find_dependent_set(model, WP_10, seed=1)
        assert a.verdict == b.verdict == "found"
        assert a.subset != b.subset or a.empirical_moment != b.empirical_moment

    def test_no_candidate_when_min_rounds_unreachable(self):
        wp = dataclasses.replace(
            cb.default_budgets(3, 0.5, 0.25, 0.9), m_search=50, m_confirm=10
        )
        report = cb.find_dependent_set(
            cb.BooleanIIDModel(3, 0.5), wp, seed=0, min_rounds_per_subset=51
        )
        assert report.verdict == "not_found"
        assert report.candidates == 0
        assert report.samples_used == 50  # confirmation never ran
        assert "no non-empty subset" in report.note

    def test_out_of_range_samples_rejected(self):
        model = cb.ExplicitTableModel([([1.5, 0.5], 1.0)])
        wp = cb.default_budgets(2, 0.5, 0.25, 0.9)
        with pytest.raises(cb.ValidationError, match=r"leave \[a_i, a_i \+ b\]"):
            cb.find_dependent_set(model, wp, seed=0)

    def test_argument_validation(self):
        model = cb.BooleanIIDModel(3, 0.5)
        wp = cb.default_budgets(3, 0.5, 0.25, 0.9)
        with pytest.raises(cb.ValidationError, match="does not match"):
            cb.find_dependent_set(cb.BooleanIIDModel(4, 0.5), wp)
        with pytest.raises(cb.ValidationError):
            cb.find_dependent_set(model, wp, workers=0)
        with pytest.raises(cb.ValidationError):
            cb.find_dependent_set(model, wp, block_size=0)
        with pytest.raises(cb.ValidationError):
            cb.find_dependent_set(model, wp, min_rounds_per_subset=0)
