import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavsec.fairness import (ThroughputLedger, fairness_factor,
                             instantaneous_fst, jain_index, schedule,
                             total_fst, update_indicator)


def test_jain_perfect_fairness():
    assert jain_index([1, 1, 1, 1, 1]) == pytest.approx(1.0, rel=1e-15)


def test_jain_single_user_extreme():
    assert jain_index([1, 0, 0, 0, 0]) == pytest.approx(0.2, rel=1e-15)


def test_jain_hand_case():
    assert jain_index([3, 1]) == pytest.approx(0.8, rel=1e-15)


def test_jain_zero_total_degenerate():
    assert jain_index([0, 0, 0, 0]) == 0.25
    assert jain_index([0.0]) == 1.0


def test_jain_empty_rejected():
    with pytest.raises(ValueError):
        jain_index([])


@given(st.lists(st.floats(min_value=0, max_value=1e9), min_size=1, max_size=12))
def test_jain_bounds(xs):
    j = jain_index(xs)
    assert 1.0 / len(xs) - 1e-9 <= j <= 1.0 + 1e-9


def test_indicator_threshold_reached():
    assert update_indicator(False, 0.96, 0.95) is True
    assert update_indicator(False, 0.95, 0.95) is True


def test_indicator_latched_forever():
    assert update_indicator(True, 0.10, 0.95) is True


def test_indicator_below_threshold_stays_off():
    assert update_indicator(False, 0.90, 0.95) is False


def test_latch_monotone_over_random_sequences():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        latched = False
        seen_on = False
        for jain in rng.uniform(0, 1, size=30):
            latched = update_indicator(latched, float(jain), 0.95)
            if seen_on:
                assert latched
            seen_on = seen_on or latched


def test_factor_latched_is_one():
    assert fairness_factor(987.0, True, 150.0, 0.1) == 1.0


def test_factor_at_threshold_is_zero():
    assert fairness_factor(150.0, False, 150.0, 0.1) == pytest.approx(0.0, abs=1e-15)


def test_factor_at_zero_cum():
    expected = 2.0 / (1.0 + math.exp(-15.0)) - 1.0
    assert fairness_factor(0.0, False, 150.0, 0.1) == pytest.approx(expected, rel=1e-12)
    assert fairness_factor(0.0, False, 150.0, 0.1) == pytest.approx(0.9999994, abs=1e-7)


def test_factor_strictly_decreasing_and_bounded():
    vals = [fairness_factor(c, False, 150.0, 0.1) for c in np.linspace(0, 400, 60)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(-1.0 < v < 1.0 for v in vals)


def test_factor_requires_positive_kgp():
    with pytest.raises(ValueError):
        fairness_factor(0.0, False, 150.0, 0.0)


def test_schedule_pure_argmax_on_rates():
    assert schedule([0, 1, 2], [1, 1, 1], [1.0, 5.0, 3.0], [0, 0, 0]) == 1


def test_schedule_pure_argmax_on_factors():
    assert schedule([0, 1, 2], [0.2, 0.9, 0.5], [2.0, 2.0, 2.0], [0, 0, 0]) == 1


def test_schedule_tie_breaks_lowest_cum_then_index():
    # all products zero -> lowest cumulative wins
    assert schedule([3, 4, 5], [0.5, 0.5, 0.5], [0, 0, 0], [9.0, 2.0, 4.0]) == 4
    # still tied on cum -> lowest user index
    assert schedule([7, 2, 5], [1, 1, 1], [0, 0, 0], [1.0, 1.0, 1.0]) == 2


def test_schedule_matches_brute_force_oracle():
    rng = np.random.default_rng(5)
    for _ in range(200):
        users = list(range(6))
        f = rng.uniform(-1, 1, 6)
        r = rng.uniform(0, 5e6, 6)
        c = rng.uniform(0, 1e8, 6)
        best = max(users, key=lambda u: (f[u] * r[u], -c[u], -u))
        assert schedule(users, f, r, c) == best


def test_schedule_invariant_to_rate_rescaling():
    rng = np.random.default_rng(6)
    for _ in range(50):
        f = rng.uniform(0, 1, 5)
        r = rng.uniform(0, 1e6, 5)
        c = rng.uniform(0, 1e8, 5)
        users = [10, 11, 12, 13, 14]
        assert schedule(users, f, r, c) == schedule(users, f, r * 37.5, c)


def test_schedule_empty_cluster_rejected():
    with pytest.raises(ValueError):
        schedule([], [], [], [])


def test_instantaneous_and_total_fst_definitional():
    per_slot = [instantaneous_fst([0.5, 1.0], [2e6, 3e6], 1.0),
                instantaneous_fst([1.0, 1.0], [0.0, 1e6], 1.0)]
    assert per_slot[0] == pytest.approx(4e6)
    assert per_slot[1] == pytest.approx(1e6)
    assert total_fst(per_slot) == pytest.approx(5e6)


def test_fst_never_exceeds_unweighted_throughput():
    rng = np.random.default_rng(7)
    for _ in range(100):
        f = rng.uniform(-1, 1, 4)   # factors are always <= 1
        r = rng.uniform(0, 1e7, 4)
        assert instantaneous_fst(f, r, 1.0) <= r.sum() * 1.0 + 1e-6


class TestLedger:
    def make(self):
        return ThroughputLedger([[0, 1, 2], [3, 4]], n_users=5)

    def test_initial_state(self):
        led = self.make()
        assert np.all(led.per_user_cum_bits == 0)
        assert np.all(~led.fairness_latched)
        np.testing.assert_allclose(led.jain_per_cluster, [1 / 3, 1 / 2])

    def test_accrue_updates_user_and_cluster(self):
        led = self.make()
        led.accrue(0, 1, 2e6, 1.0)
        led.accrue(1, 4, 5e5, 1.0)
        assert led.per_user_cum_bits[1] == 2e6
        assert led.per_cluster_cum_bits[0] == 2e6
        assert led.per_cluster_cum_bits[1] == 5e5

    def test_zero_rate_slot_changes_nothing(self):
        led = self.make()
        led.accrue(0, 0, 0.0, 1.0)
        assert np.all(led.per_user_cum_bits == 0)

    def test_cluster_totals_consistent(self):
        led = self.make()
        rng = np.random.default_rng(8)
        for _ in range(50):
            led.accrue(0, int(rng.choice([0, 1, 2])), float(rng.uniform(0, 1e6)), 1.0)
            led.accrue(1, int(rng.choice([3, 4])), float(rng.uniform(0, 1e6)), 1.0)
        for m, users in enumerate(led.clusters):
            assert led.per_cluster_cum_bits[m] == pytest.approx(
                led.per_user_cum_bits[users].sum(), rel=1e-9)

    def test_wrong_cluster_rejected(self):
        led = self.make()
        with pytest.raises(ValueError):
            led.accrue(0, 4, 1.0, 1.0)

    def test_three_slot_hand_episode(self):
        # one cluster of two users; rates chosen by hand
        led = ThroughputLedger([[0, 1]], n_users=2)
        picks = [(0, 4e6), (1, 2e6), (0, 1e6)]
        fst_parts = []
        for user, rate in picks:
            led.latch_step(0.95)
            factors = led.factors(0, 150.0, 0.1)
            fst_parts.append(instantaneous_fst([factors[user]], [rate], 1.0))
            led.accrue(0, user, rate, 1.0)
            led.refresh_jain()
        assert led.per_user_cum_bits[0] == pytest.approx(5e6)
        assert led.per_user_cum_bits[1] == pytest.approx(2e6)
        # hand-summed: slot factors from the cumulative state before each slot
        f1 = fairness_factor(0.0, False, 150.0, 0.1)
        f2 = fairness_factor(0.0, False, 150.0, 0.1)
        f3 = fairness_factor(4.0, False, 150.0, 0.1)
        expected = f1 * 4e6 + f2 * 2e6 + f3 * 1e6
        assert total_fst(fst_parts) == pytest.approx(expected, rel=1e-12)

    def test_latch_survives_collapse(self):
        led = ThroughputLedger([[0, 1]], n_users=2)
        led.accrue(0, 0, 1e6, 1.0)
        led.accrue(0, 1, 1e6, 1.0)
        led.refresh_jain()
        assert led.jain_per_cluster[0] == pytest.approx(1.0)
        led.latch_step(0.95)
        assert led.fairness_latched[0]
        # hammer one user; the latch must hold regardless of the Jain value
        for _ in range(20):
            led.accrue(0, 0, 5e6, 1.0)
        led.refresh_jain()
        led.latch_step(0.95)
        assert led.fairness_latched[0]
        assert np.all(led.factors(0, 150.0, 0.1) == 1.0)

    def test_empty_cluster_rejected(self):
        with pytest.raises(ValueError):
            ThroughputLedger([[0], []], n_users=1)
