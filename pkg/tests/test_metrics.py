import numpy as np
import pytest

from delaytron.datasets import Dataset
from delaytron.delays import constant_schedule, make_schedule
from delaytron.errors import ConfigError, UsageError
from delaytron.learners import LearnerConfig, RoundRecord, run
from delaytron.metrics import (ComparatorResult, MetricsTracker, dataset_hinge_losses,
                               empirical_regret, fit_comparator, seed_summary)
from delaytron.rng import rng_stream


def _rec(t, y_tilde, y, applied=()):
    return RoundRecord(t, t - 1, y_tilde, y_tilde, y_tilde != y, applied, 0, 1.0)


def test_all_correct():
    tr = MetricsTracker()
    for t in range(1, 11):
        tr.track(_rec(t, 1, 1), 1, 1.0)
    m = tr.result(constant_schedule(10, 1))
    assert m.error_rate.tolist() == [0.0] * 10
    assert m.cum_hinge_loss.tolist() == list(map(float, range(1, 11)))


def test_alternating():
    tr = MetricsTracker()
    for t in range(1, 21):
        tr.track(_rec(t, 1 if t % 2 else 2, 1), 1, 0.0)
    m = tr.result(constant_schedule(20, 1))
    assert all(m.error_rate[2 * k - 1] == 0.5 for k in range(1, 11))
    assert np.all(np.diff(m.mistakes) >= 0)


def test_out_of_order_round():
    tr = MetricsTracker()
    tr.track(_rec(1, 1, 1), 1, 0.0)
    with pytest.raises(UsageError):
        tr.track(_rec(3, 1, 1), 1, 0.0)


def test_tracker_counts_feedbacks():
    tr = MetricsTracker()
    tr.track(_rec(1, 1, 1), 1, 0.0)
    tr.track(_rec(2, 1, 1, (1,)), 1, 0.0)
    m = tr.result(constant_schedule(2, 1))
    assert m.feedbacks_received.tolist() == [0, 1]
    assert m.missing_so_far.tolist() == [1, 1]
    assert (m.num_missing, m.sum_delays, m.sum_delays_delivered) == (1, 2, 1)


def test_zero_learner_loss_is_t(synsep_small):
    # gamma only moves the sampled label; a learner that never updates keeps l_H = 1
    res = run(LearnerConfig(seed=0), synsep_small, constant_schedule(50, 100))
    assert res.metrics.cum_hinge_loss.tolist() == list(map(float, range(1, 51)))


def test_metrics_invariants(synsep_small):
    s = make_schedule("uniform", 2000, 200, np.random.default_rng(1))
    m = run(LearnerConfig(seed=1), synsep_small, s).metrics
    assert np.all((m.error_rate >= 0) & (m.error_rate <= 1))
    for arr in (m.mistakes, m.feedbacks_received, m.missing_sum, m.cum_hinge_loss):
        assert np.all(np.diff(arr) >= 0)
    assert m.num_missing == int(np.sum(np.arange(1, 2001) + s.delays > 2000))
    assert m.feedbacks_received[-1] + m.num_missing == 2000


# ---- comparator -----------------------------------------------------------------

def test_comparator_single_example():
    d = Dataset(np.array([[1.0, 0.0]]), np.array([1]), 2)
    c = fit_comparator(d, passes=20)
    assert c.total_loss <= 1e-3
    assert c.weights[0, 0] - c.weights[1, 0] >= 1 - 1e-3


def test_comparator_rejects_zero_passes(synsep_small):
    with pytest.raises(ConfigError):
        fit_comparator(synsep_small, passes=0)


def test_comparator_beats_zero(synsep_small):
    c = fit_comparator(synsep_small.head(2000), passes=5)
    assert c.total_loss <= 2000
    assert set(c.trace) >= {"passes", "final_objective", "step_scale"}


@pytest.mark.slow
def test_comparator_synsep(synsep_full):
    c = fit_comparator(synsep_full, passes=20)
    assert c.total_loss / len(synsep_full) <= 0.01


def test_comparator_order_invariant(synsep_small):
    data = synsep_small.head(2000)
    a = fit_comparator(data, passes=20)
    b = fit_comparator(data.shuffled(np.random.default_rng(3)), passes=20)
    assert abs(a.total_loss - b.total_loss) / len(data) <= 1e-3


def test_dataset_hinge_losses(synsep_small):
    data = synsep_small.head(5)
    assert dataset_hinge_losses(np.zeros((9, 400)), data).tolist() == [1.0] * 5


# ---- regret ---------------------------------------------------------------------

def test_regret_zero_comparator(synsep_small):
    T = 1000
    res = run(LearnerConfig(seed=2), synsep_small, constant_schedule(T, 10))
    zero = ComparatorResult.from_weights(np.zeros((9, 400)), synsep_small.head(T))
    np.testing.assert_allclose(empirical_regret(res.metrics, zero),
                               res.metrics.cum_hinge_loss - np.arange(1, T + 1), atol=1e-12)


def test_regret_against_own_final_weights(synsep_small):
    T = 3000
    res = run(LearnerConfig(gamma=0.05, seed=2), synsep_small, constant_schedule(T, 1))
    own = ComparatorResult.from_weights(res.weights, synsep_small.head(T))
    r = empirical_regret(res.metrics, own)
    assert r[-1] == pytest.approx(res.metrics.cum_hinge_loss[-1] - own.total_loss)


def test_regret_length_mismatch(synsep_small):
    res = run(LearnerConfig(), synsep_small, constant_schedule(10, 1))
    zero = ComparatorResult.from_weights(np.zeros((9, 400)), synsep_small.head(11))
    with pytest.raises(UsageError):
        empirical_regret(res.metrics, zero)


def test_seed_summary():
    assert seed_summary([1.0, 3.0]) == (2.0, 1.0)
