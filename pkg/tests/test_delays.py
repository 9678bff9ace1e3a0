import numpy as np
import pytest

from delaytron.delays import (DelaySchedule, FeedbackEvent, FeedbackQueue, constant_schedule,
                              delay_count_bound, delay_count_lhs, make_schedule, missing_set, replay,
                              write_delay_file)
from delaytron.errors import ConfigError, InputError, ParseError, UsageError


def sched(*d):
    return DelaySchedule(np.array(d))


def brute_lhs(delays):
    # straight from the definition, no prefix sums
    T = len(delays)
    S = {t: sorted(s for s in range(1, T + 1) if s + delays[s - 1] == t) for t in range(1, T + 1)}
    return sum(sum(1 for q in S[t] if q < s) + sum(len(S[r]) for r in range(s, t))
               for t in range(1, T + 1) for s in S[t])


# ---- make_schedule -------------------------------------------------------------

def test_constant_schedule():
    assert make_schedule("constant", 5, 1).delays.tolist() == [1, 1, 1, 1, 1]


def test_uniform_mean_and_range():
    s = make_schedule("uniform", 10_000, 100, np.random.default_rng(0))
    assert abs(s.delays.mean() - 50.5) <= 1.0
    assert s.delays.min() >= 1 and s.delays.max() <= 100


def test_uniform_covers_endpoints():
    s = make_schedule("uniform", 2000, 3, np.random.default_rng(1))
    assert set(s.delays.tolist()) == {1, 2, 3}


def test_file_mode(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("2\n1\n1\n")
    assert make_schedule("file", 3, path=p).delays.tolist() == [2, 1, 1]


def test_file_mode_clamps_zero(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0\n3\n")
    assert make_schedule("file", 2, path=p).delays.tolist() == [1, 3]


def test_file_too_short(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("1\n")
    with pytest.raises(InputError):
        make_schedule("file", 3, path=p)


def test_file_bad_line(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("1\nx\n1\n")
    with pytest.raises(ParseError) as info:
        make_schedule("file", 3, path=p)
    assert info.value.line == 2


def test_file_roundtrip(tmp_path):
    s = make_schedule("uniform", 50, 7, np.random.default_rng(2))
    write_delay_file(s, tmp_path / "d.txt")
    assert np.array_equal(make_schedule("file", 50, path=tmp_path / "d.txt").delays, s.delays)


@pytest.mark.parametrize("args", [("constant", 0, 1), ("constant", 3, 0), ("bogus", 3, 1),
                                  ("uniform", 3, 2)])
def test_make_schedule_rejects(args):
    with pytest.raises(ConfigError):
        make_schedule(*args)


def test_schedule_rejects_zero_delay():
    with pytest.raises(ConfigError):
        sched(1, 0, 2)


# ---- queue ------------------------------------------------------------------------

def test_enqueue_delivered_and_missing():
    q = FeedbackQueue(3)
    q.enqueue(FeedbackEvent(2), 1)
    q.enqueue(FeedbackEvent(3), 1)
    assert [e.origin_round for e in q.pending[3]] == [2]
    assert q.missing == {3}


def test_missing_example():
    assert missing_set(sched(1, 2, 1)) == {2, 3}
    assert replay(sched(1, 2, 1)) == [[], [1], []]


def test_drain_order_and_clearing():
    q = FeedbackQueue(4)
    q.enqueue(FeedbackEvent(2), 1)
    q.enqueue(FeedbackEvent(1), 2)
    assert q.drain(1) == []
    assert q.drain(2) == []
    assert [e.origin_round for e in q.drain(3)] == [1, 2]
    assert q.drain(4) == []
    assert q.total_delivered() == 2


def test_drain_twice_is_error():
    q = FeedbackQueue(4)
    q.drain(1)
    with pytest.raises(UsageError):
        q.drain(1)


def test_replay_is_deterministic():
    s = make_schedule("uniform", 500, 30, np.random.default_rng(4))
    assert replay(s) == replay(s)


# ---- delay counts / missing ---------------------------------------------------------------------

def test_lhs_examples():
    assert delay_count_lhs(sched(1, 2, 1)) == 0 and delay_count_bound(sched(1, 2, 1)) == 2
    assert delay_count_lhs(sched(2, 1, 1, 1)) == 3 and delay_count_bound(sched(2, 1, 1, 1)) == 8
    unit = constant_schedule(10, 1)
    assert delay_count_lhs(unit) == 8 and delay_count_bound(unit) == 18


def test_lhs_matches_definition():
    rng = np.random.default_rng(5)
    for _ in range(30):
        T = int(rng.integers(1, 40))
        d = rng.integers(1, T + 2, size=T)
        assert delay_count_lhs(DelaySchedule(d)) == brute_lhs(d.tolist())


def test_missing_set_examples():
    assert missing_set(constant_schedule(6, 1)) == {6}
    assert missing_set(sched(5)) == {1}


def test_conservation_random():
    rng = np.random.default_rng(6)
    for _ in range(100):
        T = int(rng.integers(1, 300))
        s = make_schedule("uniform", T, int(rng.integers(1, T + 5)), rng)
        delivered = [o for S in replay(s) for o in S]
        M = missing_set(s)
        assert len(delivered) == len(set(delivered))
        assert set(delivered) | M == set(range(1, T + 1))
        assert not set(delivered) & M
        assert len(M) == int(np.sum(np.arange(1, T + 1) + s.delays > T))
