import numpy as np
import pytest
from hypothesis import given, strategies as st

from asaa.errors import ExtrapolationRefused, InvalidArgument, NoData, OutOfOrder
from asaa.timesync import (INTERPOLATE, NEAREST, StampedQueue, SyncConfig, corrected_stamp, push,
                           sync_lookup)


def queue(stamps, values=None, capacity=256):
    q = StampedQueue(capacity)
    for i, s in enumerate(stamps):
        push(q, s, i if values is None else values[i])
    return q


def test_push_rules():
    q = StampedQueue(3)
    push(q, 0.0, "a")
    assert len(q) == 1
    with pytest.raises(OutOfOrder):
        push(q, 0.0, "b")
    for s in (0.1, 0.2, 0.3):
        push(q, s, s)
    assert q.stamps == [0.1, 0.2, 0.3]


def test_corrected_stamp():
    assert corrected_stamp(1.0, SyncConfig(0.18)) == pytest.approx(0.82)
    assert corrected_stamp(0.7, SyncConfig(0.0)) == 0.7
    with pytest.raises(InvalidArgument):
        corrected_stamp(0.1, SyncConfig(0.2))
    with pytest.raises(InvalidArgument):
        SyncConfig(-0.1)


def test_nearest_examples():
    cfg = SyncConfig(mode=NEAREST)
    assert sync_lookup(queue([0.0, 0.1], ["a", "b"]), 0.04, cfg) == "a"
    assert sync_lookup(queue([0.0, 0.1], ["a", "b"]), 0.05, cfg) == "a"     # tie goes earlier
    assert sync_lookup(queue([0.0, 0.1], ["a", "b"]), 0.3, cfg) == "b"


def test_interpolate_examples():
    cfg = SyncConfig(mode=INTERPOLATE)
    assert sync_lookup(queue([0.0, 0.1], [0.0, 1.0]), 0.05, cfg) == 0.5
    with pytest.raises(ExtrapolationRefused):
        sync_lookup(queue([0.0, 0.1], [0.0, 1.0]), -0.01, cfg)
    with pytest.raises(NoData):
        sync_lookup(StampedQueue(), 0.0, cfg)
    v = sync_lookup(queue([0.0, 1.0], [np.zeros(3), np.array([1.0, 2.0, 3.0])]), 0.25, cfg)
    assert np.allclose(v, [0.25, 0.5, 0.75])


def test_bracketing_pair_is_retained():
    q = queue([0.0, 0.1, 0.2, 0.3], [0.0, 1.0, 2.0, 3.0])
    q.lookup(0.15, INTERPOLATE)
    assert q.stamps == [0.1, 0.2, 0.3]
    assert q.lookup(0.12, INTERPOLATE)[0] == pytest.approx(1.2)


stamp_lists = st.lists(st.floats(0, 10), min_size=1, max_size=40, unique=True).map(sorted)


# Millisecond stamps and half-millisecond targets keep distances (and ties) exact.
ms_stamps = st.lists(st.integers(0, 10000), min_size=1, max_size=40, unique=True).map(sorted)


@given(ms_stamps, st.lists(st.integers(-1000, 22000).map(lambda k: k / 2), min_size=1, max_size=10))
def test_nearest_equals_full_scan(stamps, targets):
    q = queue(stamps)
    for target in sorted(targets):
        window = q.stamps
        # Full scan; ties go to the earlier stamp.
        want = min(range(len(window)), key=lambda i: (abs(window[i] - target), window[i]))
        value, used = q.lookup(target, NEAREST)
        assert used == window[want]


@given(stamp_lists.filter(lambda s: len(s) >= 2), st.floats(-3, 3), st.floats(-3, 3),
       st.lists(st.floats(0, 1), min_size=1, max_size=10))
def test_interpolation_exact_on_linear_signal(stamps, a, b, fracs):
    q = queue(stamps, [a + b * s for s in stamps])
    lo, hi = stamps[0], stamps[-1]
    for f in sorted(fracs):
        t = lo + f * (hi - lo)
        t = min(max(t, q.stamps[0]), hi)
        value, used = q.lookup(t, INTERPOLATE)
        assert used == t
        assert value == pytest.approx(a + b * t, abs=1e-9)
