import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from asaa.errors import InvalidArgument
from asaa.sud import SudBuffer, SudConfig, bucket_angles, sud_increment, sud_query, sud_update

FOV72 = math.radians(72)


def cfg(**kw):
    kw.setdefault("theta_h", FOV72)
    return SudConfig(**kw)


def test_bucket_layout():
    c = cfg()
    assert c.n_buckets == 16
    assert bucket_angles(c)[0] == -math.pi
    assert bucket_angles(c)[8] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("bad", [dict(delta=0.3), dict(eps1=1.2, eps2=1.0), dict(l_hit=0.0),
                                 dict(l_miss=0.05), dict(L_h=0.0)])
def test_config_rejects(bad):
    with pytest.raises(InvalidArgument):
        cfg(**bad)


def test_rest_hit_inside_fov():
    buf = SudBuffer(cfg())
    out = sud_update(buf, np.zeros(3), 0.0)
    assert out.query(0.0) == pytest.approx(0.4, abs=0)
    assert buf.query(0.0) == 0.0  # functional form leaves the input alone


def test_rest_miss_clamps_at_zero():
    out = sud_update(SudBuffer(cfg()), np.zeros(3), 0.0)
    assert out.query(math.pi) == 0.0


def test_hand_evaluated_translation_case():
    c = cfg()
    buf = SudBuffer(c, np.full(c.n_buckets, 0.5))
    # Camera faces pi so the bucket at 0 is outside the view.
    out = sud_update(buf, np.array([1.0, 0.0, 0.0]), math.pi)
    assert out.query(0.0) == pytest.approx(0.35, abs=1e-15)


def test_saturates_after_three_hits():
    buf = SudBuffer(cfg())
    for _ in range(3):
        buf.update(np.zeros(3), 0.3)
    assert buf.query(0.3) == 1.0


def test_fresh_buffer_and_seam():
    buf = SudBuffer(cfg())
    assert buf.query(1.234) == 0.0
    buf.values[:] = np.arange(16) / 16
    assert buf.query(-math.pi) == buf.query(math.pi)


def test_query_ties_go_to_lower_index():
    buf = SudBuffer(cfg())
    buf.values[:] = np.arange(16)
    # Midpoint between buckets 9 and 10; this one is exact in floating point.
    d = -math.pi + 9.5 * buf.config.delta
    assert (d + math.pi) / buf.config.delta == 9.5
    assert buf.bucket_index(d) == 9
    assert sud_query(buf, d) == 9.0
    # Midpoint between the last bucket and the first wraps to the seam at pi.
    assert buf.bucket_index(-math.pi + 15.5 * buf.config.delta) == 15


def test_vertical_motion_is_uniform_outside_fov():
    c = cfg()
    buf = SudBuffer(c, np.full(c.n_buckets, 0.8))
    eps = 0.05
    out = sud_update(buf, np.array([0.0, 0.0, eps]), 0.0)
    d = bucket_angles(c)
    outside = np.abs(d) > FOV72 / 2
    assert np.allclose(out.values[outside], 0.8 - c.eps2 * eps + c.l_miss, atol=1e-15)


def test_horizontal_directionality():
    c = cfg()
    eps = 0.1
    inc = sud_increment(c, np.array([eps, 0, 0]), math.pi / 2)
    i0, ipi = 8, 0
    assert inc[i0] - c.l_miss == pytest.approx(-c.eps1 * eps / c.L_h)
    assert inc[ipi] - c.l_miss == pytest.approx(c.eps1 * eps / c.L_h)


def _reference_update(values, dp, xi0, c):
    # Loop-by-loop evaluation of the clamped additive update.
    out = []
    for i, v in enumerate(values):
        d = -math.pi + i * c.delta
        rel = math.remainder(d - xi0, 2 * math.pi)
        hit = c.l_hit if abs(rel) <= c.theta_h / 2 + 1e-9 else c.l_miss
        inc = -c.eps1 * (math.cos(d) * dp[0] + math.sin(d) * dp[1]) / c.L_h - c.eps2 * abs(dp[2]) + hit
        out.append(min(max(v + inc, 0.0), 1.0))
    return out


steps = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.3, 0.3), st.floats(-7, 7)),
                 min_size=1, max_size=15)


@given(steps)
def test_matches_reference_loop(seq):
    c = cfg()
    buf = SudBuffer(c)
    ref = [0.0] * c.n_buckets
    for dx, dy, dz, xi in seq:
        buf.update(np.array([dx, dy, dz]), xi)
        ref = _reference_update(ref, (dx, dy, dz), xi, c)
        assert np.allclose(buf.values, ref, atol=1e-12)


@given(st.lists(st.floats(0, 1), min_size=16, max_size=16), st.floats(-4, 4))
def test_rest_monotone_in_and_out_of_view(start, xi):
    c = cfg()
    buf = SudBuffer(c, start)
    out = sud_update(buf, np.zeros(3), xi)
    d = bucket_angles(c)
    inside = np.abs(np.remainder(d - xi + math.pi, 2 * math.pi) - math.pi) <= c.theta_h / 2 - 1e-9
    outside = np.abs(np.remainder(d - xi + math.pi, 2 * math.pi) - math.pi) > c.theta_h / 2 + 1e-9
    assert np.all(out.values[inside] >= buf.values[inside])
    assert np.all(out.values[outside] <= buf.values[outside])


@given(st.lists(st.floats(0, 1), min_size=9, max_size=9), st.integers(1, 20))
def test_symmetry_about_zero(half, n):
    c = cfg()
    # Symmetric about bucket 8 (direction 0): v[8+k] == v[8-k], bucket 0 is its own mirror.
    v = np.empty(16)
    v[8] = half[0]
    for k in range(1, 8):
        v[8 + k] = v[8 - k] = half[k]
    v[0] = half[8]
    buf = SudBuffer(c, v)
    for _ in range(n):
        buf.update(np.zeros(3), 0.0)
    for k in range(1, 8):
        assert buf.values[8 + k] == buf.values[8 - k]
