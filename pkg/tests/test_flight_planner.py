import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asaa.errors import DegenerateGoal, InvalidArgument
from asaa.fast_checks import quintic_batch
from asaa.flight_planner import (CheckConfig, MotionPrimitive, RobotState, SampleConfig, check_dynamic,
                                 check_static, clearance_ok, generate_primitive, hover_safe,
                                 in_sampling_region, mahalanobis_clearance, plan_flight,
                                 quintic_coefficients, rank_candidates, sample_candidates)
from asaa.geometry import angle_between
from asaa.static_map import DistanceField, GridConfig, OccupancyGrid, compute_edf, integrate_scan
from asaa.tracker import Detection, TrackerConfig, spawn_track
from helpers import random_field, random_state, random_track

ORIGIN = np.array([0.0, 0.0, 1.0])
GOAL = np.array([10.0, 0.0, 1.0])


def empty_field():
    return compute_edf(OccupancyGrid(GridConfig(), center=ORIGIN))


def static_track(x, y, radius=0.3, sigma=1e-6):
    tr = spawn_track(Detection(np.array([x, y, 0.9]), radius, 1.8, "x", 0.0), TrackerConfig())
    tr.cov[:] = 0.0
    tr.sigma[:] = sigma
    return tr


# -- sampling and ranking ---------------------------------------------------

def test_sampling_region_membership():
    assert not in_sampling_region(np.array([[-0.98, 0.17, 1.0]]), ORIGIN, GOAL, 2 * math.pi / 3, 1.5)[0]
    assert in_sampling_region(np.array([[0.5, 0.5, 1.0]]), ORIGIN, GOAL, 2 * math.pi / 3, 1.5)[0]
    assert not in_sampling_region(np.array([[1.6, 0.0, 1.0]]), ORIGIN, GOAL, 2 * math.pi / 3, 1.5)[0]


def test_full_angle_covers_the_ball(rng):
    cfg = SampleConfig(theta_val=math.pi, n_samples=4000)
    pts = sample_candidates(ORIGIN, GOAL, cfg, rng) - ORIGIN
    assert np.all(np.linalg.norm(pts, axis=1) <= 1.5)
    # Every octant of the ball is populated.
    octant = (pts > 0) @ [1, 2, 4]
    assert set(octant.tolist()) == set(range(8))


def test_sampling_rejects_coincident_goal(rng):
    with pytest.raises(DegenerateGoal):
        sample_candidates(ORIGIN, ORIGIN, SampleConfig(), rng)


def test_sample_config_validation():
    with pytest.raises(InvalidArgument):
        SampleConfig(theta_val=4.0)
    with pytest.raises(InvalidArgument):
        SampleConfig(l_vis=0.0)


def test_rank_examples():
    c = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, -1.0, 1.0]])
    goal = np.array([1.0, 0.0, 1.0])
    ranked, order = rank_candidates(c, ORIGIN, goal, 1.5)
    assert order[0] == 1
    # Both 1.2 m from the goal; the one off the goal axis ranks second.
    goal = ORIGIN + [2.0, 0.0, 0.0]
    off = ORIGIN + [2.0 - 1.2 * math.cos(0.4), 1.2 * math.sin(0.4), 0.0]
    c = np.array([off, ORIGIN + [0.8, 0.0, 0.0]])
    _, order = rank_candidates(c, ORIGIN, goal, 1.5)
    assert order.tolist() == [1, 0]


@given(st.integers(0, 2**32 - 1), st.floats(0.3, math.pi))
def test_rank_equals_independent_sort(seed, theta):
    rng = np.random.default_rng(seed)
    goal = ORIGIN + rng.uniform(-5, 5, 3)
    cfg = SampleConfig(theta_val=theta, n_samples=50)
    c = sample_candidates(ORIGIN, goal, cfg, rng)
    ranked, _ = rank_candidates(c, ORIGIN, goal, cfg.l_vis)

    def J(p):
        l1, l2 = goal - ORIGIN, p - ORIGIN
        cosang = np.dot(l1, l2) / (np.linalg.norm(l1) * np.linalg.norm(l2))
        return np.linalg.norm(p - goal) + 0.5 * cfg.l_vis * math.acos(max(-1, min(1, cosang))) / math.pi

    costs = [J(p) for p in ranked]
    assert all(a <= b + 1e-9 for a, b in zip(costs, costs[1:]))
    assert sorted(map(tuple, ranked)) == sorted(map(tuple, c))


# -- primitives ---------------------------------------------------------------

def test_constant_primitive_at_target():
    prim = generate_primitive(RobotState(np.zeros(3)), np.zeros(3), SampleConfig())
    assert prim.duration == 0.5
    assert np.all(prim.setpoints(0.05) == 0.0)


def test_duration_rule():
    prim = generate_primitive(RobotState(np.zeros(3)), np.array([1.5, 0, 0]), SampleConfig())
    assert prim.duration == pytest.approx(3.0)
    prim = generate_primitive(RobotState(np.zeros(3)), np.array([9.0, 0, 0]), SampleConfig())
    assert prim.duration == 4.0


@given(st.integers(0, 2**32 - 1))
def test_boundary_conditions(seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng)
    target = s.position + rng.uniform(-1.5, 1.5, 3)
    prim = generate_primitive(s, target, SampleConfig())
    T = prim.duration
    assert np.allclose(prim.position(0.0), s.position, atol=1e-9, rtol=0)
    assert np.allclose(prim.velocity(0.0), s.velocity, atol=1e-9, rtol=0)
    assert np.allclose(prim.acceleration(0.0), s.acceleration, atol=1e-9, rtol=0)
    assert np.allclose(prim.position(T), target, atol=1e-9, rtol=0)
    assert np.allclose(prim.velocity(T), 0, atol=1e-9)
    assert np.allclose(prim.acceleration(T), 0, atol=1e-9)
    p, v, a = prim.state(0.37 * T)
    assert np.allclose(p, prim.position(0.37 * T))
    assert np.allclose(v, prim.velocity(0.37 * T))
    assert np.allclose(a, prim.acceleration(0.37 * T))


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_compiled_coefficients_bit_identical(seed, m):
    rng = np.random.default_rng(seed)
    s = random_state(rng)
    targets = s.position + rng.uniform(-1.5, 1.5, (m, 3))
    T = rng.uniform(0.5, 4.0, m)
    z = np.zeros_like(targets)
    ref = quintic_coefficients(s.position, s.velocity, s.acceleration, targets, z, z, T)
    assert np.array_equal(quintic_batch(s.position, s.velocity, s.acceleration, targets, T), ref)


# -- clearance rule -----------------------------------------------------------

@pytest.mark.parametrize("d, ok", [([0.6, 0.55, 0.52], True), ([0.3, 0.35, 0.4], True),
                                   ([0.6, 0.45, 0.40], False), ([0.5, 0.5], True), ([0.2], True)])
def test_clearance_rule_examples(d, ok):
    assert bool(clearance_ok(np.array(d), 0.5)) is ok


@given(st.lists(st.floats(0, 3), min_size=1, max_size=30), st.floats(0.1, 1.0))
def test_clearance_rule_matches_loop(d, dmin):
    want = all(d[k] > dmin or d[k] >= d[k - 1] for k in range(1, len(d)))
    assert bool(clearance_ok(np.array(d), dmin)) is want


def test_mahalanobis_hand_values():
    tr = static_track(0.0, 0.0)
    p = np.array([[1.0, 0.0, 0.5]])
    assert mahalanobis_clearance(p, np.zeros(1), tr, floor=1.0)[0] == pytest.approx(0.49)
    on_surface = np.array([[0.3, 0.0, 0.5]])
    assert mahalanobis_clearance(on_surface, np.zeros(1), tr, floor=1.0)[0] == 0.0
    inside = np.array([[0.1, 0.0, 0.5]])
    assert mahalanobis_clearance(inside, np.zeros(1), tr, floor=1.0)[0] == 0.0
    # Above the top the center is pinned to the top.
    above = np.array([[0.0, 0.0, 2.8]])
    assert mahalanobis_clearance(above, np.zeros(1), tr, floor=1.0)[0] == pytest.approx(0.49)


def test_mahalanobis_grows_uncertain_with_horizon():
    tr = static_track(0.0, 0.0, sigma=1.0)
    p = np.array([[1.5, 0.0, 0.5]] * 3)
    d = mahalanobis_clearance(p, np.array([0.0, 0.5, 1.0]), tr, floor=0.01)
    assert d[0] > d[1] > d[2]


def test_static_check_on_built_primitive():
    g = OccupancyGrid(GridConfig(), center=ORIGIN)
    integrate_scan(g, np.array([[1.05, y, z] for y in np.arange(-1, 1, 0.05) for z in (0.6, 1.0, 1.4)]),
                   stamp=0.0)
    f = compute_edf(g)
    s = RobotState(ORIGIN)
    assert not check_static(generate_primitive(s, ORIGIN + [1.0, 0, 0], SampleConfig()), f, CheckConfig())
    assert check_static(generate_primitive(s, ORIGIN + [-1.0, 0, 0], SampleConfig()), f, CheckConfig())


def test_dynamic_check_follows_prediction():
    s = RobotState(ORIGIN)
    tr = static_track(3.0, 0.0)
    tr.state[0, 1] = -2.0      # closes 3 m in 1.5 s
    fwd = generate_primitive(s, ORIGIN + [1.0, 0, 0], SampleConfig())
    side = generate_primitive(s, ORIGIN + [0, 1.2, 0], SampleConfig())
    assert not check_dynamic(fwd, [tr], CheckConfig(), 0.0)
    assert check_dynamic(side, [tr], CheckConfig(), 0.0)


# -- planning -----------------------------------------------------------------

def test_empty_world_takes_first_ranked():
    s = RobotState(ORIGIN)
    goal = ORIGIN + [1.0, 0.0, 0.0]
    plan = plan_flight(s, goal, empty_field(), [], SampleConfig(), CheckConfig(), np.random.default_rng(0))
    assert plan.rank == 0 and np.array_equal(plan.primitive.target, goal)


def test_enclosing_shell_forces_hover():
    g = OccupancyGrid(GridConfig(), center=ORIGIN)
    d = np.random.default_rng(1).standard_normal((60000, 3))
    shell = ORIGIN + 0.65 * d / np.linalg.norm(d, axis=1, keepdims=True)
    integrate_scan(g, shell, stamp=0.0)
    plan = plan_flight(RobotState(ORIGIN), GOAL, compute_edf(g), [], SampleConfig(), CheckConfig(),
                       np.random.default_rng(0))
    assert plan.hover and plan.n_checked == plan.n_candidates == plan.n_static_fail


def test_head_on_obstacle_forces_posterolateral_escape():
    tr = spawn_track(Detection(np.array([1.0, 0.0, 0.9]), 0.3, 1.8, "pedestrian", 0.0),
                     TrackerConfig(default_sigma=1.0, sigma_by_label={}))
    tr.state[0, 1] = -0.6
    s = RobotState(ORIGIN)
    sc, cc = SampleConfig(), CheckConfig()
    plan = plan_flight(s, GOAL, empty_field(), [tr], sc, cc, np.random.default_rng(0))
    l1 = GOAL - ORIGIN
    assert angle_between(l1, plan.primitive.target - ORIGIN) > math.pi / 2
    # Fate of every sampled candidate: nothing in the forward half passes.
    cand = sample_candidates(ORIGIN, GOAL, sc, np.random.default_rng(0))
    fwd = cand[angle_between(np.broadcast_to(l1, cand.shape), cand - ORIGIN) <= math.pi / 2]
    assert len(fwd) > 50
    assert not any(check_dynamic(generate_primitive(s, p, sc), [tr], cc, 0.0) for p in fwd)


def _scene(seed):
    rng = np.random.default_rng(seed)
    field = random_field(rng)
    tracks = [random_track(rng) for _ in range(int(rng.integers(0, 4)))]
    goal = ORIGIN + rng.uniform(-6, 6, 3) * [1, 1, 0.1]
    return rng, field, tracks, random_state(rng), goal


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_compiled_and_block_search_agree(seed):
    rng, field, tracks, s, goal = _scene(seed)
    sc = SampleConfig(n_samples=120)
    a = plan_flight(s, goal, field, tracks, sc, CheckConfig(), np.random.default_rng(seed), t_now=0.1)
    b = plan_flight(s, goal, field, tracks, sc, CheckConfig(), np.random.default_rng(seed), t_now=0.1,
                    fast=False)
    assert (a.rank, a.n_checked, a.n_static_fail, a.n_dynamic_fail) == \
        (b.rank, b.n_checked, b.n_static_fail, b.n_dynamic_fail)
    if a.primitive is not None:
        assert np.array_equal(a.primitive.coeffs, b.primitive.coeffs)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_plan_is_first_passing_candidate(seed):
    rng, field, tracks, s, goal = _scene(seed)
    sc, cc = SampleConfig(n_samples=60), CheckConfig()
    plan = plan_flight(s, goal, field, tracks, sc, cc, np.random.default_rng(seed), t_now=0.1)
    cand = sample_candidates(s.position, goal, sc, np.random.default_rng(seed))
    if in_sampling_region(goal[None], s.position, goal, sc.theta_val, sc.l_vis)[0]:
        cand = np.vstack([goal[None], cand])
    assert np.all(in_sampling_region(cand, s.position, goal, sc.theta_val, sc.l_vis) | np.all(cand == goal, 1))
    ranked, _ = rank_candidates(cand, s.position, goal, sc.l_vis)
    fates = [check_static(p, field, cc) and check_dynamic(p, tracks, cc, 0.1)
             for p in (generate_primitive(s, c, sc) for c in ranked)]
    if plan.hover:
        assert not any(fates)
    else:
        assert fates.index(True) == plan.rank


def test_planning_is_deterministic():
    _, field, tracks, s, goal = _scene(99)
    plans = [plan_flight(s, goal, field, tracks, SampleConfig(), CheckConfig(), np.random.default_rng(5))
             for _ in range(2)]
    assert plans[0].rank == plans[1].rank
    assert np.array_equal(plans[0].primitive.coeffs, plans[1].primitive.coeffs)


def test_hover_safety_probe():
    tr = static_track(2.0, 0.0)
    tr.state[0, 1] = -1.0
    assert not hover_safe(ORIGIN, [tr], CheckConfig(), 0.0, 2.0)
    assert hover_safe(ORIGIN, [tr], CheckConfig(), 0.0, 0.5)
    assert hover_safe(ORIGIN, [], CheckConfig(), 0.0, 2.0)


def test_check_config_validation():
    with pytest.raises(InvalidArgument):
        CheckConfig(dt=0.0)
    with pytest.raises(InvalidArgument):
        CheckConfig(inflate=-0.1)
