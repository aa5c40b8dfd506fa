"""Closed-loop episodes: sensing, tracking, mapping, head and flight planning, physics.

Each control tick (20 Hz by default) runs, in order:

* capture: static surface points go straight into the map; dynamic
  detections are queued as camera messages and delivered after the
  pipeline delay,
* delivery: delayed messages are back-projected using pose and head angle
  looked up at their corrected stamps,
* tracker update, map integration, SUD update,
* head planning and paradigm routing,
* flight planning,
* several physics sub-steps with collision accounting.

All randomness comes from independent streams spawned from the episode
seed, so a run is a pure function of (scenario, paradigm, seed, config).
"""

from __future__ import annotations

import collections
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..config import EpisodeConfig, apply_overrides
from ..flight_planner import RobotState, hover_safe, plan_flight
from ..geometry import heading_of, unwrap_near
from ..head_planner import (HOVER_SPEED, HeadState, PlanningContext, TrackView, plan_head,
                            search_domain)
from ..static_map import OccupancyGrid, compute_edf, integrate_scan
from ..sud import SudBuffer
from ..timesync import StampedQueue, corrected_stamp, sync_lookup
from ..tracker import MultiObjectTracker, detection_from_camera, kf_predict, track_speed
from .paradigms import Paradigm, parse_paradigm, route_paradigm
from .scenario import Scenario
from .sensing import SensorModel
from .world import (Command, Limits, RobotBody, ScriptedObstacle, distance_to_static,
                    dynamic_distances, step_world)

SENSOR_PRESETS = {"sim": 80.0, "real": 72.0}


@dataclass
class EpisodeMetrics:
    collisions_moving: int = 0
    collisions_hovering: int = 0
    avg_speed: float = 0.0
    goal_events: int = 0
    time_to_goals: list = field(default_factory=list)
    min_clearance: float = math.inf
    duration: float = 0.0
    distance: float = 0.0
    hover_fraction: float = 0.0
    max_head_step: float = 0.0
    max_yaw_step: float = 0.0
    finished: bool = False

    @property
    def collisions(self) -> int:
        return self.collisions_moving + self.collisions_hovering

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["min_clearance"]):
            d["min_clearance"] = None
        return d


@dataclass
class EpisodeResult:
    scenario: str
    paradigm: str
    seed: int
    metrics: EpisodeMetrics
    calls: dict
    rows: list | None = None

    def metrics_json(self) -> str:
        doc = {"scenario": self.scenario, "paradigm": self.paradigm, "seed": self.seed,
               **self.metrics.to_dict()}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(self.rows or [])
        return buf.getvalue()


TRACE_COLUMNS = [
    "t", "x", "y", "z", "vx", "vy", "vz", "speed", "yaw", "yaw_cmd", "head_cmd", "head",
    "camera_heading", "goal_x", "goal_y", "goal_z", "hover", "plan_rank", "n_candidates",
    "n_checked", "static_fail", "dynamic_fail", "tracks", "sud", "collisions",
]


def episode_config(scenario: Scenario, overrides=None, base: EpisodeConfig | None = None) -> EpisodeConfig:
    """Configuration for a scenario: sensor preset and robot size, then scenario overrides, then ``overrides``."""
    cfg = base or EpisodeConfig()
    cfg = apply_overrides(cfg, {"sensor.theta_h_deg": SENSOR_PRESETS[scenario.sensor_preset],
                                "check.inflate": scenario.robot_radius})
    if scenario.overrides:
        cfg = apply_overrides(cfg, scenario.overrides)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return apply_overrides(cfg, {"sud.theta_h": math.radians(cfg.sensor.theta_h_deg),
                                 "sud.L_h": cfg.sensor.L_h})


class GoalManager:
    """Explicit goal list followed by the optional respawn script."""

    def __init__(self, scenario: Scenario, rng: np.random.Generator):
        self.scenario = scenario
        self.rng = rng
        self.queue = list(scenario.goals)
        self.script = scenario.goal_script
        self.events = 0
        self.times: list[float] = []
        self.current = None
        self.radius = 1.0
        self.deadline = None
        self.since = 0.0
        self.finished = False

    def start(self, t: float, p) -> None:
        self._next(t, p)

    def _next(self, t: float, p) -> None:
        self.since = t
        if self.queue:
            g = self.queue.pop(0)
            self.current, self.radius = g.position.copy(), g.radius
            self.deadline = g.time if g.trigger == "timed" else None
        elif self.script is not None and self.events < self.script.max_events:
            self.current = self._respawn(p)
            self.radius, self.deadline = self.script.reach_radius, None
        else:
            self.current, self.deadline = None, None
            # A goal-free scenario hovers for its full length.
            self.finished = bool(self.scenario.goals) or self.script is not None

    def _respawn(self, p) -> np.ndarray:
        lo, hi = self.scenario.bounds
        gs = self.script
        lo2 = lo[:2] + gs.clearance
        hi2 = hi[:2] - gs.clearance
        mid = 0.5 * (lo2 + hi2)
        off = np.asarray(p[:2]) - mid
        axis = int(np.argmax(np.abs(off)))
        a, b = lo2.copy(), hi2.copy()
        if off[axis] >= 0:
            b[axis] = mid[axis]
        else:
            a[axis] = mid[axis]
        cand = None
        for _ in range(100):
            xy = self.rng.uniform(a, b)
            cand = np.array([xy[0], xy[1], gs.altitude])
            if not self.scenario.static_obstacles or \
                    np.min(distance_to_static(cand, self.scenario.static_obstacles)) >= gs.clearance:
                break
        return cand

    def update(self, t: float, p) -> bool:
        """Advance on reach or timeout; returns whether a goal was reached."""
        if self.current is None:
            return False
        if np.linalg.norm(self.current - p) < self.radius:
            self.events += 1
            self.times.append(t - self.since)
            self._next(t, p)
            return True
        if self.deadline is not None and t >= self.deadline:
            self._next(t, p)
        return False


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _admissible_by_sud(sud: SudBuffer, p_rob, gate: float):
    def mask(cand):
        rel = cand[:, :2] - p_rob[:2]
        far = np.hypot(rel[:, 0], rel[:, 1]) > 1e-6
        out = np.ones(len(cand), dtype=bool)
        if far.any():
            bearing = np.arctan2(rel[far, 1], rel[far, 0])
            out[far] = sud.query(bearing) >= gate
        return out
    return mask


def run_episode(scenario: Scenario, paradigm, seed: int, cfg: EpisodeConfig | None = None,
                trace: bool = True) -> EpisodeResult:
    """Run one episode. ``cfg`` defaults to :func:`episode_config` of the scenario."""
    paradigm = parse_paradigm(paradigm)
    cfg = cfg or episode_config(scenario)
    sim = cfg.sim
    n_sub = int(round(sim.control_dt / sim.physics_dt))
    if n_sub < 1 or abs(n_sub * sim.physics_dt - sim.control_dt) > 1e-9:
        raise ValueError("control_dt must be a whole multiple of physics_dt")
    angle_every = max(int(round(sim.pose_rate_hz / sim.angle_rate_hz)), 1)

    s_sense, s_plan, s_goal, s_phase = np.random.SeedSequence(seed).spawn(4)
    rng_sense = np.random.default_rng(s_sense)
    rng_plan = np.random.default_rng(s_plan)
    rng_goal = np.random.default_rng(s_goal)
    rng_phase = np.random.default_rng(s_phase)

    statics = scenario.static_obstacles
    obstacles = []
    for spec in scenario.dynamic_obstacles:
        ob = ScriptedObstacle(spec)
        if sim.randomize_phase and ob.perimeter > 0:
            ob = ScriptedObstacle(spec, float(rng_phase.uniform(0.0, ob.perimeter)))
        obstacles.append(ob)
    sensor = SensorModel(cfg.sensor, statics, spacing=cfg.grid.resolution)
    lim = Limits(v_max=cfg.sampling.v_max, a_max=cfg.sampling.a_max, kp=sim.kp, kd=sim.kd,
                 head_rate=cfg.head.xi_dot_max, head_min=cfg.head.xi_min, head_max=cfg.head.xi_max,
                 yaw_rate=sim.yaw_rate_max)
    half_window = 0.5 * np.array([cfg.grid.side, cfg.grid.side, cfg.grid.nz * cfg.grid.z_resolution])
    bounds = scenario.bounds

    heading0 = float(scenario.start_heading)
    if paradigm.rotatable:
        body = RobotBody(scenario.robot_start.copy(), yaw=0.0,
                         head=min(max(heading0, cfg.head.xi_min), cfg.head.xi_max))
    else:
        body = RobotBody(scenario.robot_start.copy(), yaw=heading0, head=0.0)

    grid = OccupancyGrid(cfg.grid, body.position)
    sud = SudBuffer(cfg.sud)
    tracker = MultiObjectTracker(cfg.tracker)
    pose_q = StampedQueue()
    angle_q = StampedQueue()
    pose_q.push(0.0, np.array([*body.position, body.yaw]))
    angle_q.push(0.0, body.head)
    inflight: collections.deque = collections.deque()
    goals = GoalManager(scenario, rng_goal)
    goals.start(0.0, body.position)

    calls = collections.Counter()
    metrics = EpisodeMetrics()
    rows = [] if trace else None
    n_static, n_dyn = len(statics), len(obstacles)
    last_contact = np.full(n_static + n_dyn, -math.inf)
    prev_plan = body.yaw + body.head
    last_cam_heading = prev_plan
    cmd = Command(None, 0.0, body.position.copy(), body.head, body.yaw)
    prev_pos = body.position.copy()
    hover_ticks = 0
    def static_d(pf):
        return distance_to_static(pf, statics).tolist() if statics else []

    # Direction a hovering robot would fly if the observation gate were lifted;
    # velocity-following aims use it so they look where they intend to go.
    intent_dir = None
    n_ticks = int(math.floor(scenario.episode_length / sim.control_dt + 1e-9))
    step = 0
    tick = 0

    for tick in range(n_ticks):
        t = tick * sim.control_dt
        cam_heading = body.yaw + body.head
        # Turn rate over the last tick; drives the blur term of the depth noise.
        cam_rate = (cam_heading - last_cam_heading) / sim.control_dt
        last_cam_heading = cam_heading

        # capture
        pts = sensor.static_scan(body.position, cam_heading, cam_rate, body.velocity, rng_sense,
                                 body.position, half_window)
        visible = ((i, ob.center(t), ob.velocity(t), ob.radius, ob.height, ob.spec.label)
                   for i, ob in enumerate(obstacles))
        msgs = sensor.detect(body.position, cam_heading, cam_rate, body.velocity, visible, rng_sense)
        inflight.append((t + cfg.sensor.detection_delay, msgs))

        # delivery
        detections = []
        while inflight and inflight[0][0] <= t + 1e-9:
            stamp, batch = inflight.popleft()
            t_cap = corrected_stamp(stamp, cfg.sync)
            pose = sync_lookup(pose_q, t_cap, cfg.sync)
            head = sync_lookup(angle_q, t_cap, cfg.sync)
            for m in batch:
                detections.append(detection_from_camera(m.pixel, m.depth, sensor.intrinsics, pose[:3],
                                                        float(pose[3] + head), m.bbox, m.label, t_cap))
        calls["tracker_step"] += 1
        tracks = tracker.step(detections, t)

        regions = []
        live = []
        for tr in tracks:
            center, _ = kf_predict(tr, max(t - tr.stamp, 0.0))
            regions.append((center[:, 0], tr.radius, tr.height))
            if tr.confirmed:
                live.append((tr, center[:, 0]))
        integrate_scan(grid, pts, regions, center=body.position, stamp=t)
        field_ = compute_edf(grid)

        calls["sud_update"] += 1
        sud.update(body.position - prev_pos, cam_heading, stamp=t)
        prev_pos = body.position.copy()

        # head
        goal = goals.current
        p = body.position
        goal_dir = None
        if goal is not None and math.hypot(goal[0] - p[0], goal[1] - p[1]) > 1e-6:
            goal_dir = heading_of(goal - p)
        v_h = math.hypot(body.velocity[0], body.velocity[1])
        vel_dir = heading_of(body.velocity) if v_h >= HOVER_SPEED else None
        planned = None
        if paradigm.multi_objective:
            views = []
            for tr, c in live:
                rel = c - p
                views.append(TrackView(math.atan2(rel[1], rel[0]), max(math.hypot(rel[0], rel[1]), 0.1),
                                       track_speed(tr)))
            ctx = PlanningContext(cfg.sud.theta_h, sud, goal_dir, vel_dir, v_h, views)
            if paradigm.rotatable:
                if sim.seam_aware:
                    dom = search_domain(cfg.sud.delta)
                    ctx.span = (float(dom[0]), float(dom[-1]))
                hs = HeadState(body.head, prev_plan, cfg.head.xi_min, cfg.head.xi_max, cfg.head.xi_dot_max)
                planned = plan_head(ctx, cfg.weights, hs, cfg.sud.delta)
            else:
                hs = HeadState(body.yaw, unwrap_near(prev_plan, body.yaw), -math.inf, math.inf,
                               sim.yaw_rate_max)
                planned = plan_head(ctx, cfg.weights, hs, cfg.sud.delta, free=True)
            calls["plan_head"] += 1
            prev_plan = planned
        aim = vel_dir if vel_dir is not None else (intent_dir if intent_dir is not None else goal_dir)
        head_cmd, yaw_cmd = route_paradigm(paradigm, planned, aim, body.head, body.yaw,
                                           (cfg.head.xi_min, cfg.head.xi_max))

        # flight
        plan = None
        if goal is not None:
            calls["plan_flight"] += 1
            state0 = RobotState(body.position, body.velocity, body.acceleration, body.yaw, t)
            gate = _admissible_by_sud(sud, p, sim.observe_gate) if sim.observe_gate > 0 else None
            plan = plan_flight(state0, goal, field_, [tr for tr, _ in live], cfg.sampling, cfg.check,
                               rng_plan, t_now=t, bounds=bounds, admissible=gate)
            intent_dir = None
            if plan.hover and gate is not None:
                known = [tr for tr, _ in live]
                threatened = not hover_safe(p, known, cfg.check, t, sim.threat_horizon)
                if threatened or not paradigm.multi_objective:
                    probe = plan_flight(state0, goal, field_, known, cfg.sampling, cfg.check,
                                        rng_plan, t_now=t, bounds=bounds)
                    if threatened and not probe.hover:
                        # Holding still would be hit: flee even into unobserved space.
                        plan = probe
                    elif not probe.hover:
                        rel = probe.primitive.target - p
                        if math.hypot(rel[0], rel[1]) > 1e-6:
                            intent_dir = heading_of(rel)
        if plan is None or plan.hover:
            hold = cmd.hold if cmd.primitive is None else body.position.copy()
            cmd = Command(None, t, hold, head_cmd, yaw_cmd)
            hover_ticks += 1
        else:
            cmd = Command(plan.primitive, t, body.position.copy(), head_cmd, yaw_cmd)

        # physics
        tick_state = (body.position.copy(), body.velocity.copy(), body.yaw, body.head)
        events = []
        for _ in range(n_sub):
            ts = step * sim.physics_dt
            new = step_world(body, cmd, ts, sim.physics_dt, lim)
            step += 1
            tn = step * sim.physics_dt
            metrics.max_head_step = max(metrics.max_head_step, abs(new.head - body.head))
            metrics.max_yaw_step = max(metrics.max_yaw_step, abs(new.yaw - body.yaw))
            dp = new.position - body.position
            metrics.distance += math.sqrt(float(dp @ dp))
            body = new
            pose_q.push(tn, np.array([*body.position, body.yaw]))
            if step % angle_every == 0:
                angle_q.push(tn, body.head)
            pf = body.position.tolist()
            d = static_d(pf) + dynamic_distances(pf, obstacles, tn)
            if d:
                metrics.min_clearance = min(metrics.min_clearance, min(d) - scenario.robot_radius)
                contact = [j for j, dj in enumerate(d) if dj < scenario.robot_radius]
                for j in contact:
                    if tn - last_contact[j] > sim.refractory:
                        moving = math.sqrt(float(body.velocity @ body.velocity)) > sim.moving_speed
                        if moving:
                            metrics.collisions_moving += 1
                        else:
                            metrics.collisions_hovering += 1
                        events.append(f"{'s' if j < n_static else 'd'}{j if j < n_static else j - n_static}:"
                                      f"{'moving' if moving else 'hovering'}")
                    last_contact[j] = tn
        reached = goals.update(step * sim.physics_dt, body.position)

        if trace:
            pos, vel, yaw0, head0 = tick_state
            g = goal if goal is not None else (math.nan, math.nan, math.nan)
            track_txt = ";".join(
                f"{tr.id}:{_fmt(c[0])}:{_fmt(c[1])}:{_fmt(c[2])}:"
                f"{_fmt(math.sqrt(kf_predict(tr, max(t - tr.stamp, 0.0))[1][0, 0, 0]))}"
                for tr, c in live)
            rows.append([
                _fmt(t), *map(_fmt, pos), *map(_fmt, vel), _fmt(np.linalg.norm(vel)), _fmt(yaw0),
                _fmt(yaw_cmd), _fmt(head_cmd), _fmt(head0), _fmt(yaw0 + head0), *map(_fmt, g),
                int(plan is None or plan.hover), -1 if plan is None else plan.rank,
                0 if plan is None else plan.n_candidates, 0 if plan is None else plan.n_checked,
                0 if plan is None else plan.n_static_fail, 0 if plan is None else plan.n_dynamic_fail,
                track_txt, "|".join(_fmt(v) for v in sud.values), " ".join(events),
            ])
        if goals.finished:
            metrics.finished = True
            break

    metrics.duration = step * sim.physics_dt
    metrics.avg_speed = metrics.distance / metrics.duration if metrics.duration > 0 else 0.0
    metrics.goal_events = goals.events
    metrics.time_to_goals = list(goals.times)
    metrics.hover_fraction = hover_ticks / (tick + 1) if n_ticks else 0.0
    return EpisodeResult(scenario.name, paradigm.value, int(seed), metrics, dict(calls), rows)
