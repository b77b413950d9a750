"""Episode-based navigation environment.

Observations are the current and previous projected tip points, the
projected target and the last action, all normalized to [-1, 1]. The
per-step reward is ``-0.005 + 0.001 * (previous - current centerline
distance to target) + 1.0 on success``. Episodes terminate on success,
entering the end of a branch off the route, or a simulation error; they
truncate at the phase's time limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bench.spec import BenchmarkSpec
from .errors import InvalidInputError, UsageError
from .imaging import FluoroGeometry, TrackingResult, project_point, project_points, track_devices
from .physics.engine import Action, EngineConfig, RodEngine, SimError
from .vessel.centerline import CenterlineGraph, nearest_centerline_point, terminal_ends
from .vessel.types import Target, VesselTree

OUTCOME_SUCCESS = "success"
OUTCOME_WRONG_BRANCH = "wrong-branch"
OUTCOME_SIM_ERROR = "sim-error"
OUTCOME_TIMEOUT = "timeout"

STEP_PENALTY = -0.005
PATHLENGTH_GAIN = 0.001
SUCCESS_BONUS = 1.0

_POSITION_PAD = 5.0  # mm beyond the projected vessel extent


@dataclass(frozen=True)
class EpisodeConfig:
    dt: float
    max_duration: float
    success_threshold: float = 5.0
    wrong_branch_margin: float = 4.0

    def __post_init__(self):
        if self.max_duration <= 0 or self.dt <= 0:
            raise InvalidInputError("durations must be positive")

    @property
    def max_steps(self) -> int:
        return int(np.floor(self.max_duration / self.dt + 1e-9))


@dataclass(frozen=True)
class Observation:
    """Normalized observation; every component lies in [-1, 1]."""

    tracking: np.ndarray  # (n_devices, 3, 2)
    tracking_prev: np.ndarray  # (n_devices, 3, 2)
    target: np.ndarray  # (2,)
    last_action: np.ndarray  # (2 * n_devices,)

    def as_vector(self) -> np.ndarray:
        """Flattened, fixed order: per device now then prev, target, action."""
        parts = []
        for d in range(self.tracking.shape[0]):
            parts.append(self.tracking[d].reshape(-1))
            parts.append(self.tracking_prev[d].reshape(-1))
        parts.append(self.target)
        parts.append(self.last_action)
        return np.concatenate(parts)

    @property
    def size(self) -> int:
        n = self.tracking.shape[0]
        return 12 * n + 2 + 2 * n


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict


def compute_reward(pathlength_prev: float, pathlength_now: float, reached: bool) -> float:
    """Idle penalty plus progress along the centerline plus success bonus."""
    delta = pathlength_prev - pathlength_now
    return STEP_PENALTY + PATHLENGTH_GAIN * delta + (SUCCESS_BONUS if reached else 0.0)


def normalize(x, lo, hi):
    x = np.asarray(x, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(hi <= lo):
        raise InvalidInputError("normalization bounds must satisfy hi > lo")
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def denormalize(y, lo, hi):
    y = np.asarray(y, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if np.any(hi <= lo):
        raise InvalidInputError("normalization bounds must satisfy hi > lo")
    return lo + (y + 1.0) * (hi - lo) / 2.0


@dataclass(frozen=True)
class ObservationBounds:
    """Per-element normalization ranges for positions and actions."""

    pos_lo: np.ndarray  # (2,)
    pos_hi: np.ndarray  # (2,)
    act_lo: np.ndarray  # (2n,)
    act_hi: np.ndarray  # (2n,)


def position_bounds(tree: VesselTree, geometry: FluoroGeometry, pad: float = _POSITION_PAD):
    """Projected bounding box of the lumen (centerline +- radius), padded.

    Any point inside the lumen projects inside this box, which keeps
    normalized observations within [-1, 1].
    """
    lo = np.array([np.inf, np.inf])
    hi = np.array([-np.inf, -np.inf])
    for b in tree.branches:
        uv = project_points(b.points, geometry)
        lo = np.minimum(lo, (uv - b.radii[:, None]).min(axis=0))
        hi = np.maximum(hi, (uv + b.radii[:, None]).max(axis=0))
    return lo - pad, hi + pad


def action_bounds(n_devices: int, translation_limit: float, rotation_limit: float):
    lo = np.tile([-translation_limit, -rotation_limit], n_devices)
    hi = np.tile([translation_limit, rotation_limit], n_devices)
    return lo, hi


def build_observation(
    tracking_now: TrackingResult,
    tracking_prev: TrackingResult,
    target_2d: np.ndarray,
    last_action: Action,
    bounds: ObservationBounds,
) -> Observation:
    now = np.stack(tracking_now.points)
    prev = np.stack(tracking_prev.points)
    return Observation(
        tracking=normalize(now, bounds.pos_lo, bounds.pos_hi),
        tracking_prev=normalize(prev, bounds.pos_lo, bounds.pos_hi),
        target=normalize(target_2d, bounds.pos_lo, bounds.pos_hi),
        last_action=normalize(last_action.as_array(), bounds.act_lo, bounds.act_hi),
    )


def wrong_branch_zones(
    tree: VesselTree,
    graph: CenterlineGraph,
    target: Target,
    success_threshold: float,
    margin: float,
) -> list[tuple[str, float]]:
    """Branch ends whose neighborhood means the device took a wrong turn.

    Ends within the success neighborhood of the target are excluded, as is
    the insertion end (terminal_ends never reports it).
    """
    target_pose_field = graph.pose_distance_field(
        nearest_centerline_point(tree, target.position)
    )
    zones = []
    for end in terminal_ends(tree):
        d = graph.distance_to_pose(
            target_pose_field, end
        )
        if d <= success_threshold + margin:
            continue
        zones.append((end.branch, end.arclength))
    return zones


class Env:
    """One navigation episode at a time over a benchmark task.

    Instances are single-threaded; run parallel episodes on separate
    instances.
    """

    def __init__(
        self,
        spec: BenchmarkSpec,
        phase: str = "eval",
        engine_config: EngineConfig | None = None,
    ):
        self.spec = spec
        self.phase = phase
        dt = 1.0 / spec.imaging.frame_rate
        self.episode_config = EpisodeConfig(
            dt=dt,
            max_duration=spec.max_duration(phase),
            success_threshold=spec.success_threshold,
            wrong_branch_margin=spec.wrong_branch_margin,
        )
        self.engine = RodEngine(engine_config or EngineConfig(dt=dt))
        self._active = False
        self._episode_seed: int | None = None
        self.tree: VesselTree | None = None
        self.target: Target | None = None

    def reset(self, episode_seed: int) -> Observation:
        self._episode_seed = int(episode_seed)
        self.tree = self.spec.vessel_for_episode(self._episode_seed)
        self.target = self.spec.episode_target(self.tree, self._episode_seed)
        self.engine.reset(self.tree, list(self.spec.devices))
        self._graph = CenterlineGraph(self.tree)
        target_pose = nearest_centerline_point(self.tree, self.target.position)
        self._target_field = self._graph.pose_distance_field(target_pose)
        self._zones = wrong_branch_zones(
            self.tree,
            self._graph,
            self.target,
            self.episode_config.success_threshold,
            self.episode_config.wrong_branch_margin,
        )
        pos_lo, pos_hi = position_bounds(self.tree, self.spec.imaging)
        act_lo, act_hi = action_bounds(
            self.spec.n_devices, self.spec.translation_limit, self.spec.rotation_limit
        )
        self.bounds = ObservationBounds(pos_lo, pos_hi, act_lo, act_hi)
        self._target_2d = project_point(self.target.position, self.spec.imaging)
        self._step_count = 0
        self._active = True
        self._last_action = Action(
            translation=(0.0,) * self.spec.n_devices,
            rotation=(0.0,) * self.spec.n_devices,
        )
        self._tracking = track_devices(self.engine.rod_states, self.spec.imaging)
        self._tracking_prev = self._tracking
        self._path_now = self._pathlength_to_target()
        self.initial_pathlength = self._path_now
        return self._observation()

    def _pathlength_to_target(self) -> float:
        best = np.inf
        for st in self.engine.rod_states:
            pose = nearest_centerline_point(self.tree, st.tip_position)
            best = min(best, self._graph.distance_to_pose(self._target_field, pose))
        return float(best)

    def _observation(self) -> Observation:
        return build_observation(
            self._tracking, self._tracking_prev, self._target_2d, self._last_action, self.bounds
        )

    def _check_wrong_branch(self) -> bool:
        for st in self.engine.rod_states:
            pose = nearest_centerline_point(self.tree, st.tip_position)
            for branch, end_arc in self._zones:
                if pose.branch == branch and end_arc - pose.arclength <= (
                    self.episode_config.wrong_branch_margin
                ):
                    return True
        return False

    def step(self, action: Action | np.ndarray) -> StepResult:
        if not self._active:
            raise UsageError("episode is finished; call reset() first")
        if not isinstance(action, Action):
            action = Action.from_array(action)
        if action.n_devices != self.spec.n_devices:
            raise InvalidInputError(
                f"action has {action.n_devices} device channels, expected {self.spec.n_devices}"
            )
        clamped = action.clamped()
        prev_path = self._path_now
        outcome = None
        terminated = False
        truncated = False
        try:
            self.engine.step(clamped)
        except SimError:
            outcome = OUTCOME_SIM_ERROR
            terminated = True
            path_now = prev_path
            reached = False
        else:
            self._tracking_prev = self._tracking
            self._tracking = track_devices(self.engine.rod_states, self.spec.imaging)
            path_now = self._pathlength_to_target()
            reached = any(
                float(np.linalg.norm(st.tip_position - self.target.position))
                <= self.episode_config.success_threshold
                for st in self.engine.rod_states
            )
            if reached:
                outcome = OUTCOME_SUCCESS
                terminated = True
            elif self._check_wrong_branch():
                outcome = OUTCOME_WRONG_BRANCH
                terminated = True
        self._step_count += 1
        if not terminated and self._step_count >= self.episode_config.max_steps:
            truncated = True
            outcome = OUTCOME_TIMEOUT
        reward = compute_reward(prev_path, path_now, reached)
        self._path_now = path_now
        self._last_action = clamped
        if terminated or truncated:
            self._active = False
        tips = [st.tip_position.tolist() for st in self.engine.rod_states]
        info = {
            "tip_position": tips[int(np.argmin([
                float(np.linalg.norm(np.array(t) - self.target.position)) for t in tips
            ]))],
            "tip_positions": tips,
            "pathlength": path_now,
            "action": clamped.as_array().tolist(),
            "time": self._step_count * self.episode_config.dt,
            "outcome": outcome,
            "tracking": [p.tolist() for p in self._tracking.points],
        }
        return StepResult(
            observation=self._observation(),
            reward=reward,
            terminated=terminated,
            truncated=truncated,
            info=info,
        )

    @property
    def done(self) -> bool:
        return not self._active

    @property
    def step_count(self) -> int:
        return self._step_count
