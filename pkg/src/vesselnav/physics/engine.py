"""Quasi-static elastic-rod engine: device insertion, twist and equilibrium.

Devices are discretized as node chains at spacing ``ds``, tip first. Each
control step updates inserted length and base twist from the commanded
velocities, regrows the chain at the base, and relaxes the rod(s) to
equilibrium with the selected solver backend. Concentric device pairs blend
their rest curvatures over the overlap region and the inner rod is kept
inside the outer one's lumen.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ..devices import DeviceSpec, rest_centerline, validate
from ..errors import InvalidInputError, UsageError, VesselNavError
from ..vessel.centerline import nearest_centerline_point
from ..vessel.types import VesselTree
from . import backend
from .tube import TubeTable, build_tube_table

VELOCITY_LIMIT_TRANSLATION = 35.0  # mm/s
VELOCITY_LIMIT_ROTATION = 3.14  # rad/s
DEFAULT_FRAME_RATE = 7.5  # Hz; control period is one frame

_BEND_CAP_FRACTION = 0.1
_ETA_FRACTION = 1.0 / 8.0


class SimError(VesselNavError):
    """Simulation failure: a non-finite or explosively moving state."""

    def __init__(self, kind: str, step_index: int):
        super().__init__(f"simulation error ({kind}) at step {step_index}")
        self.kind = kind
        self.step_index = step_index


@dataclass(frozen=True)
class EngineConfig:
    ds: float = 2.0
    dt: float = 1.0 / DEFAULT_FRAME_RATE
    solver_iterations: int = 200
    displacement_tolerance: float = 1e-3
    collision_margin: float = 0.05
    rng_seed: int = 0  # reserved; the default engine is deterministic

    def __post_init__(self):
        for name in ("ds", "dt", "displacement_tolerance", "collision_margin"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0")
        if self.solver_iterations <= 0:
            raise InvalidInputError("solver_iterations must be > 0")


@dataclass(frozen=True)
class Action:
    """Commanded speeds per device: translation mm/s, rotation rad/s."""

    translation: tuple[float, ...]
    rotation: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))
        object.__setattr__(self, "rotation", tuple(float(v) for v in self.rotation))
        if len(self.translation) != len(self.rotation):
            raise InvalidInputError("translation/rotation must have one entry per device")

    @classmethod
    def single(cls, translation: float, rotation: float) -> "Action":
        return cls(translation=(translation,), rotation=(rotation,))

    @property
    def n_devices(self) -> int:
        return len(self.translation)

    def clamped(self) -> "Action":
        return Action(
            translation=tuple(
                min(max(v, -VELOCITY_LIMIT_TRANSLATION), VELOCITY_LIMIT_TRANSLATION)
                for v in self.translation
            ),
            rotation=tuple(
                min(max(w, -VELOCITY_LIMIT_ROTATION), VELOCITY_LIMIT_ROTATION)
                for w in self.rotation
            ),
        )

    def as_array(self) -> np.ndarray:
        out = np.empty(2 * self.n_devices)
        out[0::2] = self.translation
        out[1::2] = self.rotation
        return out

    @classmethod
    def from_array(cls, arr) -> "Action":
        a = np.asarray(arr, dtype=np.float64).reshape(-1)
        if len(a) % 2 != 0:
            raise InvalidInputError("action array must interleave (translation, rotation)")
        return cls(translation=tuple(a[0::2]), rotation=tuple(a[1::2]))

    def is_finite(self) -> bool:
        return all(np.isfinite(self.translation)) and all(np.isfinite(self.rotation))


@dataclass(frozen=True)
class RodState:
    """Discretized state of one inserted device."""

    device: DeviceSpec
    inserted_length: float
    base_twist: float
    nodes: np.ndarray  # (n, 3) tip-first

    @property
    def tip_position(self) -> np.ndarray:
        return self.nodes[0]


@dataclass(frozen=True)
class _DeviceTables:
    """Per-device canonical arrays over the full device length."""

    k1: np.ndarray  # (n,) rest curvature components in the transported frame
    k2: np.ndarray
    t_edge: np.ndarray  # (n, 3) base-side edge tangent per node (inlet at base)
    n_edge: np.ndarray
    b_edge: np.ndarray
    stiff: np.ndarray
    eta: np.ndarray


def _normalize(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise InvalidInputError("zero-length direction")
    return v / n


def _perp(v: np.ndarray) -> np.ndarray:
    a = np.abs(v)
    if a[0] <= a[1] and a[0] <= a[2]:
        p = np.array([0.0, v[2], -v[1]])
    elif a[1] <= a[2]:
        p = np.array([-v[2], 0.0, v[0]])
    else:
        p = np.array([v[1], -v[0], 0.0])
    return p / np.linalg.norm(p)


def _rotate_align(a: np.ndarray, b: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply the minimal rotation taking unit vector a to b, to v."""
    c = float(np.dot(a, b))
    if c < -1.0 + 1e-12:
        axis = _perp(a)
        return 2.0 * np.dot(axis, v) * axis - v
    k = np.cross(a, b)
    return v * c + np.cross(k, v) + k * (np.dot(k, v) / (1.0 + c))


@functools.lru_cache(maxsize=32)
def _device_tables(device: DeviceSpec, ds: float) -> _DeviceTables:
    pts, kb = rest_centerline(device, ds)
    n = len(pts)
    t_edge = np.empty((n, 3))
    n_edge = np.empty((n, 3))
    b_edge = np.empty((n, 3))
    if n >= 2:
        inlet_t = _normalize(pts[n - 2] - pts[n - 1])
    else:
        inlet_t = np.array([1.0, 0.0, 0.0])
    nvec = np.array([0.0, 1.0, 0.0])
    nvec = nvec - np.dot(nvec, inlet_t) * inlet_t
    nvec = _perp(inlet_t) if np.linalg.norm(nvec) < 1e-9 else _normalize(nvec)
    t_edge[n - 1] = inlet_t
    n_edge[n - 1] = nvec
    b_edge[n - 1] = np.cross(inlet_t, nvec)
    prev_t = inlet_t
    for j in range(n - 2, -1, -1):
        t = _normalize(pts[j] - pts[j + 1])
        den = 1.0 + float(np.dot(prev_t, t))
        if den >= 1e-8:
            axis = np.cross(prev_t, t)
            nvec = nvec * float(np.dot(prev_t, t)) + np.cross(axis, nvec) + axis * (
                np.dot(axis, nvec) / den
            )
        nvec = nvec - np.dot(nvec, t) * t
        ln = np.linalg.norm(nvec)
        nvec = _perp(t) if ln < 1e-12 else nvec / ln
        t_edge[j] = t
        n_edge[j] = nvec
        b_edge[j] = np.cross(t, nvec)
        prev_t = t
    k1 = np.einsum("ij,ij->i", kb, n_edge)
    k2 = np.einsum("ij,ij->i", kb, b_edge)
    arcs = np.arange(n) * ds
    stiff = np.array([device.rigidity_at(float(a)) for a in arcs])
    eta = _ETA_FRACTION * ds**3 / stiff
    return _DeviceTables(
        k1=k1, k2=k2, t_edge=t_edge, n_edge=n_edge, b_edge=b_edge, stiff=stiff, eta=eta
    )


def _twisted_components(tables: _DeviceTables, n: int, twist: float):
    c, s = np.cos(twist), np.sin(twist)
    k1 = c * tables.k1[:n] - s * tables.k2[:n]
    k2 = s * tables.k1[:n] + c * tables.k2[:n]
    return k1, k2


@dataclass
class CoaxialCoupling:
    """Blended rest curvatures and the inner rod's lumen constraint."""

    outer_k1: np.ndarray
    outer_k2: np.ndarray
    inner_k1: np.ndarray
    inner_k2: np.ndarray
    inner_anchor: np.ndarray  # (n_i, 3)
    inner_cap: np.ndarray  # (n_i,) radius, inf where unconstrained


def couple_coaxial(outer: RodState, inner: RodState, ds: float = 2.0) -> CoaxialCoupling:
    """Stiffness-weighted rest-curvature blend over the coaxial overlap.

    Both rods use the blended curvature where they overlap (arclength from
    the shared insertion below both inserted lengths); the inner rod is also
    anchored to the outer polyline within the outer lumen radius.
    """
    if not outer.device.is_hollow:
        raise InvalidInputError("outer device must be hollow")
    lumen = outer.device.effective_lumen_diameter()
    if inner.device.outer_diameter >= lumen:
        raise InvalidInputError(
            f"inner diameter {inner.device.outer_diameter} does not fit the outer lumen {lumen}"
        )
    to = _device_tables(outer.device, ds)
    ti = _device_tables(inner.device, ds)
    n_o = len(outer.nodes)
    n_i = len(inner.nodes)
    ok1, ok2 = _twisted_components(to, n_o, outer.base_twist)
    ik1, ik2 = _twisted_components(ti, n_i, inner.base_twist)
    anchor = np.zeros((n_i, 3))
    cap = np.full(n_i, np.inf)
    L_o = outer.inserted_length
    L_i = inner.inserted_length
    if L_o <= 0.0 or L_i <= 0.0:
        return CoaxialCoupling(ok1, ok2, ik1, ik2, anchor, cap)

    full_i_arcs = np.arange(len(ti.k1)) * ds
    full_o_arcs = np.arange(len(to.k1)) * ds
    ik1_full_tw, ik2_full_tw = _twisted_components(ti, len(ti.k1), inner.base_twist)
    ok1_full_tw, ok2_full_tw = _twisted_components(to, len(to.k1), outer.base_twist)

    # outer nodes inside the overlap: blend with the inner component values
    # at the matching arclength from the shared insertion point
    s_o = L_o - np.arange(n_o) * ds
    mask_o = s_o <= L_i + 1e-9
    if mask_o.any():
        a_i = L_i - s_o[mask_o]  # inner arclength from its tip
        w_o = to.stiff[:n_o][mask_o]
        w_i = np.interp(a_i, full_i_arcs, ti.stiff)
        bi1 = np.interp(a_i, full_i_arcs, ik1_full_tw)
        bi2 = np.interp(a_i, full_i_arcs, ik2_full_tw)
        ok1 = ok1.copy()
        ok2 = ok2.copy()
        ok1[mask_o] = (w_o * ok1[mask_o] + w_i * bi1) / (w_o + w_i)
        ok2[mask_o] = (w_o * ok2[mask_o] + w_i * bi2) / (w_o + w_i)

    s_i = L_i - np.arange(n_i) * ds
    mask_i = s_i <= L_o + 1e-9
    if mask_i.any():
        a_o = L_o - s_i[mask_i]
        w_i = ti.stiff[:n_i][mask_i]
        w_o = np.interp(a_o, full_o_arcs, to.stiff)
        bo1 = np.interp(a_o, full_o_arcs, ok1_full_tw)
        bo2 = np.interp(a_o, full_o_arcs, ok2_full_tw)
        ik1 = ik1.copy()
        ik2 = ik2.copy()
        ik1[mask_i] = (w_i * ik1[mask_i] + w_o * bo1) / (w_i + w_o)
        ik2[mask_i] = (w_i * ik2[mask_i] + w_o * bo2) / (w_i + w_o)
        # anchor to the outer polyline at the same insertion-relative arclength
        idx = np.clip(a_o / ds, 0.0, n_o - 1.0)
        i0 = np.minimum(idx.astype(np.int64), n_o - 2) if n_o >= 2 else np.zeros(
            mask_i.sum(), dtype=np.int64
        )
        frac = idx - i0
        anchor[mask_i] = outer.nodes[i0] + frac[:, None] * (
            outer.nodes[np.minimum(i0 + 1, n_o - 1)] - outer.nodes[i0]
        )
        cap[mask_i] = max(lumen / 2.0 - inner.device.outer_diameter / 2.0, 0.05)
    return CoaxialCoupling(ok1, ok2, ik1, ik2, anchor, cap)


def collide_project(node, tree: VesselTree, margin: float = 0.05) -> np.ndarray:
    """Project a point into the centerline tube, if it lies outside."""
    p = np.asarray(node, dtype=np.float64).reshape(3)
    pose = nearest_centerline_point(tree, p)
    branch = tree.branch(pose.branch)
    r = branch.radius_at(pose.arclength)
    bound = r - margin
    if pose.distance <= bound or pose.distance < 1e-12:
        return p.copy()
    closest = branch.point_at(pose.arclength)
    return closest + (p - closest) * (bound / pose.distance)


class RodEngine:
    """Default simulation engine: projection-based quasi-static rods.

    Instances are single-threaded; create one per concurrent episode.
    """

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self._vessel: VesselTree | None = None
        self._devices: tuple[DeviceSpec, ...] = ()
        self._table: TubeTable | None = None
        self._nodes: list[np.ndarray] = []
        self._lengths: list[float] = []
        self._twists: list[float] = []
        self._step_index = 0
        self._last_iterations: list[int] = []

    @property
    def vessel(self) -> VesselTree:
        if self._vessel is None:
            raise UsageError("engine has not been reset")
        return self._vessel

    @property
    def devices(self) -> tuple[DeviceSpec, ...]:
        return self._devices

    @property
    def step_index(self) -> int:
        return self._step_index

    @property
    def last_iterations(self) -> tuple[int, ...]:
        """Solver iterations used by each rod in the most recent solve."""
        return tuple(self._last_iterations)

    def reset(self, vessel: VesselTree, devices: list[DeviceSpec]) -> None:
        if not devices:
            raise InvalidInputError("at least one device is required")
        if len(devices) > 2:
            raise InvalidInputError("at most two concentric devices are supported")
        for dev in devices:
            problems = validate(dev)
            if problems:
                raise InvalidInputError(f"device {dev.name!r}: {problems}")
        if len(devices) == 2:
            if not devices[0].is_hollow:
                raise InvalidInputError("devices must be ordered outermost first")
            if devices[1].outer_diameter >= devices[0].effective_lumen_diameter():
                raise InvalidInputError("inner device does not fit the outer lumen")
        self._vessel = vessel
        self._devices = tuple(devices)
        self._table = build_tube_table(vessel)
        for dev in devices:
            _device_tables(dev, self.config.ds)
        self._nodes = [np.array([vessel.insertion.position]) for _ in devices]
        self._lengths = [0.0 for _ in devices]
        self._twists = [0.0 for _ in devices]
        self._step_index = 0
        self._last_iterations = [0 for _ in devices]

    def step(self, action: Action) -> None:
        if self._vessel is None:
            raise UsageError("engine has not been reset")
        if action.n_devices != len(self._devices):
            raise InvalidInputError(
                f"action covers {action.n_devices} devices, engine has {len(self._devices)}"
            )
        if not action.is_finite():
            raise InvalidInputError("action must be finite")
        a = action.clamped()
        dt = self.config.dt
        for i, dev in enumerate(self._devices):
            L = self._lengths[i] + a.translation[i] * dt
            self._lengths[i] = min(max(L, 0.0), dev.total_length)
            self._twists[i] += a.rotation[i] * dt
            self._regrow(i)
        self.solve_equilibrium()
        self._step_index += 1

    def _regrow(self, i: int) -> None:
        ds = self.config.ds
        ins = self.vessel.insertion
        n_new = int(np.floor(self._lengths[i] / ds + 1e-12)) + 1
        nodes = self._nodes[i]
        if n_new > len(nodes):
            extra_idx = np.arange(len(nodes), n_new)
            extra = ins.position[None, :] + np.maximum(
                self._lengths[i] - extra_idx * ds, 0.0
            )[:, None] * ins.direction[None, :]
            nodes = np.vstack([nodes, extra])
        elif n_new < len(nodes):
            nodes = nodes[:n_new].copy()
        self._nodes[i] = np.ascontiguousarray(nodes)

    def solve_equilibrium(self) -> None:
        """Relax every rod; outer first so the inner can follow its lumen."""
        if self._vessel is None:
            raise UsageError("engine has not been reset")
        cfg = self.config
        ds = cfg.ds
        ins = self.vessel.insertion
        coupling = None
        if len(self._devices) == 2:
            states = self.rod_states
            coupling = couple_coaxial(states[0], states[1], ds)
        for i, dev in enumerate(self._devices):
            tables = _device_tables(dev, ds)
            nodes = self._nodes[i]
            n = len(nodes)
            if coupling is None:
                k1, k2 = _twisted_components(tables, n, self._twists[i])
            elif i == 0:
                k1, k2 = coupling.outer_k1, coupling.outer_k2
            else:
                # refresh anchors against the just-solved outer rod
                states = self.rod_states
                coupling = couple_coaxial(states[0], states[1], ds)
                k1, k2 = coupling.inner_k1, coupling.inner_k2
            if coupling is not None and i == 1:
                anchor = coupling.inner_anchor
                cap = coupling.inner_cap
            else:
                anchor = np.zeros((n, 3))
                cap = np.full(n, np.inf)
            frac = self._lengths[i] - (n - 1) * ds
            base_pos = ins.position + max(frac, 0.0) * ins.direction
            t_c = tables.t_edge[n - 1]
            seed_n = _rotate_align(t_c, ins.direction, tables.n_edge[n - 1])
            seed_b = _rotate_align(t_c, ins.direction, tables.b_edge[n - 1])
            iters, _, err = backend.solve_rod(
                nodes,
                base_pos,
                ins.direction,
                seed_n,
                seed_b,
                np.ascontiguousarray(k1),
                np.ascontiguousarray(k2),
                np.ascontiguousarray(tables.stiff[:n]),
                np.ascontiguousarray(tables.eta[:n]),
                np.ascontiguousarray(anchor),
                np.ascontiguousarray(cap),
                self._table,
                cfg.collision_margin,
                ds,
                cfg.displacement_tolerance,
                cfg.solver_iterations,
                _BEND_CAP_FRACTION * ds,
            )
            self._last_iterations[i] = iters
            if err == backend.ERR_NONFINITE:
                raise SimError("non-finite-state", self._step_index)
            if err == backend.ERR_EXPLOSION:
                raise SimError("explosive-displacement", self._step_index)

    @property
    def rod_states(self) -> tuple[RodState, ...]:
        return tuple(
            RodState(
                device=dev,
                inserted_length=self._lengths[i],
                base_twist=self._twists[i],
                nodes=self._nodes[i].copy(),
            )
            for i, dev in enumerate(self._devices)
        )

    def snapshot(self) -> dict:
        """JSON-ready state export for replay and debugging."""
        return {
            "step_index": self._step_index,
            "devices": [dev.name for dev in self._devices],
            "inserted_lengths": [float(v) for v in self._lengths],
            "base_twists": [float(v) for v in self._twists],
            "nodes": [nodes.tolist() for nodes in self._nodes],
        }
