"""Vessel-tree domain types: branches, trees, insertion points, targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

_UNIT_TOL = 1e-9
_JUNCTION_TOL = 1e-6


@dataclass(frozen=True)
class Branch:
    """One vessel segment: an ordered centerline polyline with lumen radii.

    ``parent`` is ``None`` for the root, else ``(branch_id, point_index)``
    naming the attachment point on the parent centerline. The first point of
    a child branch coincides with that attachment point.
    """

    id: str
    points: np.ndarray  # (n, 3) positions, mm
    radii: np.ndarray  # (n,) lumen radii, mm
    parent: tuple[str, int] | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        rad = np.asarray(self.radii, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "radii", rad)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise InvalidInputError(f"branch {self.id!r}: need >= 2 centerline points")
        if rad.shape != (pts.shape[0],):
            raise InvalidInputError(f"branch {self.id!r}: one radius per point required")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(rad)):
            raise InvalidInputError(f"branch {self.id!r}: non-finite geometry")
        if np.any(rad <= 0):
            raise InvalidInputError(f"branch {self.id!r}: radii must be > 0")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= 0):
            raise InvalidInputError(f"branch {self.id!r}: repeated consecutive points")

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    @property
    def arclengths(self) -> np.ndarray:
        """Cumulative arclength at each centerline point, starting at 0."""
        return np.concatenate(([0.0], np.cumsum(self.segment_lengths)))

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def point_at(self, arclength: float) -> np.ndarray:
        """Interpolated centerline position at the given arclength."""
        s = np.clip(arclength, 0.0, self.length)
        cum = self.arclengths
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(cum) - 2)
        seg = cum[i + 1] - cum[i]
        t = 0.0 if seg == 0 else (s - cum[i]) / seg
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def radius_at(self, arclength: float) -> float:
        s = np.clip(arclength, 0.0, self.length)
        cum = self.arclengths
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(cum) - 2)
        seg = cum[i + 1] - cum[i]
        t = 0.0 if seg == 0 else (s - cum[i]) / seg
        return float(self.radii[i] + t * (self.radii[i + 1] - self.radii[i]))


@dataclass(frozen=True)
class InsertionPoint:
    """Where devices enter the tree and the direction they advance in."""

    position: np.ndarray  # (3,) mm
    direction: np.ndarray  # (3,) unit vector

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64).reshape(3)
        d = np.asarray(self.direction, dtype=np.float64).reshape(3)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "direction", d)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > _UNIT_TOL:
            raise InvalidInputError(f"insertion direction must be unit length (got |d|={n})")


@dataclass(frozen=True)
class TriangleMesh:
    """Raw triangle surface: vertex array plus an index list."""

    vertices: np.ndarray  # (v, 3) mm
    triangles: np.ndarray  # (t, 3) int indices

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidInputError("mesh vertices must be (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise InvalidInputError("mesh triangles must be (m, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise InvalidInputError("mesh triangle index out of range")
        if t.size:
            degenerate = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
            if degenerate.any():
                raise InvalidInputError("mesh has triangles with repeated vertex indices")


@dataclass(frozen=True)
class VesselTree:
    """A branch-structured vessel system with an insertion point.

    Exactly one branch has no parent (the root); the branch graph must be
    connected and acyclic. The surface mesh is optional and only used for
    rendering/export; collision works against the centerline tube.
    """

    branches: tuple[Branch, ...]
    insertion: InsertionPoint
    name: str = "unnamed"
    mesh: TriangleMesh | None = None

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        by_id = {}
        for b in self.branches:
            if b.id in by_id:
                raise InvalidInputError(f"duplicate branch id {b.id!r}")
            by_id[b.id] = b
        roots = [b for b in self.branches if b.parent is None]
        if len(roots) != 1:
            raise InvalidInputError(f"tree must have exactly one root, found {len(roots)}")
        for b in self.branches:
            if b.parent is None:
                continue
            pid, pidx = b.parent
            if pid not in by_id:
                raise InvalidInputError(f"branch {b.id!r}: unknown parent {pid!r}")
            parent = by_id[pid]
            if not 0 <= pidx < len(parent.points):
                raise InvalidInputError(f"branch {b.id!r}: parent index {pidx} out of range")
            gap = float(np.linalg.norm(b.points[0] - parent.points[pidx]))
            if gap > _JUNCTION_TOL:
                raise InvalidInputError(
                    f"branch {b.id!r}: first point {gap:.3g} mm from its attachment"
                )
        # connectivity + acyclicity: every branch must reach the root by parent links
        root_id = roots[0].id
        for b in self.branches:
            seen = set()
            cur = b
            while cur.parent is not None:
                if cur.id in seen:
                    raise InvalidInputError(f"branch graph has a cycle through {cur.id!r}")
                seen.add(cur.id)
                cur = by_id[cur.parent[0]]
            if cur.id != root_id:
                raise InvalidInputError(f"branch {b.id!r} is disconnected from the root")
        ins = self.insertion
        root = roots[0]
        if np.linalg.norm(ins.position - root.points[0]) > root.radii[0]:
            raise InvalidInputError("insertion point is not at the root branch entry")

    @property
    def root(self) -> Branch:
        return next(b for b in self.branches if b.parent is None)

    def branch(self, branch_id: str) -> Branch:
        for b in self.branches:
            if b.id == branch_id:
                return b
        raise InvalidInputError(f"no branch named {branch_id!r}")

    def children_of(self, branch_id: str) -> list[Branch]:
        return [b for b in self.branches if b.parent is not None and b.parent[0] == branch_id]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box over all centerline points (ignores radii)."""
        pts = np.vstack([b.points for b in self.branches])
        return pts.min(axis=0), pts.max(axis=0)


@dataclass(frozen=True)
class Target:
    """A navigation goal on a branch centerline."""

    position: np.ndarray  # (3,) mm
    branch: str
    arclength: float
    threshold: float = 5.0

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64).reshape(3)
        object.__setattr__(self, "position", pos)
        if self.threshold <= 0:
            raise InvalidInputError("target threshold must be > 0")
        if self.arclength < 0:
            raise InvalidInputError("target arclength must be >= 0")


@dataclass(frozen=True)
class CenterlinePose:
    """Projection of an arbitrary point onto the centerline graph."""

    branch: str
    arclength: float
    distance: float = 0.0

    def __post_init__(self):
        if self.distance < 0:
            raise InvalidInputError("pose distance must be >= 0")


@dataclass
class ArchParameters:
    """Parameter ranges for the procedural aortic arch generator.

    The nine sampled scalars are: arch radius, ascending length, descending
    length, four branch radii, take-off angle jitter and branch length scale.
    The aorta lumen radius and centerline spacing are fixed configuration.
    """

    arch_radius: tuple[float, float] = (24.0, 32.0)
    ascending_length: tuple[float, float] = (30.0, 55.0)
    descending_length: tuple[float, float] = (70.0, 110.0)
    trunk_radius: tuple[float, float] = (5.5, 7.0)
    right_carotid_radius: tuple[float, float] = (3.0, 4.2)
    left_carotid_radius: tuple[float, float] = (3.0, 4.2)
    left_subclavian_radius: tuple[float, float] = (4.0, 5.2)
    takeoff_jitter: tuple[float, float] = (-0.12, 0.12)
    branch_length_scale: tuple[float, float] = (0.9, 1.2)
    aorta_radius: float = 11.0
    spacing: float = 1.5

    def as_dict(self) -> dict:
        return {
            "arch_radius": list(self.arch_radius),
            "ascending_length": list(self.ascending_length),
            "descending_length": list(self.descending_length),
            "trunk_radius": list(self.trunk_radius),
            "right_carotid_radius": list(self.right_carotid_radius),
            "left_carotid_radius": list(self.left_carotid_radius),
            "left_subclavian_radius": list(self.left_subclavian_radius),
            "takeoff_jitter": list(self.takeoff_jitter),
            "branch_length_scale": list(self.branch_length_scale),
            "aorta_radius": self.aorta_radius,
            "spacing": self.spacing,
        }
