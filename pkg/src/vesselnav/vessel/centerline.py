"""Centerline graph operations: resampling, projection, path lengths, targets."""

from __future__ import annotations

import heapq

import numpy as np

from ..errors import InternalError, InvalidInputError
from .types import Branch, CenterlinePose, Target, VesselTree

DEFAULT_SPACING = 2.0


def resample_centerline(branch: Branch, spacing: float) -> Branch:
    """Resample a branch at uniform arclength intervals <= ``spacing``.

    Endpoints are preserved exactly; radii are interpolated linearly along
    arclength. The interval count is chosen so the actual spacing never
    exceeds the requested one.
    """
    if spacing <= 0:
        raise InvalidInputError("spacing must be > 0")
    if not np.all(np.isfinite(branch.points)):
        raise InvalidInputError("branch has non-finite points")
    total = branch.length
    n_seg = max(1, int(np.ceil(total / spacing - 1e-12)))
    s = np.linspace(0.0, total, n_seg + 1)
    cum = branch.arclengths
    pts = np.empty((len(s), 3))
    for k in range(3):
        pts[:, k] = np.interp(s, cum, branch.points[:, k])
    radii = np.interp(s, cum, branch.radii)
    pts[0] = branch.points[0]
    pts[-1] = branch.points[-1]
    return Branch(id=branch.id, points=pts, radii=radii, parent=branch.parent)


def _project_to_segments(points: np.ndarray, p: np.ndarray):
    """Distances from ``p`` to each polyline segment.

    Returns (dist2, t) arrays: squared distance and clamped parameter per
    segment.
    """
    a = points[:-1]
    d = points[1:] - a
    len2 = np.einsum("ij,ij->i", d, d)
    ap = p[None, :] - a
    t = np.einsum("ij,ij->i", ap, d) / np.where(len2 > 0, len2, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, None] * d
    diff = closest - p[None, :]
    dist2 = np.einsum("ij,ij->i", diff, diff)
    return dist2, t


def nearest_centerline_point(tree: VesselTree, point) -> CenterlinePose:
    """Globally nearest centerline pose over all branch polylines."""
    p = np.asarray(point, dtype=np.float64).reshape(3)
    best = None
    for b in tree.branches:
        dist2, t = _project_to_segments(b.points, p)
        i = int(np.argmin(dist2))
        cum = b.arclengths
        seg_len = cum[i + 1] - cum[i]
        s = float(cum[i] + t[i] * seg_len)
        d = float(np.sqrt(dist2[i]))
        if best is None or d < best.distance:
            best = CenterlinePose(branch=b.id, arclength=s, distance=d)
    if best is None:
        raise InternalError("tree has no branches")
    return best


class CenterlineGraph:
    """Shortest-path helper over the centerline point graph.

    Graph nodes are the branch centerline points; edges connect consecutive
    points within a branch and each child's first point to its attachment
    point on the parent. Because valid trees are acyclic, shortest paths are
    the unique paths, computed with Dijkstra for robustness.
    """

    def __init__(self, tree: VesselTree):
        self.tree = tree
        self._offset = {}
        n = 0
        for b in tree.branches:
            self._offset[b.id] = n
            n += len(b.points)
        self.n_nodes = n
        self._adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for b in tree.branches:
            off = self._offset[b.id]
            seg = b.segment_lengths
            for i, w in enumerate(seg):
                self._add_edge(off + i, off + i + 1, float(w))
            if b.parent is not None:
                pid, pidx = b.parent
                w = float(np.linalg.norm(b.points[0] - self.tree.branch(pid).points[pidx]))
                self._add_edge(off, self._offset[pid] + pidx, w)

    def _add_edge(self, u: int, v: int, w: float):
        self._adj[u].append((v, w))
        self._adj[v].append((u, w))

    def node_index(self, branch_id: str, point_index: int) -> int:
        return self._offset[branch_id] + point_index

    def distances_from(self, sources: list[tuple[int, float]]) -> np.ndarray:
        """Dijkstra distances to every node from weighted source seeds."""
        dist = np.full(self.n_nodes, np.inf)
        heap = []
        for idx, w in sources:
            if w < dist[idx]:
                dist[idx] = w
                heapq.heappush(heap, (w, idx))
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in self._adj[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _pose_anchors(self, pose: CenterlinePose) -> list[tuple[int, float]]:
        """Graph endpoints bracketing a pose, weighted by arclength offsets."""
        b = self.tree.branch(pose.branch)
        cum = b.arclengths
        s = min(max(pose.arclength, 0.0), b.length)
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(cum) - 2)
        off = self._offset[b.id]
        return [(off + i, float(s - cum[i])), (off + i + 1, float(cum[i + 1] - s))]

    def pose_distance_field(self, pose: CenterlinePose) -> np.ndarray:
        """Distance from ``pose`` to every graph node."""
        return self.distances_from(self._pose_anchors(pose))

    def pose_to_pose(self, a: CenterlinePose, b: CenterlinePose) -> float:
        if a.branch == b.branch:
            # acyclic graph: the unique path stays on the branch polyline
            br = self.tree.branch(a.branch)
            sa = min(max(a.arclength, 0.0), br.length)
            sb = min(max(b.arclength, 0.0), br.length)
            return abs(sa - sb)
        field = self.pose_distance_field(a)
        anchors = self._pose_anchors(b)
        return float(min(field[idx] + w for idx, w in anchors))

    def distance_to_pose(self, field: np.ndarray, pose: CenterlinePose) -> float:
        """Distance from the field's source to ``pose``, given its field."""
        anchors = self._pose_anchors(pose)
        return float(min(field[idx] + w for idx, w in anchors))


def path_length(tree: VesselTree, a, b, graph: CenterlineGraph | None = None) -> float:
    """Shortest distance along the centerline graph between two 3D points.

    Both points are first projected onto the nearest centerline pose.
    """
    g = graph if graph is not None else CenterlineGraph(tree)
    pa = nearest_centerline_point(tree, a)
    pb = nearest_centerline_point(tree, b)
    d = g.pose_to_pose(pa, pb)
    if not np.isfinite(d):
        raise InternalError("disconnected centerline projections")
    return d


def sample_target(
    tree: VesselTree,
    allowed_branches: list[str],
    rng_seed: int,
    spacing: float = DEFAULT_SPACING,
    threshold: float = 5.0,
) -> Target:
    """Uniformly sample a target over resampled points of allowed branches."""
    if not allowed_branches:
        raise InvalidInputError("allowed_branches must be non-empty")
    known = {b.id for b in tree.branches}
    for name in allowed_branches:
        if name not in known:
            raise InvalidInputError(f"unknown branch name {name!r}")
    candidates = []
    for name in allowed_branches:
        rb = resample_centerline(tree.branch(name), spacing)
        arcs = rb.arclengths
        for i in range(len(rb.points)):
            candidates.append((name, float(arcs[i]), rb.points[i]))
    rng = np.random.default_rng(rng_seed)
    name, arc, pos = candidates[int(rng.integers(len(candidates)))]
    return Target(position=pos, branch=name, arclength=arc, threshold=threshold)


def terminal_ends(tree: VesselTree, junction_tol: float = 1.0) -> list[CenterlinePose]:
    """Far ends of branches with no child attached near them.

    The root's entry end (where devices are inserted) is excluded.
    """
    ends = []
    for b in tree.branches:
        blocked = False
        for child in tree.children_of(b.id):
            attach_arc = b.arclengths[child.parent[1]]
            if b.length - attach_arc <= junction_tol:
                blocked = True
        if not blocked:
            ends.append(CenterlinePose(branch=b.id, arclength=b.length))
    return ends
