"""Procedural vessel trees: a parameterized aortic arch and test phantoms.

The generated anatomy is synthetic. A type-I arch is built as one root
branch (descending limb, arch, ascending limb, ordered from the insertion
end) with four vessels reachable from it: a brachiocephalic trunk whose
distal half continues as the right subclavian artery, the right common
carotid branching off that trunk, and the left common carotid and left
subclavian attached directly to the arch.
"""

from __future__ import annotations

import numpy as np

from ..errors import GenerationError, InvalidInputError
from .centerline import resample_centerline
from .types import ArchParameters, Branch, InsertionPoint, TriangleMesh, VesselTree

# In-plane frame: the arch plane contains the cranial axis and is tilted so a
# 30 degree right-anterior-oblique view looks at it face on.
_VIEW_TILT = np.pi / 6
_E1 = np.array([np.cos(_VIEW_TILT), -np.sin(_VIEW_TILT), 0.0])  # in-plane lateral
_EDEPTH = np.array([np.sin(_VIEW_TILT), np.cos(_VIEW_TILT), 0.0])  # out of plane
_EZ = np.array([0.0, 0.0, 1.0])

_MAX_TAKEOFF_KINK = np.deg2rad(45.0)


def _plane(a: float, h: float, depth: float = 0.0) -> np.ndarray:
    return a * _E1 + h * _EZ + depth * _EDEPTH


def _draw(rng: np.random.Generator, lohi: tuple[float, float]) -> float:
    lo, hi = lohi
    return float(lo + (hi - lo) * rng.random())


def _bezier(p0, p1, p2, n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 2 * p0[None] + 2 * (1 - t) * t * p1[None] + t**2 * p2[None]


def _tilt_toward_up(tangent: np.ndarray, max_kink: float = _MAX_TAKEOFF_KINK) -> np.ndarray:
    """Rotate a take-off direction from the parent tangent toward cranial.

    The result stays within ``max_kink`` of the parent tangent, which keeps
    junction kinks navigable by a flexible device.
    """
    t = tangent / np.linalg.norm(tangent)
    up = _EZ
    ang = float(np.arccos(np.clip(np.dot(t, up), -1.0, 1.0)))
    if ang <= max_kink:
        return up
    # rotate t toward up by max_kink inside their common plane
    axis = np.cross(t, up)
    axis_n = np.linalg.norm(axis)
    if axis_n < 1e-12:
        return t
    axis = axis / axis_n
    c, s = np.cos(max_kink), np.sin(max_kink)
    return t * c + np.cross(axis, t) * s + axis * np.dot(axis, t) * (1 - c)


def _branch_curve(p0, d0, final_dir, length, spacing, max_bow=16.0) -> np.ndarray:
    d0 = d0 / np.linalg.norm(d0)
    f = final_dir / np.linalg.norm(final_dir)
    bow = min(0.38 * length, max_bow)
    p1 = p0 + d0 * bow
    p2 = p1 + f * (length - bow)
    dense = _bezier(np.asarray(p0, float), p1, p2, max(16, int(length / 0.5)))
    return _resampled_points(dense, spacing)


def _resampled_points(points: np.ndarray, spacing: float) -> np.ndarray:
    tmp = Branch(id="_", points=points, radii=np.ones(len(points)))
    return resample_centerline(tmp, spacing).points


def generate_aortic_arch(seed: int, params: ArchParameters | None = None) -> VesselTree:
    """Generate a synthetic type-I aortic arch from a seeded parameter draw."""
    return _generate(seed, params or ArchParameters(), extended=False)


def generate_extended_tree(seed: int, params: ArchParameters | None = None) -> VesselTree:
    """Arch plus longer carotids and vertebral arteries, for dual-device runs."""
    return _generate(seed, params or ArchParameters(), extended=True)


def _generate(seed: int, params: ArchParameters, extended: bool) -> VesselTree:
    rng = np.random.default_rng(seed)
    arch_r = _draw(rng, params.arch_radius)
    asc_len = _draw(rng, params.ascending_length)
    desc_len = _draw(rng, params.descending_length)
    trunk_r = _draw(rng, params.trunk_radius)
    rcar_r = _draw(rng, params.right_carotid_radius)
    lcar_r = _draw(rng, params.left_carotid_radius)
    lsub_r = _draw(rng, params.left_subclavian_radius)
    jitter = _draw(rng, params.takeoff_jitter)
    len_scale = _draw(rng, params.branch_length_scale)
    spacing = params.spacing
    aorta_r = params.aorta_radius

    h_c = 0.0  # arch center height; insertion ends up below it

    # Root centerline, ordered from the insertion (descending) end:
    # descending limb up, over the arch, down the ascending limb.
    desc = np.array([_plane(arch_r, h_c - desc_len + s) for s in np.arange(0.0, desc_len, spacing)])
    thetas = np.arange(np.pi, 0.0, -spacing / arch_r)
    arch = np.array([_plane(-arch_r * np.cos(t), h_c + arch_r * np.sin(t)) for t in thetas])
    asc = np.array([_plane(-arch_r, h_c - s) for s in np.arange(0.0, asc_len + spacing / 2, spacing)])
    aorta_pts = np.vstack([desc, arch, asc])
    aorta = Branch(id="aorta", points=aorta_pts, radii=np.full(len(aorta_pts), aorta_r))

    def arch_index(theta: float) -> int:
        """Root point index closest to arch angle ``theta``."""
        target = _plane(-arch_r * np.cos(theta), h_c + arch_r * np.sin(theta))
        d = np.linalg.norm(aorta_pts - target[None], axis=1)
        return int(np.argmin(d))

    def root_tangent(idx: int) -> np.ndarray:
        lo, hi = max(idx - 1, 0), min(idx + 1, len(aorta_pts) - 1)
        t = aorta_pts[hi] - aorta_pts[lo]
        return t / np.linalg.norm(t)

    takeoffs = {
        "brachiocephalic_trunk": np.deg2rad(60) + jitter,
        "left_common_carotid": np.deg2rad(90) - jitter,
        "left_subclavian": np.deg2rad(118) + jitter,
    }

    branches = [aorta]

    # Brachiocephalic trunk continuing into the right subclavian.
    bt_idx = arch_index(takeoffs["brachiocephalic_trunk"])
    bt_p0 = aorta_pts[bt_idx]
    bt_d0 = _tilt_toward_up(root_tangent(bt_idx))
    trunk_len = 38.0 * len_scale
    rsub_len = 85.0 * len_scale
    trunk_up = _branch_curve(bt_p0, bt_d0, -0.35 * _E1 + _EZ + 0.18 * _EDEPTH, trunk_len, spacing)
    # subclavian continuation: bends laterally toward the patient's right (-e1)
    rsub_dir0 = trunk_up[-1] - trunk_up[-2]
    rsub = _branch_curve(
        trunk_up[-1], rsub_dir0, -0.9 * _E1 + 0.35 * _EZ + 0.2 * _EDEPTH, rsub_len, spacing
    )
    trunk_pts = np.vstack([trunk_up, rsub[1:]])
    trunk = Branch(
        id="brachiocephalic_trunk",
        points=trunk_pts,
        radii=np.full(len(trunk_pts), trunk_r),
        parent=("aorta", bt_idx),
    )
    branches.append(trunk)

    # Right common carotid off the trunk where the subclavian bend begins.
    rc_idx = len(trunk_up) - 1
    rcar_len = (150.0 if extended else 105.0) * len_scale
    rcar_pts = _branch_curve(
        trunk_pts[rc_idx],
        _tilt_toward_up(trunk_pts[rc_idx] - trunk_pts[rc_idx - 1]),
        -0.2 * _E1 + _EZ + 0.05 * _EDEPTH,
        rcar_len,
        spacing,
    )
    branches.append(
        Branch(
            id="right_common_carotid",
            points=rcar_pts,
            radii=np.full(len(rcar_pts), rcar_r),
            parent=("brachiocephalic_trunk", rc_idx),
        )
    )

    lc_idx = arch_index(takeoffs["left_common_carotid"])
    lcar_len = (160.0 if extended else 115.0) * len_scale
    lcar_pts = _branch_curve(
        aorta_pts[lc_idx],
        _tilt_toward_up(root_tangent(lc_idx)),
        0.12 * _E1 + _EZ - 0.18 * _EDEPTH,
        lcar_len,
        spacing,
    )
    branches.append(
        Branch(
            id="left_common_carotid",
            points=lcar_pts,
            radii=np.full(len(lcar_pts), lcar_r),
            parent=("aorta", lc_idx),
        )
    )

    ls_idx = arch_index(takeoffs["left_subclavian"])
    lsub_len = 95.0 * len_scale
    lsub_pts = _branch_curve(
        aorta_pts[ls_idx],
        _tilt_toward_up(root_tangent(ls_idx)),
        0.85 * _E1 + 0.45 * _EZ - 0.25 * _EDEPTH,
        lsub_len,
        spacing,
    )
    branches.append(
        Branch(
            id="left_subclavian",
            points=lsub_pts,
            radii=np.full(len(lsub_pts), lsub_r),
            parent=("aorta", ls_idx),
        )
    )

    if extended:
        vert_r = 2.2
        for name, host, host_arc in (
            ("right_vertebral", trunk, trunk_len + 40.0 * len_scale),
            ("left_vertebral", branches[-1], 45.0 * len_scale),
        ):
            arcs = host.arclengths
            v_idx = int(np.argmin(np.abs(arcs - host_arc)))
            v_idx = max(1, min(v_idx, len(host.points) - 2))
            v_d0 = _tilt_toward_up(host.points[v_idx + 1] - host.points[v_idx - 1])
            v_pts = _branch_curve(host.points[v_idx], v_d0, _EZ, 100.0 * len_scale, spacing)
            branches.append(
                Branch(
                    id=name,
                    points=v_pts,
                    radii=np.full(len(v_pts), vert_r),
                    parent=(host.id, v_idx),
                )
            )

    insertion = InsertionPoint(
        position=aorta_pts[0],
        direction=(aorta_pts[1] - aorta_pts[0]) / np.linalg.norm(aorta_pts[1] - aorta_pts[0]),
    )
    name = f"{'extended' if extended else 'arch'}-{seed}"
    tree = VesselTree(
        branches=tuple(branches),
        insertion=insertion,
        name=name,
        mesh=None,
    )
    _check_no_self_intersection(tree)
    return VesselTree(
        branches=tree.branches, insertion=tree.insertion, name=tree.name, mesh=tube_mesh(tree)
    )


def _check_no_self_intersection(tree: VesselTree) -> None:
    """Reject trees whose branch tubes overlap away from their junctions."""
    junction_positions = np.array(
        [b.points[0] for b in tree.branches if b.parent is not None]
    ).reshape(-1, 3)
    coarse = {b.id: resample_centerline(b, 5.0) for b in tree.branches}

    def near_junction(pts: np.ndarray) -> np.ndarray:
        if len(junction_positions) == 0:
            return np.zeros(len(pts), dtype=bool)
        d = np.linalg.norm(pts[:, None, :] - junction_positions[None], axis=2)
        return d.min(axis=1) < 30.0

    ids = [b.id for b in tree.branches]
    for i, bi in enumerate(ids):
        for bj in ids[i + 1 :]:
            pi, pj = coarse[bi], coarse[bj]
            d = np.linalg.norm(pi.points[:, None, :] - pj.points[None, :, :], axis=2)
            clearance = 0.8 * (pi.radii[:, None] + pj.radii[None, :])
            mask = near_junction(pi.points)[:, None] | near_junction(pj.points)[None, :]
            d = np.where(mask, np.inf, d)
            if np.any(d < clearance):
                raise GenerationError(f"branches {bi!r} and {bj!r} intersect for this draw")


def tube_mesh(tree: VesselTree, sides: int = 12, ring_spacing: float = 3.0) -> TriangleMesh:
    """Swept-tube triangulation of every branch, for rendering and export."""
    verts: list[np.ndarray] = []
    tris: list[tuple[int, int, int]] = []
    for b in tree.branches:
        rb = resample_centerline(b, ring_spacing)
        pts, radii = rb.points, rb.radii
        tangents = np.gradient(pts, axis=0)
        tangents /= np.linalg.norm(tangents, axis=1)[:, None]
        # parallel-transported ring frame
        n = _perp(tangents[0])
        ring_start = len(verts)
        for i in range(len(pts)):
            if i > 0:
                n = _transport(tangents[i - 1], tangents[i], n)
            bvec = np.cross(tangents[i], n)
            for k in range(sides):
                ang = 2 * np.pi * k / sides
                verts.append(pts[i] + radii[i] * (np.cos(ang) * n + np.sin(ang) * bvec))
        for i in range(len(pts) - 1):
            base = ring_start + i * sides
            for k in range(sides):
                a0 = base + k
                a1 = base + (k + 1) % sides
                b0 = a0 + sides
                b1 = a1 + sides
                tris.append((a0, a1, b0))
                tris.append((a1, b1, b0))
    return TriangleMesh(vertices=np.array(verts), triangles=np.array(tris))


def _perp(v: np.ndarray) -> np.ndarray:
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) <= min(abs(v[1]), abs(v[2])) else (
        np.array([0.0, 1.0, 0.0]) if abs(v[1]) <= abs(v[2]) else np.array([0.0, 0.0, 1.0])
    )
    p = np.cross(v, a)
    return p / np.linalg.norm(p)


def _transport(t0: np.ndarray, t1: np.ndarray, v: np.ndarray) -> np.ndarray:
    axis = np.cross(t0, t1)
    den = 1.0 + float(np.dot(t0, t1))
    if den < 1e-12:
        return v
    return v * float(np.dot(t0, t1)) + np.cross(axis, v) + axis * (np.dot(axis, v) / den)


def make_y_phantom(
    trunk_length: float = 80.0,
    branch_length: float = 60.0,
    half_angle_deg: float = 30.0,
    trunk_radius: float = 6.0,
    branch_radius: float = 4.0,
    spacing: float = 2.0,
) -> VesselTree:
    """A planar Y-shaped test tree: one trunk splitting into two branches."""
    if min(trunk_length, branch_length, trunk_radius, branch_radius) <= 0:
        raise InvalidInputError("phantom dimensions must be positive")
    n = int(trunk_length / spacing) + 1
    trunk_pts = np.array([[0.0, 0.0, s] for s in np.linspace(0.0, trunk_length, n)])
    trunk = Branch(id="trunk", points=trunk_pts, radii=np.full(n, trunk_radius))
    ang = np.deg2rad(half_angle_deg)
    branches = [trunk]
    for name, sign in (("left", 1.0), ("right", -1.0)):
        d = np.array([sign * np.sin(ang), 0.0, np.cos(ang)])
        m = int(branch_length / spacing) + 1
        pts = trunk_pts[-1] + np.linspace(0.0, branch_length, m)[:, None] * d[None]
        branches.append(
            Branch(
                id=name,
                points=pts,
                radii=np.full(m, branch_radius),
                parent=("trunk", n - 1),
            )
        )
    tree = VesselTree(
        branches=tuple(branches),
        insertion=InsertionPoint(position=trunk_pts[0], direction=np.array([0.0, 0.0, 1.0])),
        name="y-phantom",
    )
    return tree
