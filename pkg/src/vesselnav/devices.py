"""Composable device geometry: guidewires and catheters.

A device is an ordered tip-to-base list of shaped segments (straight, arc,
helix); any length not covered by the segments is a straight body at the
base end. The rest shape is emitted in a canonical frame with the base at
the origin and the body along +x; arcs bend in the x-y plane and helices
advance along +z.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError

GUIDEWIRE_DIAMETER = 0.89  # mm (0.035 inch class)
GUIDEWIRE_LENGTH = 450.0
CATHETER_DIAMETER = 1.7
CATHETER_LENGTH = 400.0
GUIDEWIRE_RIGIDITY = 1.0
CATHETER_RIGIDITY = 5.0
# hollow devices without an explicit lumen get this fraction of their OD
DEFAULT_LUMEN_FRACTION = 0.7


@dataclass(frozen=True)
class SegmentSpec:
    """One shaped device segment, ordered tip-to-base within a device.

    * straight: ``length``
    * arc: ``radius`` and ``angle`` (arclength = radius * angle)
    * helix: ``radius``, ``pitch`` (mm per turn) and ``angle`` (turn angle)

    ``roll`` rotates the segment's bending plane about the local tangent
    relative to the previous segment; opposed curves use ``roll=pi``.
    """

    kind: str
    length: float = 0.0
    radius: float = 0.0
    angle: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    rigidity: float | None = None

    def arclength(self) -> float:
        if self.kind == "straight":
            return self.length
        if self.kind == "arc":
            return self.radius * self.angle
        if self.kind == "helix":
            c = self.pitch / (2 * np.pi)
            return self.angle * float(np.hypot(self.radius, c))
        raise InvalidInputError(f"unknown segment kind {self.kind!r}")

    def curvature(self) -> float:
        """Rest curvature magnitude (1/mm) inside this segment."""
        if self.kind == "straight":
            return 0.0
        if self.kind == "arc":
            return 1.0 / self.radius
        if self.kind == "helix":
            c = self.pitch / (2 * np.pi)
            return self.radius / (self.radius**2 + c**2)
        raise InvalidInputError(f"unknown segment kind {self.kind!r}")


@dataclass(frozen=True)
class DeviceSpec:
    """A full device: shaped tip segments plus a straight body."""

    name: str
    segments: tuple[SegmentSpec, ...]
    total_length: float
    outer_diameter: float
    flexural_rigidity: float = GUIDEWIRE_RIGIDITY
    is_hollow: bool = False
    lumen_diameter: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def tip_arclength(self) -> float:
        return sum(s.arclength() for s in self.segments)

    def effective_lumen_diameter(self) -> float:
        if not self.is_hollow:
            return 0.0
        if self.lumen_diameter is not None:
            return self.lumen_diameter
        return DEFAULT_LUMEN_FRACTION * self.outer_diameter

    def segment_at(self, arclength_from_tip: float) -> SegmentSpec | None:
        """The shaped segment containing this arclength, or None for the body."""
        s = 0.0
        for seg in self.segments:
            s += seg.arclength()
            if arclength_from_tip < s:
                return seg
        return None

    def rigidity_at(self, arclength_from_tip: float) -> float:
        seg = self.segment_at(arclength_from_tip)
        if seg is not None and seg.rigidity is not None:
            return seg.rigidity
        return self.flexural_rigidity


def validate(spec: DeviceSpec) -> list[str]:
    """Collect every invariant violation; an empty list means the spec is ok."""
    problems = []
    if spec.outer_diameter <= 0:
        problems.append("outer_diameter must be > 0")
    if spec.total_length <= 0:
        problems.append("total_length must be > 0")
    if spec.flexural_rigidity <= 0:
        problems.append("flexural_rigidity must be > 0")
    shaped = 0.0
    for i, seg in enumerate(spec.segments):
        tag = f"segment {i} ({seg.kind})"
        if seg.kind not in ("straight", "arc", "helix"):
            problems.append(f"{tag}: unknown kind")
            continue
        if seg.kind == "straight" and seg.length <= 0:
            problems.append(f"{tag}: length must be > 0")
        if seg.kind in ("arc", "helix"):
            if seg.radius <= 0:
                problems.append(f"{tag}: radius must be > 0")
            if seg.angle <= 0:
                problems.append(f"{tag}: angle must be > 0")
        if seg.kind == "helix" and seg.pitch <= 0:
            problems.append(f"{tag}: pitch must be > 0")
        if seg.rigidity is not None and seg.rigidity <= 0:
            problems.append(f"{tag}: rigidity must be > 0")
        try:
            shaped += seg.arclength()
        except InvalidInputError:
            pass
    if shaped > spec.total_length:
        problems.append(
            f"total_length {spec.total_length} shorter than shaped tip ({shaped:.3f} mm)"
        )
    if spec.is_hollow:
        lumen = spec.effective_lumen_diameter()
        if not 0 < lumen < spec.outer_diameter:
            problems.append("lumen diameter must lie strictly inside the outer diameter")
    return problems


def preset(name: str, **params) -> DeviceSpec:
    """Parameterized standard devices: straight, j_shaped, simmons."""
    if name == "straight":
        length = params.pop("length", GUIDEWIRE_LENGTH)
        spec = DeviceSpec(
            name="straight-guidewire",
            segments=(SegmentSpec(kind="straight", length=length),),
            total_length=length,
            outer_diameter=params.pop("outer_diameter", GUIDEWIRE_DIAMETER),
            flexural_rigidity=params.pop("flexural_rigidity", GUIDEWIRE_RIGIDITY),
        )
    elif name == "j_shaped":
        tip_radius = params.pop("tip_radius", 12.1)
        tip_angle = params.pop("tip_angle", 0.4 * np.pi)
        length = params.pop("length", GUIDEWIRE_LENGTH)
        spec = DeviceSpec(
            name="j-guidewire",
            segments=(SegmentSpec(kind="arc", radius=tip_radius, angle=tip_angle),),
            total_length=length,
            outer_diameter=params.pop("outer_diameter", GUIDEWIRE_DIAMETER),
            flexural_rigidity=params.pop("flexural_rigidity", GUIDEWIRE_RIGIDITY),
        )
    elif name == "simmons":
        length = params.pop("length", CATHETER_LENGTH)
        spec = DeviceSpec(
            name="simmons-catheter",
            segments=(
                SegmentSpec(kind="arc", radius=8.0, angle=np.pi),
                SegmentSpec(kind="arc", radius=15.0, angle=0.75 * np.pi, roll=np.pi),
            ),
            total_length=length,
            outer_diameter=params.pop("outer_diameter", CATHETER_DIAMETER),
            flexural_rigidity=params.pop("flexural_rigidity", CATHETER_RIGIDITY),
            is_hollow=True,
        )
    elif name == "j_catheter":
        tip_radius = params.pop("tip_radius", 12.1)
        tip_angle = params.pop("tip_angle", 0.4 * np.pi)
        length = params.pop("length", CATHETER_LENGTH)
        spec = DeviceSpec(
            name="j-catheter",
            segments=(SegmentSpec(kind="arc", radius=tip_radius, angle=tip_angle),),
            total_length=length,
            outer_diameter=params.pop("outer_diameter", CATHETER_DIAMETER),
            flexural_rigidity=params.pop("flexural_rigidity", CATHETER_RIGIDITY),
            is_hollow=True,
        )
    else:
        raise InvalidInputError(f"unknown device preset {name!r}")
    if params:
        raise InvalidInputError(f"unknown preset parameters: {sorted(params)}")
    problems = validate(spec)
    if problems:
        raise InvalidInputError(f"preset produced an invalid device: {problems}")
    return spec


def rest_centerline(spec: DeviceSpec, ds: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample the rest shape at spacing ``ds``, tip first.

    Returns ``(points, rest_curvature)`` where points is (n, 3) in the
    canonical frame and rest_curvature holds the per-node analytic curvature
    binormal vector (1/mm) of the containing segment. Node i sits at
    arclength ``i * ds`` from the tip; the node nearest the base covers the
    leftover fraction below one spacing.

    Helix segments wind about the local binormal, so a helix following a
    straight body advances along +z; the tangent tilts by the helix lead
    angle at the segment entry.
    """
    if ds <= 0:
        raise InvalidInputError("ds must be > 0")
    problems = validate(spec)
    if problems:
        raise InvalidInputError(f"invalid device: {problems}")
    n = int(np.floor(spec.total_length / ds + 1e-9)) + 1
    pts = np.empty((n, 3))
    binormals = np.empty((n, 3))

    # Intervals in base-to-tip walking order: straight body first, then the
    # shaped segments reversed. Each entry: (length, segment, roll_on_entry).
    body_len = spec.total_length - spec.tip_arclength
    intervals: list[list] = []
    if body_len > 0:
        intervals.append([body_len, None, 0.0])
    pending_roll = sum(s.roll for s in spec.segments)
    for j in range(len(spec.segments) - 1, -1, -1):
        seg = spec.segments[j]
        intervals.append([seg.arclength(), seg, pending_roll])
        pending_roll = -seg.roll  # undo this segment's roll when leaving it

    pos = np.zeros(3)
    t = np.array([1.0, 0.0, 0.0])
    nvec = np.array([0.0, 1.0, 0.0])

    iv = 0
    entered = False
    walked = 0.0
    for k in range(n - 1, -1, -1):
        target = spec.total_length - k * ds  # arclength from base for node k
        while target - walked > 1e-12:
            if not entered:
                roll = intervals[iv][2]
                if roll:
                    b = np.cross(t, nvec)
                    nvec = np.cos(roll) * nvec + np.sin(roll) * b
                entered = True
            remaining = intervals[iv][0]
            step = min(target - walked, remaining)
            pos, t, nvec = _advance(pos, t, nvec, intervals[iv][1], step)
            walked += step
            intervals[iv][0] = remaining - step
            if intervals[iv][0] <= 1e-12 and iv + 1 < len(intervals):
                iv += 1
                entered = False
        pts[k] = pos
        # a node exactly on a boundary belongs to the tip-side interval,
        # whose entry roll may not have been applied yet
        seg = intervals[iv][1]
        nv = nvec
        if not entered and intervals[iv][2]:
            b = np.cross(t, nv)
            roll = intervals[iv][2]
            nv = np.cos(roll) * nv + np.sin(roll) * b
        if seg is None:
            binormals[k] = 0.0
        else:
            binormals[k] = seg.curvature() * np.cross(t, nv)
    return pts, binormals


def _advance(pos, t, nvec, seg: SegmentSpec | None, step: float):
    """Integrate the rest curve by ``step`` mm inside one segment."""
    if seg is None or seg.kind == "straight":
        return pos + t * step, t, nvec
    if seg.kind == "arc":
        r = seg.radius
        phi = step / r
        center = pos + nvec * r
        new_t = np.cos(phi) * t + np.sin(phi) * nvec
        new_n = -np.sin(phi) * t + np.cos(phi) * nvec
        return center - new_n * r, new_t, new_n
    if seg.kind == "helix":
        r = seg.radius
        c = seg.pitch / (2 * np.pi)
        return _advance_helix(pos, t, nvec, r, c, step / float(np.hypot(r, c)))
    raise InvalidInputError(f"unknown segment kind {seg.kind!r}")


def _advance_helix(pos, t, nvec, r, c, dphi):
    """Advance along a helix winding about the current binormal direction."""
    b = np.cross(t, nvec)
    speed = float(np.hypot(r, c))
    center = pos + nvec * r
    u = -nvec  # radial, from axis out to the curve
    w = np.cross(b, u)  # circumferential
    cphi, sphi = np.cos(dphi), np.sin(dphi)
    new_u = cphi * u + sphi * w
    new_w = -sphi * u + cphi * w
    new_pos = center + new_u * r + b * (c * dphi)
    new_t = (new_w * r + b * c) / speed
    return new_pos, new_t, -new_u
