"""Fluoroscopy geometry: projection, simulated tracking, frame synthesis.

Patient axes are x toward the patient's left, y posterior, z cranial. A
projection first translates by the isocenter, rotates about z by the
RAO/LAO angle (RAO positive), then tilts about the rotated x axis by the
cranial/caudal angle. The image coordinates are (x'', z'') in mm with y''
the depth; cone-beam mode adds a perspective divide by the source distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInputError, ProjectionError
from .physics.engine import RodState

DEFAULT_FRAME_RATE = 7.5

_BACKGROUND_GRAY = 128.0
_DEVICE_GRAY = 40.0


@dataclass(frozen=True)
class FluoroGeometry:
    rao_lao_angle: float = np.deg2rad(30.0)
    cran_caud_angle: float = 0.0
    isocenter: np.ndarray = field(default_factory=lambda: np.zeros(3))
    pixel_spacing: float = 0.5  # mm per pixel
    image_size: tuple[int, int] = (512, 512)  # (width, height) px
    frame_rate: float = DEFAULT_FRAME_RATE
    mode: str = "orthographic"
    source_distance: float = 1000.0  # cone-beam only, mm

    def __post_init__(self):
        object.__setattr__(
            self, "isocenter", np.asarray(self.isocenter, dtype=np.float64).reshape(3)
        )
        if self.pixel_spacing <= 0:
            raise InvalidInputError("pixel_spacing must be > 0")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise InvalidInputError("image_size must be positive")
        if self.frame_rate <= 0:
            raise InvalidInputError("frame_rate must be > 0")
        if self.mode not in ("orthographic", "cone-beam"):
            raise InvalidInputError(f"unknown projection mode {self.mode!r}")

    def rotation(self) -> np.ndarray:
        a, b = self.rao_lao_angle, self.cran_caud_angle
        ca, sa = np.cos(a), np.sin(a)
        cb, sb = np.cos(b), np.sin(b)
        rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cb, -sb], [0.0, sb, cb]])
        return rx @ rz


@dataclass(frozen=True)
class TrackingResult:
    """Projected device points, tip first, one row of (u, v) mm per point."""

    points: tuple[np.ndarray, ...]  # one (k, 2) array per device

    @property
    def n_devices(self) -> int:
        return len(self.points)


def project_point(p, geometry: FluoroGeometry) -> np.ndarray:
    """Project a 3D point (mm) to image-plane coordinates (mm)."""
    q = geometry.rotation() @ (np.asarray(p, dtype=np.float64).reshape(3) - geometry.isocenter)
    if geometry.mode == "orthographic":
        return np.array([q[0], q[2]])
    denom = geometry.source_distance + q[1]
    if denom <= 0:
        raise ProjectionError("point lies at or behind the cone-beam source")
    scale = geometry.source_distance / denom
    return np.array([q[0] * scale, q[2] * scale])


def project_points(pts: np.ndarray, geometry: FluoroGeometry) -> np.ndarray:
    """Vectorized ``project_point`` for an (n, 3) array."""
    q = (np.asarray(pts, dtype=np.float64) - geometry.isocenter) @ geometry.rotation().T
    if geometry.mode == "orthographic":
        return q[:, [0, 2]]
    denom = geometry.source_distance + q[:, 1]
    if np.any(denom <= 0):
        raise ProjectionError("point lies at or behind the cone-beam source")
    scale = geometry.source_distance / denom
    return q[:, [0, 2]] * scale[:, None]


def interpolate_tip_points(
    nodes: np.ndarray, spacing: float = 2.0, count: int = 3
) -> np.ndarray:
    """Points at arclengths 0, spacing, ... from the tip along the polyline.

    Arclengths beyond the available polyline repeat the most basal point,
    so the result always has ``count`` rows.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    seg = np.linalg.norm(np.diff(nodes, axis=0), axis=1) if len(nodes) > 1 else np.zeros(0)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = cum[-1]
    out = np.empty((count, 3))
    for k in range(count):
        s = k * spacing
        if s >= total:
            out[k] = nodes[-1]
            continue
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(nodes) - 2)
        t = (s - cum[i]) / (cum[i + 1] - cum[i])
        out[k] = nodes[i] + t * (nodes[i + 1] - nodes[i])
    return out


def track_devices(
    states: list[RodState] | tuple[RodState, ...],
    geometry: FluoroGeometry,
    spacing: float = 2.0,
    count: int = 3,
) -> TrackingResult:
    """Simulated tracking: equally spaced tip points projected per device."""
    projected = []
    for st in states:
        pts3 = interpolate_tip_points(st.nodes, spacing=spacing, count=count)
        projected.append(project_points(pts3, geometry))
    return TrackingResult(points=tuple(projected))


def _to_pixels(uv: np.ndarray, geometry: FluoroGeometry) -> np.ndarray:
    w, h = geometry.image_size
    px = uv[..., 0] / geometry.pixel_spacing + (w - 1) / 2.0
    py = (h - 1) / 2.0 - uv[..., 1] / geometry.pixel_spacing
    return np.stack([px, py], axis=-1)


def render_fluoro(
    states: list[RodState] | tuple[RodState, ...],
    geometry: FluoroGeometry,
    noise_sigma: float = 6.0,
    rng_seed: int = 0,
) -> np.ndarray:
    """Noisy grayscale frame with devices drawn as dark thick polylines.

    Returns a (height, width) uint8 array; deterministic in ``rng_seed``.
    """
    w, h = geometry.image_size
    if w * h > 64_000_000:
        raise InvalidInputError("image_size exceeds the supported frame area")
    rng = np.random.default_rng(rng_seed)
    frame = np.full((h, w), _BACKGROUND_GRAY)
    if noise_sigma > 0:
        frame += rng.normal(0.0, noise_sigma, size=(h, w))
    for st in states:
        uv = project_points(st.nodes, geometry)
        pix = _to_pixels(uv, geometry)
        half_width = max(st.device.outer_diameter / geometry.pixel_spacing, 1.0) / 2.0
        _draw_polyline(frame, pix, half_width)
    return np.clip(np.rint(frame), 0, 255).astype(np.uint8)


def _draw_polyline(frame: np.ndarray, pix: np.ndarray, half_width: float) -> None:
    h, w = frame.shape
    pad = int(np.ceil(half_width)) + 1
    if len(pix) == 1:
        segs = [(pix[0], pix[0])]
    else:
        segs = list(zip(pix[:-1], pix[1:]))
    for a, b in segs:
        x0 = max(int(np.floor(min(a[0], b[0]))) - pad, 0)
        x1 = min(int(np.ceil(max(a[0], b[0]))) + pad, w - 1)
        y0 = max(int(np.floor(min(a[1], b[1]))) - pad, 0)
        y1 = min(int(np.ceil(max(a[1], b[1]))) + pad, h - 1)
        if x1 < x0 or y1 < y0:
            continue
        xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        d = b - a
        len2 = float(d @ d)
        px = xs - a[0]
        py = ys - a[1]
        if len2 > 0:
            t = np.clip((px * d[0] + py * d[1]) / len2, 0.0, 1.0)
        else:
            t = np.zeros_like(px, dtype=float)
        ex = px - t * d[0]
        ey = py - t * d[1]
        mask = ex * ex + ey * ey <= half_width * half_width
        frame[ys[mask], xs[mask]] = _DEVICE_GRAY


def write_pgm(frame: np.ndarray, path) -> None:
    """Binary PGM (P5), bit-exact and codec-free."""
    frame = np.asarray(frame, dtype=np.uint8)
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise FormatError("not a binary PGM (P5) file", offset=0)
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise FormatError("malformed PGM header", offset=start) from None
    pos += 1
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError("only 8-bit PGM supported", offset=2)
    body = data[pos : pos + w * h]
    if len(body) != w * h:
        raise FormatError("PGM pixel payload truncated", offset=len(data))
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)
