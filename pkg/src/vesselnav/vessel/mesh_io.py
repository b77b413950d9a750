"""Triangle-mesh readers/writers: binary/ASCII STL and Wavefront OBJ."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, InvalidInputError
from .types import TriangleMesh

_STL_BIN_HEADER = 80
_STL_BIN_RECORD = 50  # 12 floats * 4 bytes + 2 attribute bytes


def load_mesh(path, fmt: str | None = None) -> TriangleMesh:
    """Load a triangle mesh; ``fmt`` is one of stl-binary, stl-ascii, obj.

    When ``fmt`` is omitted it is inferred from the extension and, for .stl,
    from the file content.
    """
    path = Path(path)
    data = path.read_bytes()
    if fmt is None:
        if path.suffix.lower() == ".obj":
            fmt = "obj"
        else:
            fmt = "stl-ascii" if _looks_ascii_stl(data) else "stl-binary"
    if fmt == "obj":
        return _parse_obj(data)
    if fmt == "stl-ascii":
        return _parse_stl_ascii(data)
    if fmt == "stl-binary":
        return _parse_stl_binary(data)
    raise InvalidInputError(f"unknown mesh format {fmt!r}")


def _looks_ascii_stl(data: bytes) -> bool:
    head = data[:512].lstrip()
    return head.startswith(b"solid") and b"facet" in data[:4096]


def _dedupe(vertices: list[tuple[float, float, float]], tris: list[tuple[int, int, int]]) -> TriangleMesh:
    index: dict[tuple[float, float, float], int] = {}
    out_v = []
    remap = []
    for v in vertices:
        j = index.get(v)
        if j is None:
            j = len(out_v)
            index[v] = j
            out_v.append(v)
        remap.append(j)
    out_t = [(remap[a], remap[b], remap[c]) for a, b, c in tris]
    if not out_t:
        raise InvalidInputError("mesh contains no triangles")
    return TriangleMesh(vertices=np.array(out_v), triangles=np.array(out_t))


def _parse_stl_binary(data: bytes) -> TriangleMesh:
    if len(data) < _STL_BIN_HEADER + 4:
        raise FormatError("binary STL shorter than its 84-byte header", offset=len(data))
    (count,) = struct.unpack_from("<I", data, _STL_BIN_HEADER)
    expected = _STL_BIN_HEADER + 4 + count * _STL_BIN_RECORD
    if len(data) < expected:
        raise FormatError(
            f"binary STL truncated: {count} triangles declared, payload short",
            offset=len(data),
        )
    if count == 0:
        raise InvalidInputError("mesh contains no triangles")
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    off = _STL_BIN_HEADER + 4
    for _ in range(count):
        rec = struct.unpack_from("<12f", data, off)
        for k in range(3):
            verts.append((rec[3 + 3 * k], rec[4 + 3 * k], rec[5 + 3 * k]))
        n = len(verts)
        tris.append((n - 3, n - 2, n - 1))
        off += _STL_BIN_RECORD
    return _dedupe(verts, tris)


def _parse_stl_ascii(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("ascii", errors="strict")
    except UnicodeDecodeError as exc:
        raise FormatError("ASCII STL contains non-ASCII bytes", offset=exc.start) from None
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    pending: list[tuple[float, float, float]] = []
    offset = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        if stripped.startswith("vertex"):
            parts = stripped.split()
            if len(parts) != 4:
                raise FormatError("malformed vertex line in ASCII STL", offset=offset)
            try:
                pending.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError:
                raise FormatError("non-numeric vertex in ASCII STL", offset=offset) from None
        elif stripped.startswith("endfacet"):
            if len(pending) != 3:
                raise FormatError(
                    f"facet with {len(pending)} vertices in ASCII STL", offset=offset
                )
            verts.extend(pending)
            n = len(verts)
            tris.append((n - 3, n - 2, n - 1))
            pending = []
        offset += len(line)
    if pending:
        raise FormatError("ASCII STL ends inside a facet", offset=len(data))
    return _dedupe(verts, tris)


def _parse_obj(data: bytes) -> TriangleMesh:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("OBJ is not valid UTF-8", offset=exc.start) from None
    verts: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    offset = 0
    for line in text.splitlines(keepends=True):
        parts = line.split()
        if parts and parts[0] == "v":
            if len(parts) < 4:
                raise FormatError("OBJ vertex with fewer than 3 coordinates", offset=offset)
            try:
                verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError:
                raise FormatError("non-numeric OBJ vertex", offset=offset) from None
        elif parts and parts[0] == "f":
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise FormatError(f"bad face index {token!r}", offset=offset) from None
                if i < 0:
                    i = len(verts) + 1 + i
                if not 1 <= i <= len(verts):
                    raise FormatError(f"face index {i} out of range", offset=offset)
                idx.append(i - 1)
            if len(idx) != 3:
                raise FormatError("only triangular OBJ faces are supported", offset=offset)
            tris.append((idx[0], idx[1], idx[2]))
        offset += len(line)
    if not tris:
        raise InvalidInputError("mesh contains no triangles")
    return TriangleMesh(vertices=np.array(verts), triangles=np.array(tris))


def write_stl_binary(mesh: TriangleMesh, path) -> None:
    """Write a binary STL with zeroed normals."""
    path = Path(path)
    v = mesh.vertices
    t = mesh.triangles
    buf = bytearray()
    buf += b"\0" * _STL_BIN_HEADER
    buf += struct.pack("<I", len(t))
    for tri in t:
        buf += struct.pack("<3f", 0.0, 0.0, 0.0)
        for j in tri:
            buf += struct.pack("<3f", *(float(c) for c in v[j]))
        buf += b"\0\0"
    path.write_bytes(bytes(buf))


def write_obj(mesh: TriangleMesh, path) -> None:
    path = Path(path)
    lines = [f"v {p[0]!r} {p[1]!r} {p[2]!r}" for p in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    path.write_text("\n".join(lines) + "\n")
