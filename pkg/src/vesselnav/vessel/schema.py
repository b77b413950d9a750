"""JSON (de)serialization for vessel trees.

Schema (all floats are 64-bit; positions in mm):

    {
      "name": str,
      "branches": [
        {"id": str,
         "points": [[x, y, z], ...],
         "radii": [r, ...],
         "parent": null | {"branch": str, "point_index": int}}
      ],
      "insertion": {"position": [x, y, z], "direction": [x, y, z]},
      "mesh": null | {"vertices": [[x, y, z], ...],
                      "triangles": [[a, b, c], ...]}
    }
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .types import Branch, InsertionPoint, TriangleMesh, VesselTree


def tree_to_dict(tree: VesselTree) -> dict:
    return {
        "name": tree.name,
        "branches": [
            {
                "id": b.id,
                "points": b.points.tolist(),
                "radii": b.radii.tolist(),
                "parent": None
                if b.parent is None
                else {"branch": b.parent[0], "point_index": b.parent[1]},
            }
            for b in tree.branches
        ],
        "insertion": {
            "position": tree.insertion.position.tolist(),
            "direction": tree.insertion.direction.tolist(),
        },
        "mesh": None
        if tree.mesh is None
        else {
            "vertices": tree.mesh.vertices.tolist(),
            "triangles": tree.mesh.triangles.tolist(),
        },
    }


def tree_from_dict(data: dict) -> VesselTree:
    try:
        branches = tuple(
            Branch(
                id=b["id"],
                points=np.asarray(b["points"], dtype=np.float64),
                radii=np.asarray(b["radii"], dtype=np.float64),
                parent=None
                if b.get("parent") is None
                else (b["parent"]["branch"], int(b["parent"]["point_index"])),
            )
            for b in data["branches"]
        )
        insertion = InsertionPoint(
            position=np.asarray(data["insertion"]["position"], dtype=np.float64),
            direction=np.asarray(data["insertion"]["direction"], dtype=np.float64),
        )
        mesh = None
        if data.get("mesh") is not None:
            mesh = TriangleMesh(
                vertices=np.asarray(data["mesh"]["vertices"], dtype=np.float64),
                triangles=np.asarray(data["mesh"]["triangles"], dtype=np.int64),
            )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"vessel tree JSON missing field: {exc}") from None
    return VesselTree(
        branches=branches, insertion=insertion, name=data.get("name", "unnamed"), mesh=mesh
    )


def save_tree(tree: VesselTree, path) -> None:
    Path(path).write_text(json.dumps(tree_to_dict(tree)))


def load_tree(path) -> VesselTree:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", offset=exc.pos) from None
    return tree_from_dict(data)
