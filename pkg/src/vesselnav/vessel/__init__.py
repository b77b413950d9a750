"""Vessel-tree geometry: types, IO, centerline operations, procedural anatomy."""

from .arch import (
    generate_aortic_arch,
    generate_extended_tree,
    make_y_phantom,
    tube_mesh,
)
from .centerline import (
    DEFAULT_SPACING,
    CenterlineGraph,
    nearest_centerline_point,
    path_length,
    resample_centerline,
    sample_target,
    terminal_ends,
)
from .mesh_io import load_mesh, write_obj, write_stl_binary
from .schema import load_tree, save_tree, tree_from_dict, tree_to_dict
from .types import (
    ArchParameters,
    Branch,
    CenterlinePose,
    InsertionPoint,
    Target,
    TriangleMesh,
    VesselTree,
)

__all__ = [
    "ArchParameters",
    "Branch",
    "CenterlineGraph",
    "CenterlinePose",
    "DEFAULT_SPACING",
    "InsertionPoint",
    "Target",
    "TriangleMesh",
    "VesselTree",
    "generate_aortic_arch",
    "generate_extended_tree",
    "load_mesh",
    "load_tree",
    "make_y_phantom",
    "nearest_centerline_point",
    "path_length",
    "resample_centerline",
    "sample_target",
    "save_tree",
    "terminal_ends",
    "tree_from_dict",
    "tree_to_dict",
    "tube_mesh",
    "write_obj",
    "write_stl_binary",
]
