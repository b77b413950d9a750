"""Benchmark task definitions and their constants.

Three tasks: BasicWireNav (one fixed vessel, one guidewire), ArchVariety
(a fresh procedural arch per episode, one guidewire) and DualDeviceNav (a
fixed extended tree, catheter plus guidewire). Constants shared by all
three: 35 mm/s and 3.14 rad/s velocity limits, 7.5 Hz control/imaging rate
and a 5 mm success threshold.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from ..devices import DeviceSpec, preset
from ..errors import InvalidInputError
from ..imaging import FluoroGeometry
from ..physics.engine import (
    DEFAULT_FRAME_RATE,
    VELOCITY_LIMIT_ROTATION,
    VELOCITY_LIMIT_TRANSLATION,
)
from ..vessel import (
    generate_aortic_arch,
    generate_extended_tree,
    load_tree,
    sample_target,
)
from ..vessel.types import Target, VesselTree

SUCCESS_THRESHOLD = 5.0  # mm
WRONG_BRANCH_MARGIN = 4.0  # mm
TARGET_SPACING = 2.0  # mm between candidate target points

BASIC_WIRE_NAV_VESSEL_SEED = 20240
ARCH_VARIETY_EVAL_SEED = 661023725
DUAL_DEVICE_VESSEL_SEED = 30117

VESSEL_FILE_ENV = "VESSELNAV_VESSEL_FILE"


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    vessel_mode: str  # fixed | per-episode
    vessel_seed: int | None
    extended_anatomy: bool
    devices: tuple[DeviceSpec, ...]
    target_branches: tuple[str, ...]
    train_max_duration: float  # s
    eval_max_duration: float  # s
    imaging: FluoroGeometry
    success_threshold: float = SUCCESS_THRESHOLD
    wrong_branch_margin: float = WRONG_BRANCH_MARGIN
    translation_limit: float = VELOCITY_LIMIT_TRANSLATION
    rotation_limit: float = VELOCITY_LIMIT_ROTATION
    target_spacing: float = TARGET_SPACING
    tree_file: str | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.devices:
            raise InvalidInputError("benchmark needs at least one device")
        for value in (
            self.train_max_duration,
            self.eval_max_duration,
            self.success_threshold,
            self.translation_limit,
            self.rotation_limit,
        ):
            if value <= 0:
                raise InvalidInputError("benchmark constants must be positive")

    @property
    def frame_rate(self) -> float:
        return self.imaging.frame_rate

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    def max_duration(self, phase: str) -> float:
        if phase == "train":
            return self.train_max_duration
        if phase == "eval":
            return self.eval_max_duration
        raise InvalidInputError(f"unknown phase {phase!r} (use train or eval)")

    def _fixed_tree(self) -> VesselTree:
        if self.tree_file is not None:
            return load_tree(self.tree_file)
        gen = generate_extended_tree if self.extended_anatomy else generate_aortic_arch
        return gen(self.vessel_seed)

    def vessel_for_episode(self, episode_seed: int) -> VesselTree:
        """The episode's tree: fixed, or drawn from the episode seed."""
        if self.vessel_mode == "fixed":
            return self._fixed_tree()
        derived = np.random.SeedSequence(episode_seed).generate_state(4)
        return generate_aortic_arch(int(derived[0]))

    def episode_target(self, tree: VesselTree, episode_seed: int) -> Target:
        derived = np.random.SeedSequence(episode_seed).generate_state(4)
        return sample_target(
            tree,
            list(self.target_branches),
            rng_seed=int(derived[1]),
            spacing=self.target_spacing,
            threshold=self.success_threshold,
        )


_DEFAULT_IMAGING = FluoroGeometry()


def _resolve_tree_file(explicit: str | None) -> tuple[str | None, tuple[str, ...]]:
    """A user-supplied vessel file (JSON tree schema), if any and readable."""
    path = explicit if explicit is not None else os.environ.get(VESSEL_FILE_ENV)
    if path is None:
        return None, ()
    if not os.path.exists(path):
        return None, (
            f"configured vessel file {path!r} not found; using the procedural stand-in",
        )
    return path, (f"vessel loaded from {path!r}",)


def basic_wire_nav(tree_file: str | None = None) -> BenchmarkSpec:
    """Guidewire navigation to the supra-aortic branches of one fixed arch.

    A patient-specific tree can be supplied as a vessel JSON file (argument
    or the VESSELNAV_VESSEL_FILE variable); otherwise a bundled procedural
    stand-in with a fixed seed is used.
    """
    path, notes = _resolve_tree_file(tree_file)
    return BenchmarkSpec(
        name="BasicWireNav",
        vessel_mode="fixed",
        vessel_seed=BASIC_WIRE_NAV_VESSEL_SEED,
        extended_anatomy=False,
        devices=(preset("j_shaped"),),
        target_branches=(
            "brachiocephalic_trunk",
            "right_common_carotid",
            "left_common_carotid",
            "left_subclavian",
        ),
        train_max_duration=20.0,
        eval_max_duration=120.0,
        imaging=_DEFAULT_IMAGING,
        tree_file=path,
        notes=notes,
    )


def arch_variety(eval_vessel: bool = False) -> BenchmarkSpec:
    """Guidewire navigation across per-episode procedural arches.

    With ``eval_vessel`` the tree is pinned to the published evaluation
    seed; targets still vary per episode.
    """
    if eval_vessel:
        return BenchmarkSpec(
            name="ArchVariety",
            vessel_mode="fixed",
            vessel_seed=ARCH_VARIETY_EVAL_SEED,
            extended_anatomy=False,
            devices=(preset("j_shaped"),),
            target_branches=(
                "brachiocephalic_trunk",
                "right_common_carotid",
                "left_common_carotid",
                "left_subclavian",
            ),
            train_max_duration=20.0,
            eval_max_duration=120.0,
            imaging=_DEFAULT_IMAGING,
            notes=("evaluation preset: vessel seed pinned",),
        )
    return BenchmarkSpec(
        name="ArchVariety",
        vessel_mode="per-episode",
        vessel_seed=None,
        extended_anatomy=False,
        devices=(preset("j_shaped"),),
        target_branches=(
            "brachiocephalic_trunk",
            "right_common_carotid",
            "left_common_carotid",
            "left_subclavian",
        ),
        train_max_duration=20.0,
        eval_max_duration=120.0,
        imaging=_DEFAULT_IMAGING,
    )


def dual_device_nav(tree_file: str | None = None) -> BenchmarkSpec:
    """Concentric catheter + guidewire navigation to carotid/vertebral targets."""
    path, notes = _resolve_tree_file(tree_file)
    return BenchmarkSpec(
        name="DualDeviceNav",
        vessel_mode="fixed",
        vessel_seed=DUAL_DEVICE_VESSEL_SEED,
        extended_anatomy=True,
        devices=(preset("j_catheter"), preset("j_shaped")),
        target_branches=(
            "right_common_carotid",
            "left_common_carotid",
            "right_vertebral",
            "left_vertebral",
        ),
        train_max_duration=66.0,
        eval_max_duration=133.0,
        imaging=_DEFAULT_IMAGING,
        tree_file=path,
        notes=notes,
    )


ALL_BENCHMARKS = {
    "basic_wire_nav": basic_wire_nav,
    "arch_variety": arch_variety,
    "dual_device_nav": dual_device_nav,
}


def get_benchmark(name: str, **kwargs) -> BenchmarkSpec:
    key = name.lower()
    aliases = {
        "basicwirenav": "basic_wire_nav",
        "archvariety": "arch_variety",
        "dualdevicenav": "dual_device_nav",
    }
    key = aliases.get(key.replace("-", "").replace("_", ""), key)
    if key not in ALL_BENCHMARKS:
        raise InvalidInputError(
            f"unknown benchmark {name!r}; available: {sorted(ALL_BENCHMARKS)}"
        )
    return ALL_BENCHMARKS[key](**kwargs)
