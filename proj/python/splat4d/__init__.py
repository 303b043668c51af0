# Copyright Contributors to the splat4d Project
# SPDX-License-Identifier: Apache-2.0

from ._core import (
    LoadedScene,
    Scene4D,
    SynthSpec,
    aggregate,
    backproject,
    default_spec,
    load_scene,
    load_scene4d,
    load_synth_spec,
    materialize_scene,
    normalize_to_grid,
    project,
    psnr,
    render,
    save_scene4d,
    ssim,
)

__all__ = [
    "LoadedScene",
    "Scene4D",
    "SynthSpec",
    "aggregate",
    "backproject",
    "default_spec",
    "load_scene",
    "load_scene4d",
    "load_synth_spec",
    "materialize_scene",
    "normalize_to_grid",
    "project",
    "psnr",
    "render",
    "save_scene4d",
    "ssim",
]
