// Copyright Contributors to the splat4d Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "splat4d/fuse.hpp"
#include "splat4d/gauss.hpp"
#include "splat4d/plane.hpp"
#include "splat4d/synth.hpp"

#include <string>
#include <vector>

namespace splat4d::io {

// Byte layouts for every format below live in FORMATS.md. All integers and
// IEEE floats are little-endian on disk.

void save_float_raster(const std::string& path, const FloatRaster& raster);
FloatRaster load_float_raster(const std::string& path);
void save_int_raster(const std::string& path, const IntRaster& raster);
IntRaster load_int_raster(const std::string& path);

FloatRaster to_float_raster(const Plane<double>& plane);
Plane<double> to_double_plane(const FloatRaster& raster);

/// Binary PPM (P6), 8-bit, round-half-away-from-zero quantization.
void save_image_ppm(const std::string& path, const Image& image);
Image load_image_ppm(const std::string& path);

/// Gaussian archive: self-describing header (version, SH degree, count)
/// followed by fixed-size records. Round trips are byte-exact.
void save_gaussians(const std::string& path, const std::vector<gauss::Gaussian4D>& gaussians,
                    int sh_degree);
std::vector<gauss::Gaussian4D> load_gaussians(const std::string& path, int* sh_degree = nullptr);

synth::SynthSpec load_synth_spec(const std::string& path);
void save_synth_spec(const std::string& path, const synth::SynthSpec& spec);

struct LoadedScene {
    geom::CameraRig rig;
    std::vector<fuse::ContextFrame> frames;
    int sh_degree = 0;
    std::vector<std::string> warnings; // e.g. renormalized quaternions
};

/// Parses a scene manifest and loads every referenced raster, checking the
/// type invariants declared by the rest of the engine: depth gets clamped
/// (rejecting non-finite entries), masks must be non-negative, every raster
/// must match its camera's size, timestamps must increase strictly, and
/// quaternions off unit norm by more than 1e-3 are rejected (smaller
/// deviations renormalize with a warning).
LoadedScene load_scene(const std::string& manifest_path);

/// Ray-casts the spec at every trajectory waypoint and writes a complete
/// scene (manifest + images + depth/mask/attribute rasters) under out_dir.
/// Returns the manifest path.
std::string materialize_scene(const synth::SynthSpec& spec, const std::string& out_dir);

/// Per-frame built kernels (one archive per camera) plus a frames.json
/// index carrying times, ego poses, and the velocity fields applied.
void save_built_frames(const std::string& out_dir, const std::vector<fuse::ContextFrame>& frames,
                       fuse::FrameCache& cache, int sh_degree);

/// Fused scene: segments.json (rig, ego poses, anchors, flow provenance)
/// plus one archive per segment.
void save_scene4d(const std::string& out_dir, const gauss::Scene4D& scene, int sh_degree);
gauss::Scene4D load_scene4d(const std::string& segments_json_path);

} // namespace splat4d::io
