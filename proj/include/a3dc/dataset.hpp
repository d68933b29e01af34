#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "a3dc/clip.hpp"
#include "a3dc/rng.hpp"
#include "a3dc/tensor.hpp"

namespace a3dc {

struct ManifestRecord {
    std::string path;  // relative to the manifest's directory
    int label = -1;
    int64_t frames = 0;
    std::string split;  // train | val | test
};

// JSON-lines manifest: a meta object on the first line (version, classes,
// flip-safety) followed by one record object per clip.
inline constexpr uint32_t kManifestVersion = 1;

struct DatasetManifest {
    std::filesystem::path root;  // directory containing the manifest file
    int num_classes = 0;
    std::vector<std::string> class_names;
    bool hflip_safe = true;  // false when mirrored clips change class
    std::vector<ManifestRecord> records;

    std::vector<int64_t> split_indices(std::string_view split) const;
    std::filesystem::path resolve(const ManifestRecord& rec) const {
        return root / rec.path;
    }
    void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

// Synthetic motion dataset. Class identity is carried purely by the motion
// pattern; shape, color and size are drawn identically for every class, so
// frame appearance alone carries no label signal. Mirror pairs (left/right,
// cw/ccw) are generated as exact time reversals of a shared trajectory
// distribution.
inline constexpr int kMotionPatternCount = 8;
const char* motion_pattern_name(int label);

// Patterns, in label order: move_left, move_right, move_up, move_down,
// orbit_cw, orbit_ccw, grow, shrink.
struct SynthConfig {
    int classes = 4;
    int clips_per_class = 50;
    int frames = 24;
    int size = 32;  // square canvas
    uint64_t seed = 0;
};

VideoClip generate_synthetic_clip(const SynthConfig& cfg, int label, int index);
DatasetManifest generate_synthetic_dataset(const SynthConfig& cfg,
                                           const std::filesystem::path& out_dir);

// Batch assembly. Augmented loading applies resize -> random crop ->
// temporal jitter -> flip; the deterministic eval path applies resize ->
// center crop -> center window. Pixels are scaled to [0,1]. Every clip owns
// an Rng substream keyed (epoch, record index), so batch composition does
// not depend on worker count or history.
struct LoaderConfig {
    int64_t resize_h = 128;
    int64_t resize_w = 171;
    int64_t crop = 112;
    int64_t frames = 16;
    bool hflip = true;
    double hflip_p = 0.5;
};

struct ClipBatch {
    Tensor<float> x;  // (N, 3, frames, crop, crop)
    std::vector<int> labels;
    std::vector<std::string> ids;
};

ClipBatch load_batch(const DatasetManifest& manifest, std::span<const int64_t> indices,
                     bool augment, const LoaderConfig& cfg, uint64_t seed,
                     int64_t epoch);

}  // namespace a3dc
