#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "a3dc/errors.hpp"
#include "a3dc/rng.hpp"

namespace a3dc {

// Decoded video clip: T frames of H x W x C 8-bit pixels, frame-major
// row-major ((t*H + h)*W + w)*C + c, plus its class label.
struct VideoClip {
    int64_t frames = 0;
    int64_t height = 0;
    int64_t width = 0;
    int64_t channels = 3;
    std::vector<uint8_t> pixels;
    int label = -1;
    std::string id;

    uint8_t& px(int64_t t, int64_t h, int64_t w, int64_t c) {
        return pixels[size_t(((t * height + h) * width + w) * channels + c)];
    }
    uint8_t px(int64_t t, int64_t h, int64_t w, int64_t c) const {
        return pixels[size_t(((t * height + h) * width + w) * channels + c)];
    }
    int64_t pixel_count() const { return frames * height * width * channels; }
    void validate() const;
};

// "VCLP" container: magic | u32 version | u32 T,H,W,C | raw pixel payload.
inline constexpr uint32_t kClipFormatVersion = 1;

void save_vclp(const std::filesystem::path& path, const VideoClip& clip);
VideoClip load_vclp(const std::filesystem::path& path);

// Bilinear resample of every frame independently. Sampling uses half-pixel
// centers: src = (dst + 0.5) * (in/out) - 0.5, clamped at the borders,
// rounded to nearest. Same-size resize is pixel-identical.
VideoClip resize_bilinear(const VideoClip& clip, int64_t out_h, int64_t out_w);

// Crops a size x size window at (row, col), identical for every frame.
VideoClip crop(const VideoClip& clip, int64_t row, int64_t col, int64_t size);

// One (row, col) offset drawn per clip: row in [0, H-size], col in
// [0, W-size], row drawn first.
VideoClip random_spatial_crop(const VideoClip& clip, int64_t size, Rng& rng);

// Deterministic evaluation crop at (floor((H-size)/2), floor((W-size)/2)).
VideoClip center_crop(const VideoClip& clip, int64_t size);

enum class JitterMode { Strict, Loop };

// Selects `window` consecutive frames starting at a uniform index. Strict
// mode requires T >= window (start in [0, T-window]); loop mode draws start
// in [0, T-1] and wraps indices modulo T.
VideoClip temporal_jitter(const VideoClip& clip, int64_t window, Rng& rng,
                          JitterMode mode = JitterMode::Strict);

// Deterministic evaluation window centered at floor((T-window)/2).
VideoClip center_window(const VideoClip& clip, int64_t window);

// Left-right mirror of every frame.
VideoClip mirror_horizontal(const VideoClip& clip);

// One Bernoulli(p) draw per clip; on success every frame is mirrored.
VideoClip horizontal_flip(const VideoClip& clip, Rng& rng, double p = 0.5);

}  // namespace a3dc
