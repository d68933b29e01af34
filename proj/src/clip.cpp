#include "a3dc/clip.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace a3dc {

void VideoClip::validate() const {
    if (frames < 1 || height < 1 || width < 1 || channels < 1) {
        throw DataError("clip " + id + ": non-positive dimensions");
    }
    if (int64_t(pixels.size()) != pixel_count()) {
        throw DataError("clip " + id + ": payload size " +
                        std::to_string(pixels.size()) + " != " +
                        std::to_string(pixel_count()));
    }
}

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("vclp: unexpected end of file in " + path);
    return v;
}

}  // namespace

void save_vclp(const std::filesystem::path& path, const VideoClip& clip) {
    clip.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("vclp: cannot open " + path.string() + " for write");
    os.write("VCLP", 4);
    write_le<uint32_t>(os, kClipFormatVersion);
    write_le<uint32_t>(os, uint32_t(clip.frames));
    write_le<uint32_t>(os, uint32_t(clip.height));
    write_le<uint32_t>(os, uint32_t(clip.width));
    write_le<uint32_t>(os, uint32_t(clip.channels));
    os.write(reinterpret_cast<const char*>(clip.pixels.data()),
             std::streamsize(clip.pixels.size()));
    if (!os) throw IoError("vclp: write failed for " + path.string());
}

VideoClip load_vclp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("vclp: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VCLP", 4) != 0) {
        throw IoError("vclp: bad magic in " + path.string());
    }
    const uint32_t version = read_le<uint32_t>(is, path.string());
    if (version != kClipFormatVersion) {
        throw IoError("vclp: unsupported version " + std::to_string(version) + " in " +
                      path.string());
    }
    VideoClip clip;
    clip.frames = read_le<uint32_t>(is, path.string());
    clip.height = read_le<uint32_t>(is, path.string());
    clip.width = read_le<uint32_t>(is, path.string());
    clip.channels = read_le<uint32_t>(is, path.string());
    clip.id = path.stem().string();
    clip.pixels.resize(size_t(clip.pixel_count()));
    is.read(reinterpret_cast<char*>(clip.pixels.data()),
            std::streamsize(clip.pixels.size()));
    if (!is) throw IoError("vclp: truncated payload in " + path.string());
    clip.validate();
    return clip;
}

VideoClip resize_bilinear(const VideoClip& clip, int64_t out_h, int64_t out_w) {
    clip.validate();
    if (out_h < 1 || out_w < 1) throw ValueError("resize: output extents must be >= 1");

    VideoClip out;
    out.frames = clip.frames;
    out.height = out_h;
    out.width = out_w;
    out.channels = clip.channels;
    out.label = clip.label;
    out.id = clip.id;
    out.pixels.resize(size_t(out.pixel_count()));

    const double scale_y = double(clip.height) / double(out_h);
    const double scale_x = double(clip.width) / double(out_w);
    for (int64_t t = 0; t < clip.frames; ++t) {
        for (int64_t y = 0; y < out_h; ++y) {
            const double sy = (double(y) + 0.5) * scale_y - 0.5;
            const int64_t y0 = int64_t(std::floor(sy));
            const double fy = sy - double(y0);
            const int64_t y0c = std::clamp<int64_t>(y0, 0, clip.height - 1);
            const int64_t y1c = std::clamp<int64_t>(y0 + 1, 0, clip.height - 1);
            for (int64_t x = 0; x < out_w; ++x) {
                const double sx = (double(x) + 0.5) * scale_x - 0.5;
                const int64_t x0 = int64_t(std::floor(sx));
                const double fx = sx - double(x0);
                const int64_t x0c = std::clamp<int64_t>(x0, 0, clip.width - 1);
                const int64_t x1c = std::clamp<int64_t>(x0 + 1, 0, clip.width - 1);
                for (int64_t c = 0; c < clip.channels; ++c) {
                    const double top = (1.0 - fx) * clip.px(t, y0c, x0c, c) +
                                       fx * clip.px(t, y0c, x1c, c);
                    const double bot = (1.0 - fx) * clip.px(t, y1c, x0c, c) +
                                       fx * clip.px(t, y1c, x1c, c);
                    const double v = (1.0 - fy) * top + fy * bot;
                    out.px(t, y, x, c) =
                        uint8_t(std::clamp<long>(std::lround(v), 0, 255));
                }
            }
        }
    }
    return out;
}

VideoClip crop(const VideoClip& clip, int64_t row, int64_t col, int64_t size) {
    clip.validate();
    if (size < 1) throw ValueError("crop: size must be >= 1");
    if (row < 0 || col < 0 || row + size > clip.height || col + size > clip.width) {
        throw DataError("clip " + clip.id + ": crop " + std::to_string(size) + "@(" +
                        std::to_string(row) + "," + std::to_string(col) +
                        ") exceeds frame " + std::to_string(clip.height) + "x" +
                        std::to_string(clip.width));
    }
    VideoClip out;
    out.frames = clip.frames;
    out.height = size;
    out.width = size;
    out.channels = clip.channels;
    out.label = clip.label;
    out.id = clip.id;
    out.pixels.resize(size_t(out.pixel_count()));
    for (int64_t t = 0; t < clip.frames; ++t) {
        for (int64_t y = 0; y < size; ++y) {
            const uint8_t* src = &clip.pixels[size_t(
                ((t * clip.height + row + y) * clip.width + col) * clip.channels)];
            uint8_t* dst = &out.pixels[size_t((t * size + y) * size * clip.channels)];
            std::memcpy(dst, src, size_t(size * clip.channels));
        }
    }
    return out;
}

VideoClip random_spatial_crop(const VideoClip& clip, int64_t size, Rng& rng) {
    if (clip.height < size || clip.width < size) {
        throw DataError("clip " + clip.id + ": frame " + std::to_string(clip.height) +
                        "x" + std::to_string(clip.width) + " smaller than crop " +
                        std::to_string(size));
    }
    const int64_t row = rng.uniform_int(0, clip.height - size);
    const int64_t col = rng.uniform_int(0, clip.width - size);
    return crop(clip, row, col, size);
}

VideoClip center_crop(const VideoClip& clip, int64_t size) {
    if (clip.height < size || clip.width < size) {
        throw DataError("clip " + clip.id + ": frame " + std::to_string(clip.height) +
                        "x" + std::to_string(clip.width) + " smaller than crop " +
                        std::to_string(size));
    }
    return crop(clip, (clip.height - size) / 2, (clip.width - size) / 2, size);
}

namespace {

VideoClip take_window(const VideoClip& clip, int64_t start, int64_t window,
                      bool wrap) {
    VideoClip out;
    out.frames = window;
    out.height = clip.height;
    out.width = clip.width;
    out.channels = clip.channels;
    out.label = clip.label;
    out.id = clip.id;
    out.pixels.resize(size_t(out.pixel_count()));
    const int64_t frame_bytes = clip.height * clip.width * clip.channels;
    for (int64_t i = 0; i < window; ++i) {
        const int64_t src = wrap ? (start + i) % clip.frames : start + i;
        std::memcpy(&out.pixels[size_t(i * frame_bytes)],
                    &clip.pixels[size_t(src * frame_bytes)], size_t(frame_bytes));
    }
    return out;
}

}  // namespace

VideoClip temporal_jitter(const VideoClip& clip, int64_t window, Rng& rng,
                          JitterMode mode) {
    clip.validate();
    if (window < 1) throw ValueError("temporal_jitter: window must be >= 1");
    if (mode == JitterMode::Strict) {
        if (clip.frames < window) {
            throw DataError("clip " + clip.id + ": " + std::to_string(clip.frames) +
                            " frames < window " + std::to_string(window) +
                            " (strict jitter)");
        }
        const int64_t start = rng.uniform_int(0, clip.frames - window);
        return take_window(clip, start, window, false);
    }
    const int64_t start = rng.uniform_int(0, clip.frames - 1);
    return take_window(clip, start, window, true);
}

VideoClip center_window(const VideoClip& clip, int64_t window) {
    clip.validate();
    if (clip.frames < window) {
        throw DataError("clip " + clip.id + ": " + std::to_string(clip.frames) +
                        " frames < window " + std::to_string(window));
    }
    return take_window(clip, (clip.frames - window) / 2, window, false);
}

VideoClip mirror_horizontal(const VideoClip& clip) {
    clip.validate();
    VideoClip out = clip;
    for (int64_t t = 0; t < clip.frames; ++t) {
        for (int64_t y = 0; y < clip.height; ++y) {
            for (int64_t x = 0; x < clip.width; ++x) {
                for (int64_t c = 0; c < clip.channels; ++c) {
                    out.px(t, y, x, c) = clip.px(t, y, clip.width - 1 - x, c);
                }
            }
        }
    }
    return out;
}

VideoClip horizontal_flip(const VideoClip& clip, Rng& rng, double p) {
    if (rng.next_double() < p) return mirror_horizontal(clip);
    return clip;
}

}  // namespace a3dc
