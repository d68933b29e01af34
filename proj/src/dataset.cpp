#include "a3dc/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace a3dc {

using nlohmann::json;

std::vector<int64_t> DatasetManifest::split_indices(std::string_view split) const {
    std::vector<int64_t> out;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].split == split) out.push_back(int64_t(i));
    }
    return out;
}

void DatasetManifest::validate() const {
    if (num_classes < 1) throw DataError("manifest: num_classes must be >= 1");
    std::set<int> seen;
    for (const auto& rec : records) {
        if (rec.label < 0 || rec.label >= num_classes) {
            throw DataError("manifest: label " + std::to_string(rec.label) +
                            " out of [0," + std::to_string(num_classes) + ") for " +
                            rec.path);
        }
        if (rec.split != "train" && rec.split != "val" && rec.split != "test") {
            throw DataError("manifest: unknown split '" + rec.split + "' for " +
                            rec.path);
        }
        if (rec.frames < 1) {
            throw DataError("manifest: non-positive frame count for " + rec.path);
        }
        seen.insert(rec.label);
    }
    if (int(seen.size()) != num_classes) {
        throw DataError("manifest: labels are not dense, " +
                        std::to_string(seen.size()) + " of " +
                        std::to_string(num_classes) + " classes present");
    }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("manifest: cannot open " + path.string());
    DatasetManifest m;
    m.root = path.parent_path();

    std::string line;
    bool have_meta = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("manifest: bad JSON line in " + path.string() + ": " +
                            e.what());
        }
        if (!have_meta) {
            if (!j.contains("num_classes")) {
                throw DataError("manifest: first line of " + path.string() +
                                " must be the meta object");
            }
            if (j.value("version", kManifestVersion) != kManifestVersion) {
                throw DataError("manifest: unsupported version in " + path.string());
            }
            m.num_classes = j.at("num_classes").get<int>();
            m.class_names = j.value("classes", std::vector<std::string>{});
            m.hflip_safe = j.value("hflip_safe", true);
            have_meta = true;
            continue;
        }
        ManifestRecord rec;
        rec.path = j.at("path").get<std::string>();
        rec.label = j.at("label").get<int>();
        rec.frames = j.at("frames").get<int64_t>();
        rec.split = j.at("split").get<std::string>();
        m.records.push_back(std::move(rec));
    }
    if (!have_meta) throw DataError("manifest: " + path.string() + " is empty");
    m.validate();
    for (const auto& rec : m.records) {
        if (!std::filesystem::exists(m.resolve(rec))) {
            throw DataError("manifest: clip file not found: " +
                            m.resolve(rec).string());
        }
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    m.validate();
    std::ofstream os(path);
    if (!os) throw IoError("manifest: cannot open " + path.string() + " for write");
    json meta = {{"version", kManifestVersion},
                 {"num_classes", m.num_classes},
                 {"classes", m.class_names},
                 {"hflip_safe", m.hflip_safe}};
    os << meta.dump() << "\n";
    for (const auto& rec : m.records) {
        json j = {{"path", rec.path},
                  {"label", rec.label},
                  {"frames", rec.frames},
                  {"split", rec.split}};
        os << j.dump() << "\n";
    }
    if (!os) throw IoError("manifest: write failed for " + path.string());
}

namespace {

constexpr std::array<const char*, kMotionPatternCount> kPatternNames = {
    "move_left", "move_right", "move_up",   "move_down",
    "orbit_cw",  "orbit_ccw",  "grow",      "shrink"};

// Mirroring a frame sequence left-right swaps these class pairs.
constexpr bool kMirrorSensitive[kMotionPatternCount] = {true, true, false, false,
                                                        true, true, false, false};

struct Trajectory {
    int shape_type = 0;  // 0 disk, 1 square, 2 diamond
    std::array<uint8_t, 3> color{};
    std::vector<double> cx, cy, half;  // per frame
};

double fract(double v) { return v - std::floor(v); }

// Base trajectories are sampled for the "forward" member of each mirror/
// time-reversal pair; the partner class renders the same frames in reverse
// order. All appearance attributes (shape, color, size) are drawn in the
// same stream positions for every class, so per-frame appearance marginals
// match across classes by construction.
Trajectory sample_trajectory(int label, int frames, double S, Rng& rng) {
    Trajectory tr;
    tr.shape_type = int(rng.uniform_int(0, 2));
    for (auto& c : tr.color) c = uint8_t(rng.uniform_int(96, 255));
    const double size_u = rng.next_double();
    const double span_u = rng.next_double();
    const double aux_u = rng.next_double();
    const double aux2_u = rng.next_double();

    const double s_lo = 0.08 * S, s_hi = 0.18 * S;
    const double T1 = double(std::max(frames - 1, 1));
    tr.cx.resize(size_t(frames));
    tr.cy.resize(size_t(frames));
    tr.half.resize(size_t(frames));

    const bool reversed = (label == 0 || label == 2 || label == 4 || label == 7);
    const int base = [&] {
        switch (label) {
            case 0: return 1;  // move_left renders move_right reversed
            case 2: return 3;  // move_up renders move_down reversed
            case 4: return 5;  // orbit_cw renders orbit_ccw reversed
            case 7: return 6;  // shrink renders grow reversed
            default: return label;
        }
    }();

    if (base == 1 || base == 3) {  // translation along x (right) or y (down)
        const double half = s_lo + size_u * (s_hi - s_lo);
        const double travel = (0.25 + 0.30 * span_u) * S;
        const double lo = half + 1.0, hi = S - 2.0 - half;
        const double start_main = lo + aux_u * std::max(hi - travel - lo, 0.0);
        const double fixed = lo + aux2_u * (hi - lo);
        for (int t = 0; t < frames; ++t) {
            const double pos = start_main + travel * double(t) / T1;
            tr.cx[size_t(t)] = (base == 1) ? pos : fixed;
            tr.cy[size_t(t)] = (base == 1) ? fixed : pos;
            tr.half[size_t(t)] = half;
        }
    } else if (base == 5) {  // counterclockwise orbit
        const double half = s_lo + size_u * (s_hi - s_lo);
        const double radius = (0.15 + 0.07 * span_u) * S;
        const double margin = radius + half + 1.0;
        const double ccx = margin + aux_u * std::max(S - 2.0 - 2.0 * margin, 0.0);
        const double ccy =
            margin + rng.next_double() * std::max(S - 2.0 - 2.0 * margin, 0.0);
        const double theta0 = aux2_u * 2.0 * M_PI;
        const double sweep = (0.6 + 0.6 * rng.next_double()) * M_PI;
        for (int t = 0; t < frames; ++t) {
            const double th = theta0 + sweep * double(t) / T1;
            tr.cx[size_t(t)] = ccx + radius * std::cos(th);
            tr.cy[size_t(t)] = ccy - radius * std::sin(th);
            tr.half[size_t(t)] = half;
        }
    } else {  // grow: sawtooth size with a uniform random phase
        const double lo = s_hi + 1.0, hi = S - 2.0 - s_hi;
        const double px = lo + aux_u * (hi - lo);
        const double py = lo + aux2_u * (hi - lo);
        for (int t = 0; t < frames; ++t) {
            const double phase = fract(size_u + double(t) / double(frames));
            tr.cx[size_t(t)] = px;
            tr.cy[size_t(t)] = py;
            tr.half[size_t(t)] = s_lo + phase * (s_hi - s_lo);
        }
    }

    if (reversed) {
        std::reverse(tr.cx.begin(), tr.cx.end());
        std::reverse(tr.cy.begin(), tr.cy.end());
        std::reverse(tr.half.begin(), tr.half.end());
    }
    return tr;
}

void render_frame(VideoClip& clip, int64_t t, const Trajectory& tr) {
    const double cx = tr.cx[size_t(t)], cy = tr.cy[size_t(t)],
                 half = tr.half[size_t(t)];
    const int64_t y_lo = std::max<int64_t>(0, int64_t(std::floor(cy - half)));
    const int64_t y_hi = std::min<int64_t>(clip.height - 1, int64_t(std::ceil(cy + half)));
    const int64_t x_lo = std::max<int64_t>(0, int64_t(std::floor(cx - half)));
    const int64_t x_hi = std::min<int64_t>(clip.width - 1, int64_t(std::ceil(cx + half)));
    for (int64_t y = y_lo; y <= y_hi; ++y) {
        for (int64_t x = x_lo; x <= x_hi; ++x) {
            const double dx = double(x) - cx, dy = double(y) - cy;
            bool inside = false;
            switch (tr.shape_type) {
                case 0: inside = dx * dx + dy * dy <= half * half; break;
                case 1: inside = std::abs(dx) <= half && std::abs(dy) <= half; break;
                default: inside = std::abs(dx) + std::abs(dy) <= half; break;
            }
            if (inside) {
                for (int64_t c = 0; c < 3; ++c) clip.px(t, y, x, c) = tr.color[size_t(c)];
            }
        }
    }
}

}  // namespace

const char* motion_pattern_name(int label) {
    if (label < 0 || label >= kMotionPatternCount) {
        throw ValueError("motion pattern label " + std::to_string(label) +
                         " out of range");
    }
    return kPatternNames[size_t(label)];
}

VideoClip generate_synthetic_clip(const SynthConfig& cfg, int label, int index) {
    if (label < 0 || label >= cfg.classes) {
        throw ValueError("synthetic clip label out of range");
    }
    Rng rng(derive_seed(cfg.seed, "synth", uint64_t(label), uint64_t(index)));
    Trajectory tr = sample_trajectory(label, cfg.frames, double(cfg.size), rng);

    VideoClip clip;
    clip.frames = cfg.frames;
    clip.height = cfg.size;
    clip.width = cfg.size;
    clip.channels = 3;
    clip.label = label;
    clip.id = std::string(motion_pattern_name(label)) + "_" + std::to_string(index);
    clip.pixels.assign(size_t(clip.pixel_count()), 0);
    for (int64_t t = 0; t < clip.frames; ++t) render_frame(clip, t, tr);
    return clip;
}

DatasetManifest generate_synthetic_dataset(const SynthConfig& cfg,
                                           const std::filesystem::path& out_dir) {
    if (cfg.classes < 1 || cfg.classes > kMotionPatternCount) {
        throw ValueError("synthetic dataset supports 1.." +
                         std::to_string(kMotionPatternCount) + " classes, got " +
                         std::to_string(cfg.classes));
    }
    if (cfg.clips_per_class < 1 || cfg.frames < 1 || cfg.size < 16) {
        throw ValueError("synthetic dataset: clips_per_class/frames >= 1, size >= 16");
    }
    std::filesystem::create_directories(out_dir / "clips");

    DatasetManifest m;
    m.root = out_dir;
    m.num_classes = cfg.classes;
    m.hflip_safe = true;
    for (int k = 0; k < cfg.classes; ++k) {
        m.class_names.emplace_back(motion_pattern_name(k));
        if (kMirrorSensitive[size_t(k)]) m.hflip_safe = false;
    }

    const int n = cfg.clips_per_class;
    const int n_val = n / 5, n_test = n / 5;  // 60/20/20
    const int n_train = n - n_val - n_test;
    for (int label = 0; label < cfg.classes; ++label) {
        for (int i = 0; i < n; ++i) {
            VideoClip clip = generate_synthetic_clip(cfg, label, i);
            ManifestRecord rec;
            rec.path = "clips/" + clip.id + ".vclp";
            rec.label = label;
            rec.frames = cfg.frames;
            rec.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
            save_vclp(out_dir / rec.path, clip);
            m.records.push_back(std::move(rec));
        }
    }
    save_manifest(out_dir / "manifest.jsonl", m);
    return m;
}

ClipBatch load_batch(const DatasetManifest& manifest, std::span<const int64_t> indices,
                     bool augment, const LoaderConfig& cfg, uint64_t seed,
                     int64_t epoch) {
    if (indices.empty()) throw ValueError("load_batch: empty index list");
    const int64_t N = int64_t(indices.size());
    ClipBatch batch;
    batch.x = Tensor<float>({N, 3, cfg.frames, cfg.crop, cfg.crop});
    batch.labels.reserve(size_t(N));
    batch.ids.reserve(size_t(N));

    constexpr float kInv255 = 1.0f / 255.0f;
    for (int64_t n = 0; n < N; ++n) {
        const int64_t rec_idx = indices[size_t(n)];
        if (rec_idx < 0 || rec_idx >= int64_t(manifest.records.size())) {
            throw ValueError("load_batch: record index " + std::to_string(rec_idx) +
                             " out of range");
        }
        const ManifestRecord& rec = manifest.records[size_t(rec_idx)];
        VideoClip clip = load_vclp(manifest.resolve(rec));
        clip.label = rec.label;
        if (clip.channels != 3) {
            throw DataError("clip " + clip.id + ": expected 3 channels, got " +
                            std::to_string(clip.channels));
        }

        clip = resize_bilinear(clip, cfg.resize_h, cfg.resize_w);
        if (augment) {
            Rng rng(derive_seed(seed, "augment", uint64_t(epoch), uint64_t(rec_idx)));
            clip = random_spatial_crop(clip, cfg.crop, rng);
            clip = temporal_jitter(clip, cfg.frames, rng, JitterMode::Strict);
            if (cfg.hflip) clip = horizontal_flip(clip, rng, cfg.hflip_p);
        } else {
            clip = center_crop(clip, cfg.crop);
            clip = center_window(clip, cfg.frames);
        }

        float* dst = batch.x.data() + n * 3 * cfg.frames * cfg.crop * cfg.crop;
        for (int64_t c = 0; c < 3; ++c) {
            for (int64_t t = 0; t < cfg.frames; ++t) {
                for (int64_t h = 0; h < cfg.crop; ++h) {
                    for (int64_t w = 0; w < cfg.crop; ++w, ++dst) {
                        *dst = float(clip.px(t, h, w, c)) * kInv255;
                    }
                }
            }
        }
        batch.labels.push_back(rec.label);
        batch.ids.push_back(clip.id);
    }
    return batch;
}

}  // namespace a3dc
