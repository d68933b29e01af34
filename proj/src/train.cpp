#include "a3dc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "a3dc/softmax.hpp"

namespace a3dc {

using nlohmann::json;

namespace {

std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Top-1 with ties broken toward the lower class index.
int argmax_row(const float* row, int64_t k) {
    int best = 0;
    for (int64_t i = 1; i < k; ++i) {
        if (row[i] > row[best]) best = int(i);
    }
    return best;
}

uint64_t hash_indices(uint64_t h, std::span<const int64_t> indices) {
    for (int64_t v : indices) {
        for (int b = 0; b < 8; ++b) {
            h ^= uint64_t(uint8_t(v >> (8 * b)));
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& out_dir,
                                            int64_t epochs_completed) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04lld.a3dc",
                  static_cast<long long>(epochs_completed));
    return out_dir / name;
}

}  // namespace

std::string to_csv(const MetricsRow& row) {
    return std::to_string(row.epoch) + "," + row.split + "," + fmt_g9(row.loss) + "," +
           fmt_g9(row.accuracy) + "," + fmt_g9(row.lr);
}

std::string prediction_to_json_line(const Prediction& p) {
    json topk = json::array();
    for (const auto& [cls, prob] : p.topk) {
        topk.push_back(json{{"class", cls}, {"p", prob}});
    }
    return json{{"id", p.id}, {"gt", p.gt}, {"topk", topk}}.dump();
}

EvalResult evaluate_split(const LogitsFn& logits_fn, const DatasetManifest& manifest,
                          const std::string& split, const LoaderConfig& loader,
                          int64_t batch_size, int64_t epoch, double lr, int64_t topk) {
    if (batch_size < 1) throw ValueError("evaluate: batch size must be >= 1");
    const std::vector<int64_t> indices = manifest.split_indices(split);
    if (indices.empty()) {
        throw DataError("evaluate: split '" + split + "' is empty");
    }

    EvalResult res;
    double loss_sum = 0.0;
    int64_t correct = 0;
    const int64_t total = int64_t(indices.size());
    for (int64_t off = 0; off < total; off += batch_size) {
        const int64_t n = std::min(batch_size, total - off);
        ClipBatch batch = load_batch(manifest, {indices.data() + off, size_t(n)},
                                     /*augment=*/false, loader, 0, 0);
        Tensor<float> logits = logits_fn(batch);
        if (logits.rank() != 2 || logits.extent(0) != n) {
            throw ShapeError("evaluate: logits shape " + shape_str(logits.shape()) +
                             " for batch of " + std::to_string(n));
        }
        const int64_t K = logits.extent(1);
        const int64_t k_eff = std::min<int64_t>(topk, K);
        SoftmaxXentOut<float> sx = softmax_cross_entropy(logits, batch.labels);
        loss_sum += double(sx.loss) * double(n);
        Tensor<float> probs = softmax(logits);
        for (int64_t i = 0; i < n; ++i) {
            const float* row = logits.data() + i * K;
            const int top1 = argmax_row(row, K);
            if (top1 == batch.labels[size_t(i)]) ++correct;

            Prediction pred;
            pred.id = batch.ids[size_t(i)];
            pred.gt = batch.labels[size_t(i)];
            std::vector<int> order(static_cast<size_t>(K));
            std::iota(order.begin(), order.end(), 0);
            const float* prow = probs.data() + i * K;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (prow[a] != prow[b]) return prow[a] > prow[b];
                return a < b;
            });
            for (int64_t j = 0; j < k_eff; ++j) {
                pred.topk.emplace_back(order[size_t(j)], prow[order[size_t(j)]]);
            }
            res.predictions.push_back(std::move(pred));
        }
    }
    res.row = MetricsRow{epoch, split, loss_sum / double(total),
                         double(correct) / double(total), lr};
    return res;
}

EvalResult evaluate_model(const Model<float>& model, const DatasetManifest& manifest,
                          const std::string& split, const LoaderConfig& loader,
                          int64_t batch_size) {
    if (manifest.num_classes != model.config.num_classes) {
        throw ConfigError("evaluate: manifest has " +
                          std::to_string(manifest.num_classes) +
                          " classes, model expects " +
                          std::to_string(model.config.num_classes));
    }
    return evaluate_split(
        [&](const ClipBatch& batch) { return forward_eval(model, batch.x); }, manifest,
        split, loader, batch_size, 0, 0.0, 5);
}

Prediction predict_topk(const Model<float>& model, const VideoClip& in, int64_t k,
                        const LoaderConfig& loader) {
    const int64_t K = model.config.num_classes;
    if (k < 1 || k > K) {
        throw ValueError("predict: k must be in [1," + std::to_string(K) + "]");
    }
    VideoClip clip = resize_bilinear(in, loader.resize_h, loader.resize_w);
    clip = center_crop(clip, loader.crop);
    clip = center_window(clip, loader.frames);

    Tensor<float> x({1, 3, loader.frames, loader.crop, loader.crop});
    float* dst = x.data();
    for (int64_t c = 0; c < 3; ++c) {
        for (int64_t t = 0; t < loader.frames; ++t) {
            for (int64_t h = 0; h < loader.crop; ++h) {
                for (int64_t w = 0; w < loader.crop; ++w, ++dst) {
                    *dst = float(clip.px(t, h, w, c)) / 255.0f;
                }
            }
        }
    }
    Tensor<float> probs = softmax(forward_eval(model, x));
    std::vector<int> order(static_cast<size_t>(K));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;
    });
    Prediction pred;
    pred.id = in.id;
    pred.gt = in.label;
    for (int64_t j = 0; j < k; ++j) {
        pred.topk.emplace_back(order[size_t(j)], probs[order[size_t(j)]]);
    }
    return pred;
}

TrainResult train(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("train: batch size must be >= 1");
    validate_config(cfg.model);
    if (cfg.model.height != cfg.loader.crop || cfg.model.width != cfg.loader.crop) {
        throw ConfigError("train: model input " + std::to_string(cfg.model.height) +
                          "x" + std::to_string(cfg.model.width) +
                          " does not match loader crop " +
                          std::to_string(cfg.loader.crop));
    }
    if (cfg.model.frames != cfg.loader.frames) {
        throw ConfigError("train: model frames " + std::to_string(cfg.model.frames) +
                          " != loader frames " + std::to_string(cfg.loader.frames));
    }

    DatasetManifest manifest = load_manifest(cfg.data_dir / "manifest.jsonl");
    if (manifest.num_classes != cfg.model.num_classes) {
        throw ConfigError("train: manifest has " +
                          std::to_string(manifest.num_classes) +
                          " classes, model expects " +
                          std::to_string(cfg.model.num_classes));
    }

    LoaderConfig loader = cfg.loader;
    if (loader.hflip && !manifest.hflip_safe) {
        loader.hflip = false;
        if (!cfg.quiet) {
            std::cout << "note: horizontal flips disabled, dataset classes are not "
                         "mirror-invariant\n";
        }
    }

    Model<float> model;
    AdamState<float> adam;
    int64_t start_epoch = 0;
    double best_val_acc = 0.0;
    int64_t best_epoch = -1;
    if (!cfg.resume.empty()) {
        TrainingState st = load_training_state(cfg.resume);
        if (st.seed != cfg.seed) {
            throw ConfigError("train: resume seed " + std::to_string(st.seed) +
                              " != configured seed " + std::to_string(cfg.seed));
        }
        if (model_config_to_json(st.model_config) != model_config_to_json(cfg.model)) {
            throw ConfigError("train: resume model config differs from configured");
        }
        model = model_from_state(st);
        adam = std::move(st.adam);
        start_epoch = st.epochs_completed;
        best_val_acc = st.best_val_acc;
        best_epoch = st.best_epoch;
        if (start_epoch >= cfg.epochs) {
            throw ConfigError("train: checkpoint already has " +
                              std::to_string(start_epoch) + " epochs, config wants " +
                              std::to_string(cfg.epochs));
        }
    } else {
        model = build_model<float>(cfg.model, cfg.seed);
        adam = AdamState<float>::zeros_like(model.params);
    }

    std::filesystem::create_directories(cfg.out_dir);
    TrainResult result;
    result.metrics_path = cfg.out_dir / "metrics.csv";
    // resuming into a directory that already has metrics continues the file,
    // so an interrupted-and-resumed run leaves the same CSV as an
    // uninterrupted one
    const bool append_metrics =
        start_epoch > 0 && std::filesystem::exists(result.metrics_path);
    std::ofstream metrics(result.metrics_path,
                          append_metrics ? std::ios::app : std::ios::out);
    if (!metrics) throw IoError("train: cannot write " + result.metrics_path.string());
    if (!append_metrics) metrics << kMetricsHeader << "\n";

    std::vector<int64_t> train_idx = manifest.split_indices("train");
    if (train_idx.empty()) throw DataError("train: train split is empty");

    auto save_state = [&](int64_t epochs_completed, const std::filesystem::path& path) {
        TrainingState st;
        st.model_config = cfg.model;
        st.loader = loader;
        st.params = model.params;
        st.adam = adam;
        st.epochs_completed = epochs_completed;
        st.seed = cfg.seed;
        st.best_val_acc = best_val_acc;
        st.best_epoch = best_epoch;
        save_training_state(path, st);
    };

    for (int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg.schedule, epoch);

        // seeded Fisher-Yates, keyed by epoch alone so a resumed run shuffles
        // identically
        std::vector<int64_t> order = train_idx;
        Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", uint64_t(epoch)));
        for (size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[size_t(shuffle_rng.uniform_int(0, int64_t(i) - 1))]);
        }
        result.batch_hashes.push_back(
            hash_indices(14695981039346656037ull ^ uint64_t(epoch), order));

        double loss_sum = 0.0;
        int64_t correct = 0;
        const int64_t total = int64_t(order.size());
        int64_t batch_index = 0;
        for (int64_t off = 0; off < total; off += cfg.batch_size, ++batch_index) {
            const int64_t n = std::min(cfg.batch_size, total - off);
            ClipBatch batch = load_batch(manifest, {order.data() + off, size_t(n)},
                                         /*augment=*/true, loader, cfg.seed, epoch);
            Rng dropout_rng(
                derive_seed(cfg.seed, "dropout", uint64_t(epoch), uint64_t(batch_index)));
            BackwardOut<float> out =
                model_backward(model, batch.x, batch.labels, Mode::Train, dropout_rng);
            if (!std::isfinite(out.loss)) {
                throw NumericError("train: non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " +
                                   std::to_string(batch_index));
            }
            adam_step(model.params, out.grads, adam, lr, cfg.schedule.weight_decay);

            loss_sum += double(out.loss) * double(n);
            const int64_t K = out.logits.extent(1);
            for (int64_t i = 0; i < n; ++i) {
                if (argmax_row(out.logits.data() + i * K, K) == batch.labels[size_t(i)]) {
                    ++correct;
                }
            }
        }

        MetricsRow train_row{epoch, "train", loss_sum / double(total),
                             double(correct) / double(total), lr};
        EvalResult val = evaluate_model(model, manifest, "val", loader, cfg.batch_size);
        MetricsRow val_row = val.row;
        val_row.epoch = epoch;
        val_row.lr = lr;

        metrics << to_csv(train_row) << "\n" << to_csv(val_row) << "\n";
        metrics.flush();
        if (!metrics) throw IoError("train: metrics write failed");
        result.rows.push_back(train_row);
        result.rows.push_back(val_row);
        result.final_val_acc = val_row.accuracy;

        if (val_row.accuracy > best_val_acc || best_epoch < 0) {
            best_val_acc = val_row.accuracy;
            best_epoch = epoch;
            save_state(epoch + 1, cfg.out_dir / "best.a3dc");
        }
        save_state(epoch + 1, epoch_checkpoint_path(cfg.out_dir, epoch + 1));
        save_state(epoch + 1, cfg.out_dir / "last.a3dc");

        if (!cfg.quiet) {
            std::cout << "epoch " << epoch << " lr " << fmt_g9(lr) << " train loss "
                      << fmt_g9(train_row.loss) << " acc " << fmt_g9(train_row.accuracy)
                      << " | val loss " << fmt_g9(val_row.loss) << " acc "
                      << fmt_g9(val_row.accuracy) << "\n";
        }
    }

    result.best_val_acc = best_val_acc;
    result.best_epoch = best_epoch;
    result.best_checkpoint = cfg.out_dir / "best.a3dc";
    result.last_checkpoint = cfg.out_dir / "last.a3dc";
    return result;
}

void apply_json_config(TrainConfig& cfg, const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad JSON: ") + e.what());
    }
    if (j.contains("model")) {
        cfg.model = model_config_from_json(j["model"].dump());
    }
    if (j.contains("loader")) {
        const json& l = j["loader"];
        cfg.loader.resize_h = l.value("resize_h", cfg.loader.resize_h);
        cfg.loader.resize_w = l.value("resize_w", cfg.loader.resize_w);
        cfg.loader.crop = l.value("crop", cfg.loader.crop);
        cfg.loader.frames = l.value("frames", cfg.loader.frames);
        cfg.loader.hflip = l.value("hflip", cfg.loader.hflip);
        cfg.loader.hflip_p = l.value("hflip_p", cfg.loader.hflip_p);
    }
    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        cfg.schedule.initial_lr = s.value("initial_lr", cfg.schedule.initial_lr);
        cfg.schedule.decay_period_epochs =
            s.value("decay_period_epochs", cfg.schedule.decay_period_epochs);
        cfg.schedule.decay_factor = s.value("decay_factor", cfg.schedule.decay_factor);
        cfg.schedule.weight_decay = s.value("weight_decay", cfg.schedule.weight_decay);
    }
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
}

std::string train_config_to_json(const TrainConfig& cfg) {
    json j;
    j["model"] = json::parse(model_config_to_json(cfg.model));
    j["loader"] = {{"resize_h", cfg.loader.resize_h},
                   {"resize_w", cfg.loader.resize_w},
                   {"crop", cfg.loader.crop},
                   {"frames", cfg.loader.frames},
                   {"hflip", cfg.loader.hflip},
                   {"hflip_p", cfg.loader.hflip_p}};
    j["schedule"] = {{"initial_lr", cfg.schedule.initial_lr},
                     {"decay_period_epochs", cfg.schedule.decay_period_epochs},
                     {"decay_factor", cfg.schedule.decay_factor},
                     {"weight_decay", cfg.schedule.weight_decay}};
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["seed"] = cfg.seed;
    j["data_dir"] = cfg.data_dir.string();
    j["out_dir"] = cfg.out_dir.string();
    return j.dump();
}

AblationResult ablation(const TrainConfig& cfg) {
    TrainConfig with = cfg;
    with.model.attention_enabled = true;
    with.out_dir = cfg.out_dir / "attention";
    TrainConfig without = cfg;
    without.model.attention_enabled = false;
    without.out_dir = cfg.out_dir / "baseline";

    AblationResult res;
    res.attention = train(with);
    res.baseline = train(without);
    res.data_order_identical =
        res.attention.batch_hashes == res.baseline.batch_hashes;

    std::filesystem::create_directories(cfg.out_dir);
    res.summary_path = cfg.out_dir / "ablation_summary.json";
    json rows = json::array();
    rows.push_back(json{{"model", "3dcnn_attention"},
                        {"best_val_acc", res.attention.best_val_acc},
                        {"best_epoch", res.attention.best_epoch},
                        {"final_val_acc", res.attention.final_val_acc}});
    rows.push_back(json{{"model", "3dcnn"},
                        {"best_val_acc", res.baseline.best_val_acc},
                        {"best_epoch", res.baseline.best_epoch},
                        {"final_val_acc", res.baseline.final_val_acc}});
    json summary = {{"rows", rows},
                    {"data_order_identical", res.data_order_identical}};
    std::ofstream os(res.summary_path);
    os << summary.dump(2) << "\n";
    if (!os) throw IoError("ablation: cannot write " + res.summary_path.string());

    if (!cfg.quiet) {
        std::cout << "\nablation summary (best val / final val):\n";
        std::cout << "  3dcnn_attention  " << fmt_g9(res.attention.best_val_acc) << " / "
                  << fmt_g9(res.attention.final_val_acc) << "\n";
        std::cout << "  3dcnn            " << fmt_g9(res.baseline.best_val_acc) << " / "
                  << fmt_g9(res.baseline.final_val_acc) << "\n";
        std::cout << "  identical data order: "
                  << (res.data_order_identical ? "yes" : "no") << "\n";
    }
    return res;
}

}  // namespace a3dc
