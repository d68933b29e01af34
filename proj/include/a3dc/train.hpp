#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "a3dc/dataset.hpp"
#include "a3dc/model.hpp"
#include "a3dc/optim.hpp"
#include "a3dc/serde.hpp"

namespace a3dc {

struct TrainConfig {
    ModelConfig model;
    LoaderConfig loader;
    Schedule schedule;
    int64_t epochs = 50;
    int64_t batch_size = 8;
    uint64_t seed = 0;
    std::filesystem::path data_dir;  // contains manifest.jsonl
    std::filesystem::path out_dir;
    std::filesystem::path resume;  // optional checkpoint to continue from
    bool quiet = false;
};

struct MetricsRow {
    int64_t epoch = 0;
    std::string split;
    double loss = 0.0;
    double accuracy = 0.0;
    double lr = 0.0;
};

inline constexpr const char* kMetricsHeader = "epoch,split,loss,accuracy,lr";
std::string to_csv(const MetricsRow& row);

struct Prediction {
    std::string id;
    int gt = -1;
    std::vector<std::pair<int, float>> topk;  // (class, probability), descending
};

std::string prediction_to_json_line(const Prediction& p);

struct TrainResult {
    double best_val_acc = 0.0;
    int64_t best_epoch = -1;
    double final_val_acc = 0.0;
    std::filesystem::path best_checkpoint;
    std::filesystem::path last_checkpoint;
    std::filesystem::path metrics_path;
    std::vector<MetricsRow> rows;
    std::vector<uint64_t> batch_hashes;  // one per trained epoch
};

// Full training loop: seeded shuffle, augmented batches, Adam with the step
// schedule, per-epoch deterministic val evaluation, CSV metrics, per-epoch +
// best-val checkpoints. Resumable from any epoch checkpoint with an
// identical continued trajectory.
TrainResult train(const TrainConfig& cfg);

struct EvalResult {
    MetricsRow row;
    std::vector<Prediction> predictions;
};

using LogitsFn = std::function<Tensor<float>(const ClipBatch&)>;

// Deterministic evaluation of one split; the logits source is injectable so
// the metric arithmetic can be exercised against stub models.
EvalResult evaluate_split(const LogitsFn& logits_fn, const DatasetManifest& manifest,
                          const std::string& split, const LoaderConfig& loader,
                          int64_t batch_size, int64_t epoch, double lr, int64_t topk);

EvalResult evaluate_model(const Model<float>& model, const DatasetManifest& manifest,
                          const std::string& split, const LoaderConfig& loader,
                          int64_t batch_size);

Prediction predict_topk(const Model<float>& model, const VideoClip& clip, int64_t k,
                        const LoaderConfig& loader);

struct AblationResult {
    TrainResult attention;
    TrainResult baseline;
    bool data_order_identical = false;
    std::filesystem::path summary_path;
};

// Trains the model twice, once with the attention gate and once without,
// same seed and therefore same data order, and writes a side-by-side summary.
AblationResult ablation(const TrainConfig& cfg);

// JSON config-file support for the CLI: a config file overlays the defaults,
// explicit flags overlay the file.
void apply_json_config(TrainConfig& cfg, const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

}  // namespace a3dc
