#pragma once

#include <filesystem>
#include <string>

#include "a3dc/checkpoint.hpp"
#include "a3dc/dataset.hpp"
#include "a3dc/model.hpp"
#include "a3dc/optim.hpp"

namespace a3dc {

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Typed view over the checkpoint container: model parameters plus optimizer
// state (adam.m.*, adam.v.*, adam.t), training progress, and the loader
// geometry the model was trained with (so eval/predict preprocess clips the
// same way).
struct TrainingState {
    ModelConfig model_config;
    LoaderConfig loader;
    ParamMap<float> params;
    AdamState<float> adam;
    int64_t epochs_completed = 0;
    uint64_t seed = 0;
    double best_val_acc = 0.0;
    int64_t best_epoch = -1;
};

Checkpoint pack_training_state(const TrainingState& st);
TrainingState unpack_training_state(const Checkpoint& ck);

void save_training_state(const std::filesystem::path& path, const TrainingState& st);
TrainingState load_training_state(const std::filesystem::path& path);

Model<float> model_from_state(const TrainingState& st);

}  // namespace a3dc
