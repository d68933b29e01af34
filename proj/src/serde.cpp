#include "a3dc/serde.hpp"

#include <json.hpp>

namespace a3dc {

using nlohmann::json;

namespace {

json dims_to_json(const Dims3& d) { return json::array({d[0], d[1], d[2]}); }

Dims3 dims_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(std::string("config: ") + field +
                          " must be a 3-element array");
    }
    return {j[0].get<int64_t>(), j[1].get<int64_t>(), j[2].get<int64_t>()};
}

json model_config_json(const ModelConfig& cfg) {
    return json{{"in_channels", cfg.in_channels},
                {"frames", cfg.frames},
                {"height", cfg.height},
                {"width", cfg.width},
                {"conv_out_channels", cfg.conv_out_channels},
                {"conv_kernel", dims_to_json(cfg.conv_kernel)},
                {"conv_stride", dims_to_json(cfg.conv_stride)},
                {"conv_padding", dims_to_json(cfg.conv_padding)},
                {"attention_enabled", cfg.attention_enabled},
                {"attention_parameterized", cfg.attention_parameterized},
                {"global_pool", cfg.global_pool},
                {"pool_kernel", dims_to_json(cfg.pool_kernel)},
                {"pool_stride", dims_to_json(cfg.pool_stride)},
                {"hidden_width", cfg.hidden_width},
                {"dropout_rate", cfg.dropout_rate},
                {"num_classes", cfg.num_classes}};
}

ModelConfig model_config_from(const json& j) {
    ModelConfig cfg;
    cfg.in_channels = j.value("in_channels", cfg.in_channels);
    cfg.frames = j.value("frames", cfg.frames);
    cfg.height = j.value("height", cfg.height);
    cfg.width = j.value("width", cfg.width);
    cfg.conv_out_channels = j.value("conv_out_channels", cfg.conv_out_channels);
    if (j.contains("conv_kernel")) cfg.conv_kernel = dims_from_json(j["conv_kernel"], "conv_kernel");
    if (j.contains("conv_stride")) cfg.conv_stride = dims_from_json(j["conv_stride"], "conv_stride");
    if (j.contains("conv_padding")) cfg.conv_padding = dims_from_json(j["conv_padding"], "conv_padding");
    cfg.attention_enabled = j.value("attention_enabled", cfg.attention_enabled);
    cfg.attention_parameterized =
        j.value("attention_parameterized", cfg.attention_parameterized);
    cfg.global_pool = j.value("global_pool", cfg.global_pool);
    if (j.contains("pool_kernel")) cfg.pool_kernel = dims_from_json(j["pool_kernel"], "pool_kernel");
    if (j.contains("pool_stride")) cfg.pool_stride = dims_from_json(j["pool_stride"], "pool_stride");
    cfg.hidden_width = j.value("hidden_width", cfg.hidden_width);
    cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    return cfg;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& cfg) {
    return model_config_json(cfg).dump();
}

ModelConfig model_config_from_json(const std::string& text) {
    try {
        return model_config_from(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad model JSON: ") + e.what());
    }
}

Checkpoint pack_training_state(const TrainingState& st) {
    Checkpoint ck;
    json meta = {{"type", "a3dc-checkpoint"},
                 {"version", 1},
                 {"model", model_config_json(st.model_config)},
                 {"loader",
                  {{"resize_h", st.loader.resize_h},
                   {"resize_w", st.loader.resize_w},
                   {"crop", st.loader.crop},
                   {"frames", st.loader.frames},
                   {"hflip", st.loader.hflip},
                   {"hflip_p", st.loader.hflip_p}}},
                 {"epochs_completed", st.epochs_completed},
                 {"seed", st.seed},
                 {"best_val_acc", st.best_val_acc},
                 {"best_epoch", st.best_epoch}};
    ck.config_json = meta.dump();
    for (const auto& [name, t] : st.params) ck.tensors.emplace(name, t);
    for (const auto& [name, t] : st.adam.m) ck.tensors.emplace("adam.m." + name, t);
    for (const auto& [name, t] : st.adam.v) ck.tensors.emplace("adam.v." + name, t);
    Tensor<float> step({1}, float(st.adam.t));
    ck.tensors.emplace("adam.t", std::move(step));
    return ck;
}

TrainingState unpack_training_state(const Checkpoint& ck) {
    TrainingState st;
    json meta;
    try {
        meta = json::parse(ck.config_json);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint: bad config JSON: ") + e.what());
    }
    if (meta.value("type", "") != "a3dc-checkpoint") {
        throw ConfigError("checkpoint: unknown payload type");
    }
    st.model_config = model_config_from(meta.at("model"));
    if (meta.contains("loader")) {
        const json& l = meta["loader"];
        st.loader.resize_h = l.value("resize_h", st.loader.resize_h);
        st.loader.resize_w = l.value("resize_w", st.loader.resize_w);
        st.loader.crop = l.value("crop", st.loader.crop);
        st.loader.frames = l.value("frames", st.loader.frames);
        st.loader.hflip = l.value("hflip", st.loader.hflip);
        st.loader.hflip_p = l.value("hflip_p", st.loader.hflip_p);
    }
    st.epochs_completed = meta.value("epochs_completed", int64_t(0));
    st.seed = meta.value("seed", uint64_t(0));
    st.best_val_acc = meta.value("best_val_acc", 0.0);
    st.best_epoch = meta.value("best_epoch", int64_t(-1));

    for (const auto& [name, t] : ck.tensors) {
        if (name == "adam.t") {
            st.adam.t = int64_t(t[0]);
        } else if (name.rfind("adam.m.", 0) == 0) {
            st.adam.m.emplace(name.substr(7), t);
        } else if (name.rfind("adam.v.", 0) == 0) {
            st.adam.v.emplace(name.substr(7), t);
        } else {
            st.params.emplace(name, t);
        }
    }
    return st;
}

void save_training_state(const std::filesystem::path& path, const TrainingState& st) {
    save_checkpoint(path, pack_training_state(st));
}

TrainingState load_training_state(const std::filesystem::path& path) {
    return unpack_training_state(load_checkpoint(path));
}

Model<float> model_from_state(const TrainingState& st) {
    Model<float> m;
    m.config = st.model_config;
    m.shapes = validate_config(st.model_config);
    // shape-check stored parameters against a freshly built skeleton
    Model<float> skeleton = build_model<float>(st.model_config, 0);
    for (const auto& [name, t] : skeleton.params) {
        auto it = st.params.find(name);
        if (it == st.params.end()) {
            throw ConfigError("checkpoint: missing parameter " + name);
        }
        if (it->second.shape() != t.shape()) {
            throw ConfigError("checkpoint: parameter " + name + " has shape " +
                              shape_str(it->second.shape()) + ", config wants " +
                              shape_str(t.shape()));
        }
    }
    if (st.params.size() != skeleton.params.size()) {
        throw ConfigError("checkpoint: unexpected extra parameters");
    }
    m.params = st.params;
    return m;
}

}  // namespace a3dc
