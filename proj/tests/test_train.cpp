#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "a3dc/train.hpp"

using namespace a3dc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("a3dc_train_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// micro dataset + config used across the training tests
struct MicroSetup {
    TempDir data_dir;
    TempDir out_dir;
    DatasetManifest manifest;
    TrainConfig cfg;

    explicit MicroSetup(int classes = 2, int clips_per_class = 10, uint64_t seed = 7) {
        SynthConfig synth;
        synth.classes = classes;
        synth.clips_per_class = clips_per_class;
        synth.frames = 12;
        synth.size = 24;
        synth.seed = seed;
        manifest = generate_synthetic_dataset(synth, data_dir.path);

        cfg.model.in_channels = 3;
        cfg.model.frames = 8;
        cfg.model.height = 20;
        cfg.model.width = 20;
        cfg.model.conv_out_channels = 6;
        cfg.model.global_pool = true;
        cfg.model.hidden_width = 16;
        cfg.model.num_classes = classes;
        cfg.loader.resize_h = 24;
        cfg.loader.resize_w = 30;
        cfg.loader.crop = 20;
        cfg.loader.frames = 8;
        cfg.schedule.initial_lr = 1e-3;
        cfg.schedule.decay_period_epochs = 4;
        cfg.schedule.decay_factor = 0.5;
        cfg.schedule.weight_decay = 1e-4;
        cfg.epochs = 3;
        cfg.batch_size = 4;
        cfg.seed = seed;
        cfg.data_dir = data_dir.path;
        cfg.out_dir = out_dir.path;
        cfg.quiet = true;
    }
};

LogitsFn onehot_oracle(float high = 10.0f, int num_classes = 2) {
    return [high, num_classes](const ClipBatch& batch) {
        Tensor<float> logits({int64_t(batch.labels.size()), num_classes});
        for (size_t i = 0; i < batch.labels.size(); ++i) {
            logits.at({int64_t(i), batch.labels[i]}) = high;
        }
        return logits;
    };
}

}  // namespace

TEST_CASE("oracle-logits stub evaluates to accuracy 1.0") {
    MicroSetup s;
    EvalResult res = evaluate_split(onehot_oracle(), s.manifest, "val", s.cfg.loader,
                                    3, 0, 0.0, 2);
    CHECK(res.row.accuracy == 1.0);
    CHECK(res.row.loss < 1e-4);
    CHECK(res.predictions.size() == s.manifest.split_indices("val").size());
    for (const auto& p : res.predictions) {
        CHECK(p.topk.front().first == p.gt);
    }
}

TEST_CASE("uniform-logits stub scores ln K loss at chance accuracy") {
    MicroSetup s;
    const int K = 101;
    LogitsFn uniform = [&](const ClipBatch& batch) {
        return Tensor<float>({int64_t(batch.labels.size()), K}, 0.0f);
    };
    EvalResult res = evaluate_split(uniform, s.manifest, "val", s.cfg.loader, 4, 0,
                                    0.0, 5);
    CHECK(res.row.loss == doctest::Approx(std::log(101.0)).epsilon(1e-3));
    // argmax tie-break picks class 0; micro dataset labels are 0 or 1
    for (const auto& p : res.predictions) {
        CHECK(p.topk.front().first == 0);
        CHECK(p.topk.size() == 5);
        CHECK(p.topk[0].second == doctest::Approx(1.0f / 101.0f).epsilon(1e-5));
    }
}

TEST_CASE("repeated evaluation is identical") {
    MicroSetup s;
    Model<float> model = build_model<float>(s.cfg.model, 3);
    EvalResult a = evaluate_model(model, s.manifest, "val", s.cfg.loader, 4);
    EvalResult b = evaluate_model(model, s.manifest, "val", s.cfg.loader, 4);
    CHECK(to_csv(a.row) == to_csv(b.row));
}

TEST_CASE("an untrained 4-class model evaluates near chance") {
    MicroSetup s(4, 10, 11);
    Model<float> model = build_model<float>(s.cfg.model, 11);
    EvalResult res = evaluate_model(model, s.manifest, "val", s.cfg.loader, 4);
    CHECK(res.row.accuracy >= 0.0);
    CHECK(res.row.accuracy <= 0.6);  // 8 val clips, chance 0.25
    CHECK(res.row.loss == doctest::Approx(std::log(4.0)).epsilon(0.5));
}

TEST_CASE("training writes metrics, checkpoints, and improves on ln K") {
    MicroSetup s;
    TrainResult res = train(s.cfg);

    REQUIRE(fs::exists(res.metrics_path));
    std::ifstream is(res.metrics_path);
    std::string header;
    std::getline(is, header);
    CHECK(header == kMetricsHeader);
    int rows = 0;
    for (std::string line; std::getline(is, line);) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 2 * s.cfg.epochs);  // train + val per epoch

    CHECK(fs::exists(res.best_checkpoint));
    CHECK(fs::exists(res.last_checkpoint));
    CHECK(fs::exists(s.out_dir.path / "epoch_0001.a3dc"));
    CHECK(fs::exists(s.out_dir.path / "epoch_0003.a3dc"));

    // after the first epoch the train loss must already beat chance level
    REQUIRE(res.rows.size() >= 2);
    CHECK(res.rows[0].split == "train");
    CHECK(res.rows[0].loss < std::log(2.0));
    CHECK(res.batch_hashes.size() == size_t(s.cfg.epochs));
}

TEST_CASE("two identically seeded runs produce byte-identical metrics") {
    MicroSetup a;
    TrainResult ra = train(a.cfg);

    TempDir other_out;
    TrainConfig cfg_b = a.cfg;
    cfg_b.out_dir = other_out.path;
    TrainResult rb = train(cfg_b);

    CHECK(slurp(ra.metrics_path) == slurp(rb.metrics_path));
    CHECK(ra.batch_hashes == rb.batch_hashes);
    // checkpoints are bit-identical too
    CHECK(slurp(a.cfg.out_dir / "last.a3dc") == slurp(cfg_b.out_dir / "last.a3dc"));
}

TEST_CASE("resume continues the exact trajectory") {
    MicroSetup s;
    s.cfg.epochs = 3;
    TrainResult full = train(s.cfg);

    TempDir resumed_out;
    TrainConfig resume_cfg = s.cfg;
    resume_cfg.out_dir = resumed_out.path;
    resume_cfg.resume = s.out_dir.path / "epoch_0002.a3dc";
    TrainResult tail = train(resume_cfg);

    // the resumed run re-trains epoch index 2 only and must match bitwise
    REQUIRE(tail.rows.size() == 2);
    CHECK(to_csv(tail.rows[0]) == to_csv(full.rows[4]));
    CHECK(to_csv(tail.rows[1]) == to_csv(full.rows[5]));
    CHECK(slurp(resumed_out.path / "epoch_0003.a3dc") ==
          slurp(s.out_dir.path / "epoch_0003.a3dc"));
}

TEST_CASE("in-place resume reassembles the uninterrupted metrics file") {
    MicroSetup full_run;
    full_run.cfg.epochs = 3;
    TrainResult full = train(full_run.cfg);

    MicroSetup partial(2, 10, 7);
    partial.cfg.epochs = 2;
    train(partial.cfg);
    TrainConfig tail = partial.cfg;
    tail.epochs = 3;
    tail.resume = partial.out_dir.path / "epoch_0002.a3dc";
    TrainResult resumed = train(tail);

    CHECK(slurp(resumed.metrics_path) == slurp(full.metrics_path));
}

TEST_CASE("resume validates seed and architecture") {
    MicroSetup s;
    s.cfg.epochs = 1;
    train(s.cfg);

    TempDir out2;
    TrainConfig bad_seed = s.cfg;
    bad_seed.epochs = 2;
    bad_seed.out_dir = out2.path;
    bad_seed.resume = s.out_dir.path / "epoch_0001.a3dc";
    bad_seed.seed = 999;
    CHECK_THROWS_AS(train(bad_seed), ConfigError);

    TrainConfig bad_model = s.cfg;
    bad_model.epochs = 2;
    bad_model.out_dir = out2.path;
    bad_model.resume = s.out_dir.path / "epoch_0001.a3dc";
    bad_model.model.hidden_width = 99;
    CHECK_THROWS_AS(train(bad_model), ConfigError);
}

TEST_CASE("checkpoint reload evaluates identically to the live model") {
    MicroSetup s;
    s.cfg.epochs = 2;
    TrainResult res = train(s.cfg);

    TrainingState st = load_training_state(res.last_checkpoint);
    Model<float> restored = model_from_state(st);
    EvalResult from_ckpt = evaluate_model(restored, s.manifest, "val", s.cfg.loader, 4);
    // the final val row in the metrics equals a fresh evaluation of the
    // reloaded checkpoint, bit for bit
    MetricsRow last_val = res.rows.back();
    CHECK(from_ckpt.row.loss == last_val.loss);
    CHECK(from_ckpt.row.accuracy == last_val.accuracy);
}

TEST_CASE("class-count mismatch is a config error") {
    MicroSetup s;
    s.cfg.model.num_classes = 5;
    CHECK_THROWS_AS(train(s.cfg), ConfigError);

    Model<float> wide = build_model<float>(s.cfg.model, 1);
    CHECK_THROWS_AS(evaluate_model(wide, s.manifest, "val", s.cfg.loader, 4),
                    ConfigError);
}

TEST_CASE("predict_topk orders by probability with index tie-break") {
    MicroSetup s;
    Model<float> model = build_model<float>(s.cfg.model, 3);
    // zero the head: all logits equal, so top-k must list classes 0,1,...
    for (auto name : {"fc2.weight", "fc2.bias"}) {
        Tensor<float>& t = model.params.at(name);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = 0.0f;
    }
    VideoClip clip = load_vclp(s.manifest.resolve(s.manifest.records[0]));
    clip.label = s.manifest.records[0].label;
    Prediction pred = predict_topk(model, clip, 2, s.cfg.loader);
    REQUIRE(pred.topk.size() == 2);
    CHECK(pred.topk[0].first == 0);
    CHECK(pred.topk[1].first == 1);
    float sum = 0;
    for (const auto& [cls, p] : pred.topk) sum += p;
    CHECK(sum == doctest::Approx(1.0f).epsilon(1e-6));  // k == K here

    CHECK_THROWS_AS(predict_topk(model, clip, 3, s.cfg.loader), ValueError);

    const std::string line = prediction_to_json_line(pred);
    CHECK(line.find("\"id\"") != std::string::npos);
    CHECK(line.find("\"gt\"") != std::string::npos);
    CHECK(line.find("\"topk\"") != std::string::npos);
}

TEST_CASE("ablation trains both arms on the same data order") {
    MicroSetup s;
    s.cfg.epochs = 2;
    AblationResult res = ablation(s.cfg);
    CHECK(res.data_order_identical);
    CHECK(fs::exists(res.summary_path));
    CHECK(fs::exists(s.out_dir.path / "attention" / "metrics.csv"));
    CHECK(fs::exists(s.out_dir.path / "baseline" / "metrics.csv"));

    const std::string summary = slurp(res.summary_path);
    CHECK(summary.find("3dcnn_attention") != std::string::npos);
    CHECK(summary.find("\"3dcnn\"") != std::string::npos);
    CHECK(summary.find("data_order_identical") != std::string::npos);
}

TEST_CASE("flips are disabled on mirror-sensitive datasets") {
    // the micro dataset contains move_left/move_right, so the trainer must
    // ignore a requested hflip; identical metrics with hflip on and off prove
    // the flip path never ran
    MicroSetup s;
    s.cfg.epochs = 1;
    s.cfg.loader.hflip = true;
    TrainResult flip_on = train(s.cfg);

    TempDir out2;
    TrainConfig cfg2 = s.cfg;
    cfg2.loader.hflip = false;
    cfg2.out_dir = out2.path;
    TrainResult flip_off = train(cfg2);

    REQUIRE_FALSE(s.manifest.hflip_safe);
    CHECK(slurp(flip_on.metrics_path) == slurp(flip_off.metrics_path));
}

TEST_CASE("json config overlay: flags beat file beats defaults") {
    TrainConfig cfg;
    apply_json_config(cfg, R"({
        "model": {"num_classes": 4, "conv_out_channels": 16},
        "schedule": {"initial_lr": 0.003},
        "epochs": 30,
        "batch_size": 8,
        "seed": 7
    })");
    CHECK(cfg.model.num_classes == 4);
    CHECK(cfg.model.conv_out_channels == 16);
    CHECK(cfg.model.in_channels == 3);  // untouched default
    CHECK(cfg.schedule.initial_lr == 0.003);
    CHECK(cfg.schedule.weight_decay == 1e-4);  // untouched default
    CHECK(cfg.epochs == 30);
    CHECK(cfg.seed == 7);

    CHECK_THROWS_AS(apply_json_config(cfg, "{not json"), ConfigError);

    const std::string dumped = train_config_to_json(cfg);
    TrainConfig back;
    apply_json_config(back, dumped);
    CHECK(train_config_to_json(back) == dumped);
}
