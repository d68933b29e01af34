// Command-line entry point for the whole pipeline: synthetic data
// generation, training, evaluation, prediction, the attention ablation, and
// gradient checking. Exit codes: 0 success, 1 validation error, 2
// runtime/numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "a3dc/dataset.hpp"
#include "a3dc/gradcheck.hpp"
#include "a3dc/serde.hpp"
#include "a3dc/train.hpp"

using namespace a3dc;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void print_resolved(const TrainConfig& cfg) {
    std::cout << "resolved config: " << train_config_to_json(cfg) << "\n";
    std::cout << "seed: " << cfg.seed << "\n";
}

struct TrainCliArgs {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::string resume;
    int64_t epochs = -1;
    int64_t batch_size = -1;
    uint64_t seed = 0;
    double lr = -1.0;
    double weight_decay = -1.0;
    double gamma = -1.0;
    int decay_period = -1;
    bool no_flip = false;
};

void add_train_flags(CLI::App* sub, TrainCliArgs& args) {
    sub->add_option("--config", args.config_path,
                    "JSON config file; explicit flags override its values");
    sub->add_option("--data", args.data_dir, "dataset directory (manifest.jsonl)");
    sub->add_option("--out", args.out_dir, "output directory for checkpoints/metrics");
    sub->add_option("--epochs", args.epochs, "number of training epochs (default 50)");
    sub->add_option("--batch-size", args.batch_size, "minibatch size (default 8)");
    sub->add_option("--seed", args.seed,
                    "root seed; every random stream derives from it");
    sub->add_option("--lr", args.lr, "initial learning rate (default 1e-4)");
    sub->add_option("--weight-decay", args.weight_decay,
                    "decoupled weight decay rate (default 1e-4)");
    sub->add_option("--gamma", args.gamma,
                    "learning-rate decay factor per period (default 0.1)");
    sub->add_option("--decay-period", args.decay_period,
                    "epochs between learning-rate decays (default 4)");
    sub->add_flag("--no-flip", args.no_flip, "disable random horizontal flips");
}

TrainConfig resolve_train_config(const CLI::App* sub, const TrainCliArgs& args) {
    TrainConfig cfg;
    if (!args.config_path.empty()) apply_json_config(cfg, read_file(args.config_path));
    if (sub->count("--data")) cfg.data_dir = args.data_dir;
    if (sub->count("--out")) cfg.out_dir = args.out_dir;
    if (sub->count("--epochs")) cfg.epochs = args.epochs;
    if (sub->count("--batch-size")) cfg.batch_size = args.batch_size;
    if (sub->count("--seed")) cfg.seed = args.seed;
    if (sub->count("--lr")) cfg.schedule.initial_lr = args.lr;
    if (sub->count("--weight-decay")) cfg.schedule.weight_decay = args.weight_decay;
    if (sub->count("--gamma")) cfg.schedule.decay_factor = args.gamma;
    if (sub->count("--decay-period")) cfg.schedule.decay_period_epochs = args.decay_period;
    if (args.no_flip) cfg.loader.hflip = false;
    if (cfg.data_dir.empty()) throw ConfigError("--data (or data_dir) is required");
    if (cfg.out_dir.empty()) throw ConfigError("--out (or out_dir) is required");
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"3D-convolution + attention action recognizer"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic motion dataset");
    SynthConfig synth;
    std::string gen_out;
    gen->add_option("--classes", synth.classes, "number of motion classes (1-8)")
        ->required();
    gen->add_option("--clips-per-class", synth.clips_per_class, "clips per class")
        ->required();
    gen->add_option("--frames", synth.frames, "frames per clip");
    gen->add_option("--size", synth.size, "square canvas size in pixels");
    gen->add_option("--seed", synth.seed, "generation seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model");
    TrainCliArgs train_args;
    add_train_flags(tr, train_args);
    tr->add_option("--resume", train_args.resume, "checkpoint to continue from");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    std::string ev_ckpt, ev_data, ev_split = "test", ev_preds;
    int64_t ev_batch = 8, ev_topk = 5;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--split", ev_split, "split to evaluate: train|val|test");
    ev->add_option("--batch-size", ev_batch, "evaluation batch size");
    ev->add_option("--topk", ev_topk, "top-k classes per prediction");
    ev->add_option("--preds", ev_preds, "write per-clip predictions (JSON lines)");

    // predict
    auto* pr = app.add_subcommand("predict", "top-k prediction for one clip");
    std::string pr_ckpt, pr_clip;
    int64_t pr_k = 5;
    int pr_gt = -1;
    pr->add_option("--ckpt", pr_ckpt, "checkpoint file")->required();
    pr->add_option("--clip", pr_clip, "clip file (VCLP)")->required();
    pr->add_option("--k", pr_k, "number of classes to report");
    pr->add_option("--gt", pr_gt, "ground-truth label, if known");

    // ablation
    auto* ab = app.add_subcommand(
        "ablation", "train attention and no-attention models on the same data order");
    TrainCliArgs ab_args;
    add_train_flags(ab, ab_args);

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck",
                                  "finite-difference check of every backward pass");
    bool gc_all = false;
    uint64_t gc_seed = 0;
    gc->add_flag("--all", gc_all, "check every layer and the end-to-end model");
    gc->add_option("--seed", gc_seed, "instance seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (gen->parsed()) {
        std::cout << "gen-data: classes=" << synth.classes
                  << " clips_per_class=" << synth.clips_per_class
                  << " frames=" << synth.frames << " size=" << synth.size << "\n";
        std::cout << "seed: " << synth.seed << "\n";
        DatasetManifest m = generate_synthetic_dataset(synth, gen_out);
        std::cout << "wrote " << m.records.size() << " clips and manifest to "
                  << gen_out << "\n";
        return 0;
    }

    if (tr->parsed()) {
        TrainConfig cfg = resolve_train_config(tr, train_args);
        cfg.resume = train_args.resume;
        print_resolved(cfg);
        TrainResult res = train(cfg);
        std::cout << "best val acc " << res.best_val_acc << " at epoch "
                  << res.best_epoch << "\n";
        std::cout << "metrics: " << res.metrics_path.string() << "\n";
        std::cout << "best checkpoint: " << res.best_checkpoint.string() << "\n";
        return 0;
    }

    if (ev->parsed()) {
        std::cout << "eval: ckpt=" << ev_ckpt << " data=" << ev_data
                  << " split=" << ev_split << "\n";
        TrainingState st = load_training_state(ev_ckpt);
        std::cout << "seed: " << st.seed << "\n";
        Model<float> model = model_from_state(st);
        DatasetManifest manifest = load_manifest(std::filesystem::path(ev_data) /
                                                 "manifest.jsonl");
        if (manifest.num_classes != model.config.num_classes) {
            throw ConfigError("eval: manifest has " +
                              std::to_string(manifest.num_classes) +
                              " classes, checkpoint expects " +
                              std::to_string(model.config.num_classes));
        }
        EvalResult res = evaluate_split(
            [&](const ClipBatch& b) { return forward_eval(model, b.x); }, manifest,
            ev_split, st.loader, ev_batch, st.epochs_completed, 0.0, ev_topk);
        std::cout << kMetricsHeader << "\n" << to_csv(res.row) << "\n";
        if (!ev_preds.empty()) {
            std::ofstream os(ev_preds);
            if (!os) throw IoError("eval: cannot write " + ev_preds);
            for (const auto& p : res.predictions) {
                os << prediction_to_json_line(p) << "\n";
            }
            std::cout << "predictions: " << ev_preds << "\n";
        }
        return 0;
    }

    if (pr->parsed()) {
        std::cout << "predict: ckpt=" << pr_ckpt << " clip=" << pr_clip
                  << " k=" << pr_k << "\n";
        TrainingState st = load_training_state(pr_ckpt);
        Model<float> model = model_from_state(st);
        VideoClip clip = load_vclp(pr_clip);
        clip.label = pr_gt;
        Prediction pred = predict_topk(model, clip, pr_k, st.loader);
        std::cout << prediction_to_json_line(pred) << "\n";
        return 0;
    }

    if (ab->parsed()) {
        TrainConfig cfg = resolve_train_config(ab, ab_args);
        print_resolved(cfg);
        AblationResult res = ablation(cfg);
        std::cout << "summary: " << res.summary_path.string() << "\n";
        return 0;
    }

    if (gc->parsed()) {
        (void)gc_all;  // the full sweep is the only mode
        std::cout << "gradcheck: seed " << gc_seed << "\n";
        std::vector<GradReport> reports = check_all_layers(gc_seed);
        bool all_pass = true;
        std::printf("%-32s %10s %12s  %s\n", "layer", "elements", "max rel err",
                    "status");
        for (const auto& r : reports) {
            std::printf("%-32s %10lld %12.3e  %s\n", r.name.c_str(),
                        static_cast<long long>(r.checked), r.max_rel_err,
                        r.pass ? "pass" : "FAIL");
            if (!r.pass) {
                all_pass = false;
                for (const auto& item : r.worst) {
                    std::printf("    %s[%lld] analytic %.6e numeric %.6e rel %.3e\n",
                                item.tensor.c_str(),
                                static_cast<long long>(item.index), item.analytic,
                                item.numeric, item.rel_err);
                }
            }
        }
        return all_pass ? 0 : 2;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
