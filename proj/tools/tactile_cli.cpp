// Command-line front end: data generation, training, evaluation, replay and
// the session service.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tactile/augment.hpp"
#include "tactile/bilstm.hpp"
#include "tactile/dataset.hpp"
#include "tactile/gateway/config.hpp"
#include "tactile/gateway/server.hpp"
#include "tactile/online.hpp"
#include "tactile/synth.hpp"

namespace fs = std::filesystem;
using namespace tactile;

namespace {

void write_text(const fs::path& file, const std::string& text) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    out << text;
}

gateway::GlobalConfig config_or_default(const std::string& path) {
    return path.empty() ? gateway::parse_config(nlohmann::json::object()) : gateway::load_config(path);
}

std::shared_ptr<const BiLstmClassifier> shared_model(const std::string& path) {
    return std::make_shared<const BiLstmClassifier>(load_model(path));
}

FeatureSet parse_features(const std::string& s) {
    if (s == "wrench") return FeatureSet::Wrench;
    if (s == "wrench_torque") return FeatureSet::WrenchTorque;
    throw Error("unknown feature set: " + s);
}

struct TrainArgs {
    std::string data, out, augment, history, confusion, test_out, features = "wrench";
    TrainConfig cfg;
    double train_fraction = 0.7;
    std::uint64_t split_seed = 0;
    bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
    const Dataset all = load(a.data);
    const Split sp = split(all, {a.train_fraction, a.split_seed, true});
    Dataset train_set = sp.train, test_set = sp.test;
    if (!a.augment.empty()) {
        // Augment each side on its own so no copy of a test drawing is trained on.
        const AugmentMode mode = parse_augment_mode(a.augment);
        train_set = augment_dataset(train_set, mode);
        test_set = augment_dataset(test_set, mode);
    }
    TrainConfig cfg = a.cfg;
    cfg.features = parse_features(a.features);
    std::fprintf(stderr, "train %zu, test %zu sequences\n", train_set.size(), test_set.size());
    const auto result = train(train_set, &test_set, cfg, [&](const EpochStats& e) {
        if (!a.quiet && (e.epoch % 10 == 0 || e.epoch == cfg.epochs))
            std::fprintf(stderr, "epoch %zu loss %.5f train %.4f test %.4f\n", e.epoch, e.loss, e.train_accuracy,
                         e.val_accuracy);
    });
    save_model(result.model, a.out);
    const EvalResult ev = evaluate(result.model, test_set);
    std::printf("accuracy %.6f (%zu/%zu)\n", ev.accuracy, static_cast<std::size_t>(ev.confusion.trace()),
                static_cast<std::size_t>(ev.confusion.total()));
    if (!a.augment.empty()) {
        const EvalResult orig = evaluate(result.model, sp.test);
        std::printf("accuracy_original %.6f\n", orig.accuracy);
    }
    if (!a.history.empty()) write_text(a.history, history_csv(result.history));
    if (!a.confusion.empty()) write_text(a.confusion, ev.confusion.to_csv());
    if (!a.test_out.empty()) export_dataset(test_set, a.test_out);
    return 0;
}

int cmd_eval(const std::string& model, const std::string& data, const std::string& confusion) {
    const EvalResult ev = evaluate(load_model(model), load(data));
    std::printf("accuracy %.6f (%zu/%zu)\n", ev.accuracy, static_cast<std::size_t>(ev.confusion.trace()),
                static_cast<std::size_t>(ev.confusion.total()));
    std::fputs(ev.confusion.to_csv().c_str(), stdout);
    if (!confusion.empty()) write_text(confusion, ev.confusion.to_csv());
    return 0;
}

int cmd_augment(const std::string& in, const std::string& out, const std::string& mode) {
    const Dataset ds = augment_dataset(load(in), parse_augment_mode(mode));
    export_dataset(ds, out);
    std::printf("%zu sequences written to %s\n", ds.size(), out.c_str());
    return 0;
}

std::vector<int> parse_digits(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.size() != 1 || item[0] < '0' || item[0] > '9') throw Error("bad digit list: " + s);
        out.push_back(item[0] - '0');
    }
    if (out.empty()) throw Error("empty digit list");
    return out;
}

int cmd_synth(const std::string& out, std::size_t per_class, std::size_t users, std::uint64_t seed,
              const std::string& stream_digits) {
    if (!stream_digits.empty()) {
        std::mt19937_64 rng(seed);
        const SynthStream st = synthesize_stream(parse_digits(stream_digits), rng);
        if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
        write_stream_csv(out, st.frames);
        std::printf("%zu frames, %zu drawings written to %s\n", st.frames.size(), st.digits.size(), out.c_str());
        return 0;
    }
    const Dataset ds = make_synthetic_dataset(per_class, users, seed);
    export_dataset(ds, out);
    std::printf("%zu sequences written to %s\n", ds.size(), out.c_str());
    return 0;
}

int cmd_replay(const std::string& model, const std::string& stream, const std::string& config, bool all) {
    const auto cfg = config_or_default(config);
    StreamClassifier sc(shared_model(model), cfg.online);
    const auto frames = read_stream_csv(stream);
    for (const auto& ev : replay(sc, frames)) {
        if (!all && ev.kind == RecognitionEvent::Kind::TouchStarted) continue;
        nlohmann::json j{{"event", kind_name(ev.kind)}, {"onset_frame", ev.onset_frame}};
        if (ev.prediction) {
            j["label"] = ev.prediction->label;
            j["confidence"] = ev.prediction->confidence;
            j["probabilities"] = ev.prediction->probabilities;
            j["degenerate"] = ev.degenerate;
        }
        std::cout << j.dump() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tactile digit recognition: data, training, evaluation and the session service"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on a dataset directory");
    train_cmd->add_option("--data", ta.data, "Dataset root (one folder per digit)")->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--out", ta.out, "Model file to write")->required();
    train_cmd->add_option("--augment", ta.augment, "reversed | rotated | rotated=+90,-90");
    train_cmd->add_option("--epochs", ta.cfg.epochs)->capture_default_str();
    train_cmd->add_option("--hidden", ta.cfg.hidden)->capture_default_str();
    train_cmd->add_option("--batch", ta.cfg.batch_size)->capture_default_str();
    train_cmd->add_option("--lr", ta.cfg.adam.learning_rate)->capture_default_str();
    train_cmd->add_option("--seed", ta.cfg.seed, "Initialization and shuffling seed")->capture_default_str();
    train_cmd->add_option("--split-seed", ta.split_seed)->capture_default_str();
    train_cmd->add_option("--train-fraction", ta.train_fraction)->capture_default_str();
    train_cmd->add_option("--validate-every", ta.cfg.validate_every)->capture_default_str();
    train_cmd->add_option("--features", ta.features, "wrench | wrench_torque")->capture_default_str();
    train_cmd->add_option("--history", ta.history, "Per-epoch CSV");
    train_cmd->add_option("--confusion", ta.confusion, "Test-split confusion matrix CSV");
    train_cmd->add_option("--test-out", ta.test_out, "Export the held-out split here");
    train_cmd->add_flag("--quiet", ta.quiet);

    std::string model, data, confusion, in, out, mode, stream, config, digits;
    std::size_t per_class = 50, users = 3;
    std::uint64_t seed = 0;
    bool all = false;
    unsigned threads = 1;

    auto* eval_cmd = app.add_subcommand("eval", "Accuracy and confusion matrix of a model on a dataset");
    eval_cmd->add_option("--model", model)->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--confusion", confusion, "Also write the confusion matrix here");

    auto* aug_cmd = app.add_subcommand("augment", "Write an augmented copy of a dataset");
    aug_cmd->add_option("--in", in)->required()->check(CLI::ExistingDirectory);
    aug_cmd->add_option("--out", out)->required();
    aug_cmd->add_option("--mode", mode, "reversed | rotated | rotated=+90,-90")->required();

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset or raw stream");
    synth_cmd->add_option("--out", out, "Dataset root, or CSV file with --stream")->required();
    synth_cmd->add_option("--per-class", per_class, "Drawings per digit per user")->capture_default_str();
    synth_cmd->add_option("--users", users)->capture_default_str();
    synth_cmd->add_option("--seed", seed)->capture_default_str();
    synth_cmd->add_option("--stream", digits, "Write one raw stream drawing these digits, e.g. 1,2,3");

    auto* replay_cmd = app.add_subcommand("replay", "Run a recorded stream through the online recognizer");
    replay_cmd->add_option("--model", model)->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--stream", stream, "Stream CSV")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--config", config)->check(CLI::ExistingFile);
    replay_cmd->add_flag("--all", all, "Also print touch_started events");

    auto* session_cmd = app.add_subcommand("session", "One session as newline-delimited JSON on stdin/stdout");
    session_cmd->add_option("--model", model, "Overrides model_path from the config");
    session_cmd->add_option("--config", config)->check(CLI::ExistingFile);

    auto* serve_cmd = app.add_subcommand("serve", "WebSocket session service");
    serve_cmd->add_option("--config", config)->check(CLI::ExistingFile);
    serve_cmd->add_option("--model", model, "Overrides model_path from the config");
    serve_cmd->add_option("--threads", threads)->capture_default_str();

    app.add_subcommand("config", "Print the default configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) return cmd_train(ta);
        if (*eval_cmd) return cmd_eval(model, data, confusion);
        if (*aug_cmd) return cmd_augment(in, out, mode);
        if (*synth_cmd) return cmd_synth(out, per_class, users, seed, digits);
        if (*replay_cmd) return cmd_replay(model, stream, config, all);
        if (*session_cmd || *serve_cmd) {
            auto cfg = config_or_default(config);
            if (!model.empty()) cfg.model_path = model;
            auto m = shared_model(cfg.model_path);
            if (*session_cmd) {
                gateway::run_stdio_session(std::cin, std::cout, m, cfg);
                return 0;
            }
            gateway::Server server(m, cfg);
            const auto port = server.start();
            std::fprintf(stderr, "listening on ws://%s:%u\n", cfg.listen_address.c_str(), port);
            server.run(threads == 0 ? 1 : threads);
            return 0;
        }
        std::cout << gateway::to_json(gateway::parse_config(nlohmann::json::object())).dump(2) << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
