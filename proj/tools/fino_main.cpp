// fino: synthetic data generation, training, evaluation and analysis for the
// multimodal manipulation-failure models.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fino/checkpoint.hpp"
#include "fino/config.hpp"
#include "fino/dataset.hpp"
#include "fino/evaluation.hpp"
#include "fino/plot.hpp"
#include "fino/synth.hpp"
#include "fino/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fino;

namespace {

struct ModalityFlags {
    bool rgb = true, depth = true, audio = true;
};

ModalityFlags parse_modalities(const std::string& s) {
    ModalityFlags m{false, false, false};
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "rgb") m.rgb = true;
        else if (tok == "d" || tok == "depth") m.depth = true;
        else if (tok == "a" || tok == "audio") m.audio = true;
        else throw ConfigError("unknown modality token: " + tok);
    }
    if (!m.rgb && !m.depth && !m.audio) throw ConfigError("empty modality set");
    return m;
}

RunConfig make_config(const std::string& config_file,
                      const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

TrainConfig train_config(const RunConfig& cfg) {
    TrainConfig tc;
    tc.learning_rate = cfg.get_double("train.learning_rate");
    tc.epochs = cfg.get_int("train.epochs");
    tc.batch_size = cfg.get_int("train.batch_size");
    tc.patience = cfg.get_int("train.patience");
    tc.augment = cfg.get_bool("train.augment");
    tc.seed = cfg.get_u64("seed");
    std::string w = cfg.get("train.class_weighting");
    if (w == "inverse_frequency") tc.class_weighting = ClassWeighting::inverse_frequency;
    else if (w != "none") throw ConfigError("unknown train.class_weighting: " + w);
    tc.validate();
    return tc;
}

json metrics_json(const MetricsReport& m) {
    json per = json::array();
    for (size_t i = 0; i < m.per_class.size(); ++i)
        per.push_back({{"class", m.class_names[i]},
                       {"precision", m.per_class[i].precision},
                       {"recall", m.per_class[i].recall},
                       {"f1", m.per_class[i].f1},
                       {"support", m.per_class[i].support}});
    return {{"per_class", per},
            {"confusion", m.confusion},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"accuracy", m.micro_f1}};
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << "\n";
}

struct LoadedData {
    DatasetIndex index;
    PreprocCache cache;
};

LoadedData load_data(const std::string& root, const RunConfig& cfg) {
    LoadedData d;
    auto refs = scan_dataset_root(root);
    d.index = make_splits(refs, cfg.get_u64("seed"), cfg.get_bool("train.stratified_split"));
    d.cache.build(d.index.episodes, cfg.vision_config(), cfg.audio_config());
    return d;
}

std::vector<Episode> load_split_episodes(const DatasetIndex& index, Split split) {
    std::vector<Episode> eps;
    for (const auto& ref : index.subset(split)) eps.push_back(load_episode(ref.path));
    if (eps.empty()) throw EmptyDataset("split has no episodes");
    return eps;
}

int run(int argc, char** argv) {
    CLI::App app{"multimodal manipulation-failure detection toolkit"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> overrides;
    app.add_option("--config", config_file, "key=value config file");
    app.add_option("--set", overrides, "override a config key (key=value)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
    synth->fallthrough();
    std::string synth_out;
    bool compound = false;
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_flag("--compound", compound, "emit the three-manipulation compound scenario");

    // train
    auto* train_cmd = app.add_subcommand("train", "train one model variant");
    train_cmd->fallthrough();
    std::string train_data, train_out, modalities = "rgb,d,a", task_name = "detection";
    train_cmd->add_option("--data", train_data, "dataset root")->required();
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--modalities", modalities, "comma list of rgb,d,a");
    train_cmd->add_option("--task", task_name, "detection|standalone|cascaded");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "test-split metrics for checkpoints");
    eval_cmd->fallthrough();
    std::string eval_data, eval_out = "metrics.json", eval_task = "detection";
    std::vector<std::string> eval_ckpts;
    eval_cmd->add_option("--data", eval_data, "dataset root")->required();
    eval_cmd->add_option("--ckpt", eval_ckpts, "variant=checkpoint (repeatable)")->required();
    eval_cmd->add_option("--out", eval_out, "metrics JSON output path");
    eval_cmd->add_option("--task", eval_task, "detection|standalone|cascaded");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "post-hoc analyses");
    analyze->fallthrough();
    analyze->require_subcommand(1);
    std::string an_data, an_ckpt, an_out = ".";
    analyze->add_option("--data", an_data, "dataset root")->required();
    analyze->add_option("--ckpt", an_ckpt, "checkpoint path")->required();
    analyze->add_option("--out", an_out, "output directory");
    auto* an_completion = analyze->add_subcommand("completion", "score vs completion fraction");
    an_completion->fallthrough();
    std::vector<double> fractions = {0.25, 0.5, 0.75, 1.0};
    an_completion->add_option("--fractions", fractions, "completion fractions");
    auto* an_variance = analyze->add_subcommand("variance", "frame-resampling variability");
    an_variance->fallthrough();
    int n_resamples = 50;
    std::string sampling_mode = "random";
    an_variance->add_option("--resamples", n_resamples, "number of resamples");
    an_variance->add_option("--sampling", sampling_mode, "even|random");
    auto* an_confusion = analyze->add_subcommand("confusion", "test-split confusion matrix");
    an_confusion->fallthrough();

    // predict
    auto* predict = app.add_subcommand("predict", "cascaded verdicts for episode segments");
    predict->fallthrough();
    std::vector<std::string> episode_dirs;
    std::string detector_path, classifier_path, predict_out;
    predict->add_option("--episode", episode_dirs, "episode directory (repeatable)")
        ->required();
    predict->add_option("--detector", detector_path, "detection checkpoint")->required();
    predict->add_option("--classifier", classifier_path, "cascaded classifier checkpoint");
    predict->add_option("--out", predict_out, "verdicts JSON output path");

    CLI11_PARSE(app, argc, argv);
    RunConfig cfg = make_config(config_file, overrides);

    if (*synth) {
        if (compound) {
            auto segments = generate_compound_scenario(cfg.get_u64("seed"));
            fs::create_directories(synth_out);
            for (const auto& ep : segments)
                write_episode((fs::path(synth_out) / ep.id).string(), ep);
            std::cout << "wrote " << segments.size() << " compound segments to " << synth_out
                      << "\n";
        } else {
            generate_benchmark(default_benchmark_recipe(), synth_out, cfg.get_u64("seed"));
            std::cout << "wrote benchmark to " << synth_out << "\n";
        }
        return 0;
    }

    if (*train_cmd) {
        ModalityFlags m = parse_modalities(modalities);
        TaskMode task = task_from_string(task_name);
        LoadedData d = load_data(train_data, cfg);
        ModelConfig mc = cfg.model_config(m.rgb, m.depth, m.audio, task);
        TaskDataset data = build_task_dataset(d.index, d.cache, task, mc, cfg.vision_config());
        FinoNet<float> net;
        net.init(mc);
        TrainReport report = train(net, data, train_config(cfg), train_out);
        std::cout << "best epoch " << report.best_epoch << " val macro-F1 "
                  << report.best_val_f1 << "\n";
        json j = {{"best_epoch", report.best_epoch},
                  {"best_val_f1", report.best_val_f1},
                  {"checkpoint", report.checkpoint_path},
                  {"config", cfg.values()}};
        write_json(train_out + ".report.json", j);
        return 0;
    }

    if (*eval_cmd) {
        TaskMode task = task_from_string(eval_task);
        LoadedData d = load_data(eval_data, cfg);
        std::vector<std::pair<std::string, std::string>> variants;
        for (const auto& spec : eval_ckpts) {
            auto eq = spec.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--ckpt expects variant=path, got " + spec);
            variants.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
        }
        auto rows = evaluate_ablations(d.index, d.cache, variants, task, cfg.vision_config());
        json out = {{"task", eval_task}, {"config", cfg.values()}, {"variants", json::array()}};
        for (const auto& row : rows) {
            out["variants"].push_back(
                {{"modalities", row.variant}, {"metrics", metrics_json(row.metrics)}});
            std::cout << row.variant << ": macro-F1 " << row.metrics.macro_f1 << " accuracy "
                      << row.metrics.micro_f1 << "\n";
        }
        write_json(eval_out, out);
        return 0;
    }

    if (*analyze) {
        FinoNet<float> net;
        load_checkpoint(an_ckpt, net);
        LoadedData d;  // confusion needs the cache; completion/variance reload raw episodes
        fs::create_directories(an_out);
        if (*an_confusion) {
            d = load_data(an_data, cfg);
            MetricsReport m =
                confusion_analysis(net, d.index, d.cache, net.config.task, cfg.vision_config());
            std::ofstream csv(fs::path(an_out) / "confusion.csv");
            csv << confusion_csv(m);
            write_confusion_heatmap(m, (fs::path(an_out) / "confusion.png").string());
            json j = {{"config", cfg.values()}, {"metrics", metrics_json(m)}};
            write_json((fs::path(an_out) / "confusion.json").string(), j);
            std::cout << "macro-F1 " << m.macro_f1 << "\n";
            return 0;
        }
        auto refs = scan_dataset_root(an_data);
        DatasetIndex index =
            make_splits(refs, cfg.get_u64("seed"), cfg.get_bool("train.stratified_split"));
        std::vector<Episode> test_eps = load_split_episodes(index, Split::test);
        if (*an_completion) {
            auto curve = completion_rate_analysis(net, test_eps, cfg.vision_config(),
                                                  cfg.audio_config(), net.config.task,
                                                  fractions);
            json pts = json::array();
            for (const auto& p : curve) {
                json e = {{"fraction", p.x}, {"valid", p.valid}};
                if (p.valid) e["metrics"] = metrics_json(p.metrics);
                pts.push_back(e);
                std::cout << "rho " << p.x << ": "
                          << (p.valid ? std::to_string(p.metrics.macro_f1) : "unsampleable")
                          << "\n";
            }
            write_json((fs::path(an_out) / "completion.json").string(),
                       {{"config", cfg.values()}, {"points", pts}});
            write_completion_curve(curve, (fs::path(an_out) / "completion.png").string());
            return 0;
        }
        if (*an_variance) {
            VisionConfig vc = cfg.vision_config();
            if (sampling_mode == "random") vc.policy.mode = SamplingMode::random;
            else if (sampling_mode == "even") vc.policy.mode = SamplingMode::even;
            else throw ConfigError("unknown sampling mode: " + sampling_mode);
            auto summary = resampling_variance(net, test_eps, vc, cfg.audio_config(),
                                               net.config.task, n_resamples,
                                               cfg.get_u64("seed"));
            json j = {{"config", cfg.values()},
                      {"sampling", sampling_mode},
                      {"n_resamples", summary.n_resamples},
                      {"precision", {{"mean", summary.precision_mean}, {"std", summary.precision_std}}},
                      {"recall", {{"mean", summary.recall_mean}, {"std", summary.recall_std}}},
                      {"f1", {{"mean", summary.f1_mean}, {"std", summary.f1_std}}}};
            write_json((fs::path(an_out) / "variance.json").string(), j);
            std::cout << "macro-F1 " << summary.f1_mean << " +/- " << summary.f1_std << "\n";
            return 0;
        }
    }

    if (*predict) {
        FinoNet<float> det;
        load_checkpoint(detector_path, det);
        FinoNet<float> cls;
        FinoNet<float>* cls_ptr = nullptr;
        if (!classifier_path.empty()) {
            load_checkpoint(classifier_path, cls);
            cls_ptr = &cls;
        }
        std::vector<Episode> segments;
        for (const auto& dir : episode_dirs) segments.push_back(load_episode(dir));
        auto verdicts =
            predict_on_demand(det, cls_ptr, segments, cfg.vision_config(), cfg.audio_config());
        json out = {{"config", cfg.values()}, {"verdicts", json::array()}};
        for (const auto& v : verdicts) {
            std::cout << v.id << ": " << (v.detection == DetectionLabel::fail ? "fail" : "success");
            if (v.classifier_invoked) std::cout << " (" << to_string(v.classification) << ")";
            std::cout << " [" << v.latency_ms << " ms]\n";
            out["verdicts"].push_back({{"id", v.id},
                                       {"detection", v.detection == DetectionLabel::fail
                                                         ? "fail"
                                                         : "success"},
                                       {"classifier_invoked", v.classifier_invoked},
                                       {"classification", to_string(v.classification)},
                                       {"detection_scores", v.detection_scores},
                                       {"class_scores", v.class_scores},
                                       {"latency_ms", v.latency_ms}});
        }
        if (!predict_out.empty()) write_json(predict_out, out);
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
