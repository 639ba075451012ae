#include "fino/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fino/checkpoint.hpp"
#include "fino/errors.hpp"

namespace fino {

namespace {

PreprocessedEpisode preprocess_one(const Episode& episode, const VisionConfig& vision,
                                   const AudioFrontEndConfig& audio) {
    PreprocessedEpisode out;
    out.id = episode.id;
    out.action = episode.action;
    out.label = episode.label;
    out.visual4 = preprocess_visual(episode, vision).data;
    out.mfcc = audio_features(episode.audio, audio).data;
    return out;
}

// Waveform prefix covering the first `fraction` of the execution.
std::vector<float> truncate_waveform(const std::vector<float>& audio, double duration_s,
                                     double fraction, int sample_rate) {
    if (fraction >= 1.0) return audio;
    size_t keep = static_cast<size_t>(std::floor(fraction * duration_s * sample_rate));
    keep = std::min(keep, audio.size());
    return std::vector<float>(audio.begin(), audio.begin() + keep);
}

TaskDataset shell_dataset(const ModelConfig& model, const VisionConfig& vision,
                          TaskMode task) {
    TaskDataset data;
    data.class_names = task_class_names(task);
    data.use_rgb = model.use_rgb;
    data.use_depth = model.use_depth;
    data.use_audio = model.use_audio;
    data.vision = vision;
    return data;
}

MetricsReport eval_items(FinoNet<float>& net, const TaskDataset& data,
                         const std::vector<TaskItem>& items) {
    std::vector<int> truth;
    truth.reserve(items.size());
    for (const auto& it : items) truth.push_back(it.label);
    std::vector<int> pred = predict_labels(net, data, items);
    return compute_metrics(truth, pred, data.class_names);
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0 : s / v.size();
}

double std_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0;
    // identical samples must report exactly zero spread (the rounded mean of
    // n equal values is not bit-equal to them in general)
    bool all_equal = true;
    for (double x : v) all_equal = all_equal && x == v.front();
    if (all_equal) return 0;
    double s = 0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / (v.size() - 1));
}

}  // namespace

std::vector<AblationRow> evaluate_ablations(
    const DatasetIndex& index, const PreprocCache& cache,
    const std::vector<std::pair<std::string, std::string>>& variant_checkpoints,
    TaskMode task, const VisionConfig& vision) {
    std::vector<AblationRow> rows;
    for (const auto& [variant, path] : variant_checkpoints) {
        FinoNet<float> net;
        ModelConfig cfg = peek_checkpoint_config(path);
        if (cfg.task != task)
            throw ConfigMismatch("checkpoint " + path + " trained for task '" +
                                 to_string(cfg.task) + "', expected '" + to_string(task) + "'");
        if (cfg.modality_string() != variant)
            throw ConfigMismatch("checkpoint " + path + " has modalities '" +
                                 cfg.modality_string() + "', expected '" + variant + "'");
        load_checkpoint(path, net);
        TaskDataset data = build_task_dataset(index, cache, task, net.config, vision);
        rows.push_back({variant, eval_items(net, data, data.test)});
    }
    return rows;
}

MetricsReport confusion_analysis(FinoNet<float>& net, const DatasetIndex& index,
                                 const PreprocCache& cache, TaskMode task,
                                 const VisionConfig& vision) {
    if (task == TaskMode::detection)
        throw ConfigError("confusion analysis requires a classification task");
    TaskDataset data = build_task_dataset(index, cache, task, net.config, vision);
    return eval_items(net, data, data.test);
}

std::vector<CurvePoint> completion_rate_analysis(FinoNet<float>& net,
                                                 const std::vector<Episode>& episodes,
                                                 const VisionConfig& vision,
                                                 const AudioFrontEndConfig& audio,
                                                 TaskMode task,
                                                 const std::vector<double>& fractions) {
    std::vector<CurvePoint> curve;
    for (double rho : fractions) {
        CurvePoint point;
        point.x = rho;
        VisionConfig vc = vision;
        vc.policy.completion_fraction = rho;
        std::vector<PreprocessedEpisode> preprocessed;
        try {
            for (const auto& ep : episodes) {
                Episode clipped = ep;
                clipped.audio = truncate_waveform(ep.audio, ep.frame_timestamps.back(), rho,
                                                  audio.sample_rate);
                preprocessed.push_back(preprocess_one(clipped, vc, audio));
            }
        } catch (const InsufficientFrames&) {
            curve.push_back(point);
            continue;
        } catch (const DegeneratePhase&) {
            curve.push_back(point);
            continue;
        }
        TaskDataset data = shell_dataset(net.config, vc, task);
        std::vector<TaskItem> items;
        for (const auto& pe : preprocessed) {
            int label = task_label_index(pe.label, task);
            if (label >= 0) items.push_back({&pe, label});
        }
        if (items.empty()) throw EmptyDataset("no episodes usable for completion analysis");
        point.valid = true;
        point.metrics = eval_items(net, data, items);
        curve.push_back(point);
    }
    return curve;
}

ResampleSummary resampling_variance(FinoNet<float>& net,
                                    const std::vector<Episode>& episodes,
                                    const VisionConfig& vision,
                                    const AudioFrontEndConfig& audio, TaskMode task,
                                    int n_resamples, uint64_t seed) {
    if (n_resamples < 1) throw ConfigError("n_resamples must be >= 1");
    // Audio features do not depend on the frame sampling; compute once.
    std::vector<TensorT<double>> mfccs;
    mfccs.reserve(episodes.size());
    for (const auto& ep : episodes) mfccs.push_back(audio_features(ep.audio, audio).data);

    ResampleSummary summary;
    summary.n_resamples = n_resamples;
    std::vector<double> ps, rs, fs;
    for (int r = 0; r < n_resamples; ++r) {
        std::vector<PreprocessedEpisode> preprocessed;
        for (size_t i = 0; i < episodes.size(); ++i) {
            VisionConfig vc = vision;
            vc.policy.sample_seed = split_seed(seed, static_cast<uint64_t>(r) * episodes.size() + i);
            PreprocessedEpisode pe;
            pe.id = episodes[i].id;
            pe.action = episodes[i].action;
            pe.label = episodes[i].label;
            pe.visual4 = preprocess_visual(episodes[i], vc).data;
            pe.mfcc = mfccs[i];
            preprocessed.push_back(std::move(pe));
        }
        TaskDataset data = shell_dataset(net.config, vision, task);
        std::vector<TaskItem> items;
        for (const auto& pe : preprocessed) {
            int label = task_label_index(pe.label, task);
            if (label >= 0) items.push_back({&pe, label});
        }
        if (items.empty()) throw EmptyDataset("no episodes usable for variance analysis");
        MetricsReport m = eval_items(net, data, items);
        ps.push_back(m.macro_precision);
        rs.push_back(m.macro_recall);
        fs.push_back(m.macro_f1);
        summary.per_resample.push_back(std::move(m));
    }
    summary.precision_mean = mean_of(ps);
    summary.precision_std = std_of(ps, summary.precision_mean);
    summary.recall_mean = mean_of(rs);
    summary.recall_std = std_of(rs, summary.recall_mean);
    summary.f1_mean = mean_of(fs);
    summary.f1_std = std_of(fs, summary.f1_mean);
    return summary;
}

std::vector<OnDemandVerdict> predict_on_demand(FinoNet<float>& detection_net,
                                               FinoNet<float>* classifier_net,
                                               const std::vector<Episode>& segments,
                                               const VisionConfig& vision,
                                               const AudioFrontEndConfig& audio) {
    if (detection_net.config.task != TaskMode::detection)
        throw ConfigMismatch("first-stage checkpoint is not a detection model");
    if (classifier_net && classifier_net->config.task != TaskMode::cascaded_classification)
        throw ConfigMismatch("second-stage checkpoint is not a cascaded classifier");

    TaskDataset det_data = shell_dataset(detection_net.config, vision, TaskMode::detection);
    TaskDataset cls_data;
    if (classifier_net)
        cls_data = shell_dataset(classifier_net->config, vision,
                                 TaskMode::cascaded_classification);

    std::vector<OnDemandVerdict> verdicts;
    for (const auto& segment : segments) {
        auto t0 = std::chrono::steady_clock::now();
        PreprocessedEpisode pe = preprocess_one(segment, vision, audio);
        OnDemandVerdict v;
        v.id = segment.id;
        v.detection_scores = predict_scores(detection_net, det_data, pe);
        bool failed = v.detection_scores[1] > v.detection_scores[0];
        v.detection = failed ? DetectionLabel::fail : DetectionLabel::success;
        if (failed && classifier_net) {
            v.classifier_invoked = true;
            v.class_scores = predict_scores(*classifier_net, cls_data, pe);
            int best = static_cast<int>(std::max_element(v.class_scores.begin(),
                                                         v.class_scores.end()) -
                                        v.class_scores.begin());
            v.classification = kFailureLabels[best];
        }
        auto t1 = std::chrono::steady_clock::now();
        v.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace fino
