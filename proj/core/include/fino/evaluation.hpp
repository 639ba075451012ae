#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fino/metrics.hpp"
#include "fino/training.hpp"

namespace fino {

struct AblationRow {
    std::string variant;  // e.g. "rgb,d,a"
    MetricsReport metrics;
};

// Test-split metrics for each modality variant. Checkpoint configs must
// match the requested task; ConfigMismatch otherwise. All variants share the
// preprocessing cache and split assignment.
std::vector<AblationRow> evaluate_ablations(
    const DatasetIndex& index, const PreprocCache& cache,
    const std::vector<std::pair<std::string, std::string>>& variant_checkpoints,
    TaskMode task, const VisionConfig& vision);

// Confusion matrix over the test split; 6x6 in standalone mode, 5x5 (success
// omitted) in cascaded mode.
MetricsReport confusion_analysis(FinoNet<float>& net, const DatasetIndex& index,
                                 const PreprocCache& cache, TaskMode task,
                                 const VisionConfig& vision);

struct CurvePoint {
    double x = 0;
    bool valid = false;  // false: preprocessing failed at this fraction
    MetricsReport metrics;
};

// Re-preprocesses the given episodes at each completion fraction rho (both
// frame stream and waveform truncated to the first rho of the execution) and
// evaluates the model. Unsampleable fractions become invalid points.
std::vector<CurvePoint> completion_rate_analysis(FinoNet<float>& net,
                                                 const std::vector<Episode>& episodes,
                                                 const VisionConfig& vision,
                                                 const AudioFrontEndConfig& audio,
                                                 TaskMode task,
                                                 const std::vector<double>& fractions);

struct ResampleSummary {
    int n_resamples = 0;
    double precision_mean = 0, precision_std = 0;
    double recall_mean = 0, recall_std = 0;
    double f1_mean = 0, f1_std = 0;
    std::vector<MetricsReport> per_resample;
};

// Repeats evaluation under independent stochastic frame samplings (uniform
// within phase, without replacement) and reports mean and standard deviation
// of the macro scores. With SamplingMode::even every resample is identical
// and the standard deviation is exactly zero.
ResampleSummary resampling_variance(FinoNet<float>& net,
                                    const std::vector<Episode>& episodes,
                                    const VisionConfig& vision,
                                    const AudioFrontEndConfig& audio, TaskMode task,
                                    int n_resamples, uint64_t seed);

struct OnDemandVerdict {
    std::string id;
    DetectionLabel detection = DetectionLabel::success;
    Label classification = Label::success;
    bool classifier_invoked = false;
    std::vector<double> detection_scores;
    std::vector<double> class_scores;
    double latency_ms = 0;  // preprocessing + forward, disk reads excluded
};

// Per-manipulation verdicts for a segmented stream. The failure classifier
// is invoked only when detection says fail (cascaded gating).
std::vector<OnDemandVerdict> predict_on_demand(FinoNet<float>& detection_net,
                                               FinoNet<float>* classifier_net,
                                               const std::vector<Episode>& segments,
                                               const VisionConfig& vision,
                                               const AudioFrontEndConfig& audio);

}  // namespace fino
