#pragma once

#include <string>
#include <vector>

#include "fino/evaluation.hpp"
#include "fino/metrics.hpp"

namespace fino {

// Row-normalized confusion heatmap with per-cell counts.
void write_confusion_heatmap(const MetricsReport& report, const std::string& path);

// Macro-F1 (and optionally precision/recall) versus completion fraction.
// Invalid points are skipped.
void write_completion_curve(const std::vector<CurvePoint>& curve, const std::string& path);

}  // namespace fino
