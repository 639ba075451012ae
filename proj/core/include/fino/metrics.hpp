#pragma once

#include <string>
#include <vector>

#include "fino/errors.hpp"

namespace fino {

struct ClassScore {
    double precision = 0, recall = 0, f1 = 0;
    int support = 0;
};

struct MetricsReport {
    std::vector<std::string> class_names;
    std::vector<ClassScore> per_class;
    std::vector<std::vector<int>> confusion;  // rows = true, cols = predicted
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    double micro_f1 = 0;  // == accuracy for single-label classification
};

// Per-class precision/recall/F1 (0 when denominators are 0) plus macro
// averages over classes with nonzero support. Labels are class indices into
// class_names; anything out of range raises SchemaViolation.
MetricsReport compute_metrics(const std::vector<int>& true_labels,
                              const std::vector<int>& predicted_labels,
                              const std::vector<std::string>& class_names);

std::string confusion_csv(const MetricsReport& report);

}  // namespace fino
