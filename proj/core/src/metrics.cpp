#include "fino/metrics.hpp"

namespace fino {

MetricsReport compute_metrics(const std::vector<int>& true_labels,
                              const std::vector<int>& predicted_labels,
                              const std::vector<std::string>& class_names) {
    if (true_labels.size() != predicted_labels.size())
        throw SchemaViolation("label sequences have different lengths");
    const int k = int(class_names.size());

    MetricsReport r;
    r.class_names = class_names;
    r.confusion.assign(size_t(k), std::vector<int>(size_t(k), 0));
    for (size_t i = 0; i < true_labels.size(); ++i) {
        int t = true_labels[i], p = predicted_labels[i];
        if (t < 0 || t >= k || p < 0 || p >= k)
            throw SchemaViolation("label outside class set at position " + std::to_string(i));
        ++r.confusion[size_t(t)][size_t(p)];
    }

    r.per_class.resize(size_t(k));
    int scored = 0, correct = 0;
    for (int c = 0; c < k; ++c) {
        int tp = r.confusion[size_t(c)][size_t(c)];
        int fp = 0, fn = 0;
        for (int o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += r.confusion[size_t(o)][size_t(c)];
            fn += r.confusion[size_t(c)][size_t(o)];
        }
        ClassScore& s = r.per_class[size_t(c)];
        s.support = tp + fn;
        s.precision = (tp + fp) > 0 ? double(tp) / (tp + fp) : 0.0;
        s.recall = (tp + fn) > 0 ? double(tp) / (tp + fn) : 0.0;
        s.f1 = (s.precision + s.recall) > 0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
        correct += tp;
        // zero-support classes are excluded from the macro average
        if (s.support > 0) {
            r.macro_precision += s.precision;
            r.macro_recall += s.recall;
            r.macro_f1 += s.f1;
            ++scored;
        }
    }
    if (scored > 0) {
        r.macro_precision /= scored;
        r.macro_recall /= scored;
        r.macro_f1 /= scored;
    }
    if (!true_labels.empty()) r.micro_f1 = double(correct) / double(true_labels.size());
    return r;
}

std::string confusion_csv(const MetricsReport& report) {
    std::string out = "true\\pred";
    for (const auto& n : report.class_names) out += "," + n;
    out += "\n";
    for (size_t i = 0; i < report.confusion.size(); ++i) {
        out += report.class_names[i];
        for (int v : report.confusion[i]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

}  // namespace fino
