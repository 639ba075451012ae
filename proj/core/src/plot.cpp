#include "fino/plot.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fino/errors.hpp"

namespace fino {

namespace {

void put_label(cv::Mat& img, const std::string& text, cv::Point org, double scale,
               cv::Scalar color) {
    cv::putText(img, text, org, cv::FONT_HERSHEY_SIMPLEX, scale, color, 1, cv::LINE_AA);
}

}  // namespace

void write_confusion_heatmap(const MetricsReport& report, const std::string& path) {
    const int k = static_cast<int>(report.class_names.size());
    if (k == 0 || static_cast<int>(report.confusion.size()) != k)
        throw ShapeError("confusion matrix is empty or inconsistent");
    const int cell = 72, margin = 110;
    cv::Mat img(margin + k * cell + 20, margin + k * cell + 20, CV_8UC3,
                cv::Scalar(255, 255, 255));
    for (int r = 0; r < k; ++r) {
        int row_sum = 0;
        for (int c = 0; c < k; ++c) row_sum += report.confusion[r][c];
        for (int c = 0; c < k; ++c) {
            double frac = row_sum ? double(report.confusion[r][c]) / row_sum : 0.0;
            cv::Rect box(margin + c * cell, margin + r * cell, cell, cell);
            // white at 0 to dark blue at 1
            cv::Scalar fill(255 - 175 * frac, 255 - 215 * frac, 255 - 235 * frac);
            cv::rectangle(img, box, fill, cv::FILLED);
            cv::rectangle(img, box, cv::Scalar(120, 120, 120), 1);
            cv::Scalar text = frac > 0.55 ? cv::Scalar(255, 255, 255) : cv::Scalar(20, 20, 20);
            put_label(img, std::to_string(report.confusion[r][c]),
                      {box.x + cell / 2 - 12, box.y + cell / 2 + 5}, 0.45, text);
        }
    }
    for (int i = 0; i < k; ++i) {
        put_label(img, report.class_names[i], {8, margin + i * cell + cell / 2 + 4}, 0.38,
                  {20, 20, 20});
        put_label(img, report.class_names[i], {margin + i * cell + 4, margin - 10}, 0.38,
                  {20, 20, 20});
    }
    put_label(img, "predicted", {margin + (k * cell) / 2 - 40, 24}, 0.5, {20, 20, 20});
    put_label(img, "true", {8, 24}, 0.5, {20, 20, 20});
    if (!cv::imwrite(path, img)) throw IoError("cannot write " + path);
}

void write_completion_curve(const std::vector<CurvePoint>& curve, const std::string& path) {
    const int w = 640, h = 480, ml = 70, mr = 30, mt = 30, mb = 60;
    cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
    cv::Rect plot(ml, mt, w - ml - mr, h - mt - mb);
    cv::rectangle(img, plot, cv::Scalar(80, 80, 80), 1);
    auto px = [&](double x) { return plot.x + int(x * plot.width); };
    auto py = [&](double y) { return plot.y + plot.height - int(y * plot.height); };
    for (int i = 0; i <= 4; ++i) {
        double v = i / 4.0;
        cv::line(img, {px(v), plot.y + plot.height}, {px(v), plot.y + plot.height + 5},
                 {80, 80, 80}, 1);
        put_label(img, cv::format("%.2f", v), {px(v) - 16, plot.y + plot.height + 22}, 0.4,
                  {20, 20, 20});
        cv::line(img, {plot.x - 5, py(v)}, {plot.x, py(v)}, {80, 80, 80}, 1);
        put_label(img, cv::format("%.2f", v), {plot.x - 50, py(v) + 5}, 0.4, {20, 20, 20});
    }
    put_label(img, "completion fraction", {plot.x + plot.width / 2 - 70, h - 18}, 0.45,
              {20, 20, 20});
    put_label(img, "macro F1", {8, 20}, 0.45, {20, 20, 20});
    std::vector<cv::Point> pts;
    for (const auto& p : curve)
        if (p.valid) pts.emplace_back(px(p.x), py(p.metrics.macro_f1));
    for (size_t i = 1; i < pts.size(); ++i)
        cv::line(img, pts[i - 1], pts[i], cv::Scalar(180, 90, 30), 2, cv::LINE_AA);
    for (const auto& p : pts) cv::circle(img, p, 4, cv::Scalar(180, 90, 30), cv::FILLED);
    if (!cv::imwrite(path, img)) throw IoError("cannot write " + path);
}

}  // namespace fino
