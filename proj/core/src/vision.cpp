#include "fino/vision.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgproc.hpp>

#include "fino/errors.hpp"
#include "fino/rng.hpp"

namespace fino {

namespace {

double occluded_fraction(const cv::Mat& depth, double near_mm) {
    int count = 0;
    for (int r = 0; r < depth.rows; ++r) {
        const uint16_t* row = depth.ptr<uint16_t>(r);
        for (int c = 0; c < depth.cols; ++c)
            if (double(row[c]) < near_mm) ++count;
    }
    return double(count) / (double(depth.rows) * depth.cols);
}

// 4 positions over [begin, end) with endpoints included
std::array<int, 4> even_positions(int begin, int end) {
    int a = begin, b = end - 1;
    std::array<int, 4> out{};
    for (int k = 0; k < 4; ++k)
        out[size_t(k)] = int(std::lround(a + k * double(b - a) / 3.0));
    return out;
}

std::array<int, 4> random_positions(int begin, int end, Rng& rng) {
    int n = end - begin;
    std::array<int, 4> out{};
    if (n >= 4) {
        // uniform without replacement
        std::vector<int> pool(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) pool[size_t(i)] = begin + i;
        for (int k = 0; k < 4; ++k) {
            int j = int(rng.uniform_int(k, n - 1));
            std::swap(pool[size_t(k)], pool[size_t(j)]);
        }
        std::sort(pool.begin(), pool.begin() + 4);
        for (int k = 0; k < 4; ++k) out[size_t(k)] = pool[size_t(k)];
    } else {
        for (int k = 0; k < 4; ++k) out[size_t(k)] = begin + int(rng.uniform_int(0, n - 1));
        std::sort(out.begin(), out.end());
    }
    return out;
}

// HSV round trip for the hue shift; all components in [0,1]
void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
    float mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    float d = mx - mn;
    s = mx > 0 ? d / mx : 0.0f;
    if (d <= 0) {
        h = 0;
        return;
    }
    if (mx == r)
        h = (g - b) / d + (g < b ? 6.0f : 0.0f);
    else if (mx == g)
        h = (b - r) / d + 2.0f;
    else
        h = (r - g) / d + 4.0f;
    h /= 6.0f;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
    h = h - std::floor(h);
    float i = std::floor(h * 6.0f);
    float f = h * 6.0f - i;
    float p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
    switch (int(i) % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

}  // namespace

std::vector<int> filter_self_occluded(const std::vector<cv::Mat>& depth_frames,
                                      const SamplingPolicy& policy) {
    if (depth_frames.empty()) throw InsufficientFrames("no depth frames");
    std::vector<double> frac(depth_frames.size());
    for (size_t i = 0; i < depth_frames.size(); ++i)
        frac[i] = occluded_fraction(depth_frames[i], policy.occlusion_near_mm);

    double ratio = policy.occlusion_ratio;
    for (int attempt = 0; attempt <= 5; ++attempt) {
        std::vector<int> retained;
        for (size_t i = 0; i < frac.size(); ++i)
            if (frac[i] <= ratio) retained.push_back(int(i));
        if (retained.size() >= 8) return retained;
        ratio *= 1.25;
    }
    throw InsufficientFrames("fewer than 8 frames retained after threshold relaxation");
}

PhaseRanges segment_phases_positional(int n_retained) {
    PhaseRanges r;
    r.approach_begin = 0;
    r.approach_end = int(std::lround(0.4 * n_retained));
    r.manipulate_begin = r.approach_end;
    r.manipulate_end = int(std::lround(0.6 * n_retained));
    r.retreat_begin = r.manipulate_end;
    r.retreat_end = n_retained;
    if (r.approach_end <= r.approach_begin || r.manipulate_end <= r.manipulate_begin ||
        r.retreat_end <= r.retreat_begin)
        throw DegeneratePhase("positional segmentation produced an empty phase");
    return r;
}

PhaseRanges segment_phases(const Episode& episode, const std::vector<int>& retained) {
    if (!episode.has_phase_annotation)
        return segment_phases_positional(int(retained.size()));

    const auto& p = episode.phases;
    PhaseRanges r;
    int pos = 0;
    const int n = int(retained.size());
    auto ts = [&](int idx) { return episode.frame_timestamps[size_t(retained[size_t(idx)])]; };
    r.approach_begin = 0;
    while (pos < n && ts(pos) < p.t1) ++pos;
    r.approach_end = pos;
    r.manipulate_begin = pos;
    while (pos < n && ts(pos) < p.t2) ++pos;
    r.manipulate_end = pos;
    r.retreat_begin = pos;
    r.retreat_end = n;
    if (r.approach_end <= r.approach_begin || r.manipulate_end <= r.manipulate_begin ||
        r.retreat_end <= r.retreat_begin)
        throw DegeneratePhase("annotated phase maps to an empty frame range in episode " +
                              episode.id);
    return r;
}

std::array<int, 8> sample_frames(const std::vector<int>& retained, const PhaseRanges& ranges,
                                 const SamplingPolicy& policy) {
    if (ranges.approach_end <= ranges.approach_begin ||
        ranges.retreat_end <= ranges.retreat_begin)
        throw InsufficientFrames("approach/retreat phase has no retained frames");

    std::array<int, 4> a_pos, r_pos;
    if (policy.mode == SamplingMode::even) {
        a_pos = even_positions(ranges.approach_begin, ranges.approach_end);
        r_pos = even_positions(ranges.retreat_begin, ranges.retreat_end);
    } else {
        Rng rng(policy.sample_seed);
        a_pos = random_positions(ranges.approach_begin, ranges.approach_end, rng);
        r_pos = random_positions(ranges.retreat_begin, ranges.retreat_end, rng);
    }
    std::array<int, 8> out{};
    for (int k = 0; k < 4; ++k) {
        out[size_t(k)] = retained[size_t(a_pos[size_t(k)])];
        out[size_t(k) + 4] = retained[size_t(r_pos[size_t(k)])];
    }
    return out;
}

std::vector<int> truncate_by_completion(const std::vector<int>& retained,
                                        const std::vector<double>& timestamps, double rho) {
    if (rho >= 1.0) return retained;
    double cutoff = rho * (timestamps.empty() ? 0.0 : timestamps.back());
    std::vector<int> out;
    for (int idx : retained)
        if (timestamps[size_t(idx)] <= cutoff) out.push_back(idx);
    return out;
}

VisualTensor build_visual_tensor(const Episode& episode, const std::array<int, 8>& indices,
                                 const VisionConfig& config) {
    const int sz = config.size;
    VisualTensor out;
    out.data = Tensor({8, sz, sz, 4});
    out.sampled_indices = indices;

    for (int t = 0; t < 8; ++t) {
        int idx = indices[size_t(t)];
        if (idx < 0 || size_t(idx) >= episode.rgb_frames.size())
            throw ShapeError("sampled frame index out of range");
        cv::Mat rgb, depth;
        cv::resize(episode.rgb_frames[size_t(idx)], rgb, cv::Size(sz, sz), 0, 0,
                   cv::INTER_LINEAR);
        cv::resize(episode.depth_frames[size_t(idx)], depth, cv::Size(sz, sz), 0, 0,
                   cv::INTER_LINEAR);
        for (int y = 0; y < sz; ++y) {
            const cv::Vec3b* rgb_row = rgb.ptr<cv::Vec3b>(y);
            const uint16_t* d_row = depth.ptr<uint16_t>(y);
            for (int x = 0; x < sz; ++x) {
                // OpenCV loads BGR
                out.data.at4(t, y, x, 0) = rgb_row[x][2] / 255.0f;
                out.data.at4(t, y, x, 1) = rgb_row[x][1] / 255.0f;
                out.data.at4(t, y, x, 2) = rgb_row[x][0] / 255.0f;
                double d = std::clamp(double(d_row[x]), 0.0, config.d_max_mm);
                out.data.at4(t, y, x, 3) = float(d / config.d_max_mm);
            }
        }
    }
    for (size_t i = 0; i < out.data.size(); ++i)
        if (!std::isfinite(out.data[i]))
            throw NumericalError("non-finite pixel after normalization");
    return out;
}

VisualTensor augment(const VisualTensor& in, uint64_t seed, const VisionConfig& config) {
    Rng rng(seed);
    VisualTensor out = in;
    const int sz = in.data.dim(1);

    if (rng.bernoulli(0.2)) {
        float brightness = float(rng.uniform(0.8, 1.2));
        float contrast = float(rng.uniform(0.8, 1.2));
        float saturation = float(rng.uniform(0.8, 1.2));
        float hue_shift = float(rng.uniform(-0.05, 0.05));

        // sequence-wide mean luma anchors the contrast transform so every
        // time step gets the identical mapping
        double mean_luma = 0.0;
        for (int t = 0; t < 8; ++t)
            for (int y = 0; y < sz; ++y)
                for (int x = 0; x < sz; ++x)
                    mean_luma += 0.299 * in.data.at4(t, y, x, 0) +
                                 0.587 * in.data.at4(t, y, x, 1) +
                                 0.114 * in.data.at4(t, y, x, 2);
        mean_luma /= 8.0 * sz * sz;

        for (int t = 0; t < 8; ++t)
            for (int y = 0; y < sz; ++y)
                for (int x = 0; x < sz; ++x) {
                    float r = out.data.at4(t, y, x, 0);
                    float g = out.data.at4(t, y, x, 1);
                    float b = out.data.at4(t, y, x, 2);
                    r *= brightness;
                    g *= brightness;
                    b *= brightness;
                    r = contrast * r + (1 - contrast) * float(mean_luma);
                    g = contrast * g + (1 - contrast) * float(mean_luma);
                    b = contrast * b + (1 - contrast) * float(mean_luma);
                    float luma = 0.299f * r + 0.587f * g + 0.114f * b;
                    r = saturation * r + (1 - saturation) * luma;
                    g = saturation * g + (1 - saturation) * luma;
                    b = saturation * b + (1 - saturation) * luma;
                    float h, s, v;
                    rgb_to_hsv(std::clamp(r, 0.0f, 1.0f), std::clamp(g, 0.0f, 1.0f),
                               std::clamp(b, 0.0f, 1.0f), h, s, v);
                    hsv_to_rgb(h + hue_shift, s, v, r, g, b);
                    out.data.at4(t, y, x, 0) = std::clamp(r, 0.0f, 1.0f);
                    out.data.at4(t, y, x, 1) = std::clamp(g, 0.0f, 1.0f);
                    out.data.at4(t, y, x, 2) = std::clamp(b, 0.0f, 1.0f);
                }
    }

    if (rng.bernoulli(0.5)) {
        Tensor flipped = out.data;
        for (int t = 0; t < 8; ++t)
            for (int y = 0; y < sz; ++y)
                for (int x = 0; x < sz; ++x)
                    for (int c = 0; c < 4; ++c) {
                        int sy = config.flip_axis == FlipAxis::top_bottom ? sz - 1 - y : y;
                        int sx = config.flip_axis == FlipAxis::left_right ? sz - 1 - x : x;
                        flipped.at4(t, y, x, c) = out.data.at4(t, sy, sx, c);
                    }
        out.data = std::move(flipped);
    }
    return out;
}

VisualTensor preprocess_visual(const Episode& episode, const VisionConfig& config) {
    std::vector<int> retained = filter_self_occluded(episode.depth_frames, config.policy);
    const double rho = config.policy.completion_fraction;
    PhaseRanges ranges;
    if (rho < 1.0) {
        retained = truncate_by_completion(retained, episode.frame_timestamps, rho);
        if (retained.empty()) throw InsufficientFrames("completion fraction leaves no frames");
        // a truncated sequence is an execution still in progress: annotated
        // boundaries no longer apply, so split positionally
        ranges = segment_phases_positional(int(retained.size()));
    } else {
        ranges = segment_phases(episode, retained);
    }
    auto indices = sample_frames(retained, ranges, config.policy);
    return build_visual_tensor(episode, indices, config);
}

}  // namespace fino
