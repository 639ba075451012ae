#include "fino/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <opencv2/imgproc.hpp>

#include <json.hpp>

#include "fino/dataset.hpp"
#include "fino/errors.hpp"
#include "fino/rng.hpp"
#include "fino/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fino {

namespace {

constexpr double kPi = std::numbers::pi;

// Scene depths in millimeters; everything stays beyond the default
// self-occlusion threshold so the synthetic frames are always clean.
constexpr uint16_t kBackgroundDepth = 2500;
constexpr uint16_t kTableDepth = 1300;
constexpr uint16_t kObjectDepth = 900;
constexpr uint16_t kGripperDepth = 600;
constexpr uint16_t kStripDepth = 1100;

struct SceneGeometry {
    int size;
    int table_top;    // first table row
    int strip_top;    // first row of the object-free front strip
    cv::Scalar object_color;     // BGR
    cv::Scalar second_color;
    int object_x, object_y;      // object center
    int second_x, second_y;
};

double phase_pos(double t, double a, double b) {
    // 0 before a, 1 after b, linear in between
    if (t <= a) return 0.0;
    if (t >= b) return 1.0;
    return (t - a) / (b - a);
}

void draw_box(cv::Mat& rgb, cv::Mat& depth, int cx, int cy, int half_w, int half_h,
              const cv::Scalar& color, uint16_t d) {
    cv::rectangle(rgb, {cx - half_w, cy - half_h}, {cx + half_w, cy + half_h}, color,
                  cv::FILLED);
    cv::rectangle(depth, {cx - half_w, cy - half_h}, {cx + half_w, cy + half_h},
                  cv::Scalar(d), cv::FILLED);
}

struct CueFlags {
    bool vision = false;
    bool audio = false;
};

// Renders one frame at time t.
void render_frame(const ScenarioSpec& spec, const SceneGeometry& geo, double t,
                  double cue_onset_t, const CueFlags& cue, Rng& pixel_rng, cv::Mat& rgb,
                  cv::Mat& depth) {
    const int s = geo.size;
    const double dur = spec.duration_s;
    const double t1 = 0.4 * dur, t2 = 0.6 * dur;
    rgb = cv::Mat(s, s, CV_8UC3, cv::Scalar(70, 55, 45));  // backdrop
    depth = cv::Mat(s, s, CV_16UC1, cv::Scalar(kBackgroundDepth));
    // table plane and the object-free front strip
    cv::rectangle(rgb, {0, geo.table_top}, {s - 1, s - 1}, cv::Scalar(60, 95, 135),
                  cv::FILLED);
    cv::rectangle(depth, {0, geo.table_top}, {s - 1, s - 1}, cv::Scalar(kTableDepth),
                  cv::FILLED);
    cv::rectangle(rgb, {0, geo.strip_top}, {s - 1, s - 1}, cv::Scalar(55, 88, 125),
                  cv::FILLED);
    cv::rectangle(depth, {0, geo.strip_top}, {s - 1, s - 1}, cv::Scalar(kStripDepth),
                  cv::FILLED);

    const bool vision_fail = cue.vision && t >= cue_onset_t;
    const int unit = s / 16;  // object half-size scale

    // manipulated object and (per action) secondary props
    int ox = geo.object_x, oy = geo.object_y;
    bool object_rotated = false;
    switch (spec.action) {
        case ActionName::push: {
            double m = phase_pos(t, t1, t2);
            bool moves = !(cue.vision && (spec.label == Label::miss ||
                                          spec.label == Label::overturn));
            if (moves) ox += int(m * 2.5 * unit);
            if (vision_fail && spec.label == Label::overturn) object_rotated = true;
            break;
        }
        case ActionName::pick_place: {
            double m = phase_pos(t, t1, t2);
            bool moves = !(cue.vision && spec.label == Label::miss);
            if (moves) {
                ox += int(m * 2.0 * unit);
                oy -= int(std::sin(m * kPi) * 1.5 * unit);
            }
            if (vision_fail && spec.label == Label::overturn) object_rotated = true;
            break;
        }
        case ActionName::pour: {
            // target cup plus a held source container that tilts
            draw_box(rgb, depth, geo.second_x, geo.second_y, unit, unit + 2,
                     geo.second_color, kObjectDepth);
            double m = phase_pos(t, t1, t2);
            oy = geo.object_y - 3 * unit;  // held above the cup
            ox = geo.object_x + int((1.0 - m) * unit);
            if (m > 0 && m < 1) {
                // pouring stream between containers
                cv::line(rgb, {ox, oy + unit}, {geo.second_x, geo.second_y - unit},
                         cv::Scalar(200, 220, 230), 1);
            }
            break;
        }
        case ActionName::put_in_container: {
            draw_box(rgb, depth, geo.second_x, geo.second_y, unit + 3, unit + 2,
                     geo.second_color, kObjectDepth);
            double m = phase_pos(t, t1, t2);
            bool moves = !(cue.vision && spec.label == Label::miss);
            if (moves) {
                ox = geo.object_x + int(m * (geo.second_x - geo.object_x));
                oy = geo.object_y - int(std::sin(m * kPi) * 1.5 * unit);
            }
            break;
        }
        case ActionName::stack: {
            draw_box(rgb, depth, geo.second_x, geo.second_y, unit, unit, geo.second_color,
                     kObjectDepth);
            double m = phase_pos(t, t1, t2);
            bool moves = !(cue.vision && spec.label == Label::miss);
            if (moves) {
                ox = geo.object_x + int(m * (geo.second_x - geo.object_x));
                oy = geo.object_y - int(std::sin(m * kPi) * unit) -
                     int(m * 2 * unit * 0.9);
            }
            if (vision_fail && spec.label == Label::overturn) object_rotated = true;
            break;
        }
    }
    // collision shoves the secondary prop sideways
    if (vision_fail && spec.label == Label::collision && spec.action != ActionName::pour) {
        if (spec.action == ActionName::put_in_container || spec.action == ActionName::stack)
            draw_box(rgb, depth, geo.second_x + 2 * unit, geo.second_y, unit, unit,
                     geo.second_color, kObjectDepth);
    }
    if (object_rotated)
        draw_box(rgb, depth, ox, oy + unit / 2, unit + unit / 2, unit / 2,
                 geo.object_color, kObjectDepth);
    else
        draw_box(rgb, depth, ox, oy, unit, unit, geo.object_color, kObjectDepth);

    // gripper proxy: descends during approach, retreats after manipulation
    double approach = phase_pos(t, 0.0, t1);
    double retreat = phase_pos(t, t2, dur);
    int gx = ox;
    if (cue.vision && spec.label == Label::miss) gx += 2 * unit;  // misaligned
    int gy = int(-2 * unit + (approach - retreat) * (oy - unit));
    draw_box(rgb, depth, gx, std::max(gy, -2 * unit), unit / 2, 2 * unit,
             cv::Scalar(160, 160, 160), kGripperDepth);

    // class-specific table disturbance, painted into the front strip
    if (vision_fail) {
        Rng cue_rng(split_seed(spec.seed, 77));  // static pattern per episode
        int strip_mid = (geo.strip_top + s - 1) / 2;
        switch (spec.label) {
            case Label::spill:  // scattered red droplets
                for (int i = 0; i < 22; ++i) {
                    int px = int(cue_rng.uniform_int(4, s - 5));
                    int py = int(cue_rng.uniform_int(geo.strip_top + 1, s - 2));
                    cv::circle(rgb, {px, py}, std::max(1, unit / 4),
                               cv::Scalar(40, 40, 220), cv::FILLED);
                    cv::circle(depth, {px, py}, std::max(1, unit / 4),
                               cv::Scalar(kStripDepth - 15), cv::FILLED);
                }
                break;
            case Label::overflow:  // connected pool
                cv::rectangle(rgb, {geo.second_x - 3 * unit, geo.strip_top + 1},
                              {geo.second_x + 3 * unit, s - 2}, cv::Scalar(190, 120, 40),
                              cv::FILLED);
                cv::rectangle(depth, {geo.second_x - 3 * unit, geo.strip_top + 1},
                              {geo.second_x + 3 * unit, s - 2}, cv::Scalar(kStripDepth - 10),
                              cv::FILLED);
                break;
            case Label::miss:  // skid streak beside the object
                cv::line(rgb, {ox - 2 * unit, strip_mid}, {ox + 3 * unit, strip_mid},
                         cv::Scalar(20, 20, 20), std::max(2, unit / 2));
                break;
            case Label::overturn:  // the toppled object lies across the strip
                cv::line(rgb, {ox - 2 * unit, geo.strip_top + unit / 2},
                         {ox + 2 * unit, geo.strip_top + unit / 2}, geo.object_color,
                         std::max(2, unit / 2));
                break;
            case Label::collision:  // debris shoved off the workspace
                draw_box(rgb, depth, ox + 2 * unit, strip_mid, unit, unit,
                         geo.second_color, uint16_t(kStripDepth - 20));
                break;
            case Label::success: break;
        }
    }

    // sensor noise
    if (spec.pixel_noise_sigma > 0) {
        for (int y = 0; y < s; ++y) {
            auto* row = rgb.ptr<cv::Vec3b>(y);
            for (int x = 0; x < s; ++x)
                for (int c = 0; c < 3; ++c) {
                    double v = row[x][c] + pixel_rng.normal(0, spec.pixel_noise_sigma);
                    row[x][c] = uint8_t(std::clamp(v, 0.0, 255.0));
                }
        }
    }
}

std::vector<float> synth_audio(const ScenarioSpec& spec, double cue_onset_t,
                               const CueFlags& cue, Rng& rng) {
    const int sr = 16000;
    const int n = int(spec.duration_s * sr);
    const double t1 = 0.4 * spec.duration_s, t2 = 0.6 * spec.duration_s;
    std::vector<float> audio(static_cast<size_t>(n));

    // ego-noise: servo hum plus low-level wideband noise
    for (int i = 0; i < n; ++i) {
        double t = double(i) / sr;
        audio[size_t(i)] = float(0.02 * std::sin(2 * kPi * 120.0 * t) +
                                 spec.audio_noise_amp * rng.normal(0, 1));
    }

    auto add_burst = [&](double at, double len_s, double amp, double freq) {
        int start = int(at * sr);
        int len = int(len_s * sr);
        for (int i = 0; i < len && start + i < n; ++i) {
            double env = std::exp(-3.0 * i / len);
            double v = freq > 0 ? std::sin(2 * kPi * freq * i / sr) : rng.normal(0, 1);
            audio[size_t(start + i)] += float(amp * env * v);
        }
    };
    auto add_granular = [&](double from, double to, double amp, bool gappy) {
        int start = int(from * sr), stop = std::min(n, int(to * sr));
        bool on = true;
        int next_toggle = start;
        for (int i = start; i < stop; ++i) {
            if (gappy && i >= next_toggle) {
                on = !on;
                next_toggle = i + int(rng.uniform(0.02, 0.08) * sr);
            }
            if (on) audio[size_t(i)] += float(amp * rng.normal(0, 1));
        }
    };

    // pour actions always carry pouring noise over the manipulate phase
    if (spec.action == ActionName::pour) add_granular(t1, t2, 0.10, false);
    // contact click at manipulate onset for contact actions
    if (spec.action != ActionName::pour &&
        !(cue.audio && spec.label == Label::miss))
        add_burst(t1, 0.01, 0.15, 0);

    if (cue.audio) {
        switch (spec.label) {
            case Label::collision:
                add_burst(cue_onset_t, 0.04, 0.8, 0);  // broadband impulse
                break;
            case Label::overflow:
                add_granular(cue_onset_t, spec.duration_s, 0.30, false);  // sustained
                break;
            case Label::spill:
                add_granular(cue_onset_t, spec.duration_s, 0.25, true);  // scattered
                break;
            case Label::overturn:
                add_burst(cue_onset_t, 0.12, 0.5, 85.0);  // low-frequency thud
                break;
            case Label::miss:  // absence of the contact click, handled above
            case Label::success:
                break;
        }
    }
    for (auto& v : audio) v = std::clamp(v, -1.0f, 1.0f);
    return audio;
}

}  // namespace

void ScenarioSpec::validate() const {
    if (!is_legal_pair(action, label))
        throw SchemaViolation("illegal (action,label) scenario: " + to_string(action) + "/" +
                              to_string(label));
    if (duration_s <= 0.5) throw SchemaViolation("scenario duration too short");
    if (cue_onset_fraction <= 0 || cue_onset_fraction > 1)
        throw SchemaViolation("cue_onset_fraction outside (0,1]");
    if (frame_size < 32) throw SchemaViolation("frame_size too small");
}

Episode generate_episode(const ScenarioSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SceneGeometry geo;
    geo.size = spec.frame_size;
    geo.table_top = spec.frame_size / 2;
    geo.strip_top = spec.frame_size - spec.frame_size / 5;
    const cv::Scalar palette[4] = {{50, 180, 60}, {180, 80, 50}, {40, 160, 200},
                                   {140, 60, 170}};
    geo.object_color = palette[rng.uniform_int(0, 3)];
    geo.second_color = palette[rng.uniform_int(0, 3)];
    int usable_rows = geo.strip_top - geo.table_top;
    geo.object_x = int(rng.uniform_int(geo.size / 4, geo.size / 2));
    geo.object_y = geo.table_top + int(rng.uniform_int(usable_rows / 3, usable_rows - 8));
    geo.second_x = int(rng.uniform_int(geo.size * 5 / 8, geo.size * 7 / 8));
    geo.second_y = geo.object_y;

    CueFlags cue;
    if (spec.label != Label::success) {
        cue.vision = spec.cue_placement != CuePlacement::audio_only;
        cue.audio = spec.cue_placement != CuePlacement::vision_only;
    }
    const double cue_onset_t = spec.cue_onset_fraction * spec.duration_s;

    Episode ep;
    ep.action = spec.action;
    ep.label = spec.label;
    ep.recorder = "synth";

    const int n_frames = int(std::lround(spec.duration_s * spec.fps));
    const double dt = 1.0 / spec.fps;
    Rng pixel_rng(split_seed(spec.seed, 1));
    for (int i = 0; i < n_frames; ++i) {
        double t = i * dt;
        cv::Mat rgb, depth;
        render_frame(spec, geo, t, cue_onset_t, cue, pixel_rng, rgb, depth);
        ep.rgb_frames.push_back(rgb);
        ep.depth_frames.push_back(depth);
        ep.frame_timestamps.push_back(t);
    }
    const double dur = ep.frame_timestamps.back();
    ep.phases = {0.0, 0.4 * spec.duration_s, 0.6 * spec.duration_s, dur};
    // phase boundaries are exact by construction but must still order/cover
    if (ep.phases.t2 > dur) ep.phases.t2 = dur;
    if (ep.phases.t1 > ep.phases.t2) ep.phases.t1 = ep.phases.t2;

    Rng audio_rng(split_seed(spec.seed, 2));
    ep.audio = synth_audio(spec, cue_onset_t, cue, audio_rng);
    return ep;
}

std::vector<BenchmarkCell> default_benchmark_recipe() {
    using A = ActionName;
    using L = Label;
    using P = CuePlacement;
    return {
        {A::push, L::success, 20, P::both},
        {A::pick_place, L::success, 20, P::both},
        {A::pour, L::success, 20, P::both},
        {A::put_in_container, L::success, 20, P::both},
        {A::stack, L::success, 20, P::both},
        {A::push, L::collision, 20, P::audio_only},
        {A::put_in_container, L::collision, 20, P::both},
        {A::pick_place, L::miss, 20, P::vision_only},
        {A::pour, L::overflow, 20, P::audio_only},
        {A::pour, L::spill, 20, P::vision_only},
        {A::push, L::overturn, 20, P::both},
        {A::stack, L::overturn, 20, P::both},
    };
}

void generate_benchmark(const std::vector<BenchmarkCell>& cells, const std::string& out_dir,
                        uint64_t seed) {
    for (const auto& c : cells)
        if (!is_legal_pair(c.action, c.label))
            throw SchemaViolation("illegal benchmark cell: " + to_string(c.action) + "/" +
                                  to_string(c.label));
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create benchmark root: " + out_dir);

    json manifest = json::array();
    uint64_t episode_idx = 0;
    for (const auto& cell : cells) {
        for (int i = 0; i < cell.count; ++i, ++episode_idx) {
            ScenarioSpec spec;
            spec.action = cell.action;
            spec.label = cell.label;
            spec.cue_placement = cell.placement;
            spec.seed = split_seed(seed, episode_idx);
            Rng vr(split_seed(spec.seed, 3));
            // late-onset cues with per-episode variation, mirroring failures
            // whose evidence appears in the second half of the execution
            spec.cue_onset_fraction = vr.uniform(0.55, 0.9);
            spec.pixel_noise_sigma = vr.uniform(1.0, 4.0);
            spec.audio_noise_amp = vr.uniform(0.002, 0.008);

            Episode ep = generate_episode(spec);
            char id[32];
            std::snprintf(id, sizeof(id), "ep%04d", int(episode_idx));
            ep.id = id;
            write_episode((fs::path(out_dir) / id).string(), ep);
            manifest.push_back({{"id", id},
                                {"action", to_string(cell.action)},
                                {"label", to_string(cell.label)},
                                {"cue_placement", to_string(cell.placement)},
                                {"cue_onset_fraction", spec.cue_onset_fraction},
                                {"seed", spec.seed}});
        }
    }
    std::ofstream mf(fs::path(out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw IoError("cannot write manifest.json in " + out_dir);
}

std::vector<Episode> generate_compound_scenario(uint64_t seed) {
    std::vector<ScenarioSpec> specs(3);
    specs[0].action = ActionName::pour;
    specs[0].label = Label::success;
    specs[1].action = ActionName::put_in_container;
    specs[1].label = Label::success;
    specs[2].action = ActionName::push;
    specs[2].label = Label::collision;
    specs[2].cue_placement = CuePlacement::both;

    std::vector<Episode> out;
    for (size_t i = 0; i < specs.size(); ++i) {
        specs[i].seed = split_seed(seed, i);
        Episode ep = generate_episode(specs[i]);
        ep.id = "manipulation" + std::to_string(i);
        out.push_back(std::move(ep));
    }
    return out;
}

}  // namespace fino
