#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fino/episode.hpp"

namespace fino {

enum class CuePlacement { vision_only, audio_only, both };

inline std::string to_string(CuePlacement p) {
    switch (p) {
        case CuePlacement::vision_only: return "vision_only";
        case CuePlacement::audio_only: return "audio_only";
        case CuePlacement::both: return "both";
    }
    return "?";
}

// One procedural episode recipe. The cue placement controls which modality
// carries the failure signature: with vision_only the audio track is
// synthesized exactly as for a success episode, and vice versa.
struct ScenarioSpec {
    ActionName action = ActionName::push;
    Label label = Label::success;
    double duration_s = 5.0;
    CuePlacement cue_placement = CuePlacement::both;
    double cue_onset_fraction = 0.55;  // fraction of the duration
    double pixel_noise_sigma = 2.0;    // 8-bit counts
    double audio_noise_amp = 0.004;
    uint64_t seed = 0;
    int frame_size = 128;
    double fps = 10.0;

    void validate() const;
};

// Renders the tabletop scene (table plane, colored rigid shapes, gripper
// proxy) with geometry-consistent depth and synthesizes the audio track.
// Phase annotations are exact by construction. Deterministic per (spec).
Episode generate_episode(const ScenarioSpec& spec);

struct BenchmarkCell {
    ActionName action;
    Label label;
    int count;
    CuePlacement placement;
};

// 12 populated (action,label) cells x 20 episodes = 240, cues split across
// modalities so that fusing them is strictly more informative than either
// branch alone.
std::vector<BenchmarkCell> default_benchmark_recipe();

// Writes a dataset root in the standard on-disk episode format plus a
// manifest.json with per-episode ground truth and cue metadata.
void generate_benchmark(const std::vector<BenchmarkCell>& cells, const std::string& out_dir,
                        uint64_t seed);

// Compound multi-action scenario: a successful pour, a successful
// put-in-container and a failed (collision) push, as per-manipulation
// segments.
std::vector<Episode> generate_compound_scenario(uint64_t seed);

}  // namespace fino
