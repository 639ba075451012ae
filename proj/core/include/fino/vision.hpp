#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fino/episode.hpp"
#include "fino/tensor.hpp"

namespace fino {

enum class FlipAxis { left_right, top_bottom };
enum class SamplingMode { even, random };

struct SamplingPolicy {
    double occlusion_near_mm = 350.0;
    double occlusion_ratio = 0.30;  // in (0,1)
    int per_phase_count = 4;
    double completion_fraction = 1.0;  // rho in (0,1]
    SamplingMode mode = SamplingMode::even;
    uint64_t sample_seed = 0;  // used in random mode only
};

struct VisionConfig {
    int size = 128;  // square H=W output
    double d_max_mm = 4000.0;
    FlipAxis flip_axis = FlipAxis::left_right;
    SamplingPolicy policy;
};

// 8 x H x W x 4 early-fused RGB-D stack; channels R,G,B then depth, all in
// [0,1].
struct VisualTensor {
    Tensor data;  // [8, H, W, 4]
    std::array<int, 8> sampled_indices{};
};

struct PhaseRanges {
    // half-open index ranges over the retained frame list
    int approach_begin = 0, approach_end = 0;
    int manipulate_begin = 0, manipulate_end = 0;
    int retreat_begin = 0, retreat_end = 0;
};

// Drops frames whose fraction of pixels nearer than occlusion_near_mm
// exceeds occlusion_ratio. If fewer than 8 frames survive, the ratio is
// relaxed geometrically (x1.25, up to 5 retries).
std::vector<int> filter_self_occluded(const std::vector<cv::Mat>& depth_frames,
                                      const SamplingPolicy& policy);

// Maps the episode's annotated phase intervals to ranges over the retained
// frame list; positional 40/20/40 fallback when no annotation is available.
PhaseRanges segment_phases(const Episode& episode, const std::vector<int>& retained);
PhaseRanges segment_phases_positional(int n_retained);

// Picks 4 frames from the approach range and 4 from the retreat range; even
// spacing by default, uniform without replacement in random mode. With
// completion_fraction < 1 callers truncate the retained list first (see
// truncate_by_completion).
std::array<int, 8> sample_frames(const std::vector<int>& retained, const PhaseRanges& ranges,
                                 const SamplingPolicy& policy);

// Retained indices whose timestamp falls within the first rho * duration.
std::vector<int> truncate_by_completion(const std::vector<int>& retained,
                                        const std::vector<double>& timestamps, double rho);

// Resizes (bilinear), normalizes RGB to [0,1] and depth to [0,1] by
// d_max_mm (clamped), stacks on the channel axis.
VisualTensor build_visual_tensor(const Episode& episode, const std::array<int, 8>& indices,
                                 const VisionConfig& config);

// Training-time augmentation: with p=0.2 one color jitter applied to the RGB
// channels of all 8 steps; with p=0.5 a mirror flip of all channels.
// Sequence-consistent and seeded.
VisualTensor augment(const VisualTensor& in, uint64_t seed, const VisionConfig& config);

// Full preprocessing chain for one episode. Honors policy.completion_fraction
// (positional re-segmentation is used for truncated sequences).
VisualTensor preprocess_visual(const Episode& episode, const VisionConfig& config);

}  // namespace fino
