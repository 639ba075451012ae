#pragma once

#include <opencv2/core.hpp>
#include <string>
#include <vector>

#include "fino/errors.hpp"
#include "fino/labels.hpp"

namespace fino {

struct PhaseAnnotation {
    // approach = [t0, t1), manipulate = [t1, t2), retreat = [t2, t3]; seconds.
    double t0 = 0, t1 = 0, t2 = 0, t3 = 0;
};

// One recorded manipulation execution: synchronized RGB/depth frame pairs,
// a mono 16 kHz waveform, phase annotations and a label.
struct Episode {
    std::string id;
    ActionName action = ActionName::push;
    Label label = Label::success;
    std::vector<cv::Mat> rgb_frames;    // CV_8UC3
    std::vector<cv::Mat> depth_frames;  // CV_16UC1, millimeters
    std::vector<float> audio;           // mono, 16000 samples/s, [-1, 1]
    PhaseAnnotation phases;
    bool has_phase_annotation = true;
    std::vector<double> frame_timestamps;  // seconds, one per frame pair
    std::string recorder;

    double duration() const {
        return frame_timestamps.empty() ? 0.0 : frame_timestamps.back();
    }

    void validate() const {
        if (!is_legal_pair(action, label))
            throw SchemaViolation("illegal (action,label) pair: " + to_string(action) +
                                  "/" + to_string(label) + " in episode " + id);
        if (rgb_frames.size() != depth_frames.size())
            throw CorruptEpisode("rgb/depth frame count mismatch in episode " + id);
        if (frame_timestamps.size() != rgb_frames.size())
            throw CorruptEpisode("frame_timestamps count mismatch in episode " + id);
        for (size_t i = 0; i < rgb_frames.size(); ++i) {
            if (rgb_frames[i].size() != depth_frames[i].size())
                throw CorruptEpisode("rgb/depth spatial size mismatch at frame " +
                                     std::to_string(i) + " in episode " + id);
        }
        for (size_t i = 1; i < frame_timestamps.size(); ++i) {
            if (frame_timestamps[i] <= frame_timestamps[i - 1])
                throw CorruptEpisode("frame_timestamps not strictly increasing in episode " + id);
        }
        if (has_phase_annotation) {
            const auto& p = phases;
            if (!(p.t0 <= p.t1 && p.t1 <= p.t2 && p.t2 <= p.t3))
                throw SchemaViolation("phase intervals out of order in episode " + id);
            const double eps = 1e-6;
            if (std::abs(p.t0) > eps || (!frame_timestamps.empty() &&
                                         p.t3 + eps < frame_timestamps.back()))
                throw SchemaViolation("phases do not cover [0, duration] in episode " + id);
        }
    }
};

}  // namespace fino
