#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fino/episode.hpp"

namespace fino {

enum class Split { train, val, test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

// Lightweight reference to an on-disk episode plus the metadata needed for
// stratified splitting without loading frame data.
struct EpisodeRef {
    std::string id;
    std::string path;
    ActionName action;
    Label label;
};

struct DatasetIndex {
    std::vector<EpisodeRef> episodes;
    std::map<std::string, Split> split_assignment;
    uint64_t seed = 0;

    std::vector<EpisodeRef> subset(Split s) const;
};

// Episode directory contract:
//   <id>/rgb/%06d.png        8-bit 3-channel
//   <id>/depth/%06d.png      16-bit single channel, millimeters
//   <id>/audio.wav           PCM16 mono 16 kHz (resampled on load otherwise)
//   <id>/meta.json           action, label, phases, frame_timestamps, recorder
Episode load_episode(const std::string& dir);
void write_episode(const std::string& dir, const Episode& episode);

// Scans a dataset root (directory of episode directories) reading only the
// meta files.
std::vector<EpisodeRef> scan_dataset_root(const std::string& root);

// Deterministic stratified 70/10/20 split by (action, label). Per-stratum
// largest-remainder rounding with the remainder going to train; strata of
// three or more episodes always reach both train and test. `stratified =
// false` treats the whole set as one stratum.
DatasetIndex make_splits(const std::vector<EpisodeRef>& episodes, uint64_t seed,
                         bool stratified = true);

}  // namespace fino
