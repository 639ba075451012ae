#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fino/model.hpp"
#include "fino/vision.hpp"
#include "fino/audio.hpp"

namespace fino {

// Flat dotted-key configuration: `section.key = value` lines, '#' comments.
// Keys are schema-checked; unknown keys are rejected. Flags override file
// values, the FINO_SEED environment variable overrides the seed.
class RunConfig {
public:
    RunConfig();  // defaults

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);  // throws on unknown key
    std::string get(const std::string& key) const;
    bool has(const std::string& key) const;

    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    VisionConfig vision_config() const;
    AudioFrontEndConfig audio_config() const;
    // Modality/task come from CLI flags; everything else from config keys.
    ModelConfig model_config(bool rgb, bool depth, bool audio, TaskMode task) const;

    // Resolved key=value dump, sorted; embedded in every artifact.
    std::string resolved_text() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace fino
