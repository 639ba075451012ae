#include "fino/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fino/errors.hpp"

namespace fino {

namespace {

const std::map<std::string, std::string> kDefaults = {
    {"seed", "0"},
    {"jobs", "1"},
    {"vision.size", "128"},
    {"vision.occlusion_near_mm", "350"},
    {"vision.occlusion_ratio", "0.30"},
    {"vision.flip_axis", "left_right"},  // or top_bottom
    {"vision.d_max_mm", "4000"},
    {"vision.sampling", "even"},  // or random
    {"audio.window_ms", "32"},
    {"audio.hop_ms", "32"},
    {"audio.n_fft", "512"},
    {"audio.n_mels", "40"},
    {"audio.n_mfcc", "20"},
    {"audio.t_a", "320"},
    {"audio.log_floor", "1e-10"},
    {"model.channel_plan", "32,64,128"},
    {"model.fusion_hidden", "256"},
    {"model.audio_filters", "64"},
    {"model.audio_kernel", "32"},
    {"model.dropout", "0.4"},
    {"train.learning_rate", "1e-5"},
    {"train.epochs", "250"},
    {"train.batch_size", "8"},
    {"train.class_weighting", "none"},  // or inverse_frequency
    {"train.patience", "0"},            // 0 = run all epochs
    {"train.augment", "true"},
    {"train.stratified_split", "true"},
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(kDefaults) {
    if (const char* env = std::getenv("FINO_SEED")) values_["seed"] = env;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    // file must not override an explicit FINO_SEED
    if (const char* env = std::getenv("FINO_SEED")) values_["seed"] = env;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!kDefaults.count(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
}

std::string RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

double RunConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: " + get(key));
    }
}

int RunConfig::get_int(const std::string& key) const {
    return int(std::llround(get_double(key)));
}

uint64_t RunConfig::get_u64(const std::string& key) const {
    try {
        return std::stoull(get(key));
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not an integer: " + get(key));
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    std::string v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key " + key + " is not a boolean: " + v);
}

VisionConfig RunConfig::vision_config() const {
    VisionConfig c;
    c.size = get_int("vision.size");
    c.d_max_mm = get_double("vision.d_max_mm");
    std::string axis = get("vision.flip_axis");
    if (axis == "left_right")
        c.flip_axis = FlipAxis::left_right;
    else if (axis == "top_bottom")
        c.flip_axis = FlipAxis::top_bottom;
    else
        throw ConfigError("vision.flip_axis must be left_right or top_bottom");
    c.policy.occlusion_near_mm = get_double("vision.occlusion_near_mm");
    c.policy.occlusion_ratio = get_double("vision.occlusion_ratio");
    std::string mode = get("vision.sampling");
    if (mode == "even")
        c.policy.mode = SamplingMode::even;
    else if (mode == "random")
        c.policy.mode = SamplingMode::random;
    else
        throw ConfigError("vision.sampling must be even or random");
    return c;
}

AudioFrontEndConfig RunConfig::audio_config() const {
    AudioFrontEndConfig c;
    c.window_ms = get_int("audio.window_ms");
    c.hop_ms = get_int("audio.hop_ms");
    c.n_fft = get_int("audio.n_fft");
    c.n_mels = get_int("audio.n_mels");
    c.n_mfcc = get_int("audio.n_mfcc");
    c.t_a = get_int("audio.t_a");
    c.log_floor = get_double("audio.log_floor");
    c.validate();
    return c;
}

ModelConfig RunConfig::model_config(bool rgb, bool depth, bool audio, TaskMode task) const {
    ModelConfig m;
    m.use_rgb = rgb;
    m.use_depth = depth;
    m.use_audio = audio;
    m.task = task;
    std::stringstream ss(get("model.channel_plan"));
    std::string tok;
    std::vector<int> plan;
    while (std::getline(ss, tok, ',')) plan.push_back(std::stoi(tok));
    if (plan.size() != 3) throw ConfigError("model.channel_plan needs exactly 3 entries");
    m.channel_plan = {plan[0], plan[1], plan[2]};
    m.fusion_hidden = get_int("model.fusion_hidden");
    m.audio_filters = get_int("model.audio_filters");
    m.audio_kernel = get_int("model.audio_kernel");
    m.dropout_rate = float(get_double("model.dropout"));
    m.image_size = get_int("vision.size");
    m.t_a = get_int("audio.t_a");
    m.n_mfcc = get_int("audio.n_mfcc");
    m.seed = get_u64("seed");
    m.validate();
    return m;
}

std::string RunConfig::resolved_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

}  // namespace fino
