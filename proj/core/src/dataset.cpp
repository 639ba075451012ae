#include "fino/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <opencv2/imgcodecs.hpp>

#include <json.hpp>

#include "fino/errors.hpp"
#include "fino/rng.hpp"
#include "fino/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fino {

namespace {

std::string frame_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", i);
    return buf;
}

json read_json_file(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw MissingModality("missing meta file: " + p.string());
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw CorruptEpisode("unparsable meta file " + p.string() + ": " + e.what());
    }
    return j;
}

std::vector<cv::Mat> load_frame_dir(const fs::path& dir, int expected_type,
                                    const std::string& what) {
    if (!fs::is_directory(dir))
        throw MissingModality("missing " + what + " stream: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<cv::Mat> frames;
    frames.reserve(files.size());
    for (const auto& p : files) {
        cv::Mat m = cv::imread(p.string(), cv::IMREAD_UNCHANGED);
        if (m.empty()) throw CorruptEpisode("unreadable frame: " + p.string());
        if (m.type() != expected_type)
            throw CorruptEpisode("unexpected pixel format in " + p.string());
        frames.push_back(m);
    }
    if (frames.empty())
        throw MissingModality("empty " + what + " stream: " + dir.string());
    return frames;
}

}  // namespace

std::vector<EpisodeRef> DatasetIndex::subset(Split s) const {
    std::vector<EpisodeRef> out;
    for (const auto& e : episodes) {
        auto it = split_assignment.find(e.id);
        if (it != split_assignment.end() && it->second == s) out.push_back(e);
    }
    return out;
}

Episode load_episode(const std::string& dir) {
    fs::path root(dir);
    json meta = read_json_file(root / "meta.json");

    Episode ep;
    ep.id = root.filename().string();
    try {
        ep.action = action_from_string(meta.at("action").get<std::string>());
        ep.label = label_from_string(meta.at("label").get<std::string>());
        ep.frame_timestamps = meta.at("frame_timestamps").get<std::vector<double>>();
        const auto& ph = meta.at("phases");
        auto a = ph.at("approach").get<std::vector<double>>();
        auto m = ph.at("manipulate").get<std::vector<double>>();
        auto r = ph.at("retreat").get<std::vector<double>>();
        if (a.size() != 2 || m.size() != 2 || r.size() != 2)
            throw SchemaViolation("phase intervals must be [t0,t1] pairs in " + dir);
        ep.phases = {a[0], a[1], r[0], r[1]};
        if (std::abs(a[1] - m[0]) > 1e-6 || std::abs(m[1] - r[0]) > 1e-6)
            throw SchemaViolation("phases not contiguous in " + dir);
        if (meta.contains("recorder")) ep.recorder = meta["recorder"].get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaViolation("bad meta.json in " + dir + ": " + e.what());
    }

    ep.rgb_frames = load_frame_dir(root / "rgb", CV_8UC3, "rgb");
    ep.depth_frames = load_frame_dir(root / "depth", CV_16UC1, "depth");

    fs::path wav_path = root / "audio.wav";
    if (!fs::exists(wav_path))
        throw MissingModality("missing audio stream: " + wav_path.string());
    WavData wav = read_wav(wav_path.string());
    ep.audio = resample_linear(wav.samples, wav.sample_rate, 16000);

    ep.validate();
    return ep;
}

void write_episode(const std::string& dir, const Episode& episode) {
    episode.validate();
    fs::path root(dir);
    fs::create_directories(root / "rgb");
    fs::create_directories(root / "depth");

    for (size_t i = 0; i < episode.rgb_frames.size(); ++i) {
        if (!cv::imwrite((root / "rgb" / frame_name(int(i))).string(), episode.rgb_frames[i]))
            throw IoError("failed to write rgb frame in " + dir);
        if (!cv::imwrite((root / "depth" / frame_name(int(i))).string(),
                         episode.depth_frames[i]))
            throw IoError("failed to write depth frame in " + dir);
    }
    write_wav((root / "audio.wav").string(), episode.audio, 16000);

    json meta;
    meta["action"] = to_string(episode.action);
    meta["label"] = to_string(episode.label);
    meta["phases"] = {
        {"approach", {episode.phases.t0, episode.phases.t1}},
        {"manipulate", {episode.phases.t1, episode.phases.t2}},
        {"retreat", {episode.phases.t2, episode.phases.t3}},
    };
    meta["frame_timestamps"] = episode.frame_timestamps;
    meta["recorder"] = episode.recorder;
    std::ofstream f(root / "meta.json");
    f << meta.dump(2) << "\n";
    if (!f) throw IoError("failed to write meta.json in " + dir);
}

std::vector<EpisodeRef> scan_dataset_root(const std::string& root) {
    if (!fs::is_directory(root)) throw IoError("not a dataset root: " + root);
    std::vector<EpisodeRef> refs;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::exists(e.path() / "meta.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        json meta = read_json_file(d / "meta.json");
        EpisodeRef ref;
        ref.id = d.filename().string();
        ref.path = d.string();
        ref.action = action_from_string(meta.at("action").get<std::string>());
        ref.label = label_from_string(meta.at("label").get<std::string>());
        if (!is_legal_pair(ref.action, ref.label))
            throw SchemaViolation("illegal (action,label) pair in " + d.string());
        refs.push_back(ref);
    }
    return refs;
}

DatasetIndex make_splits(const std::vector<EpisodeRef>& episodes, uint64_t seed,
                         bool stratified) {
    if (episodes.empty()) throw EmptyDataset("make_splits: no episodes");

    DatasetIndex index;
    index.episodes = episodes;
    index.seed = seed;

    std::map<std::string, std::vector<const EpisodeRef*>> strata;
    for (const auto& e : episodes) {
        std::string key = stratified ? to_string(e.action) + "/" + to_string(e.label) : "all";
        strata[key].push_back(&e);
    }

    size_t stratum_idx = 0;
    for (auto& [key, members] : strata) {
        // Stable order first, then a seeded shuffle per stratum.
        std::sort(members.begin(), members.end(),
                  [](const EpisodeRef* a, const EpisodeRef* b) { return a->id < b->id; });
        Rng rng(split_seed(seed, stratum_idx++));
        std::shuffle(members.begin(), members.end(), rng.engine());

        const size_t n = members.size();
        // Largest-remainder apportionment of 70/10/20; leftover goes to train.
        size_t n_train = n * 7 / 10;
        size_t n_val = n / 10;
        size_t n_test = n * 2 / 10;
        size_t rest = n - n_train - n_val - n_test;
        n_train += rest;
        // Strata with >=3 members must reach both train and test.
        if (n >= 3 && n_test == 0) {
            n_train -= 1;
            n_test += 1;
        }
        for (size_t i = 0; i < n; ++i) {
            Split s = i < n_train            ? Split::train
                      : i < n_train + n_val ? Split::val
                                            : Split::test;
            index.split_assignment[members[i]->id] = s;
        }
    }
    return index;
}

}  // namespace fino
