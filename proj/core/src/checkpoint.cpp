#include "fino/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fino/errors.hpp"

using nlohmann::json;

namespace fino {

namespace {

constexpr char kMagic[8] = {'F', 'I', 'N', 'O', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

json config_to_json(const ModelConfig& c) {
    return json{{"use_rgb", c.use_rgb},
                {"use_depth", c.use_depth},
                {"use_audio", c.use_audio},
                {"task", to_string(c.task)},
                {"channel_plan", {c.channel_plan[0], c.channel_plan[1], c.channel_plan[2]}},
                {"fusion_hidden", c.fusion_hidden},
                {"audio_filters", c.audio_filters},
                {"audio_kernel", c.audio_kernel},
                {"dropout_rate", c.dropout_rate},
                {"image_size", c.image_size},
                {"t_a", c.t_a},
                {"n_mfcc", c.n_mfcc},
                {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.use_rgb = j.at("use_rgb").get<bool>();
    c.use_depth = j.at("use_depth").get<bool>();
    c.use_audio = j.at("use_audio").get<bool>();
    c.task = task_from_string(j.at("task").get<std::string>());
    auto plan = j.at("channel_plan").get<std::vector<int>>();
    c.channel_plan = {plan.at(0), plan.at(1), plan.at(2)};
    c.fusion_hidden = j.at("fusion_hidden").get<int>();
    c.audio_filters = j.at("audio_filters").get<int>();
    c.audio_kernel = j.at("audio_kernel").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<float>();
    c.image_size = j.at("image_size").get<int>();
    c.t_a = j.at("t_a").get<int>();
    c.n_mfcc = j.at("n_mfcc").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

json read_header(std::ifstream& f, const std::string& path) {
    char magic[8];
    uint32_t version = 0, header_len = 0;
    f.read(magic, 8);
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&header_len), 4);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("not a checkpoint file: " + path);
    if (version != kVersion)
        throw IoError("unsupported checkpoint version in " + path);
    std::string header(header_len, '\0');
    f.read(header.data(), header_len);
    if (!f) throw IoError("truncated checkpoint header: " + path);
    return json::parse(header);
}

}  // namespace

void save_checkpoint(const std::string& path, FinoNet<float>& net,
                     const CheckpointMeta& meta) {
    auto tensors = net.named_tensors();
    json header;
    header["config"] = config_to_json(net.config);
    header["step"] = meta.step;
    header["val_score"] = meta.val_score;
    json dir = json::array();
    for (auto& t : tensors)
        dir.push_back({{"name", t.name}, {"shape", t.value->shape()}});
    header["tensors"] = dir;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    std::string hs = header.dump();
    uint32_t version = kVersion, header_len = uint32_t(hs.size());
    f.write(kMagic, 8);
    f.write(reinterpret_cast<char*>(&version), 4);
    f.write(reinterpret_cast<char*>(&header_len), 4);
    f.write(hs.data(), std::streamsize(hs.size()));
    for (auto& t : tensors)
        f.write(reinterpret_cast<const char*>(t.value->data()),
                std::streamsize(t.value->size() * sizeof(float)));
    if (!f) throw IoError("short checkpoint write: " + path);
}

CheckpointMeta load_checkpoint(const std::string& path, FinoNet<float>& net) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    json header = read_header(f, path);

    net.init(config_from_json(header.at("config")));
    auto tensors = net.named_tensors();
    const auto& dir = header.at("tensors");
    if (dir.size() != tensors.size())
        throw IoError("checkpoint tensor directory mismatch in " + path);
    for (size_t i = 0; i < tensors.size(); ++i) {
        if (dir[i].at("name").get<std::string>() != tensors[i].name)
            throw IoError("checkpoint tensor name mismatch: " + tensors[i].name);
        auto shape = dir[i].at("shape").get<std::vector<int>>();
        if (shape != tensors[i].value->shape())
            throw IoError("checkpoint tensor shape mismatch: " + tensors[i].name);
        f.read(reinterpret_cast<char*>(tensors[i].value->data()),
               std::streamsize(tensors[i].value->size() * sizeof(float)));
    }
    if (!f) throw IoError("truncated checkpoint payload: " + path);

    CheckpointMeta meta;
    meta.step = header.at("step").get<int>();
    meta.val_score = header.at("val_score").get<double>();
    return meta;
}

ModelConfig peek_checkpoint_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    return config_from_json(read_header(f, path).at("config"));
}

}  // namespace fino
