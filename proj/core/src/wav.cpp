#include "fino/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fino/errors.hpp"

namespace fino {

namespace {

uint32_t rd_u32(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void wr_u32(std::ofstream& f, uint32_t v) {
    uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
}
void wr_u16(std::ofstream& f, uint16_t v) {
    uint8_t b[2] = {uint8_t(v), uint8_t(v >> 8)};
    f.write(reinterpret_cast<char*>(b), 2);
}

}  // namespace

WavData read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open wav file: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw IoError("not a RIFF/WAVE file: " + path);

    int sample_rate = 0;
    int channels = 0;
    int bits = 0;
    const uint8_t* data = nullptr;
    size_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const uint8_t* chunk = buf.data() + pos;
        uint32_t len = rd_u32(chunk + 4);
        if (std::memcmp(chunk, "fmt ", 4) == 0 && len >= 16) {
            uint16_t format = rd_u16(chunk + 8);
            channels = rd_u16(chunk + 10);
            sample_rate = int(rd_u32(chunk + 12));
            bits = rd_u16(chunk + 8 + 14);
            if (format != 1) throw IoError("unsupported wav encoding (want PCM): " + path);
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = chunk + 8;
            data_len = std::min<size_t>(len, buf.size() - pos - 8);
        }
        pos += 8 + len + (len & 1);
    }
    if (!data || sample_rate == 0)
        throw IoError("wav missing fmt or data chunk: " + path);
    if (channels != 1 || bits != 16)
        throw IoError("expected PCM16 mono wav: " + path);

    WavData out;
    out.sample_rate = sample_rate;
    size_t n = data_len / 2;
    out.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int16_t s = int16_t(uint16_t(data[2 * i]) | uint16_t(data[2 * i + 1]) << 8);
        out.samples[i] = float(s) / 32768.0f;
    }
    return out;
}

void write_wav(const std::string& path, const std::vector<float>& samples, int sample_rate) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write wav file: " + path);
    uint32_t data_len = uint32_t(samples.size() * 2);
    f.write("RIFF", 4);
    wr_u32(f, 36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    wr_u32(f, 16);
    wr_u16(f, 1);  // PCM
    wr_u16(f, 1);  // mono
    wr_u32(f, uint32_t(sample_rate));
    wr_u32(f, uint32_t(sample_rate * 2));  // byte rate
    wr_u16(f, 2);                          // block align
    wr_u16(f, 16);                         // bits per sample
    f.write("data", 4);
    wr_u32(f, data_len);
    for (float v : samples) {
        float c = std::clamp(v, -1.0f, 1.0f);
        auto s = int16_t(std::lrint(c * 32767.0f));
        uint8_t b[2] = {uint8_t(uint16_t(s)), uint8_t(uint16_t(s) >> 8)};
        f.write(reinterpret_cast<char*>(b), 2);
    }
    if (!f) throw IoError("short write: " + path);
}

std::vector<float> resample_linear(const std::vector<float>& in, int rate_in, int rate_out) {
    if (rate_in == rate_out || in.empty()) return in;
    size_t n_out = size_t(double(in.size()) * rate_out / rate_in);
    std::vector<float> out(n_out);
    for (size_t i = 0; i < n_out; ++i) {
        double t = double(i) * rate_in / rate_out;
        size_t k = std::min(size_t(t), in.size() - 1);
        size_t k1 = std::min(k + 1, in.size() - 1);
        double frac = t - double(k);
        out[i] = float((1.0 - frac) * in[k] + frac * in[k1]);
    }
    return out;
}

}  // namespace fino
