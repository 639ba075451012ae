#pragma once

#include <string>
#include <vector>

namespace fino {

// PCM16 mono WAV support. Readers return samples scaled to [-1, 1].
struct WavData {
    int sample_rate = 0;
    std::vector<float> samples;
};

WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<float>& samples, int sample_rate);

// Linear-interpolation resampler used when a source file is not at the
// target rate. Identity when rates match.
std::vector<float> resample_linear(const std::vector<float>& in, int rate_in, int rate_out);

}  // namespace fino
