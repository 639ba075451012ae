#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fino/audio.hpp"
#include "fino/errors.hpp"
#include "fino/rng.hpp"

using namespace fino;

namespace {

constexpr double kPi = std::numbers::pi;

// Straightforward reference front end built from the defining formulas:
// quadratic-time DFT, explicit triangular filters, direct cosine sums.
double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

std::vector<double> oracle_power_spectrum(const std::vector<double>& frame, int n_fft) {
    int n_bins = n_fft / 2 + 1;
    std::vector<double> power(static_cast<size_t>(n_bins));
    for (int k = 0; k < n_bins; ++k) {
        double re = 0, im = 0;
        for (int n = 0; n < n_fft; ++n) {
            double x = n < int(frame.size()) ? frame[size_t(n)] : 0.0;
            re += x * std::cos(-2.0 * kPi * k * n / n_fft);
            im += x * std::sin(-2.0 * kPi * k * n / n_fft);
        }
        power[size_t(k)] = re * re + im * im;
    }
    return power;
}

std::vector<std::vector<double>> oracle_mel_bank(const AudioFrontEndConfig& c) {
    int n_bins = c.n_fft / 2 + 1;
    std::vector<double> centers(size_t(c.n_mels) + 2);
    double lo = hz_to_mel(0.0), hi = hz_to_mel(c.sample_rate / 2.0);
    for (int i = 0; i < c.n_mels + 2; ++i)
        centers[size_t(i)] = mel_to_hz(lo + (hi - lo) * i / (c.n_mels + 1));
    std::vector<std::vector<double>> bank(size_t(c.n_mels),
                                          std::vector<double>(size_t(n_bins), 0.0));
    for (int m = 0; m < c.n_mels; ++m) {
        double fl = centers[size_t(m)], fc = centers[size_t(m) + 1], fr = centers[size_t(m) + 2];
        for (int k = 0; k < n_bins; ++k) {
            double f = double(k) * c.sample_rate / c.n_fft;
            double w = 0;
            if (f >= fl && f <= fc && fc > fl) w = (f - fl) / (fc - fl);
            else if (f > fc && f <= fr && fr > fc) w = (fr - f) / (fr - fc);
            bank[size_t(m)][size_t(k)] = w * 2.0 / (fr - fl);
        }
    }
    return bank;
}

TensorT<double> oracle_mfcc(const std::vector<float>& waveform, const AudioFrontEndConfig& c) {
    int win = c.window_samples(), hop = c.hop_samples();
    int n_windows = int((waveform.size() + hop - 1) / size_t(hop));
    auto bank = oracle_mel_bank(c);
    TensorT<double> out({n_windows, c.n_mfcc});
    for (int w = 0; w < n_windows; ++w) {
        std::vector<double> frame(size_t(win), 0.0);
        for (int i = 0; i < win; ++i) {
            size_t idx = size_t(w) * hop + size_t(i);
            double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * i / win);
            frame[size_t(i)] = idx < waveform.size() ? waveform[idx] * hann : 0.0;
        }
        auto power = oracle_power_spectrum(frame, c.n_fft);
        std::vector<double> log_mel(size_t(c.n_mels));
        for (int m = 0; m < c.n_mels; ++m) {
            double e = 0;
            for (size_t k = 0; k < power.size(); ++k) e += bank[size_t(m)][k] * power[k];
            log_mel[size_t(m)] = std::log(std::max(e, c.log_floor));
        }
        for (int k = 0; k < c.n_mfcc; ++k) {
            double sum = 0;
            for (int m = 0; m < c.n_mels; ++m)
                sum += log_mel[size_t(m)] * std::cos(kPi * k * (m + 0.5) / c.n_mels);
            double scale = k == 0 ? std::sqrt(1.0 / c.n_mels) : std::sqrt(2.0 / c.n_mels);
            out.at2(w, k) = scale * sum;
        }
    }
    return out;
}

std::vector<float> random_waveform(int n, uint64_t seed) {
    Rng rng(seed);
    std::vector<float> wav(static_cast<size_t>(n));
    for (auto& s : wav) s = float(rng.uniform(-0.8, 0.8));
    return wav;
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("fft matches quadratic dft") {
    Rng rng(7);
    int n = 256;
    std::vector<double> re(static_cast<size_t>(n)), im(static_cast<size_t>(n), 0.0);
    for (auto& x : re) x = rng.uniform(-1, 1);
    std::vector<double> orig = re;
    std::vector<double> re2 = re, im2 = im;
    fft_radix2(re2, im2);
    for (int k = 0; k < n; ++k) {
        double er = 0, ei = 0;
        for (int t = 0; t < n; ++t) {
            er += orig[size_t(t)] * std::cos(-2.0 * kPi * k * t / n);
            ei += orig[size_t(t)] * std::sin(-2.0 * kPi * k * t / n);
        }
        CHECK(re2[size_t(k)] == doctest::Approx(er).epsilon(1e-9));
        CHECK(im2[size_t(k)] == doctest::Approx(ei).epsilon(1e-9));
    }
}

TEST_CASE("window count is ceil(n / hop)") {
    AudioFrontEndConfig c;
    CHECK(frame_signal(random_waveform(16000, 1), c).dim(0) == 32);   // 1 s, 512-sample hop
    CHECK(frame_signal(random_waveform(16001, 1), c).dim(0) == 32);   // partial tail window
    CHECK(frame_signal(random_waveform(512, 1), c).dim(0) == 1);
    CHECK(frame_signal(random_waveform(1, 1), c).dim(0) == 1);
}

TEST_CASE("empty waveform is rejected") {
    AudioFrontEndConfig c;
    CHECK_THROWS_AS(frame_signal({}, c), EmptyAudio);
}

TEST_CASE("mfcc matches the reference front end") {
    AudioFrontEndConfig c;
    auto wav = random_waveform(16000 * 2, 42);
    MfccMatrix got = mfcc(frame_signal(wav, c), c);
    TensorT<double> want = oracle_mfcc(wav, c);
    REQUIRE(got.data.dim(0) == want.dim(0));
    double max_err = 0;
    for (int w = 0; w < want.dim(0); ++w)
        for (int k = 0; k < c.n_mfcc; ++k)
            max_err = std::max(max_err, std::abs(got.data.at2(w, k) - want.at2(w, k)));
    CHECK(max_err < 1e-6);
}

TEST_CASE("silence row is the dct of the floored log energy") {
    AudioFrontEndConfig c;
    auto row = silence_mfcc_row(c);
    REQUIRE(int(row.size()) == c.n_mfcc);
    CHECK(row[0] == doctest::Approx(std::log(c.log_floor) * std::sqrt(double(c.n_mels))));
    for (int k = 1; k < c.n_mfcc; ++k) CHECK(row[size_t(k)] == doctest::Approx(0.0));
    // matches the pipeline run on actual zeros
    MfccMatrix silent = mfcc(frame_signal(std::vector<float>(512, 0.0f), c), c);
    for (int k = 0; k < c.n_mfcc; ++k)
        CHECK(silent.data.at2(0, k) == doctest::Approx(row[size_t(k)]).epsilon(1e-9));
}

TEST_CASE("fix_length pads short input with trailing silence rows") {
    AudioFrontEndConfig c;
    auto wav = random_waveform(16000, 3);  // 32 windows
    MfccMatrix raw = mfcc(frame_signal(wav, c), c);
    MfccMatrix fixed = fix_length(raw, c);
    REQUIRE(fixed.data.dim(0) == c.t_a);
    CHECK(fixed.valid_windows == 32);
    auto silence = silence_mfcc_row(c);
    for (int k = 0; k < c.n_mfcc; ++k) {
        CHECK(fixed.data.at2(0, k) == raw.data.at2(0, k));
        CHECK(fixed.data.at2(31, k) == raw.data.at2(31, k));
        CHECK(fixed.data.at2(32, k) == doctest::Approx(silence[size_t(k)]));
        CHECK(fixed.data.at2(c.t_a - 1, k) == doctest::Approx(silence[size_t(k)]));
    }
}

TEST_CASE("fix_length keeps the trailing rows of long input") {
    AudioFrontEndConfig c;
    auto wav = random_waveform(16000 * 11, 4);  // 344 windows > t_a
    MfccMatrix raw = mfcc(frame_signal(wav, c), c);
    REQUIRE(raw.data.dim(0) > c.t_a);
    MfccMatrix fixed = fix_length(raw, c);
    REQUIRE(fixed.data.dim(0) == c.t_a);
    int offset = raw.data.dim(0) - c.t_a;
    for (int w = 0; w < c.t_a; w += 37)
        for (int k = 0; k < c.n_mfcc; ++k)
            CHECK(fixed.data.at2(w, k) == raw.data.at2(w + offset, k));
}

TEST_CASE("front end is deterministic") {
    AudioFrontEndConfig c;
    auto wav = random_waveform(16000 * 3, 9);
    auto a = audio_features(wav, c);
    auto b = audio_features(wav, c);
    for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data.data()[i] == b.data.data()[i]);
}

TEST_CASE("config validation") {
    AudioFrontEndConfig c;
    c.n_fft = 500;  // not a power of two
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.n_mfcc = 41;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.window_ms = 64;  // 1024 samples > n_fft
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

}  // TEST_SUITE
