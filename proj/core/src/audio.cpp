#include "fino/audio.hpp"

#include <cmath>
#include <numbers>

#include "fino/errors.hpp"

namespace fino {

namespace {

constexpr double kPi = std::numbers::pi;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// n_mels x (n_fft/2 + 1) triangular filterbank on the HTK mel scale,
// each triangle scaled to unit area (2 / bandwidth).
TensorT<double> mel_filterbank(const AudioFrontEndConfig& c) {
    const int n_bins = c.n_fft / 2 + 1;
    TensorT<double> fb({c.n_mels, n_bins});
    const double f_min = 0.0, f_max = c.sample_rate / 2.0;
    const double mel_min = hz_to_mel(f_min), mel_max = hz_to_mel(f_max);
    std::vector<double> edges(size_t(c.n_mels) + 2);
    for (int i = 0; i < c.n_mels + 2; ++i)
        edges[size_t(i)] = mel_to_hz(mel_min + (mel_max - mel_min) * i / (c.n_mels + 1));
    for (int m = 0; m < c.n_mels; ++m) {
        double lo = edges[size_t(m)], mid = edges[size_t(m) + 1], hi = edges[size_t(m) + 2];
        double norm = 2.0 / (hi - lo);
        for (int k = 0; k < n_bins; ++k) {
            double f = double(k) * c.sample_rate / c.n_fft;
            double w = 0.0;
            if (f > lo && f < mid)
                w = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                w = (hi - f) / (hi - mid);
            fb.at2(m, k) = w * norm;
        }
    }
    return fb;
}

}  // namespace

void AudioFrontEndConfig::validate() const {
    if (window_samples() > n_fft)
        throw ConfigError("audio window longer than n_fft");
    if (n_mfcc > n_mels) throw ConfigError("n_mfcc exceeds n_mels");
    if (sample_rate <= 0 || window_ms <= 0 || hop_ms <= 0 || t_a <= 0)
        throw ConfigError("non-positive audio front-end parameter");
    if ((n_fft & (n_fft - 1)) != 0) throw ConfigError("n_fft must be a power of two");
}

TensorT<double> frame_signal(const std::vector<float>& waveform,
                             const AudioFrontEndConfig& config) {
    config.validate();
    if (waveform.empty()) throw EmptyAudio("frame_signal: empty waveform");
    const int win = config.window_samples();
    const int hop = config.hop_samples();
    const int n_windows = int((waveform.size() + size_t(hop) - 1) / size_t(hop));

    TensorT<double> out({n_windows, config.n_fft});
    for (int w = 0; w < n_windows; ++w) {
        size_t start = size_t(w) * size_t(hop);
        for (int i = 0; i < win; ++i) {
            size_t src = start + size_t(i);
            double s = src < waveform.size() ? double(waveform[src]) : 0.0;
            double hann = 0.5 * (1.0 - std::cos(2.0 * kPi * i / win));
            out.at2(w, i) = s * hann;
        }
        // remaining columns up to n_fft stay zero
    }
    return out;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const size_t n = re.size();
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * kPi / double(len);
        double wr = std::cos(ang), wi = std::sin(ang);
        for (size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (size_t k = 0; k < len / 2; ++k) {
                double ur = re[i + k], ui = im[i + k];
                double vr = re[i + k + len / 2] * cr - im[i + k + len / 2] * ci;
                double vi = re[i + k + len / 2] * ci + im[i + k + len / 2] * cr;
                re[i + k] = ur + vr;
                im[i + k] = ui + vi;
                re[i + k + len / 2] = ur - vr;
                im[i + k + len / 2] = ui - vi;
                double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

MfccMatrix mfcc(const TensorT<double>& windows, const AudioFrontEndConfig& config) {
    const int n_windows = windows.dim(0);
    const int n_bins = config.n_fft / 2 + 1;
    TensorT<double> fb = mel_filterbank(config);

    MfccMatrix out;
    out.data = TensorT<double>({n_windows, config.n_mfcc});
    out.valid_windows = n_windows;

    std::vector<double> re(size_t(config.n_fft)), im(size_t(config.n_fft));
    std::vector<double> power(static_cast<size_t>(n_bins));
    std::vector<double> log_mel(size_t(config.n_mels));
    const double dct_scale0 = std::sqrt(1.0 / config.n_mels);
    const double dct_scale = std::sqrt(2.0 / config.n_mels);

    for (int w = 0; w < n_windows; ++w) {
        for (int i = 0; i < config.n_fft; ++i) {
            re[size_t(i)] = windows.at2(w, i);
            im[size_t(i)] = 0.0;
        }
        fft_radix2(re, im);
        for (int k = 0; k < n_bins; ++k)
            power[size_t(k)] = re[size_t(k)] * re[size_t(k)] + im[size_t(k)] * im[size_t(k)];
        for (int m = 0; m < config.n_mels; ++m) {
            double e = 0.0;
            for (int k = 0; k < n_bins; ++k) e += fb.at2(m, k) * power[size_t(k)];
            log_mel[size_t(m)] = std::log(std::max(e, config.log_floor));
        }
        for (int c = 0; c < config.n_mfcc; ++c) {
            double acc = 0.0;
            for (int m = 0; m < config.n_mels; ++m)
                acc += log_mel[size_t(m)] * std::cos(kPi * c * (2 * m + 1) / (2.0 * config.n_mels));
            out.data.at2(w, c) = acc * (c == 0 ? dct_scale0 : dct_scale);
        }
    }
    return out;
}

std::vector<double> silence_mfcc_row(const AudioFrontEndConfig& config) {
    // log-mel of silence is the constant log(log_floor); its orthonormal
    // DCT-II has one nonzero coefficient.
    std::vector<double> row(size_t(config.n_mfcc), 0.0);
    row[0] = std::log(config.log_floor) * std::sqrt(double(config.n_mels));
    return row;
}

MfccMatrix fix_length(const MfccMatrix& in, const AudioFrontEndConfig& config) {
    const int rows = in.data.empty() ? 0 : in.data.dim(0);
    const int t_a = config.t_a;
    MfccMatrix out;
    out.data = TensorT<double>({t_a, config.n_mfcc});
    out.valid_windows = std::min(rows, t_a);

    std::vector<double> sil = silence_mfcc_row(config);
    // clipping keeps the trailing rows: late windows carry the failure cues
    const int src_start = rows > t_a ? rows - t_a : 0;
    for (int r = 0; r < t_a; ++r) {
        int src = src_start + r;
        for (int c = 0; c < config.n_mfcc; ++c)
            out.data.at2(r, c) = src < rows ? in.data.at2(src, c) : sil[size_t(c)];
    }
    return out;
}

MfccMatrix audio_features(const std::vector<float>& waveform,
                          const AudioFrontEndConfig& config) {
    return fix_length(mfcc(frame_signal(waveform, config), config), config);
}

}  // namespace fino
