#pragma once

#include <vector>

#include "fino/tensor.hpp"

namespace fino {

struct AudioFrontEndConfig {
    int sample_rate = 16000;
    int window_ms = 32;
    int hop_ms = 32;  // hop == window: non-overlapping partition
    int n_fft = 512;
    int n_mels = 40;
    int n_mfcc = 20;
    double log_floor = 1e-10;
    int t_a = 320;  // fixed output row count

    int window_samples() const { return window_ms * sample_rate / 1000; }
    int hop_samples() const { return hop_ms * sample_rate / 1000; }

    void validate() const;
};

// Fixed-length time x n_mfcc feature matrix fed to the audio branch.
struct MfccMatrix {
    TensorT<double> data;  // t_a x n_mfcc
    int valid_windows = 0;
};

// Splits the waveform into hop-spaced windows of window_samples, zero-pads
// the last partial window and applies a periodic Hann weighting. Output is
// num_windows x n_fft (windows already zero-padded to the FFT length).
TensorT<double> frame_signal(const std::vector<float>& waveform,
                             const AudioFrontEndConfig& config);

// In-place iterative radix-2 FFT over interleaved re/im pairs; n power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

// Per window: power spectrum -> HTK-mel triangular filterbank (area
// normalized, 0..sr/2) -> log with floor -> orthonormal DCT-II, first n_mfcc
// coefficients kept. Row count equals the input window count.
MfccMatrix mfcc(const TensorT<double>& windows, const AudioFrontEndConfig& config);

// Silence row: the MFCC of digital silence under `config` (used as the pad
// vector).
std::vector<double> silence_mfcc_row(const AudioFrontEndConfig& config);

// Pads with silence rows at the end or keeps the trailing t_a rows.
MfccMatrix fix_length(const MfccMatrix& in, const AudioFrontEndConfig& config);

// Full front end: frame -> mfcc -> fix_length.
MfccMatrix audio_features(const std::vector<float>& waveform,
                          const AudioFrontEndConfig& config);

}  // namespace fino
