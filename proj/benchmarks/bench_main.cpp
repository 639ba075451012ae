// Microbenchmarks for the hot paths: the audio front end, the visual
// preprocessing chain and single-episode network forward passes.

#include <benchmark/benchmark.h>

#include <vector>

#include "fino/audio.hpp"
#include "fino/model.hpp"
#include "fino/rng.hpp"
#include "fino/synth.hpp"
#include "fino/vision.hpp"

namespace {

using namespace fino;

std::vector<float> make_waveform(double seconds) {
    Rng rng(3);
    std::vector<float> wav(static_cast<size_t>(seconds * 16000));
    for (auto& s : wav) s = float(rng.uniform(-0.5, 0.5));
    return wav;
}

void BM_FrameSignal(benchmark::State& state) {
    AudioFrontEndConfig c;
    auto wav = make_waveform(5.0);
    for (auto _ : state) benchmark::DoNotOptimize(frame_signal(wav, c));
}
BENCHMARK(BM_FrameSignal);

void BM_MfccFrontEnd(benchmark::State& state) {
    AudioFrontEndConfig c;
    auto wav = make_waveform(5.0);
    for (auto _ : state) benchmark::DoNotOptimize(audio_features(wav, c));
}
BENCHMARK(BM_MfccFrontEnd);

void BM_Fft512(benchmark::State& state) {
    Rng rng(9);
    std::vector<double> re0(512), im0(512, 0.0);
    for (auto& v : re0) v = rng.uniform(-1, 1);
    for (auto _ : state) {
        auto re = re0;
        auto im = im0;
        fft_radix2(re, im);
        benchmark::DoNotOptimize(re.data());
    }
}
BENCHMARK(BM_Fft512);

Episode make_episode() {
    ScenarioSpec spec;
    spec.action = ActionName::push;
    spec.label = Label::success;
    spec.seed = 4;
    return generate_episode(spec);
}

void BM_VisualPreprocess(benchmark::State& state) {
    Episode ep = make_episode();
    VisionConfig vc;
    vc.size = int(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(preprocess_visual(ep, vc));
}
BENCHMARK(BM_VisualPreprocess)->Arg(32)->Arg(128);

void BM_NetForward(benchmark::State& state) {
    ModelConfig mc;
    mc.image_size = int(state.range(0));
    mc.channel_plan = {8, 16, 32};
    mc.seed = 1;
    FinoNet<float> net;
    net.init(mc);
    Rng rng(0);
    TensorT<float> vis({1, 8, mc.image_size, mc.image_size, 4});
    TensorT<float> aud({1, mc.t_a, mc.n_mfcc});
    for (size_t i = 0; i < vis.size(); ++i) vis.data()[i] = float(rng.uniform(0, 1));
    for (size_t i = 0; i < aud.size(); ++i) aud.data()[i] = float(rng.uniform(-2, 2));
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(vis, aud, false, rng));
}
BENCHMARK(BM_NetForward)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
