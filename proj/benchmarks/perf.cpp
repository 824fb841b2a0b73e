#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "drumscribe/autograd.hpp"
#include "drumscribe/classifier.hpp"
#include "drumscribe/data.hpp"
#include "drumscribe/dsp.hpp"
#include "drumscribe/ops.hpp"
#include "drumscribe/rng.hpp"
#include "drumscribe/train.hpp"
#include "drumscribe/vit.hpp"

namespace {

using namespace drumscribe;

AudioClip noise_clip(double seconds) {
    Rng rng(7);
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.samples.resize(static_cast<size_t>(seconds * clip.sample_rate));
    for (auto& s : clip.samples) s = static_cast<float>(rng.uniform(-0.5, 0.5));
    return clip;
}

void BM_DftRadix2(benchmark::State& state) {
    const size_t n = static_cast<size_t>(state.range(0));
    Rng rng(11);
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    for (auto _ : state) benchmark::DoNotOptimize(dft_radix2(x));
}
BENCHMARK(BM_DftRadix2)->Arg(256)->Arg(2048)->Arg(16384);

void BM_MelSpectrogram(benchmark::State& state) {
    const AudioClip clip = noise_clip(1.5);
    const DspConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(mel_spectrogram(clip, cfg));
}
BENCHMARK(BM_MelSpectrogram);

void BM_FeaturizeClip(benchmark::State& state) {
    const AudioClip clip = noise_clip(1.5);
    const DspConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(featurize_clip(clip, cfg));
}
BENCHMARK(BM_FeaturizeClip);

void BM_Matmul(benchmark::State& state) {
    const int64_t n = state.range(0);
    Rng rng(3);
    Tensor<float> a = Tensor<float>::zeros({n, n});
    Tensor<float> b = Tensor<float>::zeros({n, n});
    for (int64_t i = 0; i < a.size(); ++i) a(i) = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (int64_t i = 0; i < b.size(); ++i) b(i) = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

Tensor<float> random_input(uint64_t seed) {
    Rng rng(seed);
    Tensor<float> input = Tensor<float>::zeros({128, 128});
    for (int64_t i = 0; i < input.size(); ++i) input(i) = static_cast<float>(rng.uniform());
    return input;
}

void BM_ArchForward(benchmark::State& state, const char* arch) {
    auto model = make_classifier(arch, VitConfig{}, 5);
    const Tensor<float> input = random_input(9);
    for (auto _ : state) benchmark::DoNotOptimize(model->forward(input));
}
BENCHMARK_CAPTURE(BM_ArchForward, vit, "vit");
BENCHMARK_CAPTURE(BM_ArchForward, cnn, "cnn");
BENCHMARK_CAPTURE(BM_ArchForward, rnn, "rnn");

void BM_ArchTrainStep(benchmark::State& state, const char* arch) {
    auto model = make_classifier(arch, VitConfig{}, 5);
    ParamList<float> params = model->parameters();
    AdamState<float> adam;
    TrainConfig cfg;
    const Tensor<float> input = random_input(9);
    for (auto _ : state) {
        Tape<float> tape;
        Tensor<float> loss;
        {
            Tape<float>::Scope scope(tape);
            Tensor<float> logits = model->forward(input);
            loss = cross_entropy_from_logits(reshape(logits, {1, logits.size()}), {2});
        }
        tape.backward(loss);
        adam_step(params, adam, cfg);
        for (auto& p : params) p.tensor.zero_grad();
        benchmark::DoNotOptimize(loss(0));
    }
}
BENCHMARK_CAPTURE(BM_ArchTrainStep, vit, "vit");
BENCHMARK_CAPTURE(BM_ArchTrainStep, cnn, "cnn");
BENCHMARK_CAPTURE(BM_ArchTrainStep, rnn, "rnn");

void BM_SynthHit(benchmark::State& state) {
    uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(synth_hit(DrumClass::Crash, ++seed));
}
BENCHMARK(BM_SynthHit);

}  // namespace

BENCHMARK_MAIN();
