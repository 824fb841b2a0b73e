#include "drumscribe/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <iostream>
#include <map>
#include <numbers>

#include "drumscribe/errors.hpp"
#include "drumscribe/rng.hpp"

namespace drumscribe {

namespace {

const std::array<std::string, kNumClasses> kClassNames = {
    "tom", "kick", "snare", "closed_hat", "ride", "crash", "open_hat",
};

double db_to_gain(double db) { return std::pow(10.0, db / 20.0); }

/// Band-limited unit-RMS noise: white Gaussian noise, forward DFT, zero all
/// bins outside [low_hz, high_hz], inverse DFT, truncate.
std::vector<double> band_noise(Rng& rng, int64_t n, int sample_rate, double low_hz,
                               double high_hz) {
    const size_t fft_n = std::bit_ceil(static_cast<size_t>(n));
    std::vector<std::complex<double>> buf(fft_n);
    for (auto& v : buf) v = {rng.normal(), 0.0};
    auto spec = dft_radix2(buf, false);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_n);
    for (size_t k = 0; k <= fft_n / 2; ++k) {
        const double f = bin_hz * static_cast<double>(k);
        if (f < low_hz || f > high_hz) {
            spec[k] = 0.0;
            if (k != 0 && k != fft_n / 2) spec[fft_n - k] = 0.0;
        }
    }
    auto filtered = dft_radix2(spec, true);
    std::vector<double> out(static_cast<size_t>(n));
    double energy = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        out[static_cast<size_t>(i)] = filtered[static_cast<size_t>(i)].real();
        energy += out[static_cast<size_t>(i)] * out[static_cast<size_t>(i)];
    }
    const double rms = std::sqrt(energy / static_cast<double>(n));
    if (rms > 0.0)
        for (auto& v : out) v /= rms;
    return out;
}

}  // namespace

const std::string& class_name(DrumClass c) {
    const int i = static_cast<int>(c);
    if (i < 0 || i >= kNumClasses)
        throw DatasetError("invalid drum class code " + std::to_string(i));
    return kClassNames[static_cast<size_t>(i)];
}

DrumClass class_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i)
        if (kClassNames[static_cast<size_t>(i)] == name) return static_cast<DrumClass>(i);
    throw DatasetError("unknown drum class name '" + name + "'");
}

SynthParams SynthParams::defaults() {
    SynthParams p;
    auto& r = p.recipes;
    using T = Tone;
    using N = Noise;
    // {freq_start, freq_end, glide_tau, amp, decay_tau} / {low, high, amp, decay_tau}
    r[static_cast<size_t>(DrumClass::Tom)].tones = {T{160.0, 120.0, 0.08, 1.0, 0.20}};
    r[static_cast<size_t>(DrumClass::Kick)].tones = {T{120.0, 50.0, 0.06, 1.0, 0.15}};
    r[static_cast<size_t>(DrumClass::Snare)].tones = {T{180.0, 180.0, 1.0, 0.6, 0.08}};
    r[static_cast<size_t>(DrumClass::Snare)].noises = {N{1000.0, 8000.0, 0.8, 0.12}};
    r[static_cast<size_t>(DrumClass::ClosedHat)].noises = {N{6000.0, 18000.0, 1.0, 0.04}};
    r[static_cast<size_t>(DrumClass::Ride)].noises = {N{4000.0, 18000.0, 0.7, 0.80}};
    r[static_cast<size_t>(DrumClass::Ride)].tones = {T{5000.0, 5000.0, 1.0, 0.35, 0.40}};
    r[static_cast<size_t>(DrumClass::Crash)].noises = {N{2000.0, 16000.0, 1.0, 1.00}};
    r[static_cast<size_t>(DrumClass::OpenHat)].noises = {N{6000.0, 18000.0, 1.0, 0.30}};
    return p;
}

AudioClip synth_hit(DrumClass cls, uint64_t seed, const SynthParams& params) {
    const auto& recipe = params.recipes[static_cast<size_t>(static_cast<int>(cls))];
    const int sr = params.sample_rate;
    const int64_t n = static_cast<int64_t>(std::llround(params.duration_s * sr));
    const double nyquist = sr / 2.0;
    Rng rng(seed);
    std::vector<double> mix(static_cast<size_t>(n), 0.0);

    for (const auto& tone : recipe.tones) {
        const double gain = db_to_gain(rng.uniform(-params.gain_jitter_db, params.gain_jitter_db));
        const double pitch = 1.0 + rng.uniform(-params.pitch_jitter, params.pitch_jitter);
        const double stretch = 1.0 + rng.uniform(-params.decay_jitter, params.decay_jitter);
        const double f0 = tone.freq_start_hz * pitch;
        const double f1 = tone.freq_end_hz * pitch;
        const double tau = tone.decay_tau_s * stretch;
        const double amp = tone.amp * gain;
        for (int64_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sr;
            // Phase of an exponentially gliding pitch f(t) = f1 + (f0-f1)e^(-t/g):
            // integral of f over [0,t] in closed form.
            const double cycles =
                f1 * t + (f0 - f1) * tone.glide_tau_s * (1.0 - std::exp(-t / tone.glide_tau_s));
            mix[static_cast<size_t>(i)] +=
                amp * std::sin(2.0 * std::numbers::pi * cycles) * std::exp(-t / tau);
        }
    }

    for (const auto& noise : recipe.noises) {
        const double gain = db_to_gain(rng.uniform(-params.gain_jitter_db, params.gain_jitter_db));
        const double pitch = 1.0 + rng.uniform(-params.pitch_jitter, params.pitch_jitter);
        const double stretch = 1.0 + rng.uniform(-params.decay_jitter, params.decay_jitter);
        const double lo = std::max(1.0, noise.low_hz * pitch);
        const double hi = std::min(nyquist - 1.0, noise.high_hz * pitch);
        const double tau = noise.decay_tau_s * stretch;
        const double amp = noise.amp * gain;
        const std::vector<double> band = band_noise(rng, n, sr, lo, hi);
        for (int64_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / sr;
            mix[static_cast<size_t>(i)] += amp * band[static_cast<size_t>(i)] * std::exp(-t / tau);
        }
    }

    double peak = 0.0;
    for (double v : mix) peak = std::max(peak, std::abs(v));
    const double norm = peak > 0.0 ? params.peak / peak : 1.0;

    AudioClip clip;
    clip.sample_rate = sr;
    clip.samples.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i)
        clip.samples[static_cast<size_t>(i)] = static_cast<float>(mix[static_cast<size_t>(i)] * norm);
    return clip;
}

std::array<int, kNumClasses> generate_dataset(int per_class, uint64_t seed,
                                              const std::filesystem::path& out_dir,
                                              const SynthParams& params) {
    if (per_class < 1) throw ConfigError("generate_dataset: per_class must be positive");
    std::array<int, kNumClasses> counts{};
    for (int c = 0; c < kNumClasses; ++c) {
        const DrumClass cls = static_cast<DrumClass>(c);
        const std::filesystem::path dir = out_dir / class_name(cls);
        std::filesystem::create_directories(dir);
        for (int i = 0; i < per_class; ++i) {
            const AudioClip clip =
                synth_hit(cls, derive_seed(seed, static_cast<uint64_t>(c), static_cast<uint64_t>(i)),
                          params);
            char name[16];
            std::snprintf(name, sizeof(name), "%04d.wav", i);
            write_wav(clip, dir / name);
            ++counts[static_cast<size_t>(c)];
        }
    }
    return counts;
}

std::vector<DatasetFile> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw DatasetError("dataset directory not found: " + dir.string());

    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (std::find(kClassNames.begin(), kClassNames.end(), name) == kClassNames.end())
            std::cerr << "warning: skipping unknown class directory '" << name << "'\n";
    }

    // Lexicographic by class name, then by filename within the class.
    std::vector<std::string> ordered(kClassNames.begin(), kClassNames.end());
    std::sort(ordered.begin(), ordered.end());

    std::vector<DatasetFile> files;
    for (const std::string& name : ordered) {
        const std::filesystem::path class_dir = dir / name;
        if (!std::filesystem::is_directory(class_dir))
            throw DatasetError("class directory missing: " + name);
        std::vector<std::filesystem::path> paths;
        for (const auto& entry : std::filesystem::directory_iterator(class_dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string ext = entry.path().extension().string();
            if (ext == ".wav" || ext == ".mspc") paths.push_back(entry.path());
        }
        if (paths.empty()) throw DatasetError("class directory is empty: " + name);
        std::sort(paths.begin(), paths.end());
        for (auto& p : paths) files.push_back({std::move(p), class_from_name(name)});
    }
    return files;
}

Tensor<float> featurize_clip(const AudioClip& clip, const DspConfig& cfg) {
    const AudioClip canonical = resample_linear(clip, cfg.sample_rate);
    return to_network_input(mel_spectrogram(canonical, cfg));
}

std::vector<LabeledExample> load_examples(const std::filesystem::path& dir, const DspConfig& cfg) {
    std::vector<LabeledExample> out;
    for (const DatasetFile& f : load_dataset(dir)) {
        LabeledExample ex;
        ex.label = f.label;
        ex.source = f.path.string();
        if (f.path.extension() == ".mspc") {
            ex.input = read_mspc(f.path);
            if (ex.input.dim(0) != cfg.n_mels || ex.input.dim(1) != 128)
                throw DatasetError(f.path.string() + ": expected a " + std::to_string(cfg.n_mels) +
                                   "x128 network input, got " + shape_str(ex.input.shape()));
        } else {
            ex.input = featurize_clip(read_wav(f.path), cfg);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void split(const std::vector<LabeledExample>& examples, double val_fraction, uint64_t seed,
           std::vector<LabeledExample>& train_out, std::vector<LabeledExample>& val_out) {
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw ConfigError("split: val_fraction must be in [0,1)");
    train_out.clear();
    val_out.clear();
    std::map<int, std::vector<size_t>> by_class;
    for (size_t i = 0; i < examples.size(); ++i)
        by_class[static_cast<int>(examples[i].label)].push_back(i);

    for (auto& [code, idx] : by_class) {
        Rng rng(derive_seed(seed, 0x5917, static_cast<uint64_t>(code)));
        rng.shuffle(idx.begin(), idx.end());
        const size_t n_val =
            static_cast<size_t>(std::lround(static_cast<double>(idx.size()) * val_fraction));
        for (size_t i = 0; i < idx.size(); ++i) {
            if (i < n_val)
                val_out.push_back(examples[idx[i]]);
            else
                train_out.push_back(examples[idx[i]]);
        }
    }
}

}  // namespace drumscribe
