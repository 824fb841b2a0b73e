#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "drumscribe/audio.hpp"
#include "drumscribe/dsp.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

/// The seven drum classes. Codes are stable: they appear in checkpoints and
/// reports.
enum class DrumClass : int {
    Tom = 0,
    Kick = 1,
    Snare = 2,
    ClosedHat = 3,
    Ride = 4,
    Crash = 5,
    OpenHat = 6,
};

constexpr int kNumClasses = 7;

/// Dataset directory / report name for a class (tom, kick, snare,
/// closed_hat, ride, crash, open_hat).
const std::string& class_name(DrumClass c);

/// Inverse of class_name; throws DatasetError for unknown names.
DrumClass class_from_name(const std::string& name);

/// One featurized training/evaluation example.
struct LabeledExample {
    Tensor<float> input;  // [128,128] in [0,1]
    DrumClass label = DrumClass::Tom;
    std::string source;  // file path or synthetic id
};

/// Per-class synthesis recipes plus jitter ranges. A clip is a sum of
/// exponentially decaying sine partials (optionally pitch-gliding) and
/// band-limited noise bursts, peak-normalized at the end.
struct SynthParams {
    struct Tone {
        double freq_start_hz;
        double freq_end_hz;  // equal to freq_start_hz for a fixed pitch
        double glide_tau_s;  // time constant of the exponential pitch glide
        double amp;
        double decay_tau_s;
    };
    struct Noise {
        double low_hz;
        double high_hz;
        double amp;
        double decay_tau_s;
    };
    struct Recipe {
        std::vector<Tone> tones;
        std::vector<Noise> noises;
    };

    std::array<Recipe, kNumClasses> recipes;
    double duration_s = 1.5;
    int sample_rate = 44100;
    double gain_jitter_db = 3.0;   // per component
    double pitch_jitter = 0.10;    // relative, scales frequencies and band edges
    double decay_jitter = 0.20;    // relative, scales time constants
    double peak = 0.9;

    static SynthParams defaults();
};

/// Renders one drum hit, deterministic in (class, seed).
AudioClip synth_hit(DrumClass cls, uint64_t seed, const SynthParams& params = SynthParams::defaults());

/// Writes per_class WAVs per class under out_dir/<class_name>/NNNN.wav with
/// per-file seeds derived from (seed, class, index). Returns the number of
/// files written per class.
std::array<int, kNumClasses> generate_dataset(int per_class, uint64_t seed,
                                              const std::filesystem::path& out_dir,
                                              const SynthParams& params = SynthParams::defaults());

/// A dataset entry discovered on disk (not yet loaded).
struct DatasetFile {
    std::filesystem::path path;
    DrumClass label;
};

/// Scans dir/<class_name>/ for audio or spectrogram files, ordered
/// lexicographically by class name then filename. Unknown subdirectories are
/// skipped with a warning on stderr; an empty or missing class directory is
/// an error.
std::vector<DatasetFile> load_dataset(const std::filesystem::path& dir);

/// WAV/clip to network input: resample to cfg.sample_rate, Mel power
/// spectrogram, dB-normalize, fit to 128 frames.
Tensor<float> featurize_clip(const AudioClip& clip, const DspConfig& cfg);

/// Loads and featurizes every dataset file. WAV files run through the DSP
/// pipeline; .mspc files are read as-is.
std::vector<LabeledExample> load_examples(const std::filesystem::path& dir, const DspConfig& cfg);

/// Stratified split: per class, a seeded shuffle sends round(n*val_fraction)
/// examples to validation and the rest to training.
void split(const std::vector<LabeledExample>& examples, double val_fraction, uint64_t seed,
           std::vector<LabeledExample>& train_out, std::vector<LabeledExample>& val_out);

}  // namespace drumscribe
