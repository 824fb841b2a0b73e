#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "drumscribe/data.hpp"
#include "drumscribe/dsp.hpp"
#include "tmpdir.hpp"

using namespace drumscribe;

namespace {

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

/// Fraction of spectral energy at or below cutoff_hz.
double low_band_fraction(const AudioClip& clip, double cutoff_hz) {
    const size_t padded = std::bit_ceil(clip.samples.size());
    std::vector<std::complex<double>> buf(padded);
    for (size_t i = 0; i < clip.samples.size(); ++i) buf[i] = clip.samples[i];
    const auto spec = dft_radix2(buf);
    const double bin_hz = static_cast<double>(clip.sample_rate) / static_cast<double>(padded);
    double low = 0.0, total = 0.0;
    for (size_t k = 0; k <= padded / 2; ++k) {
        const double e = std::norm(spec[k]);
        total += e;
        if (bin_hz * static_cast<double>(k) <= cutoff_hz) low += e;
    }
    return total > 0.0 ? low / total : 0.0;
}

std::vector<LabeledExample> fake_examples(int per_class) {
    std::vector<LabeledExample> out;
    for (int c = 0; c < kNumClasses; ++c)
        for (int i = 0; i < per_class; ++i) {
            LabeledExample ex;
            ex.input = Tensor<float>::zeros({1, 1});
            ex.label = static_cast<DrumClass>(c);
            ex.source = class_name(ex.label) + "/" + std::to_string(i);
            out.push_back(std::move(ex));
        }
    return out;
}

}  // namespace

TEST_CASE("class names round-trip") {
    const std::vector<std::string> names = {"tom",  "kick",  "snare",   "closed_hat",
                                            "ride", "crash", "open_hat"};
    for (int c = 0; c < kNumClasses; ++c) {
        CHECK(class_name(static_cast<DrumClass>(c)) == names[static_cast<size_t>(c)]);
        CHECK(class_from_name(names[static_cast<size_t>(c)]) == static_cast<DrumClass>(c));
    }
    CHECK_THROWS_AS(class_from_name("gong"), DatasetError);
    CHECK_THROWS_AS(class_name(static_cast<DrumClass>(7)), DatasetError);
    CHECK_THROWS_AS(class_name(static_cast<DrumClass>(-1)), DatasetError);
}

TEST_CASE("synth_hit is deterministic and peak-normalized") {
    const AudioClip a = synth_hit(DrumClass::Snare, 99);
    CHECK(a.sample_rate == 44100);
    CHECK(a.samples.size() == 66150);  // 1.5 s at 44.1 kHz

    float peak = 0.0f;
    for (float v : a.samples) {
        CHECK(std::isfinite(v));
        peak = std::max(peak, std::abs(v));
    }
    CHECK(peak == doctest::Approx(0.9).epsilon(1e-6));

    const AudioClip b = synth_hit(DrumClass::Snare, 99);
    CHECK(a.samples == b.samples);

    const AudioClip c = synth_hit(DrumClass::Snare, 100);
    CHECK(a.samples != c.samples);

    const AudioClip d = synth_hit(DrumClass::Kick, 99);
    CHECK(a.samples != d.samples);
}

TEST_CASE("synth recipes land in their frequency bands") {
    // A closed hat is a 6-18 kHz noise burst: almost nothing below 3 kHz.
    const AudioClip hat = synth_hit(DrumClass::ClosedHat, 7);
    CHECK(low_band_fraction(hat, 3000.0) < 0.02);

    // A kick glides from ~120 Hz down to ~50 Hz: almost everything below 1 kHz.
    const AudioClip kick = synth_hit(DrumClass::Kick, 7);
    CHECK(low_band_fraction(kick, 1000.0) > 0.99);
}

TEST_CASE("generate_dataset writes the documented tree deterministically") {
    TmpDir tmp;
    const auto dir = tmp / "ds";
    const auto counts = generate_dataset(2, 7, dir);
    for (int c = 0; c < kNumClasses; ++c) CHECK(counts[static_cast<size_t>(c)] == 2);

    for (int c = 0; c < kNumClasses; ++c) {
        const auto cls_dir = dir / class_name(static_cast<DrumClass>(c));
        CHECK(std::filesystem::is_regular_file(cls_dir / "0000.wav"));
        CHECK(std::filesystem::is_regular_file(cls_dir / "0001.wav"));
    }

    const auto again = tmp / "ds2";
    generate_dataset(2, 7, again);
    CHECK(read_bytes(dir / "tom" / "0000.wav") == read_bytes(again / "tom" / "0000.wav"));
    CHECK(read_bytes(dir / "crash" / "0001.wav") == read_bytes(again / "crash" / "0001.wav"));

    // Different seeds give different audio.
    const auto other = tmp / "ds3";
    generate_dataset(2, 8, other);
    CHECK(read_bytes(dir / "tom" / "0000.wav") != read_bytes(other / "tom" / "0000.wav"));

    CHECK_THROWS_AS(generate_dataset(0, 7, tmp / "bad"), ConfigError);
}

TEST_CASE("load_dataset orders entries by class name then filename") {
    TmpDir tmp;
    const auto dir = tmp / "ds";
    generate_dataset(2, 3, dir);

    const auto files = load_dataset(dir);
    REQUIRE(files.size() == 14);
    const std::vector<std::string> order = {"closed_hat", "crash", "kick",    "open_hat",
                                            "ride",       "snare", "tom"};
    for (size_t c = 0; c < order.size(); ++c) {
        const DatasetFile& first = files[2 * c];
        const DatasetFile& second = files[2 * c + 1];
        CHECK(first.path.parent_path().filename().string() == order[c]);
        CHECK(first.path.filename().string() == "0000.wav");
        CHECK(second.path.filename().string() == "0001.wav");
        CHECK(first.label == class_from_name(order[c]));
        CHECK(second.label == first.label);
    }

    // Unknown subdirectories are tolerated.
    std::filesystem::create_directories(dir / "cowbell");
    CHECK(load_dataset(dir).size() == 14);

    // Empty or missing class directories are not.
    std::filesystem::remove(dir / "ride" / "0000.wav");
    std::filesystem::remove(dir / "ride" / "0001.wav");
    CHECK_THROWS_AS(load_dataset(dir), DatasetError);
    std::filesystem::remove_all(dir / "ride");
    CHECK_THROWS_AS(load_dataset(dir), DatasetError);

    CHECK_THROWS_AS(load_dataset(tmp / "nowhere"), DatasetError);
}

TEST_CASE("featurize_clip yields a unit-range 128x128 input") {
    const AudioClip clip = synth_hit(DrumClass::Kick, 5);
    const DspConfig cfg;
    const Tensor<float> input = featurize_clip(clip, cfg);
    REQUIRE(input.shape() == Shape{128, 128});
    float lo = 1.0f, hi = 0.0f;
    for (int64_t i = 0; i < input.size(); ++i) {
        CHECK(input(i) >= 0.0f);
        CHECK(input(i) <= 1.0f);
        lo = std::min(lo, input(i));
        hi = std::max(hi, input(i));
    }
    CHECK(hi > 0.5f);
    CHECK(lo == 0.0f);

    // A clip at a foreign sample rate is resampled first, so it still fits.
    AudioClip slow;
    slow.sample_rate = 22050;
    slow.samples.assign(22050, 0.25f);
    CHECK(featurize_clip(slow, cfg).shape() == Shape{128, 128});
}

TEST_CASE("load_examples treats wav and mspc sources identically") {
    TmpDir tmp;
    const auto wav_dir = tmp / "wav";
    generate_dataset(1, 11, wav_dir);
    const DspConfig cfg;

    const auto from_wav = load_examples(wav_dir, cfg);
    REQUIRE(from_wav.size() == 7);
    std::set<DrumClass> seen;
    for (const auto& ex : from_wav) {
        CHECK(ex.input.shape() == Shape{128, 128});
        CHECK(ex.source.size() > 4);
        seen.insert(ex.label);
    }
    CHECK(seen.size() == 7);

    // Precomputed spectrograms load byte-for-byte identically.
    const auto mspc_dir = tmp / "mspc";
    for (const auto& f : load_dataset(wav_dir)) {
        const auto cls_dir = mspc_dir / class_name(f.label);
        std::filesystem::create_directories(cls_dir);
        write_mspc(featurize_clip(read_wav(f.path), cfg), cls_dir / "0000.mspc");
    }
    const auto from_mspc = load_examples(mspc_dir, cfg);
    REQUIRE(from_mspc.size() == 7);
    for (size_t i = 0; i < 7; ++i) {
        CHECK(from_mspc[i].label == from_wav[i].label);
        REQUIRE(from_mspc[i].input.size() == from_wav[i].input.size());
        bool identical = true;
        for (int64_t j = 0; j < from_mspc[i].input.size(); ++j)
            identical = identical && from_mspc[i].input(j) == from_wav[i].input(j);
        CHECK(identical);
    }

    // A spectrogram of the wrong shape is rejected up front.
    write_mspc(Tensor<float>::zeros({64, 128}), mspc_dir / "tom" / "0001.mspc");
    CHECK_THROWS_AS(load_examples(mspc_dir, cfg), DatasetError);
}

TEST_CASE("split stratifies per class and keeps the pool intact") {
    const auto examples = fake_examples(20);
    std::vector<LabeledExample> train, val;
    split(examples, 0.25, 42, train, val);
    CHECK(train.size() == 105);
    CHECK(val.size() == 35);

    std::array<int, kNumClasses> val_counts{};
    for (const auto& ex : val) ++val_counts[static_cast<size_t>(ex.label)];
    for (int c = 0; c < kNumClasses; ++c) CHECK(val_counts[static_cast<size_t>(c)] == 5);

    std::set<std::string> train_src, val_src;
    for (const auto& ex : train) train_src.insert(ex.source);
    for (const auto& ex : val) val_src.insert(ex.source);
    CHECK(train_src.size() == train.size());
    CHECK(val_src.size() == val.size());
    std::set<std::string> both;
    std::set_intersection(train_src.begin(), train_src.end(), val_src.begin(), val_src.end(),
                          std::inserter(both, both.begin()));
    CHECK(both.empty());
}

TEST_CASE("split is deterministic in the seed") {
    const auto examples = fake_examples(8);
    std::vector<LabeledExample> t1, v1, t2, v2, t3, v3;
    split(examples, 0.25, 1, t1, v1);
    split(examples, 0.25, 1, t2, v2);
    split(examples, 0.25, 2, t3, v3);

    const auto sources = [](const std::vector<LabeledExample>& xs) {
        std::vector<std::string> out;
        for (const auto& ex : xs) out.push_back(ex.source);
        return out;
    };
    CHECK(sources(t1) == sources(t2));
    CHECK(sources(v1) == sources(v2));
    CHECK(sources(v1) != sources(v3));
}

TEST_CASE("split edge cases") {
    const auto examples = fake_examples(3);
    std::vector<LabeledExample> train, val;

    split(examples, 0.0, 9, train, val);
    CHECK(val.empty());
    CHECK(train.size() == examples.size());

    // round(3 * 0.5) = 2 validation examples per class.
    split(examples, 0.5, 9, train, val);
    CHECK(val.size() == 14);
    CHECK(train.size() == 7);

    CHECK_THROWS_AS(split(examples, 1.0, 9, train, val), ConfigError);
    CHECK_THROWS_AS(split(examples, -0.1, 9, train, val), ConfigError);
}
