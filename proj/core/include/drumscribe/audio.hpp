#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drumscribe/errors.hpp"

namespace drumscribe {

/// Mono audio in [-1,1] at a fixed sample rate.
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = 44100;

    double duration_s() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }
};

/// Reads a RIFF/WAVE file. Accepts 16-bit PCM and 32-bit IEEE float, mono or
/// stereo; stereo is averaged to mono and 16-bit samples map to [-1,1) via
/// division by 32768.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes the clip as 32-bit IEEE float WAV (read_wav of the result returns
/// the samples exactly).
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

/// Linear-interpolation resampler. Output length is ceil(len * target / src);
/// sampling positions past the last input sample hold the edge value. Equal
/// rates return the clip unchanged.
AudioClip resample_linear(const AudioClip& clip, int target_hz);

}  // namespace drumscribe
