#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "drumscribe/audio.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

/// Spectrogram pipeline parameters. Defaults give the canonical
/// 128-band, 20 Hz - 20 kHz Mel power spectrogram over 2048/512 STFT frames
/// at 44.1 kHz.
struct DspConfig {
    int n_fft = 2048;
    int hop = 512;
    int n_mels = 128;
    double f_min = 20.0;
    double f_max = 20000.0;
    int sample_rate = 44100;
    double top_db = 80.0;

    void validate() const;
};

/// [n_mels x n_frames] matrix of nonnegative Mel-band power.
struct MelSpectrogram {
    Tensor<double> values;
    DspConfig config;
};

/// [n_mels x (n_fft/2+1)] triangular filter gains.
struct MelFilterbank {
    Tensor<double> weights;
};

/// Radix-2 Cooley-Tukey DFT over a power-of-two-length complex vector.
/// Forward computes X[k] = sum_n x[n] exp(-2*pi*i*k*n/N); the inverse flips
/// the twiddle sign and scales by 1/N, so inverse(forward(x)) == x.
std::vector<std::complex<double>> dft_radix2(const std::vector<std::complex<double>>& x,
                                             bool inverse = false);

/// Periodic Hann window: w[i] = 0.5 * (1 - cos(2*pi*i/n)), i in [0, n).
std::vector<double> hann_window(int n);

/// Power STFT with centered frames (n_fft/2 reflect padding each side).
/// Output rows are FFT bins 0..n_fft/2, columns are the
/// 1 + floor(len/hop) frames.
Tensor<double> stft_power(const AudioClip& clip, const DspConfig& cfg);

/// Slaney-style Mel scale: linear 3f/200 below 1 kHz, logarithmic above.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular Mel filterbank over n_mels+2 breakpoints equally spaced in Mel
/// between f_min and f_max, each filter area-normalized by 2/(f[i+2]-f[i]).
MelFilterbank mel_filterbank(const DspConfig& cfg);

/// mel_filterbank(cfg) applied to stft_power(clip, cfg).
MelSpectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& cfg);

/// Per-clip dB normalization to [0,1]: v -> 10*log10(max(v, 1e-10)),
/// referenced to the global maximum, floored at -top_db, mapped linearly
/// onto [0,1]. An all-silent spectrogram maps to all zeros.
Tensor<float> normalized_db(const MelSpectrogram& m);

/// normalized_db, then center-crop or right-pad (with zeros) the frame axis
/// to exactly `width` columns. The network consumes the result directly.
Tensor<float> to_network_input(const MelSpectrogram& m, int width = 128);

/// MSPC1 spectrogram container: magic "MSPC", u8 version, u32 LE rows/cols,
/// float32 LE row-major payload.
void write_mspc(const Tensor<float>& values, const std::filesystem::path& path);
Tensor<float> read_mspc(const std::filesystem::path& path);

}  // namespace drumscribe
