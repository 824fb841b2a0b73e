#include "drumscribe/dsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>

#include "drumscribe/detail/binary_io.hpp"
#include "drumscribe/errors.hpp"
#include "drumscribe/ops.hpp"

namespace drumscribe {

namespace {

constexpr double kAmin = 1e-10;  // power floor before dB conversion

// Mirror index for reflect padding without edge repetition: position t in
// signal coordinates (may be negative or >= len) folds back into [0, len).
int64_t reflect_index(int64_t t, int64_t len) {
    if (len == 1) return 0;
    const int64_t period = 2 * (len - 1);
    int64_t m = t % period;
    if (m < 0) m += period;
    return m < len ? m : period - m;
}

}  // namespace

void DspConfig::validate() const {
    if (n_fft < 2 || !std::has_single_bit(static_cast<unsigned>(n_fft)))
        throw ConfigError("n_fft must be a power of two >= 2, got " + std::to_string(n_fft));
    if (hop <= 0 || hop > n_fft)
        throw ConfigError("hop must be in (0, n_fft], got " + std::to_string(hop));
    if (n_mels < 1) throw ConfigError("n_mels must be positive");
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
    if (!(f_min >= 0.0) || !(f_min < f_max))
        throw ConfigError("need 0 <= f_min < f_max");
    if (f_max > sample_rate / 2.0)
        throw ConfigError("f_max " + std::to_string(f_max) + " exceeds Nyquist " +
                          std::to_string(sample_rate / 2.0));
    if (top_db <= 0.0) throw ConfigError("top_db must be positive");
}

std::vector<std::complex<double>> dft_radix2(const std::vector<std::complex<double>>& x,
                                             bool inverse) {
    const size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw ShapeError("dft_radix2: length must be a power of two, got " + std::to_string(n));

    std::vector<std::complex<double>> a = x;
    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    // Butterflies, doubling the transform length each round.
    const double sign = inverse ? 1.0 : -1.0;
    for (size_t len = 2; len <= n; len <<= 1) {
        const double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& v : a) v *= inv_n;
    }
    return a;
}

std::vector<double> hann_window(int n) {
    if (n < 2) throw ConfigError("hann_window: need n >= 2");
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<size_t>(i)] =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / static_cast<double>(n)));
    return w;
}

Tensor<double> stft_power(const AudioClip& clip, const DspConfig& cfg) {
    cfg.validate();
    const int64_t len = static_cast<int64_t>(clip.samples.size());
    if (len < 1) throw ShapeError("stft_power: empty clip");

    const int64_t n_fft = cfg.n_fft;
    const int64_t pad = n_fft / 2;
    const int64_t n_frames = 1 + len / cfg.hop;
    const int64_t n_bins = n_fft / 2 + 1;
    const std::vector<double> window = hann_window(cfg.n_fft);

    Tensor<double> out = Tensor<double>::zeros({n_bins, n_frames});
    std::vector<std::complex<double>> frame(static_cast<size_t>(n_fft));
    for (int64_t k = 0; k < n_frames; ++k) {
        const int64_t start = k * cfg.hop - pad;  // frame start in signal coordinates
        for (int64_t i = 0; i < n_fft; ++i) {
            const double s = clip.samples[static_cast<size_t>(reflect_index(start + i, len))];
            frame[static_cast<size_t>(i)] = s * window[static_cast<size_t>(i)];
        }
        const auto spectrum = dft_radix2(frame, false);
        for (int64_t b = 0; b < n_bins; ++b) out(b, k) = std::norm(spectrum[static_cast<size_t>(b)]);
    }
    return out;
}

double hz_to_mel(double hz) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    if (hz < min_log_hz) return hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    return min_log_hz / f_sp + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_mel = 15.0;  // hz_to_mel(1000)
    if (mel < min_log_mel) return mel * f_sp;
    const double logstep = std::log(6.4) / 27.0;
    return 1000.0 * std::exp(logstep * (mel - min_log_mel));
}

MelFilterbank mel_filterbank(const DspConfig& cfg) {
    cfg.validate();
    const int64_t n_bins = cfg.n_fft / 2 + 1;
    const int n_breaks = cfg.n_mels + 2;

    std::vector<double> freqs(static_cast<size_t>(n_breaks));
    const double mel_lo = hz_to_mel(cfg.f_min);
    const double mel_hi = hz_to_mel(cfg.f_max);
    for (int i = 0; i < n_breaks; ++i)
        freqs[static_cast<size_t>(i)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / static_cast<double>(n_breaks - 1));

    MelFilterbank fb;
    fb.weights = Tensor<double>::zeros({cfg.n_mels, n_bins});
    const double bin_hz = static_cast<double>(cfg.sample_rate) / cfg.n_fft;
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double f_lo = freqs[static_cast<size_t>(m)];
        const double f_mid = freqs[static_cast<size_t>(m + 1)];
        const double f_hi = freqs[static_cast<size_t>(m + 2)];
        const double enorm = 2.0 / (f_hi - f_lo);
        for (int64_t b = 0; b < n_bins; ++b) {
            const double f = bin_hz * static_cast<double>(b);
            const double rising = (f - f_lo) / (f_mid - f_lo);
            const double falling = (f_hi - f) / (f_hi - f_mid);
            const double w = std::min(rising, falling);
            if (w > 0.0) fb.weights(m, b) = w * enorm;
        }
    }
    return fb;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& cfg) {
    const Tensor<double> power = stft_power(clip, cfg);
    const MelFilterbank fb = mel_filterbank(cfg);
    MelSpectrogram out;
    out.config = cfg;
    out.values = Tensor<double>::zeros({cfg.n_mels, power.dim(1)});
    detail::matmul_nn_acc(fb.weights.data(), power.data(), out.values.data(), cfg.n_mels,
                          power.dim(0), power.dim(1));
    return out;
}

Tensor<float> normalized_db(const MelSpectrogram& m) {
    const Tensor<double>& v = m.values;
    Tensor<float> out = Tensor<float>::zeros(v.shape());
    double peak = 0.0;
    for (int64_t i = 0; i < v.size(); ++i) peak = std::max(peak, v(i));
    // A silent clip has no reference level; normalizing against the floor
    // would light up every cell, so silence maps to all zeros instead.
    if (peak <= kAmin) return out;

    const double ref_db = 10.0 * std::log10(peak);
    const double top_db = m.config.top_db;
    for (int64_t i = 0; i < v.size(); ++i) {
        const double db = 10.0 * std::log10(std::max(v(i), kAmin)) - ref_db;
        const double unit = (db + top_db) / top_db;
        out(i) = static_cast<float>(std::clamp(unit, 0.0, 1.0));
    }
    return out;
}

Tensor<float> to_network_input(const MelSpectrogram& m, int width) {
    if (width < 1) throw ConfigError("to_network_input: width must be positive");
    const Tensor<float> norm = normalized_db(m);
    const int64_t rows = norm.dim(0);
    const int64_t cols = norm.dim(1);
    Tensor<float> out = Tensor<float>::zeros({rows, width});
    if (cols >= width) {
        const int64_t start = (cols - width) / 2;  // center crop
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < width; ++c) out(r, c) = norm(r, start + c);
    } else {
        for (int64_t r = 0; r < rows; ++r)  // right-pad with silence
            for (int64_t c = 0; c < cols; ++c) out(r, c) = norm(r, c);
    }
    return out;
}

void write_mspc(const Tensor<float>& values, const std::filesystem::path& path) {
    if (values.rank() != 2)
        throw ShapeError("write_mspc: want a rank-2 matrix, got " + shape_str(values.shape()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    detail::write_bytes(out, "MSPC", 4);
    const uint8_t version = 1;
    detail::write_bytes(out, &version, 1);
    detail::write_u32(out, static_cast<uint32_t>(values.dim(0)));
    detail::write_u32(out, static_cast<uint32_t>(values.dim(1)));
    for (int64_t i = 0; i < values.size(); ++i) detail::write_f32(out, values(i));
    if (!out) throw IoError("failed writing " + path.string());
}

Tensor<float> read_mspc(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[4];
    detail::read_bytes(in, magic, 4, "MSPC magic");
    if (std::string_view(magic, 4) != "MSPC")
        throw FormatError(path.string() + ": not an MSPC file");
    uint8_t version;
    detail::read_bytes(in, &version, 1, "MSPC version");
    if (version != 1)
        throw FormatError(path.string() + ": unsupported MSPC version " + std::to_string(version));
    const uint32_t rows = detail::read_u32(in, "MSPC rows");
    const uint32_t cols = detail::read_u32(in, "MSPC cols");
    if (rows == 0 || cols == 0) throw FormatError(path.string() + ": empty spectrogram");
    Tensor<float> out = Tensor<float>::zeros({static_cast<int64_t>(rows), static_cast<int64_t>(cols)});
    for (int64_t i = 0; i < out.size(); ++i) out(i) = detail::read_f32(in, "MSPC value");
    return out;
}

}  // namespace drumscribe
