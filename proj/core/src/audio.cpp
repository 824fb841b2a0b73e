#include "drumscribe/audio.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "drumscribe/detail/binary_io.hpp"

namespace drumscribe {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatIeeeFloat = 3;

std::string codec_tag_name(uint16_t tag) {
    switch (tag) {
        case 2: return "adpcm";
        case 6: return "a-law";
        case 7: return "mu-law";
        case 85: return "mp3";
        case 0xFFFE: return "extensible";
        default: return "unknown";
    }
}

struct FmtChunk {
    uint16_t format = 0;
    uint16_t channels = 0;
    uint32_t sample_rate = 0;
    uint16_t bits = 0;
    bool seen = false;
};

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char tag[4];
    detail::read_bytes(in, tag, 4, "RIFF header");
    if (std::string_view(tag, 4) != "RIFF")
        throw FormatError(path.string() + ": not a RIFF file");
    detail::read_u32(in, "RIFF size");
    detail::read_bytes(in, tag, 4, "WAVE header");
    if (std::string_view(tag, 4) != "WAVE")
        throw FormatError(path.string() + ": RIFF file is not WAVE");

    FmtChunk fmt;
    std::vector<float> samples;
    bool have_data = false;

    while (in.peek() != EOF) {
        char id[4];
        detail::read_bytes(in, id, 4, "chunk id");
        const uint32_t size = detail::read_u32(in, "chunk size");
        const std::string_view chunk(id, 4);

        if (chunk == "fmt ") {
            if (size < 16) throw FormatError(path.string() + ": fmt chunk too short");
            fmt.format = detail::read_u16(in, "format tag");
            fmt.channels = detail::read_u16(in, "channel count");
            fmt.sample_rate = detail::read_u32(in, "sample rate");
            detail::read_u32(in, "byte rate");
            detail::read_u16(in, "block align");
            fmt.bits = detail::read_u16(in, "bits per sample");
            fmt.seen = true;
            in.seekg(size - 16 + (size % 2), std::ios::cur);
        } else if (chunk == "data") {
            if (!fmt.seen) throw FormatError(path.string() + ": data chunk before fmt");
            if (fmt.format != kFormatPcm && fmt.format != kFormatIeeeFloat)
                throw UnsupportedCodecError(path.string() + ": unsupported WAV codec tag " +
                                            std::to_string(fmt.format) + " (" +
                                            codec_tag_name(fmt.format) +
                                            "); only PCM16 and float32 are supported");
            if (fmt.format == kFormatPcm && fmt.bits != 16)
                throw UnsupportedCodecError(path.string() + ": unsupported WAV codec pcm-" +
                                            std::to_string(fmt.bits) +
                                            "; only PCM16 and float32 are supported");
            if (fmt.format == kFormatIeeeFloat && fmt.bits != 32)
                throw UnsupportedCodecError(path.string() + ": unsupported WAV codec float-" +
                                            std::to_string(fmt.bits) +
                                            "; only PCM16 and float32 are supported");
            if (fmt.channels != 1 && fmt.channels != 2)
                throw FormatError(path.string() + ": " + std::to_string(fmt.channels) +
                                  " channels; only mono and stereo are supported");

            const uint32_t bytes_per_sample = fmt.bits / 8;
            const uint32_t frame_bytes = bytes_per_sample * fmt.channels;
            if (frame_bytes == 0 || size % frame_bytes != 0)
                throw FormatError(path.string() + ": data size is not a whole number of frames");
            const uint32_t n_frames = size / frame_bytes;
            samples.reserve(n_frames);
            for (uint32_t f = 0; f < n_frames; ++f) {
                float acc = 0.0f;
                for (uint16_t c = 0; c < fmt.channels; ++c) {
                    float v;
                    if (fmt.format == kFormatPcm)
                        v = static_cast<float>(detail::read_i16(in, "sample")) / 32768.0f;
                    else
                        v = detail::read_f32(in, "sample");
                    acc += v;
                }
                samples.push_back(acc / static_cast<float>(fmt.channels));
            }
            if (size % 2) in.seekg(1, std::ios::cur);
            have_data = true;
        } else {
            in.seekg(size + (size % 2), std::ios::cur);
            if (!in) throw FormatError(path.string() + ": truncated chunk '" + std::string(chunk) + "'");
        }
    }

    if (!fmt.seen) throw FormatError(path.string() + ": missing fmt chunk");
    if (!have_data) throw FormatError(path.string() + ": missing data chunk");
    if (samples.empty()) throw FormatError(path.string() + ": no audio frames");
    if (fmt.sample_rate == 0) throw FormatError(path.string() + ": zero sample rate");

    AudioClip clip;
    clip.samples = std::move(samples);
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    return clip;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    const uint32_t n = static_cast<uint32_t>(clip.samples.size());
    const uint32_t data_bytes = n * 4;
    // RIFF payload: "WAVE" + fmt(8+16) + fact(8+4) + data(8+data_bytes)
    const uint32_t riff_size = 4 + 24 + 12 + 8 + data_bytes;

    detail::write_bytes(out, "RIFF", 4);
    detail::write_u32(out, riff_size);
    detail::write_bytes(out, "WAVE", 4);

    detail::write_bytes(out, "fmt ", 4);
    detail::write_u32(out, 16);
    detail::write_u16(out, kFormatIeeeFloat);
    detail::write_u16(out, 1);  // mono
    detail::write_u32(out, static_cast<uint32_t>(clip.sample_rate));
    detail::write_u32(out, static_cast<uint32_t>(clip.sample_rate) * 4);
    detail::write_u16(out, 4);   // block align
    detail::write_u16(out, 32);  // bits per sample

    // Non-PCM WAVs carry a fact chunk with the frame count.
    detail::write_bytes(out, "fact", 4);
    detail::write_u32(out, 4);
    detail::write_u32(out, n);

    detail::write_bytes(out, "data", 4);
    detail::write_u32(out, data_bytes);
    for (float s : clip.samples) detail::write_f32(out, s);

    if (!out) throw IoError("failed writing " + path.string());
}

AudioClip resample_linear(const AudioClip& clip, int target_hz) {
    if (target_hz <= 0) throw ConfigError("resample target rate must be positive");
    if (target_hz == clip.sample_rate) return clip;

    const int64_t len = static_cast<int64_t>(clip.samples.size());
    const int64_t out_len =
        (len * target_hz + clip.sample_rate - 1) / clip.sample_rate;  // ceil
    AudioClip out;
    out.sample_rate = target_hz;
    out.samples.resize(static_cast<size_t>(out_len));
    const double step = static_cast<double>(clip.sample_rate) / static_cast<double>(target_hz);
    for (int64_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * step;
        int64_t idx = static_cast<int64_t>(pos);
        if (idx > len - 1) idx = len - 1;
        const int64_t next = std::min(idx + 1, len - 1);
        const double frac = pos - static_cast<double>(idx);
        const double v = static_cast<double>(clip.samples[static_cast<size_t>(idx)]) +
                         frac * (static_cast<double>(clip.samples[static_cast<size_t>(next)]) -
                                 static_cast<double>(clip.samples[static_cast<size_t>(idx)]));
        out.samples[static_cast<size_t>(i)] = static_cast<float>(v);
    }
    return out;
}

}  // namespace drumscribe
