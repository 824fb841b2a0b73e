#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "drumscribe/audio.hpp"
#include "drumscribe/errors.hpp"

#include "tmpdir.hpp"

using namespace drumscribe;

namespace {

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v & 0xff));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<uint8_t>& b, const char* tag) {
    b.insert(b.end(), tag, tag + 4);
}

/// Minimal PCM WAV builder so the reader is tested against bytes assembled
/// by hand rather than by our own writer.
std::vector<uint8_t> build_wav(uint16_t format, uint16_t channels, uint32_t rate,
                               uint16_t bits, const std::vector<uint8_t>& payload) {
    std::vector<uint8_t> b;
    put_tag(b, "RIFF");
    put_u32(b, 4 + 24 + 8 + static_cast<uint32_t>(payload.size()));
    put_tag(b, "WAVE");
    put_tag(b, "fmt ");
    put_u32(b, 16);
    put_u16(b, format);
    put_u16(b, channels);
    put_u32(b, rate);
    put_u32(b, rate * channels * bits / 8);
    put_u16(b, static_cast<uint16_t>(channels * bits / 8));
    put_u16(b, bits);
    put_tag(b, "data");
    put_u32(b, static_cast<uint32_t>(payload.size()));
    b.insert(b.end(), payload.begin(), payload.end());
    return b;
}

void write_bytes(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<uint8_t> pcm16_payload(const std::vector<int16_t>& samples) {
    std::vector<uint8_t> payload;
    for (int16_t s : samples) put_u16(payload, static_cast<uint16_t>(s));
    return payload;
}

}  // namespace

TEST_CASE("pcm16 mono wav decodes as sample/32768") {
    TmpDir tmp;
    const auto path = tmp / "mono.wav";
    write_bytes(path, build_wav(1, 1, 22050, 16, pcm16_payload({0, 16384, -16384, 32767, -32768})));
    AudioClip clip = read_wav(path);
    CHECK(clip.sample_rate == 22050);
    REQUIRE(clip.samples.size() == 5);
    CHECK(clip.samples[0] == 0.0f);
    CHECK(clip.samples[1] == doctest::Approx(0.5));
    CHECK(clip.samples[2] == doctest::Approx(-0.5));
    CHECK(clip.samples[3] == doctest::Approx(32767.0 / 32768.0));
    CHECK(clip.samples[4] == doctest::Approx(-1.0));
    CHECK(clip.duration_s() == doctest::Approx(5.0 / 22050.0));
}

TEST_CASE("stereo wav averages channels to mono") {
    TmpDir tmp;
    const auto path = tmp / "stereo.wav";
    write_bytes(path, build_wav(1, 2, 44100, 16, pcm16_payload({16384, -16384, 8192, 8192})));
    AudioClip clip = read_wav(path);
    REQUIRE(clip.samples.size() == 2);
    CHECK(clip.samples[0] == doctest::Approx(0.0));
    CHECK(clip.samples[1] == doctest::Approx(0.25));
}

TEST_CASE("float32 wav round-trips bit-exactly through write_wav/read_wav") {
    TmpDir tmp;
    const auto path = tmp / "f32.wav";
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.samples = {0.0f, 0.25f, -0.75f, 1.0f, -1.0f, 0.1234567f};
    write_wav(clip, path);
    AudioClip back = read_wav(path);
    CHECK(back.sample_rate == clip.sample_rate);
    REQUIRE(back.samples.size() == clip.samples.size());
    for (size_t i = 0; i < clip.samples.size(); ++i) CHECK(back.samples[i] == clip.samples[i]);
}

TEST_CASE("wav writes are byte-stable") {
    TmpDir tmp;
    AudioClip clip;
    clip.sample_rate = 8000;
    for (int i = 0; i < 100; ++i) clip.samples.push_back(static_cast<float>(i) / 100.0f);
    write_wav(clip, tmp / "a.wav");
    write_wav(clip, tmp / "b.wav");
    std::ifstream fa(tmp / "a.wav", std::ios::binary), fb(tmp / "b.wav", std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK_FALSE(sa.empty());
}

TEST_CASE("unsupported codecs are named in the error") {
    TmpDir tmp;
    const auto path = tmp / "adpcm.wav";
    write_bytes(path, build_wav(0x0002, 1, 44100, 4, {0, 0, 0, 0}));
    CHECK_THROWS_AS(read_wav(path), UnsupportedCodecError);
    try {
        read_wav(path);
    } catch (const UnsupportedCodecError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("adpcm") != std::string::npos);
    }

    const auto mp3 = tmp / "mp3.wav";
    write_bytes(mp3, build_wav(0x0055, 1, 44100, 16, {0, 0}));
    CHECK_THROWS_AS(read_wav(mp3), UnsupportedCodecError);
}

TEST_CASE("malformed wavs raise FormatError") {
    TmpDir tmp;

    const auto truncated = tmp / "truncated.wav";
    auto bytes = build_wav(1, 1, 44100, 16, pcm16_payload({1, 2, 3, 4}));
    bytes.resize(20);
    write_bytes(truncated, bytes);
    CHECK_THROWS_AS(read_wav(truncated), FormatError);

    const auto not_riff = tmp / "not_riff.wav";
    auto junk = build_wav(1, 1, 44100, 16, pcm16_payload({1}));
    junk[0] = 'X';
    write_bytes(not_riff, junk);
    CHECK_THROWS_AS(read_wav(not_riff), FormatError);

    const auto many_channels = tmp / "many.wav";
    write_bytes(many_channels, build_wav(1, 3, 44100, 16, pcm16_payload({1, 2, 3})));
    CHECK_THROWS_AS(read_wav(many_channels), FormatError);

    CHECK_THROWS_AS(read_wav(tmp / "missing.wav"), IoError);
}

TEST_CASE("wav without a data chunk raises FormatError") {
    TmpDir tmp;
    std::vector<uint8_t> b;
    put_tag(b, "RIFF");
    put_u32(b, 4 + 24);
    put_tag(b, "WAVE");
    put_tag(b, "fmt ");
    put_u32(b, 16);
    put_u16(b, 1);
    put_u16(b, 1);
    put_u32(b, 44100);
    put_u32(b, 88200);
    put_u16(b, 2);
    put_u16(b, 16);
    const auto path = tmp / "nodata.wav";
    write_bytes(path, b);
    CHECK_THROWS_AS(read_wav(path), FormatError);
}

TEST_CASE("reader skips unknown chunks") {
    TmpDir tmp;
    std::vector<uint8_t> b;
    const auto payload = pcm16_payload({16384});
    put_tag(b, "RIFF");
    put_u32(b, 4 + 24 + 12 + 8 + static_cast<uint32_t>(payload.size()));
    put_tag(b, "WAVE");
    put_tag(b, "fmt ");
    put_u32(b, 16);
    put_u16(b, 1);
    put_u16(b, 1);
    put_u32(b, 44100);
    put_u32(b, 88200);
    put_u16(b, 2);
    put_u16(b, 16);
    put_tag(b, "LIST");
    put_u32(b, 4);
    put_tag(b, "INFO");
    put_tag(b, "data");
    put_u32(b, static_cast<uint32_t>(payload.size()));
    b.insert(b.end(), payload.begin(), payload.end());
    const auto path = tmp / "chunky.wav";
    write_bytes(path, b);
    AudioClip clip = read_wav(path);
    REQUIRE(clip.samples.size() == 1);
    CHECK(clip.samples[0] == doctest::Approx(0.5));
}

TEST_CASE("resample_linear is identity at the same rate") {
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.samples = {0.1f, 0.2f, 0.3f};
    AudioClip out = resample_linear(clip, 44100);
    REQUIRE(out.samples.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK(out.samples[i] == clip.samples[i]);
}

TEST_CASE("resample_linear interpolates a ramp exactly") {
    AudioClip clip;
    clip.sample_rate = 100;
    clip.samples = {0.0f, 1.0f, 2.0f, 3.0f};
    AudioClip out = resample_linear(clip, 200);
    CHECK(out.sample_rate == 200);
    REQUIRE(out.samples.size() == 8);
    for (size_t i = 0; i < out.samples.size(); ++i) {
        const double expected = std::min(3.0, static_cast<double>(i) * 0.5);
        CHECK(out.samples[i] == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("resample_linear length follows ceil(len*target/src)") {
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.samples.assign(44100, 0.5f);
    AudioClip down = resample_linear(clip, 16000);
    CHECK(down.samples.size() == 16000);
    for (float s : down.samples) CHECK(s == doctest::Approx(0.5));

    AudioClip odd = clip;
    odd.samples.resize(12345);
    CHECK(resample_linear(odd, 22050).samples.size() ==
          static_cast<size_t>((12345ULL * 22050 + 44099) / 44100));

    CHECK_THROWS_AS(resample_linear(clip, 0), ConfigError);
    CHECK_THROWS_AS(resample_linear(clip, -5), ConfigError);
}
