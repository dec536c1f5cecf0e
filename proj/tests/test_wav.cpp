#include "doctest.h"

#include "core/error.hpp"
#include "core/wav.hpp"

#include <optional>
#include <filesystem>
#include <fstream>
#include <unistd.h>

using namespace piano;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const auto dir = fs::temp_directory_path() / ("piano_wav_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

template <class T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

// Hand-built PCM header with arbitrary format fields.
void write_raw(const fs::path& p, std::uint16_t format, std::uint16_t channels, std::uint16_t bits) {
    std::ofstream out(p, std::ios::binary);
    const std::uint32_t data_bytes = 8;
    out.write("RIFF", 4);
    put<std::uint32_t>(out, 36 + data_bytes);
    out.write("WAVEfmt ", 8);
    put<std::uint32_t>(out, 16);
    put<std::uint16_t>(out, format);
    put<std::uint16_t>(out, channels);
    put<std::uint32_t>(out, 44100);
    put<std::uint32_t>(out, 44100u * channels * bits / 8);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(channels * bits / 8));
    put<std::uint16_t>(out, bits);
    out.write("data", 4);
    put<std::uint32_t>(out, data_bytes);
    for (std::uint32_t i = 0; i < data_bytes; ++i) out.put(0);
}

std::optional<ErrorCode> read_code(const fs::path& p) {
    try {
        read_wav(p);
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

}  // namespace

TEST_SUITE("wav") {
    TEST_CASE("mono 16-bit round trip") {
        const auto p = temp_dir() / "rt.wav";
        std::vector<std::int16_t> s{0, 1, -1, 32767, -32768, 1234};
        write_wav(p, s, 48000);
        const auto back = read_wav(p);
        CHECK(back.sample_rate == 48000);
        CHECK(back.samples == s);
        CHECK(fs::file_size(p) == 44 + 2 * s.size());
    }

    TEST_CASE("hand-built mono header is accepted") {
        const auto p = temp_dir() / "mono.wav";
        write_raw(p, 1, 1, 16);
        CHECK(read_wav(p).samples.size() == 4);
    }

    TEST_CASE("other formats are rejected") {
        const auto dir = temp_dir();
        write_raw(dir / "stereo.wav", 1, 2, 16);
        write_raw(dir / "eight.wav", 1, 1, 8);
        write_raw(dir / "float.wav", 3, 1, 32);
        CHECK(read_code(dir / "stereo.wav") == ErrorCode::Io);
        CHECK(read_code(dir / "eight.wav") == ErrorCode::Io);
        CHECK(read_code(dir / "float.wav") == ErrorCode::Io);
        CHECK(read_code(dir / "missing.wav") == ErrorCode::Io);
        std::ofstream(dir / "junk.wav") << "not a wav file at all";
        CHECK(read_code(dir / "junk.wav") == ErrorCode::Io);
        fs::remove_all(dir);
    }
}
