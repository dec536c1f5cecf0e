#include "core/wav.hpp"

#include "core/error.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace piano {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff),
                                static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

void put_u16(std::ostream& out, std::uint16_t v) {
    const std::array<char, 2> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b.data(), 2);
}

std::uint32_t get_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

[[noreturn]] void io_error(const std::filesystem::path& path, const char* what) {
    throw Error(ErrorCode::Io, path.string() + ": " + what);
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               std::uint32_t sample_rate) {
    std::ofstream out(path, std::ios::binary);
    if (!out) io_error(path, "cannot open for writing");
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, sample_rate);
    put_u32(out, sample_rate * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.write("data", 4);
    put_u32(out, data_bytes);
    for (std::int16_t s : samples) put_u16(out, static_cast<std::uint16_t>(s));
    if (!out) io_error(path, "write failed");
}

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error(path, "cannot open for reading");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        io_error(path, "not a RIFF/WAVE file");

    WavData wav;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = get_u32(chunk + 4);
        if (pos + 8 + size > bytes.size()) io_error(path, "truncated chunk");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) io_error(path, "short fmt chunk");
            const auto format = get_u16(chunk + 8);
            const auto channels = get_u16(chunk + 10);
            const auto bits = get_u16(chunk + 22);
            if (format != 1 || channels != 1 || bits != 16)
                io_error(path, "only mono 16-bit PCM is supported");
            wav.sample_rate = get_u32(chunk + 12);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) io_error(path, "data chunk before fmt chunk");
            wav.samples.resize(size / 2);
            for (std::size_t i = 0; i < wav.samples.size(); ++i)
                wav.samples[i] = static_cast<std::int16_t>(get_u16(chunk + 8 + 2 * i));
            return wav;
        }
        pos += 8 + size + (size & 1);
    }
    io_error(path, "no data chunk");
}

}  // namespace piano
