#pragma once

// Minimal mono 16-bit PCM WAV reader/writer.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace piano {

struct WavData {
    std::uint32_t sample_rate = 44100;
    std::vector<std::int16_t> samples;
};

void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               std::uint32_t sample_rate);

// Accepts only mono 16-bit PCM; throws ErrorCode::Io otherwise.
WavData read_wav(const std::filesystem::path& path);

}  // namespace piano
