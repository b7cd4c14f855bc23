#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "gandetect/network.hpp"

namespace gandetect {

// Checkpoint container, little-endian throughout:
//   magic "GDCKPT\0\0", u32 version,
//   config block: u32 in_channels, u32 input_size, 6 x u32 conv widths, u32 dense width,
//   f64 input gain,
//   string training fingerprint (u32 length + bytes),
//   layer table: u32 count, then per tensor: string name, u32 rank, rank x u32 dims,
//   f32 weights for every tensor in table order, then f32 momentum in the same order.
inline constexpr std::array<char, 8> kCheckpointMagic = {'G', 'D', 'C', 'K', 'P', 'T', '\0', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams<float> params;
    std::string train_fingerprint;
};

void write_checkpoint(std::ostream& out, const ModelParams<float>& params, const std::string& train_fingerprint);

/// Throws CheckpointError on a bad container and ShapeError when `expected`
/// is given and the stored configuration differs from it.
Checkpoint read_checkpoint(std::istream& in, const std::optional<ModelConfig>& expected = std::nullopt);

void save_model(const std::filesystem::path& path, const ModelParams<float>& params,
                const std::string& train_fingerprint);
Checkpoint load_model(const std::filesystem::path& path, const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace gandetect
