#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gandetect/image.hpp"

namespace gandetect {

enum class ChromaSubsampling { k420, k444 };

/// Decode a PNG or baseline JPEG file into 8-bit RGB.
///
/// The container is detected from the file signature, not the extension.
/// Grayscale, alpha-bearing and 16-bit PNGs are rejected with FormatError
/// rather than converted. Unreadable or corrupt files raise DecodeError
/// naming the path.
ImageBuffer decode_image(const std::filesystem::path& path);

/// Decode an in-memory PNG or JPEG stream. `origin` only labels error messages.
ImageBuffer decode_image_bytes(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& image, int quality,
                                      ChromaSubsampling subsampling = ChromaSubsampling::k420);

void write_png(const ImageBuffer& image, const std::filesystem::path& path);
void write_jpeg(const ImageBuffer& image, const std::filesystem::path& path, int quality,
                ChromaSubsampling subsampling = ChromaSubsampling::k420);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gandetect
