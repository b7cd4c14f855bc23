#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gandetect/cooccurrence.hpp"
#include "gandetect/image.hpp"

namespace gandetect {

/// Which tensor a detector consumes.
enum class Detector { CrossCoNet, CoNet };

std::string_view to_string(Detector detector) noexcept;
Detector parse_detector(std::string_view text);
int detector_channels(Detector detector) noexcept;

/// Co-occurrence extraction settings shared by training and evaluation.
struct FeatureSpec {
    Detector detector = Detector::CrossCoNet;
    OffsetSpec offsets;
    Normalization normalization = Normalization::PerSliceSum;

    int channels() const noexcept { return detector_channels(detector); }
    CooccurrenceTensor extract(const ImageBuffer& image) const;
};

/// Content address of a tensor: SHA-256 over the image dimensions and
/// samples, the offsets, the normalization tag and the channel count.
std::string feature_key(const ImageBuffer& image, const FeatureSpec& spec);

/// Directory of `<key>.coocc` tensor files. Entries are immutable; a key
/// either resolves to the tensor it names or is absent, so no timestamp
/// logic is involved. Writes go through a temporary file and a rename and
/// are safe from concurrent workers.
class FeatureCache {
public:
    explicit FeatureCache(std::filesystem::path directory);

    /// Cache rooted at $GANDETECT_CACHE_DIR, or nullopt when it is unset or empty.
    static std::optional<FeatureCache> from_environment();

    const std::filesystem::path& directory() const noexcept { return directory_; }
    std::filesystem::path path_for(const std::string& key) const;

    std::optional<CooccurrenceTensor> find(const std::string& key) const;
    void store(const std::string& key, const CooccurrenceTensor& tensor) const;

    /// Cached extraction; unreadable entries are recomputed and replaced.
    CooccurrenceTensor extract(const ImageBuffer& image, const FeatureSpec& spec) const;

private:
    std::filesystem::path directory_;
};

inline constexpr const char* kCacheDirVariable = "GANDETECT_CACHE_DIR";

}  // namespace gandetect
