#include "gandetect/feature_cache.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "gandetect/errors.hpp"
#include "gandetect/hashing.hpp"

namespace gandetect {

std::string_view to_string(Detector detector) noexcept {
    return detector == Detector::CrossCoNet ? "cross_conet" : "conet";
}

Detector parse_detector(std::string_view text) {
    if (text == "cross_conet" || text == "cross-conet") return Detector::CrossCoNet;
    if (text == "conet") return Detector::CoNet;
    throw ConfigError("unknown detector '" + std::string(text) + "' (expected cross_conet or conet)");
}

int detector_channels(Detector detector) noexcept {
    return detector == Detector::CrossCoNet ? 6 : 3;
}

CooccurrenceTensor FeatureSpec::extract(const ImageBuffer& image) const {
    if (detector == Detector::CrossCoNet) return build_tensor(image, offsets, normalization);
    return build_conet_tensor(image, offsets.delta, normalization);
}

std::string feature_key(const ImageBuffer& image, const FeatureSpec& spec) {
    Sha256 h;
    h.update("gandetect-feature-v1");
    h.update_u64(static_cast<std::uint64_t>(image.width()));
    h.update_u64(static_cast<std::uint64_t>(image.height()));
    h.update(image.samples());
    const auto signed_u64 = [](int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); };
    h.update_u64(signed_u64(spec.offsets.delta.dx));
    h.update_u64(signed_u64(spec.offsets.delta.dy));
    // The cross-band offset only matters when cross-band slices exist.
    const bool cross = spec.channels() == 6;
    h.update_u64(cross ? signed_u64(spec.offsets.delta_cross.dx) : 0);
    h.update_u64(cross ? signed_u64(spec.offsets.delta_cross.dy) : 0);
    h.update_u64(static_cast<std::uint64_t>(spec.normalization));
    h.update_u64(static_cast<std::uint64_t>(spec.channels()));
    return h.hex();
}

FeatureCache::FeatureCache(std::filesystem::path directory) : directory_(std::move(directory)) {
    std::error_code ec;
    std::filesystem::create_directories(directory_, ec);
    if (ec) throw ConfigError("cannot create cache directory " + directory_.string() + ": " + ec.message());
}

std::optional<FeatureCache> FeatureCache::from_environment() {
    const char* dir = std::getenv(kCacheDirVariable);
    if (dir == nullptr || *dir == '\0') return std::nullopt;
    return FeatureCache(dir);
}

std::filesystem::path FeatureCache::path_for(const std::string& key) const {
    return directory_ / (key + ".coocc");
}

std::optional<CooccurrenceTensor> FeatureCache::find(const std::string& key) const {
    const auto path = path_for(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        return load_tensor(path);
    } catch (const Error&) {
        return std::nullopt;
    }
}

void FeatureCache::store(const std::string& key, const CooccurrenceTensor& tensor) const {
    static std::atomic<unsigned long long> counter{0};
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    const auto tmp = directory_ / (key + ".tmp." + std::to_string(tid) + "." + std::to_string(counter++));
    save_tensor(tensor, tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path_for(key), ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw CheckpointError("cannot publish cache entry " + path_for(key).string());
    }
}

CooccurrenceTensor FeatureCache::extract(const ImageBuffer& image, const FeatureSpec& spec) const {
    const auto key = feature_key(image, spec);
    if (auto hit = find(key)) {
        if (hit->channels() == spec.channels() && hit->normalization() == spec.normalization) return std::move(*hit);
    }
    auto tensor = spec.extract(image);
    store(key, tensor);
    return tensor;
}

}  // namespace gandetect
