#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gandetect {

enum class Label : int { Real = 0, Gan = 1 };
enum class Split : int { Train = 0, Val = 1, Test = 2 };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Split split) noexcept;
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

struct LabeledPath {
    std::string path;
    Label label = Label::Real;
};

struct ManifestEntry {
    std::string path;
    Label label = Label::Real;
    Split split = Split::Train;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;

    friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

/// Labeled image list partitioned into train/val/test.
///
/// Text form: one JSON header line carrying format, version, seed and ratios,
/// followed by one tab-separated `path<TAB>label<TAB>split` record per line.
struct DatasetManifest {
    std::uint64_t seed = 0;
    SplitRatios ratios;
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> select(Split split) const;
    std::vector<ManifestEntry> select(Split split, Label label) const;

    /// Throws ConfigError when paths repeat or a record is malformed.
    void validate() const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Stratified deterministic split.
///
/// Each class is shuffled independently with a generator seeded from `seed`
/// and cut into round(ratio * n) sized groups, the test group taking the
/// remainder. Output order is class-major (real first), then split order.
DatasetManifest build_split(const std::vector<LabeledPath>& entries, SplitRatios ratios, std::uint64_t seed);

void write_manifest(const DatasetManifest& manifest, std::ostream& out);
DatasetManifest read_manifest(std::istream& in);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Lists PNG/JPEG files (by extension) under a directory, sorted by path.
std::vector<std::string> list_images(const std::filesystem::path& directory);

}  // namespace gandetect
