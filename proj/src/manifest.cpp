#include "gandetect/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gandetect/errors.hpp"
#include "gandetect/random.hpp"

namespace gandetect {

namespace {

constexpr std::string_view kManifestFormat = "gandetect-manifest";
constexpr int kManifestVersion = 1;

std::size_t rounded_share(double ratio, std::size_t n) {
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

std::string lowercase_extension(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

}  // namespace

std::string_view to_string(Label label) noexcept {
    return label == Label::Real ? "real" : "gan";
}

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Label parse_label(std::string_view text) {
    if (text == "real") return Label::Real;
    if (text == "gan") return Label::Gan;
    throw ConfigError("unknown label '" + std::string(text) + "' (expected real or gan)");
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "val") return Split::Val;
    if (text == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(text) + "' (expected train, val or test)");
}

std::vector<ManifestEntry> DatasetManifest::select(Split split) const {
    std::vector<ManifestEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [&](const ManifestEntry& e) { return e.split == split; });
    return out;
}

std::vector<ManifestEntry> DatasetManifest::select(Split split, Label label) const {
    std::vector<ManifestEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [&](const ManifestEntry& e) { return e.split == split && e.label == label; });
    return out;
}

void DatasetManifest::validate() const {
    std::set<std::string_view> seen;
    for (const auto& e : entries) {
        if (e.path.empty()) throw ConfigError("manifest entry with empty path");
        if (e.path.find_first_of("\t\n\r") != std::string::npos) {
            throw ConfigError("manifest path contains a tab or newline: " + e.path);
        }
        if (!seen.insert(e.path).second) throw ConfigError("duplicate manifest path: " + e.path);
    }
}

DatasetManifest build_split(const std::vector<LabeledPath>& entries, SplitRatios ratios, std::uint64_t seed) {
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0) {
        throw ConfigError("split ratios must be non-negative");
    }
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1");
    }

    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.ratios = ratios;

    for (const Label label : {Label::Real, Label::Gan}) {
        std::vector<std::string> paths;
        for (const auto& e : entries) {
            if (e.label == label) paths.push_back(e.path);
        }
        if (paths.empty()) {
            throw ConfigError("class '" + std::string(to_string(label)) + "' has no entries");
        }
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
        shuffle_in_place(std::span<std::string>(paths), rng);

        const std::size_t n = paths.size();
        const std::size_t n_train = std::min(n, rounded_share(ratios.train, n));
        const std::size_t n_val = std::min(n - n_train, rounded_share(ratios.val, n));
        for (std::size_t i = 0; i < n; ++i) {
            const Split split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
            manifest.entries.push_back({std::move(paths[i]), label, split});
        }
    }
    manifest.validate();
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
    manifest.validate();
    nlohmann::json header = {
        {"format", kManifestFormat},
        {"version", kManifestVersion},
        {"seed", manifest.seed},
        {"ratios", {manifest.ratios.train, manifest.ratios.val, manifest.ratios.test}},
    };
    out << header.dump() << '\n';
    for (const auto& e : manifest.entries) {
        out << e.path << '\t' << to_string(e.label) << '\t' << to_string(e.split) << '\n';
    }
}

DatasetManifest read_manifest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("manifest is empty");

    DatasetManifest manifest;
    try {
        const auto header = nlohmann::json::parse(line);
        if (header.at("format").get<std::string>() != kManifestFormat) {
            throw ConfigError("not a gandetect manifest");
        }
        if (header.at("version").get<int>() != kManifestVersion) {
            throw ConfigError("unsupported manifest version");
        }
        manifest.seed = header.at("seed").get<std::uint64_t>();
        const auto& r = header.at("ratios");
        manifest.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed manifest header: ") + e.what());
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
            throw ConfigError("manifest line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
        }
        manifest.entries.push_back({line.substr(0, t1),
                                    parse_label(std::string_view(line).substr(t1 + 1, t2 - t1 - 1)),
                                    parse_split(std::string_view(line).substr(t2 + 1))});
    }
    manifest.validate();
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path.string() + ": cannot open manifest for writing");
    write_manifest(manifest, out);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open manifest");
    return read_manifest(in);
}

std::vector<std::string> list_images(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw ConfigError(directory.string() + ": not a directory");
    }
    std::vector<std::string> out;
    for (const auto& item : std::filesystem::recursive_directory_iterator(directory)) {
        if (!item.is_regular_file()) continue;
        const auto ext = lowercase_extension(item.path());
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(item.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace gandetect
