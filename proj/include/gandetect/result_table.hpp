#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gandetect {

inline constexpr const char* kVersion = "0.1.0";

/// Where a table came from. Emitted as `# key=value` comment lines.
struct Provenance {
    std::string version = kVersion;
    std::uint64_t seed = 0;
    std::string config_fingerprint;
    std::string dataset_fingerprint;
    std::size_t images_per_class = 0;  // evaluated per class per condition

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ResultRow {
    std::string condition;
    std::string parameter;
    std::optional<int> qf;  // JPEG quality applied after the condition, if any
    std::string detector;
    double accuracy = 0;
    double real_accuracy = 0;  // fraction of real images scored < 0.5
    double gan_accuracy = 0;   // fraction of GAN images scored >= 0.5
    std::size_t count = 0;
    bool failed = false;
    std::string error;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
    std::string title;
    Provenance provenance;
    std::vector<ResultRow> rows;
    /// Named scalars derived from the rows (for example the matched minus
    /// mismatched JPEG accuracy gap).
    std::vector<std::pair<std::string, double>> summary;

    std::vector<const ResultRow*> failed_rows() const;

    friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

/// Provenance and summary as `#` comments, then a tab-separated header and
/// one record per row. Accuracies use four decimals.
void write_tsv(const ResultTable& table, std::ostream& out);
ResultTable read_tsv(std::istream& in);

/// Space-aligned rendering with accuracies in percent.
void render_aligned(const ResultTable& table, std::ostream& out);

void write_provenance(const Provenance& provenance, std::ostream& out);

}  // namespace gandetect
