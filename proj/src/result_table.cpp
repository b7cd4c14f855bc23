#include "gandetect/result_table.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "gandetect/errors.hpp"

namespace gandetect {

namespace {

constexpr const char* kColumns[] = {"condition", "parameter", "qf",    "detector", "accuracy",
                                    "real_accuracy", "gan_accuracy", "count", "status"};

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
    return buf;
}

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("result table: bad number '" + s + "'");
    }
}

}  // namespace

std::vector<const ResultRow*> ResultTable::failed_rows() const {
    std::vector<const ResultRow*> out;
    for (const auto& r : rows) {
        if (r.failed) out.push_back(&r);
    }
    return out;
}

void write_provenance(const Provenance& p, std::ostream& out) {
    out << "# version=" << p.version << '\n'
        << "# seed=" << p.seed << '\n'
        << "# config_fingerprint=" << p.config_fingerprint << '\n'
        << "# dataset_fingerprint=" << p.dataset_fingerprint << '\n'
        << "# images_per_class=" << p.images_per_class << '\n';
}

void write_tsv(const ResultTable& table, std::ostream& out) {
    out << "# table=" << sanitize(table.title) << '\n';
    write_provenance(table.provenance, out);
    for (const auto& [name, value] : table.summary) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6f", value);
        out << "# summary." << name << '=' << buf << '\n';
    }
    for (std::size_t c = 0; c < std::size(kColumns); ++c) out << (c ? "\t" : "") << kColumns[c];
    out << '\n';
    for (const auto& r : table.rows) {
        out << sanitize(r.condition) << '\t' << sanitize(r.parameter) << '\t' << (r.qf ? std::to_string(*r.qf) : "-")
            << '\t' << r.detector << '\t';
        if (r.failed) {
            out << "-\t-\t-\t" << r.count << "\tfailed: " << sanitize(r.error) << '\n';
        } else {
            out << fixed4(r.accuracy) << '\t' << fixed4(r.real_accuracy) << '\t' << fixed4(r.gan_accuracy) << '\t'
                << r.count << "\tok\n";
        }
    }
}

ResultTable read_tsv(std::istream& in) {
    ResultTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const auto key = line.substr(2, eq - 2);
            const auto value = line.substr(eq + 1);
            if (key == "table") table.title = value;
            else if (key == "version") table.provenance.version = value;
            else if (key == "seed") table.provenance.seed = std::stoull(value);
            else if (key == "config_fingerprint") table.provenance.config_fingerprint = value;
            else if (key == "dataset_fingerprint") table.provenance.dataset_fingerprint = value;
            else if (key == "images_per_class") table.provenance.images_per_class = std::stoull(value);
            else if (key.rfind("summary.", 0) == 0) table.summary.emplace_back(key.substr(8), parse_double(value));
            continue;
        }
        const auto cells = split_tabs(line);
        if (!header_seen) {
            if (cells.size() != std::size(kColumns) || cells[0] != kColumns[0]) {
                throw ConfigError("result table: missing column header");
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != std::size(kColumns)) throw ConfigError("result table: wrong column count in '" + line + "'");
        ResultRow r;
        r.condition = cells[0];
        r.parameter = cells[1];
        if (cells[2] != "-") r.qf = static_cast<int>(parse_double(cells[2]));
        r.detector = cells[3];
        r.count = static_cast<std::size_t>(parse_double(cells[7]));
        if (cells[8] == "ok") {
            r.accuracy = parse_double(cells[4]);
            r.real_accuracy = parse_double(cells[5]);
            r.gan_accuracy = parse_double(cells[6]);
        } else {
            r.failed = true;
            r.error = cells[8].rfind("failed: ", 0) == 0 ? cells[8].substr(8) : cells[8];
        }
        table.rows.push_back(std::move(r));
    }
    if (!header_seen) throw ConfigError("result table: missing column header");
    return table;
}

void render_aligned(const ResultTable& table, std::ostream& out) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"Condition", "Parameter", "QF", "Detector", "Accuracy", "Real", "GAN", "N", "Status"});
    for (const auto& r : table.rows) {
        if (r.failed) {
            cells.push_back({r.condition, r.parameter, r.qf ? std::to_string(*r.qf) : "-", r.detector, "-", "-", "-",
                             std::to_string(r.count), "FAILED: " + r.error});
        } else {
            cells.push_back({r.condition, r.parameter, r.qf ? std::to_string(*r.qf) : "-", r.detector,
                             percent(r.accuracy), percent(r.real_accuracy), percent(r.gan_accuracy),
                             std::to_string(r.count), "ok"});
        }
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    if (!table.title.empty()) out << table.title << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string line;
        for (std::size_t c = 0; c < cells[i].size(); ++c) {
            if (c) line += "  ";
            line += cells[i][c];
            if (c + 1 < cells[i].size()) line.append(width[c] - cells[i][c].size(), ' ');
        }
        out << line << '\n';
        if (i == 0) out << std::string(line.size(), '-') << '\n';
    }
    for (const auto& [name, value] : table.summary) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.4f", value);
        out << name << ": " << buf << '\n';
    }
}

}  // namespace gandetect
