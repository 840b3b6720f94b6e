#ifndef SPEARMIX_CSV_IO_HPP
#define SPEARMIX_CSV_IO_HPP

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "spearmix/common.hpp"
#include "spearmix/ranking.hpp"

namespace spearmix {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline bool is_na_token(const std::string& tok) {
    return tok.empty() || tok == "NA" || tok == "na" || tok == "Na" || tok == "N/A";
}

inline long long parse_int_field(const std::string& tok, const std::string& what, std::size_t row) {
    char* end = nullptr;
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
        throw error("csv row " + std::to_string(row) + ": " + what + " '" + tok + "' is not an integer");
    return v;
}

} // namespace detail

/// Parse a rankings CSV: a header of item labels (optionally ending in a
/// "freq" column), then one row per distinct observation with integer ranks
/// and NA (or empty) for unranked items. Duplicate rank vectors are
/// aggregated. Row numbers in error messages count data rows from 1.
inline RankingDataset parse_rankings_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw error("csv: empty input");
    auto header = detail::split_csv_line(line);
    bool has_freq = false;
    if (!header.empty()) {
        std::string last = header.back();
        for (auto& c : last) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (last == "freq" || last == "frequency" || last == "count") {
            has_freq = true;
            header.pop_back();
        }
    }
    const int n = static_cast<int>(header.size());
    if (n < 2) throw error("csv: need at least two item columns");

    RankingDataset::Builder builder;
    std::size_t row_number = 0;
    bool any_rows = false;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row_number;
        const auto fields = detail::split_csv_line(line);
        const std::size_t expected = static_cast<std::size_t>(n) + (has_freq ? 1 : 0);
        if (fields.size() != expected)
            throw error("csv row " + std::to_string(row_number) + ": expected " + std::to_string(expected) +
                        " fields, got " + std::to_string(fields.size()));
        std::vector<int> ranks(static_cast<std::size_t>(n), PartialRanking::missing);
        std::vector<char> seen(static_cast<std::size_t>(n) + 1, 0);
        int ranked = 0;
        for (int i = 0; i < n; ++i) {
            const auto& tok = fields[static_cast<std::size_t>(i)];
            if (detail::is_na_token(tok)) continue;
            const long long v = detail::parse_int_field(tok, "rank", row_number);
            if (v < 1 || v > n)
                throw error("csv row " + std::to_string(row_number) + ": rank " + std::to_string(v) +
                            " outside 1.." + std::to_string(n) + " for item '" + header[static_cast<std::size_t>(i)] + "'");
            if (seen[static_cast<std::size_t>(v)])
                throw error("csv row " + std::to_string(row_number) + ": duplicate rank " + std::to_string(v));
            seen[static_cast<std::size_t>(v)] = 1;
            ranks[static_cast<std::size_t>(i)] = static_cast<int>(v);
            ++ranked;
        }
        if (ranked == 0) throw error("csv row " + std::to_string(row_number) + ": no ranked items");
        long long freq = 1;
        if (has_freq) {
            freq = detail::parse_int_field(fields.back(), "freq", row_number);
            if (freq < 1) throw error("csv row " + std::to_string(row_number) + ": freq must be positive");
        }
        builder.add(PartialRanking(std::move(ranks)), freq);
        any_rows = true;
    }
    if (!any_rows) throw error("csv: no data rows");
    return builder.build(std::vector<std::string>(header.begin(), header.end()));
}

inline RankingDataset parse_rankings_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("csv: cannot open " + path.string());
    return parse_rankings_csv(in);
}

inline void write_rankings_csv(const RankingDataset& data, std::ostream& out) {
    for (int i = 0; i < data.n(); ++i) out << data.items()[static_cast<std::size_t>(i)] << ',';
    out << "freq\n";
    for (std::size_t l = 0; l < data.row_count(); ++l) {
        const auto& row = data.row(l);
        for (int i = 0; i < data.n(); ++i) {
            if (row.is_ranked(i))
                out << row.rank_of(i);
            else
                out << "NA";
            out << ',';
        }
        out << data.multiplicity(l) << '\n';
    }
}

inline void write_rankings_csv(const RankingDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw error("csv: cannot open " + path.string() + " for writing");
    write_rankings_csv(data, out);
}

/// Numeric matrix with a label header, e.g. quantitative profiles to be
/// converted into rankings.
struct LabeledMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
};

inline LabeledMatrix parse_matrix_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw error("csv: empty input");
    LabeledMatrix m;
    for (auto& tok : detail::split_csv_line(line)) m.labels.push_back(tok);
    if (m.labels.size() < 2) throw error("csv: need at least two columns");
    std::size_t row_number = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row_number;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != m.labels.size())
            throw error("csv row " + std::to_string(row_number) + ": expected " +
                        std::to_string(m.labels.size()) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& tok : fields) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                throw error("csv row " + std::to_string(row_number) + ": '" + tok + "' is not a number");
            row.push_back(v);
        }
        m.rows.push_back(std::move(row));
    }
    if (m.rows.empty()) throw error("csv: no data rows");
    return m;
}

inline LabeledMatrix parse_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("csv: cannot open " + path.string());
    return parse_matrix_csv(in);
}

} // namespace spearmix

#endif // SPEARMIX_CSV_IO_HPP
