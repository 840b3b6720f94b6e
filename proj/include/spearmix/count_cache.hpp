#ifndef SPEARMIX_COUNT_CACHE_HPP
#define SPEARMIX_COUNT_CACHE_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "spearmix/common.hpp"
#include "spearmix/distance_counts.hpp"
#include "spearmix/rate_function.hpp"

namespace spearmix {

inline const char* to_string(Provenance p) { return p == Provenance::exact ? "exact" : "approx"; }

inline std::string count_table_filename(int n, Provenance p) {
    return "spearman_counts_n" + std::to_string(n) + "_" + to_string(p) + ".txt";
}

namespace detail {

inline std::string format_log_count(double v) {
    if (v == neg_inf) return "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_log_count(const std::string& tok) {
    if (tok == "-inf" || tok == "-Inf" || tok == "-INF") return neg_inf;
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw error("count table: bad log count '" + tok + "'");
    return v;
}

} // namespace detail

/// Write a count table: a header line "n <n> provenance <exact|approx>",
/// then one line per distance "<d> <log count>" (exact tables append the
/// integer count in decimal).
inline void write_count_table(const DistanceDistribution& dist, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw error("count table: cannot open " + file.string() + " for writing");
    out << "n " << dist.n << " provenance " << to_string(dist.provenance) << "\n";
    for (std::size_t h = 0; h < dist.size(); ++h) {
        out << dist.distance_at(h) << ' ' << detail::format_log_count(dist.log_counts[h]);
        if (dist.provenance == Provenance::exact) out << ' ' << int128_to_string(dist.counts[h]);
        out << '\n';
    }
    if (!out) throw error("count table: write failed for " + file.string());
}

inline DistanceDistribution read_count_table(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw error("count table: cannot open " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw error("count table: empty file " + file.string());
    std::istringstream hs(header);
    std::string key1, key2, prov;
    int n = 0;
    if (!(hs >> key1 >> n >> key2 >> prov) || key1 != "n" || key2 != "provenance")
        throw error("count table: bad header in " + file.string());

    DistanceDistribution dist;
    dist.n = n;
    if (prov == "exact")
        dist.provenance = Provenance::exact;
    else if (prov == "approx")
        dist.provenance = Provenance::approximate;
    else
        throw error("count table: unknown provenance '" + prov + "'");

    const std::size_t expected = static_cast<std::size_t>(max_spearman_distance(n) / 2) + 1;
    dist.log_counts.reserve(expected);
    if (dist.provenance == Provenance::exact) dist.counts.reserve(expected);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        long long d = 0;
        std::string logtok;
        if (!(ls >> d >> logtok)) throw error("count table: bad line '" + line + "'");
        if (d != 2 * static_cast<long long>(dist.log_counts.size()))
            throw error("count table: out-of-order distance " + std::to_string(d));
        dist.log_counts.push_back(detail::parse_log_count(logtok));
        if (dist.provenance == Provenance::exact) {
            std::string counttok;
            if (!(ls >> counttok)) throw error("count table: exact row missing integer count");
            dist.counts.push_back(int128_from_string(counttok));
        }
    }
    if (dist.log_counts.size() != expected)
        throw error("count table: expected " + std::to_string(expected) + " rows, got " +
                    std::to_string(dist.log_counts.size()));
    return dist;
}

/// Exact table for n, loaded from the cache directory when present, computed
/// by the Ryser engine and persisted otherwise.
inline DistanceDistribution load_or_build_exact(int n, const std::optional<std::filesystem::path>& cache_dir,
                                                int n_exact_max = 14) {
    if (cache_dir) {
        const auto file = *cache_dir / count_table_filename(n, Provenance::exact);
        if (std::filesystem::exists(file)) {
            auto dist = read_count_table(file);
            if (dist.n == n && dist.provenance == Provenance::exact) return dist;
        }
    }
    auto dist = exact_counts(n, n_exact_max);
    if (cache_dir) {
        std::filesystem::create_directories(*cache_dir);
        write_count_table(dist, *cache_dir / count_table_filename(n, Provenance::exact));
    }
    return dist;
}

/// Crossover rule: exact tables up to the ceiling, the rate-function
/// approximation above it.
inline DistanceDistribution counts_for(int n, const std::optional<std::filesystem::path>& cache_dir = {},
                                       int exact_ceiling = 14, const RateFit& fit = RateFit::reference(),
                                       bool renormalize = false) {
    if (n <= exact_ceiling) return load_or_build_exact(n, cache_dir, exact_ceiling);
    return approx_counts(n, fit.at(n), renormalize);
}

} // namespace spearmix

#endif // SPEARMIX_COUNT_CACHE_HPP
