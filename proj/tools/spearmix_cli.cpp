// Command-line interface for Mallows-with-Spearman-distance inference:
// count tables, partition-function diagnostics, mixture fitting, simulation
// studies and rank transformation of quantitative profiles.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spearmix/spearmix.hpp"
#include "spearmix/result_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_grid(const std::string& spec) {
    // a:b:steps, inclusive linspace
    double lo = 0.0, hi = 0.0;
    int steps = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &steps) != 3 || steps < 1 || !(hi >= lo))
        throw spearmix::error("bad grid '" + spec + "', expected a:b:steps");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        grid.push_back(steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1));
    return grid;
}

std::vector<int> parse_int_range(const std::string& spec) {
    int lo = 0, hi = 0;
    if (std::sscanf(spec.c_str(), "%d:%d", &lo, &hi) != 2 || lo < 1 || hi < lo)
        throw spearmix::error("bad range '" + spec + "', expected a:b");
    std::vector<int> out;
    for (int g = lo; g <= hi; ++g) out.push_back(g);
    return out;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw spearmix::error("cannot open output file " + path);
    return file;
}

spearmix::BicConvention parse_bic_convention(const std::string& name) {
    if (name == "full") return spearmix::BicConvention::full;
    if (name == "continuous") return spearmix::BicConvention::continuous;
    throw spearmix::error("unknown BIC convention '" + name + "' (full|continuous)");
}

// ---------------------------------------------------------------------------

struct CountsArgs {
    int n = 0;
    bool exact = false;
    bool approx = false;
    bool renormalize = false;
    int ceiling = 14;
    std::string cache;
    std::string out;
};

int run_counts(const CountsArgs& a) {
    using namespace spearmix;
    std::optional<fs::path> cache;
    if (!a.cache.empty()) cache = fs::path(a.cache);

    DistanceDistribution dist;
    if (a.exact)
        dist = load_or_build_exact(a.n, cache, std::max(a.n, a.ceiling));
    else if (a.approx)
        dist = approx_counts(a.n, default_rate_coefficients(a.n), a.renormalize);
    else
        dist = counts_for(a.n, cache, a.ceiling, RateFit::reference(), a.renormalize);

    if (!a.out.empty()) write_count_table(dist, fs::path(a.out));

    double log_total = neg_inf;
    for (double lc : dist.log_counts) log_total = log_add(log_total, lc);
    std::cout << "n " << dist.n << "\nprovenance " << to_string(dist.provenance) << "\nd_max "
              << dist.d_max() << "\nentries " << dist.size() << "\nlog_total " << log_total
              << "\nlog_n_factorial " << log_factorial(dist.n) << "\n";
    if (dist.provenance == Provenance::exact) {
        int128 total = 0;
        for (const auto& c : dist.counts) total += c;
        std::cout << "total " << int128_to_string(total) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ZetaArgs {
    int n = 0;
    std::string grid = "0.01:1:100";
    std::string methods = "exact,new,vmf";
    int ceiling = 14;
    std::string cache;
    std::string out;
};

int run_zeta(const ZetaArgs& a) {
    using namespace spearmix;
    const auto grid = parse_grid(a.grid);
    bool want_exact = a.methods.find("exact") != std::string::npos;
    const bool want_new = a.methods.find("new") != std::string::npos;
    const bool want_vmf = a.methods.find("vmf") != std::string::npos;
    if (want_exact && a.n > a.ceiling) want_exact = false;

    std::optional<fs::path> cache;
    if (!a.cache.empty()) cache = fs::path(a.cache);
    std::optional<PartitionEvaluator> exact_ev, new_ev;
    if (want_exact) exact_ev.emplace(load_or_build_exact(a.n, cache, a.ceiling));
    if (want_new) new_ev.emplace(approx_counts(a.n, default_rate_coefficients(a.n)));

    std::ofstream file;
    std::ostream& out = open_output(file, a.out);
    out << "theta";
    if (want_exact) out << ",logZ_exact";
    if (want_new) out << (want_exact ? ",ratio_new" : ",logZ_new");
    if (want_vmf) out << (want_exact ? ",ratio_vmf" : ",logZ_vmf");
    out << "\n";
    out.precision(12);
    for (double theta : grid) {
        out << theta;
        double log_exact = 0.0;
        if (want_exact) {
            log_exact = exact_ev->log_partition(theta);
            out << ',' << log_exact;
        }
        if (want_new) {
            const double v = new_ev->log_partition(theta);
            out << ',' << (want_exact ? std::exp(v - log_exact) : v);
        }
        if (want_vmf) {
            const double v = vmf_log_partition(a.n, theta);
            out << ',' << (want_exact ? std::exp(v - log_exact) : v);
        }
        out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data;
    int g = 0;
    std::string g_range;
    long long partial_cap = 40320;
    int starts = 10;
    std::uint64_t seed = 1;
    double tol = 1e-6;
    int max_iter = 500;
    std::string bic_convention = "full";
    int ceiling = 14;
    std::string cache;
    bool responsibilities = false;
    std::string out;
};

int run_fit(const FitArgs& a) {
    using namespace spearmix;
    if (a.g <= 0 && a.g_range.empty()) throw error("fit: pass --g or --g-range");
    const auto data = parse_rankings_csv(fs::path(a.data));

    std::optional<fs::path> cache;
    if (!a.cache.empty()) cache = fs::path(a.cache);
    PartitionEvaluator ev(counts_for(data.n(), cache, a.ceiling));

    EmOptions opts;
    opts.completion_cap = a.partial_cap;
    opts.n_starts = a.starts;
    opts.seed = a.seed;
    opts.tol = a.tol;
    opts.max_iter = a.max_iter;
    opts.bic_convention = parse_bic_convention(a.bic_convention);

    FitResultDocument doc;
    if (!a.g_range.empty()) {
        const auto range = parse_int_range(a.g_range);
        const auto search = select_g(data, range, ev, opts);
        doc = make_fit_document(search.selected_fit(), data, opts, ev.provenance(), a.ceiling,
                                a.responsibilities);
        doc.g_range = search.g_range;
        doc.bic_curve = search.bic;
        doc.selected_g = search.selected_g;
    } else {
        const auto fit = em_fit_partial(data, a.g, ev, opts);
        doc = make_fit_document(fit, data, opts, ev.provenance(), a.ceiling, a.responsibilities);
    }

    std::ofstream file;
    std::ostream& out = open_output(file, a.out);
    out << json(doc).dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw spearmix::error("cannot open spec file " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto key = spearmix::detail::trim(line.substr(0, eq));
        const auto value = spearmix::detail::trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

int run_simulate(const std::string& spec_path, const std::string& out_path) {
    using namespace spearmix;
    const auto kv = parse_config(fs::path(spec_path));
    auto get = [&](const std::string& key, const std::string& fallback) {
        const auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };

    const std::string study = get("study", "scenario");
    json report;
    if (study == "thetaError") {
        ThetaErrorSpec spec;
        spec.n = std::stoi(get("n", "10"));
        spec.sample_size = std::stoll(get("N", "1000"));
        spec.replicates = std::stoi(get("replicates", "20"));
        spec.seed = std::stoull(get("seed", "1"));
        if (kv.count("thetas")) {
            spec.thetas.clear();
            std::istringstream ss(kv.at("thetas"));
            std::string tok;
            while (std::getline(ss, tok, ',')) spec.thetas.push_back(std::stod(detail::trim(tok)));
        }
        if (kv.count("cacheDir")) spec.cache_dir = fs::path(kv.at("cacheDir"));
        report = theta_error_report_json(run_theta_error_study(spec));
    } else if (study == "scenario") {
        ScenarioSpec spec;
        spec.n = std::stoi(get("n", "10"));
        spec.sample_size = std::stoll(get("N", "1000"));
        spec.true_g = std::stoi(get("trueG", "1"));
        spec.theta_min = std::stod(get("thetaMin", "0.05"));
        spec.theta_max = std::stod(get("thetaMax", "0.10"));
        spec.min_separation = std::stod(get("minSeparation", "0"));
        spec.replicates = std::stoi(get("replicates", "20"));
        spec.seed = std::stoull(get("seed", "1"));
        spec.top_q = std::stoi(get("topQ", "0"));
        const std::string censoring = get("censoring", "none");
        if (censoring == "A")
            spec.censoring = CensoringPattern::A;
        else if (censoring == "B")
            spec.censoring = CensoringPattern::B;
        else if (censoring == "topQ")
            spec.censoring = CensoringPattern::top_q;
        else if (censoring != "none")
            throw error("unknown censoring pattern '" + censoring + "'");
        if (kv.count("gRange")) spec.g_range = parse_int_range(kv.at("gRange"));
        spec.em.n_starts = std::stoi(get("starts", "10"));
        spec.em.tol = std::stod(get("tol", "1e-6"));
        spec.em.max_iter = std::stoi(get("maxIter", "500"));
        spec.em.completion_cap = std::stoll(get("completionCap", "40320"));
        spec.em.bic_convention = parse_bic_convention(get("bicConvention", "full"));
        spec.exact_ceiling = std::stoi(get("exactCeiling", "14"));
        if (kv.count("cacheDir")) spec.cache_dir = fs::path(kv.at("cacheDir"));
        report = study_report_json(run_study(spec));
    } else {
        throw error("unknown study '" + study + "' (scenario|thetaError)");
    }

    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    out << report.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int run_rankify(const std::string& data_path, const std::string& direction, const std::string& out_path) {
    using namespace spearmix;
    const auto matrix = parse_matrix_csv(fs::path(data_path));
    RankDirection dir;
    if (direction == "asc" || direction == "ascending")
        dir = RankDirection::ascending;
    else if (direction == "desc" || direction == "descending")
        dir = RankDirection::descending;
    else
        throw error("unknown direction '" + direction + "' (asc|desc)");

    RankingDataset::Builder builder;
    for (const auto& row : matrix.rows) builder.add(rankify(row, dir));
    const auto data = builder.build(matrix.labels);

    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    write_rankings_csv(data, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mallows-with-Spearman-distance mixture inference"};
    app.require_subcommand(1);

    CountsArgs counts;
    auto* counts_cmd = app.add_subcommand("counts", "build or load a Spearman distance-count table");
    counts_cmd->add_option("--n", counts.n, "number of items")->required();
    auto* exact_flag = counts_cmd->add_flag("--exact", counts.exact, "force the exact table");
    counts_cmd->add_flag("--approx", counts.approx, "force the rate-function approximation")
        ->excludes(exact_flag);
    counts_cmd->add_flag("--renormalize", counts.renormalize, "rescale the approximate table to sum to n!");
    counts_cmd->add_option("--ceiling", counts.ceiling, "largest n computed exactly (default 14)");
    counts_cmd->add_option("--cache", counts.cache, "count-table cache directory");
    counts_cmd->add_option("--out", counts.out, "write the table to this file");

    ZetaArgs zeta;
    auto* zeta_cmd = app.add_subcommand("zeta", "partition-function table over a theta grid");
    zeta_cmd->add_option("--n", zeta.n, "number of items")->required();
    zeta_cmd->add_option("--theta-grid", zeta.grid, "grid a:b:steps (default 0.01:1:100)");
    zeta_cmd->add_option("--methods", zeta.methods, "comma list of exact,new,vmf");
    zeta_cmd->add_option("--ceiling", zeta.ceiling, "largest n computed exactly");
    zeta_cmd->add_option("--cache", zeta.cache, "count-table cache directory");
    zeta_cmd->add_option("--out", zeta.out, "output CSV (default stdout)");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit an MMS mixture to a rankings CSV");
    fit_cmd->add_option("--data", fit.data, "rankings CSV")->required();
    fit_cmd->add_option("--g", fit.g, "number of mixture components");
    fit_cmd->add_option("--g-range", fit.g_range, "search range a:b with BIC elbow selection");
    fit_cmd->add_option("--partial-cap", fit.partial_cap, "max completions per partial row");
    fit_cmd->add_option("--starts", fit.starts, "random EM restarts");
    fit_cmd->add_option("--seed", fit.seed, "root RNG seed");
    fit_cmd->add_option("--tol", fit.tol, "log-likelihood convergence tolerance");
    fit_cmd->add_option("--max-iter", fit.max_iter, "EM iteration cap");
    fit_cmd->add_option("--bic-convention", fit.bic_convention, "full|continuous");
    fit_cmd->add_option("--ceiling", fit.ceiling, "largest n computed exactly");
    fit_cmd->add_option("--cache", fit.cache, "count-table cache directory");
    fit_cmd->add_flag("--responsibilities", fit.responsibilities, "embed the LxG responsibilities");
    fit_cmd->add_option("--out", fit.out, "output JSON (default stdout)");

    std::string sim_spec, sim_out;
    auto* sim_cmd = app.add_subcommand("simulate", "run a replicated simulation study from a spec file");
    sim_cmd->add_option("--spec", sim_spec, "key = value study spec")->required();
    sim_cmd->add_option("--out", sim_out, "output JSON (default stdout)");

    std::string rank_data, rank_direction = "desc", rank_out;
    auto* rank_cmd = app.add_subcommand("rankify", "convert quantitative profiles into rankings");
    rank_cmd->add_option("--data", rank_data, "numeric matrix CSV with a header")->required();
    rank_cmd->add_option("--direction", rank_direction, "asc|desc (rank 1 = smallest|largest)");
    rank_cmd->add_option("--out", rank_out, "output rankings CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (counts_cmd->parsed()) return run_counts(counts);
        if (zeta_cmd->parsed()) return run_zeta(zeta);
        if (fit_cmd->parsed()) return run_fit(fit);
        if (sim_cmd->parsed()) return run_simulate(sim_spec, sim_out);
        if (rank_cmd->parsed()) return run_rankify(rank_data, rank_direction, rank_out);
    } catch (const std::exception& e) {
        std::cerr << spearmix::error_json(e.what()).dump() << "\n";
        return 1;
    }
    return 0;
}
