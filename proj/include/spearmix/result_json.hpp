#ifndef SPEARMIX_RESULT_JSON_HPP
#define SPEARMIX_RESULT_JSON_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spearmix/mixture.hpp"
#include "spearmix/partition.hpp"
#include "spearmix/simulation.hpp"

namespace spearmix {

inline constexpr int result_schema_version = 1;

/// Self-contained record of a mixture fit: the effective configuration, the
/// estimated parameters, fit diagnostics and (optionally) the posterior
/// membership probabilities. Round-trips losslessly through JSON.
struct FitResultDocument {
    int schema_version = result_schema_version;
    int n = 0;
    int groups = 0;
    std::vector<std::string> items;
    // effective configuration
    std::uint64_t seed = 0;
    double tol = 0.0;
    int max_iter = 0;
    int n_starts = 0;
    long long completion_cap = 0;
    std::string bic_convention;
    std::string count_provenance;
    int exact_ceiling = 14;
    // estimates
    std::vector<double> weights;
    std::vector<std::vector<int>> consensus; // item-indexed rank vectors
    std::vector<double> thetas;
    std::vector<std::string> theta_boundaries;
    double log_lik = 0.0;
    double bic_full = 0.0;
    double bic_continuous = 0.0;
    std::vector<double> cluster_sizes;
    long long sample_size = 0;
    int iterations = 0;
    bool converged = false;
    double min_loglik_increment = 0.0;
    std::optional<std::vector<std::vector<double>>> responsibilities;
    // model selection, when a g-range was searched
    std::optional<std::vector<int>> g_range;
    std::optional<std::vector<double>> bic_curve;
    std::optional<int> selected_g;
};

inline FitResultDocument make_fit_document(const MixtureFit& fit, const RankingDataset& data,
                                           const EmOptions& opts, Provenance provenance, int exact_ceiling,
                                           bool include_responsibilities) {
    FitResultDocument doc;
    doc.n = data.n();
    doc.groups = fit.params.groups();
    doc.items = data.items();
    doc.seed = opts.seed;
    doc.tol = opts.tol;
    doc.max_iter = opts.max_iter;
    doc.n_starts = opts.n_starts;
    doc.completion_cap = opts.completion_cap;
    doc.bic_convention = opts.bic_convention == BicConvention::full ? "full" : "continuous";
    doc.count_provenance = to_string(provenance);
    doc.exact_ceiling = exact_ceiling;
    doc.weights = fit.params.weights;
    for (const auto& c : fit.params.components) {
        doc.consensus.push_back(c.consensus.ranks());
        doc.thetas.push_back(c.theta);
    }
    for (auto b : fit.boundaries) doc.theta_boundaries.push_back(to_string(b));
    doc.log_lik = fit.log_lik;
    doc.bic_full = bic_value(fit.log_lik, fit.data_total, doc.groups, doc.n, BicConvention::full);
    doc.bic_continuous = bic_value(fit.log_lik, fit.data_total, doc.groups, doc.n, BicConvention::continuous);
    doc.cluster_sizes = fit.cluster_sizes;
    doc.sample_size = fit.data_total;
    doc.iterations = fit.iterations;
    doc.converged = fit.converged;
    doc.min_loglik_increment = fit.diagnostics.min_loglik_increment;
    if (include_responsibilities) {
        std::vector<std::vector<double>> resp(fit.responsibilities.rows);
        for (std::size_t l = 0; l < fit.responsibilities.rows; ++l) {
            resp[l].resize(static_cast<std::size_t>(fit.responsibilities.groups));
            for (int g = 0; g < fit.responsibilities.groups; ++g) resp[l][static_cast<std::size_t>(g)] = fit.responsibilities.at(l, g);
        }
        doc.responsibilities = std::move(resp);
    }
    return doc;
}

inline void to_json(nlohmann::json& j, const FitResultDocument& d) {
    j = nlohmann::json{{"schemaVersion", d.schema_version},
                       {"model", {{"type", "mms-mixture"}, {"n", d.n}, {"G", d.groups}, {"items", d.items}}},
                       {"config",
                        {{"seed", d.seed},
                         {"tol", d.tol},
                         {"maxIter", d.max_iter},
                         {"starts", d.n_starts},
                         {"completionCap", d.completion_cap},
                         {"bicConvention", d.bic_convention},
                         {"countProvenance", d.count_provenance},
                         {"exactCeiling", d.exact_ceiling}}},
                       {"weights", d.weights},
                       {"consensus", d.consensus},
                       {"theta", d.thetas},
                       {"thetaBoundaries", d.theta_boundaries},
                       {"logLik", d.log_lik},
                       {"bic", {{"full", d.bic_full}, {"continuous", d.bic_continuous}}},
                       {"clusterSizes", d.cluster_sizes},
                       {"N", d.sample_size},
                       {"iterations", d.iterations},
                       {"converged", d.converged},
                       {"minLogLikIncrement", d.min_loglik_increment}};
    if (d.responsibilities) j["responsibilities"] = *d.responsibilities;
    if (d.g_range) {
        j["gSearch"] = {{"gRange", *d.g_range}, {"bic", *d.bic_curve}, {"selected", *d.selected_g}};
    }
}

inline void from_json(const nlohmann::json& j, FitResultDocument& d) {
    d.schema_version = j.at("schemaVersion").get<int>();
    const auto& model = j.at("model");
    d.n = model.at("n").get<int>();
    d.groups = model.at("G").get<int>();
    d.items = model.at("items").get<std::vector<std::string>>();
    const auto& config = j.at("config");
    d.seed = config.at("seed").get<std::uint64_t>();
    d.tol = config.at("tol").get<double>();
    d.max_iter = config.at("maxIter").get<int>();
    d.n_starts = config.at("starts").get<int>();
    d.completion_cap = config.at("completionCap").get<long long>();
    d.bic_convention = config.at("bicConvention").get<std::string>();
    d.count_provenance = config.at("countProvenance").get<std::string>();
    d.exact_ceiling = config.at("exactCeiling").get<int>();
    d.weights = j.at("weights").get<std::vector<double>>();
    d.consensus = j.at("consensus").get<std::vector<std::vector<int>>>();
    d.thetas = j.at("theta").get<std::vector<double>>();
    d.theta_boundaries = j.at("thetaBoundaries").get<std::vector<std::string>>();
    d.log_lik = j.at("logLik").get<double>();
    d.bic_full = j.at("bic").at("full").get<double>();
    d.bic_continuous = j.at("bic").at("continuous").get<double>();
    d.cluster_sizes = j.at("clusterSizes").get<std::vector<double>>();
    d.sample_size = j.at("N").get<long long>();
    d.iterations = j.at("iterations").get<int>();
    d.converged = j.at("converged").get<bool>();
    d.min_loglik_increment = j.at("minLogLikIncrement").get<double>();
    if (j.contains("responsibilities"))
        d.responsibilities = j.at("responsibilities").get<std::vector<std::vector<double>>>();
    if (j.contains("gSearch")) {
        d.g_range = j.at("gSearch").at("gRange").get<std::vector<int>>();
        d.bic_curve = j.at("gSearch").at("bic").get<std::vector<double>>();
        d.selected_g = j.at("gSearch").at("selected").get<int>();
    }
}

inline nlohmann::json study_report_json(const MetricsReport& report) {
    const auto& spec = report.spec;
    nlohmann::json j{{"schemaVersion", result_schema_version},
                     {"spec",
                      {{"n", spec.n},
                       {"N", spec.sample_size},
                       {"trueG", spec.true_g},
                       {"thetaMin", spec.theta_min},
                       {"thetaMax", spec.theta_max},
                       {"minSeparation", spec.separation_threshold()},
                       {"censoring", to_string(spec.censoring)},
                       {"topQ", spec.top_q},
                       {"replicates", spec.replicates},
                       {"seed", spec.seed},
                       {"gRange", spec.g_range},
                       {"starts", spec.em.n_starts},
                       {"exactCeiling", spec.exact_ceiling}}},
                     {"countProvenance", to_string(report.count_provenance)},
                     {"perReplicate",
                      {{"mTheta", report.m_theta},
                       {"mRho", report.m_rho},
                       {"phiRho", report.phi_rho}}},
                     {"means",
                      {{"mTheta", report.mean_m_theta},
                       {"mRho", report.mean_m_rho},
                       {"phiRho", report.mean_phi_rho}}},
                     {"diagnostics",
                      {{"minLogLikIncrement", report.min_loglik_increment},
                       {"maxRespRowError", report.max_resp_row_error}}}};
    if (report.has_phi_z) {
        j["perReplicate"]["phiZ"] = report.phi_z;
        j["means"]["phiZ"] = report.mean_phi_z;
    }
    if (report.has_g_search) {
        j["perReplicate"]["phiG"] = report.phi_g;
        j["means"]["phiG"] = report.mean_phi_g;
    }
    return j;
}

inline nlohmann::json theta_error_report_json(const ThetaErrorReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < report.theta.size(); ++t) {
        nlohmann::json row{{"theta", report.theta[t]}, {"errVmf", report.err_vmf[t]}};
        if (report.has_approx) row["errApprox"] = report.err_approx[t];
        if (report.has_exact) row["errExact"] = report.err_exact[t];
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"schemaVersion", result_schema_version},
                          {"spec",
                           {{"n", report.spec.n},
                            {"N", report.spec.sample_size},
                            {"replicates", report.spec.replicates},
                            {"seed", report.spec.seed}}},
                          {"rows", rows}};
}

inline nlohmann::json error_json(const std::string& message) {
    return nlohmann::json{{"error", {{"message", message}}}};
}

} // namespace spearmix

#endif // SPEARMIX_RESULT_JSON_HPP
