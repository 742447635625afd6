#include "acqsens/distributions.hpp"
#include "acqsens/errors.hpp"
#include "acqsens/glmm.hpp"

#include <json.hpp>

#include <cmath>

namespace acqsens {

namespace {

const double kZ975 = dist::normal_quantile(0.975);

// exp(c'beta) with a Wald interval on the log scale.
OrEstimate exp_combination(const GlmmFit& fit, const std::vector<int>& idx) {
    double est = 0.0, var = 0.0;
    for (int i : idx) est += fit.beta[i];
    for (int i : idx)
        for (int j : idx) var += fit.covariance(i, j);
    double se = std::sqrt(std::max(0.0, var));
    OrEstimate r;
    r.estimate = std::exp(est);
    r.ci_low = std::exp(est - kZ975 * se);
    r.ci_high = std::exp(est + kZ975 * se);
    r.p_value = se > 0.0 ? 2.0 * dist::normal_sf(std::fabs(est / se)) : (est == 0.0 ? 1.0 : 0.0);
    return r;
}

int require_coef(const GlmmFit& fit, const std::string& name) {
    int idx = fit.coef_index(name);
    if (idx < 0) fail(ErrorCode::SpecMismatch, "fit lacks coefficient '" + name + "'");
    return idx;
}

int find_coef(const GlmmFit& fit, const std::string& name) { return fit.coef_index(name); }

} // namespace

OddsReport derive_odds_ratios(const GlmmFit& fit) {
    bool quality = fit.has_term(FixedTerm::QualityFactor);
    bool distance = fit.has_term(FixedTerm::DistanceCovariate);
    if (!quality && !distance)
        fail(ErrorCode::SpecMismatch, "fit has neither a quality factor nor a distance covariate");

    OddsReport report;
    report.distance_mode = distance;
    report.reference_method = fit.reference_method;

    int i0 = require_coef(fit, "intercept");
    int i1 = require_coef(fit, quality ? "quality" : "distance");
    double beta0 = fit.beta[i0];
    double beta1 = fit.beta[i1];

    auto base_entry = [&](const std::string& label) {
        MethodOdds m;
        m.method = label;
        m.reference = true;
        m.odd_hq = std::exp(beta0);
        m.odd_lq = quality ? std::exp(beta0 + beta1) : std::exp(beta1);
        m.or_n = exp_combination(fit, {i1});
        return m;
    };

    if (fit.methods.empty()) {
        report.per_method.push_back(base_entry(fit.reference_method.empty()
                                                   ? std::string("(population)")
                                                   : fit.reference_method));
        return report;
    }

    report.per_method.push_back(base_entry(fit.reference_method));
    for (const auto& method : fit.methods) {
        MethodOdds m;
        m.method = method;
        int i2 = find_coef(fit, "method[" + method + "]");
        int i3 = find_coef(fit, (quality ? "quality:method[" : "distance:method[") + method + "]");
        double beta2 = i2 >= 0 ? fit.beta[i2] : 0.0;
        double beta3 = i3 >= 0 ? fit.beta[i3] : 0.0;

        if (quality) {
            m.odd_hq = std::exp(beta0 + beta2);
            m.odd_lq = std::exp(beta0 + beta1 + beta2 + beta3);
        } else {
            m.odd_hq = std::exp(beta0 + beta2);        // odds at d = 0
            m.odd_lq = std::exp(beta1 + beta3);        // decay rate per unit distance
        }

        std::vector<int> or_idx = {i1};
        if (i3 >= 0) or_idx.push_back(i3);
        m.or_n = exp_combination(fit, or_idx);

        if (i2 >= 0) {
            m.or_hq_n0 = exp_combination(fit, {i2});
            if (quality) {
                std::vector<int> lq_idx = {i2};
                if (i3 >= 0) lq_idx.push_back(i3);
                m.or_lq_n0 = exp_combination(fit, lq_idx);
            }
        }
        report.per_method.push_back(std::move(m));
    }
    return report;
}

DecayCurves decay_curve(const GlmmFit& fit, const std::vector<double>& d_grid) {
    if (!fit.has_term(FixedTerm::DistanceCovariate))
        fail(ErrorCode::SpecMismatch, "decay curves require a distance-covariate fit");

    int i0 = require_coef(fit, "intercept");
    int i1 = require_coef(fit, "distance");
    const Eigen::Index p = fit.beta.size();

    DecayCurves out;
    std::vector<std::pair<std::string, std::pair<int, int>>> methods;
    if (fit.methods.empty()) {
        methods.push_back({fit.reference_method.empty() ? std::string("(population)")
                                                        : fit.reference_method,
                           {-1, -1}});
    } else {
        methods.push_back({fit.reference_method, {-1, -1}});
        for (const auto& m : fit.methods)
            methods.push_back({m,
                               {find_coef(fit, "method[" + m + "]"),
                                find_coef(fit, "distance:method[" + m + "]")}});
    }

    for (const auto& [name, idx] : methods) {
        out.methods.push_back(name);
        std::vector<DecayPoint> curve;
        curve.reserve(d_grid.size());
        for (double d : d_grid) {
            Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
            c[i0] = 1.0;
            c[i1] = d;
            if (idx.first >= 0) c[idx.first] = 1.0;
            if (idx.second >= 0) c[idx.second] = d;
            double eta = c.dot(fit.beta);
            double se = std::sqrt(std::max(0.0, c.dot(fit.covariance * c)));
            auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
            curve.push_back({d, logistic(eta), logistic(eta - kZ975 * se),
                             logistic(eta + kZ975 * se)});
        }
        out.curves.push_back(std::move(curve));
    }
    return out;
}

namespace {

const char* term_name(FixedTerm t) {
    switch (t) {
        case FixedTerm::Intercept: return "intercept";
        case FixedTerm::QualityFactor: return "quality";
        case FixedTerm::MethodFactor: return "method";
        case FixedTerm::QualityByMethod: return "quality_by_method";
        case FixedTerm::DistanceCovariate: return "distance";
        case FixedTerm::DistanceByMethod: return "distance_by_method";
    }
    return "intercept";
}

FixedTerm term_from_name(const std::string& s) {
    if (s == "intercept") return FixedTerm::Intercept;
    if (s == "quality") return FixedTerm::QualityFactor;
    if (s == "method") return FixedTerm::MethodFactor;
    if (s == "quality_by_method") return FixedTerm::QualityByMethod;
    if (s == "distance") return FixedTerm::DistanceCovariate;
    if (s == "distance_by_method") return FixedTerm::DistanceByMethod;
    fail(ErrorCode::InvalidSpec, "unknown term name '" + s + "'");
}

} // namespace

std::string fit_to_json(const GlmmFit& fit) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    auto coeffs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < fit.coef.size(); ++i) {
        nlohmann::ordered_json c;
        c["name"] = fit.coef[i].name;
        c["term"] = term_name(fit.coef[i].term);
        if (!fit.coef[i].method.empty()) c["method"] = fit.coef[i].method;
        c["estimate"] = fit.beta[static_cast<Eigen::Index>(i)];
        c["std_error"] = std::sqrt(std::max(
            0.0, fit.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
        coeffs.push_back(std::move(c));
    }
    j["coefficients"] = std::move(coeffs);
    auto cov = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
        cov.push_back(std::move(row));
    }
    j["covariance"] = std::move(cov);
    j["variance_components"] = fit.variance_components;
    j["loglik"] = fit.loglik;
    j["converged"] = fit.converged;
    j["n_obs"] = fit.n_obs;
    j["n_groups"] = fit.n_groups;
    nlohmann::ordered_json modes;
    for (const auto& [name, values] : fit.random_modes) {
        auto arr = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < values.size(); ++i) arr.push_back(values[i]);
        modes[name] = std::move(arr);
    }
    j["random_modes"] = std::move(modes);
    if (!fit.reference_method.empty()) j["reference_method"] = fit.reference_method;
    j["methods"] = fit.methods;
    return j.dump(2) + "\n";
}

GlmmFit fit_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    GlmmFit fit;
    const auto& coeffs = j.at("coefficients");
    fit.beta.resize(static_cast<Eigen::Index>(coeffs.size()));
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        CoefInfo info;
        info.name = coeffs[i].at("name").get<std::string>();
        info.term = term_from_name(coeffs[i].at("term").get<std::string>());
        if (coeffs[i].contains("method")) info.method = coeffs[i]["method"].get<std::string>();
        fit.coef.push_back(info);
        fit.beta[static_cast<Eigen::Index>(i)] = coeffs[i].at("estimate").get<double>();
    }
    const auto& cov = j.at("covariance");
    fit.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                          static_cast<Eigen::Index>(cov.size()));
    for (std::size_t r = 0; r < cov.size(); ++r)
        for (std::size_t c = 0; c < cov[r].size(); ++c)
            fit.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                cov[r][c].get<double>();
    for (auto& [key, value] : j.at("variance_components").items())
        fit.variance_components[key] = value.get<double>();
    fit.loglik = j.at("loglik").get<double>();
    fit.converged = j.at("converged").get<bool>();
    fit.n_obs = j.at("n_obs").get<long>();
    if (j.contains("n_groups"))
        for (auto& [key, value] : j["n_groups"].items()) fit.n_groups[key] = value.get<int>();
    if (j.contains("random_modes")) {
        for (auto& [key, value] : j["random_modes"].items()) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
            for (std::size_t i = 0; i < value.size(); ++i)
                v[static_cast<Eigen::Index>(i)] = value[i].get<double>();
            fit.random_modes[key] = std::move(v);
        }
    }
    if (j.contains("reference_method"))
        fit.reference_method = j["reference_method"].get<std::string>();
    if (j.contains("methods"))
        fit.methods = j["methods"].get<std::vector<std::string>>();
    return fit;
}

} // namespace acqsens
