#pragma once

#include "acqsens/dataset.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace acqsens {

enum class FixedTerm {
    Intercept,
    QualityFactor,
    MethodFactor,
    QualityByMethod,
    DistanceCovariate,
    DistanceByMethod,
};

enum class GroupingFactor { CaseId, Method };

const char* grouping_factor_name(GroupingFactor g);

/// Fixed-effect term list plus crossed random intercepts for a
/// binomial-logit mixed model of the failure indicator.
struct ModelSpec {
    std::vector<FixedTerm> fixed_terms = {FixedTerm::Intercept};
    std::vector<GroupingFactor> random_intercepts;
    std::string reference_method; // required with MethodFactor

    bool has(FixedTerm term) const;
    void validate() const;
};

/// Metadata per fixed-design column, used to reconstruct odds-ratio
/// contrasts from a fit.
struct CoefInfo {
    std::string name;
    FixedTerm term = FixedTerm::Intercept;
    std::string method; // set for method-specific columns
};

struct DesignMatrices {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<CoefInfo> coef;

    struct RandomBlock {
        GroupingFactor factor;
        std::vector<std::string> levels;
        Eigen::SparseMatrix<double> Z; // n x q indicator matrix
    };
    std::vector<RandomBlock> blocks;

    std::string reference_method;
    std::vector<std::string> methods; // non-reference methods, design order

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

DesignMatrices build_design(const PredictionTable& table, const ModelSpec& spec,
                            const std::vector<std::uint8_t>* quality = nullptr,
                            const std::vector<double>* distance = nullptr);

struct FitOptions {
    int max_inner = 200;       // penalized IRLS iterations per objective evaluation
    int max_outer = 500;       // objective evaluations for the variance search
    double inner_tol = 1e-6;   // max-abs gradient of the penalized log-likelihood
    double outer_tol = 1e-8;   // simplex objective spread
    bool firth = false;        // Firth-style bias-reduction penalty
    // Pins the variance components (sigma^2 per random block, design order)
    // and skips the outer search entirely.
    std::optional<std::vector<double>> fixed_variance;
};

struct GlmmFit {
    std::vector<CoefInfo> coef;
    Eigen::VectorXd beta;        // log-odds scale
    Eigen::MatrixXd covariance;  // of beta, conditional on the variance components
    std::map<std::string, double> variance_components; // grouping factor -> sigma^2
    double loglik = 0.0;         // Laplace-approximated marginal log-likelihood
    bool converged = false;
    long n_obs = 0;
    std::map<std::string, int> n_groups;
    std::map<std::string, Eigen::VectorXd> random_modes; // conditional modes
    std::string reference_method;
    std::vector<std::string> methods;

    int coef_index(std::string_view name) const; // -1 if absent
    bool has_term(FixedTerm term) const;
};

/// Maximizes the Laplace-approximated marginal likelihood: penalized IRLS
/// over the joint (fixed, random) effects inside, derivative-free search
/// over the variance components outside.
GlmmFit fit(const DesignMatrices& design, const FitOptions& options = {});

struct WaldResult {
    double estimate;
    double std_error;
    double z;
    double p_two_sided;
};

WaldResult wald_test(const GlmmFit& fit, std::string_view coefficient);

struct OrEstimate {
    double estimate;
    double ci_low;
    double ci_high;
    double p_value;
};

struct MethodOdds {
    std::string method;
    bool reference = false;
    double odd_hq;                      // quality mode: odds in HQ; distance mode: odds at d = 0
    double odd_lq;                      // quality mode: odds in LQ; distance mode: decay rate per unit d
    OrEstimate or_n;                    // failure-odds ratio LQ/HQ (or decay rate)
    std::optional<OrEstimate> or_hq_n0; // vs reference in HQ (n > 0 only)
    std::optional<OrEstimate> or_lq_n0; // vs reference in LQ (n > 0 only)
};

struct OddsReport {
    bool distance_mode = false;
    std::string reference_method;
    std::vector<MethodOdds> per_method;
};

OddsReport derive_odds_ratios(const GlmmFit& fit);

struct DecayPoint {
    double d;
    double probability;
    double ci_low;
    double ci_high;
};

struct DecayCurves {
    std::vector<std::string> methods; // includes the reference first
    std::vector<std::vector<DecayPoint>> curves;
};

DecayCurves decay_curve(const GlmmFit& fit, const std::vector<double>& d_grid);

std::string fit_to_json(const GlmmFit& fit);
GlmmFit fit_from_json(const std::string& text);

} // namespace acqsens
