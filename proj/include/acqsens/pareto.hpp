#pragma once

#include "acqsens/glmm.hpp"
#include "acqsens/quality.hpp"
#include "acqsens/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace acqsens {

/// Cartesian product of per-axis equally spaced bin edges, lexicographic by
/// axis order.
std::vector<ThresholdConfig> grid_candidates(const ParameterSpace& space);

std::vector<double> axis_grid(const Axis& axis);

enum class SkipReason { None, DegenerateSplit, ConstantResponse, FitError };

const char* skip_reason_name(SkipReason r);

struct CandidateResult {
    ThresholdConfig config;
    double beta1 = 0.0;
    double p_value = 1.0;
    int n_hq = 0; // distinct cases labeled HQ
    int n_lq = 0;
    bool converged = false;
    bool significant = false;
    SkipReason skipped = SkipReason::None;
};

struct ScanOptions {
    double alpha = 0.05;
    int min_group = 10;        // minimum distinct cases per quality arm
    bool bh_correction = false; // Benjamini-Hochberg across fitted candidates
    int threads = 1;
    FitOptions fit;
};

/// Fits the population quality model (random intercepts for method and case)
/// per candidate; output order matches the candidate order regardless of the
/// thread count.
std::vector<CandidateResult> significance_scan(const PredictionTable& table,
                                               const std::vector<ThresholdConfig>& candidates,
                                               const ScanOptions& options);

enum class DominanceOrder {
    QualityMaximal, // strictest-quality thresholds peel first (default)
    QualityMinimal, // reversed peeling
};

struct ParetoLayerSet {
    std::vector<std::vector<CandidateResult>> layers;

    std::vector<ThresholdConfig> layer_configs(std::size_t layer) const;
};

/// a dominates b iff a is at least as strict on every axis (per quality
/// direction) and strictly stricter on at least one; duplicates collapse
/// before peeling.
bool dominates(const ThresholdConfig& a, const ThresholdConfig& b, const ParameterSpace& space,
               DominanceOrder order = DominanceOrder::QualityMaximal);

ParetoLayerSet pareto_decompose(const std::vector<CandidateResult>& significant,
                                const ParameterSpace& space,
                                DominanceOrder order = DominanceOrder::QualityMaximal);

struct AxisConstraint {
    std::string axis;
    std::optional<double> min; // bounds on the threshold value
    std::optional<double> max;
};

struct SelectionOptions {
    double alpha = 0.05;
    std::vector<AxisConstraint> constraints;
};

struct SelectionEntry {
    int layer = 0; // 1-based
    CandidateResult candidate;
    std::vector<TukeyPair> comparisons; // (All,HQ), (All,LQ), (HQ,LQ)
    double mean_all = 0.0, mean_hq = 0.0, mean_lq = 0.0;
    bool valid = false;
    double hq_minus_all = 0.0; // ranking key
    int rank = -1;             // 1-based among valid entries
};

struct SelectionReport {
    std::vector<SelectionEntry> entries; // valid entries by rank, then the rest
};

/// Per-(method, fold) accuracies in ALL/HQ/LQ groups compared by one-way
/// ANOVA + Tukey HSD; a config is valid when HQ beats ALL, LQ trails ALL and
/// HQ beats LQ, all significantly.
SelectionReport select_configurations(const ParetoLayerSet& layers, const PredictionTable& table,
                                      const SelectionOptions& options);

} // namespace acqsens
