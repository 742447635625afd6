#pragma once

#include "acqsens/config.hpp"
#include "acqsens/dataset.hpp"
#include "acqsens/errors.hpp"
#include "acqsens/glmm.hpp"
#include "acqsens/pareto.hpp"
#include "acqsens/stats.hpp"
#include "acqsens/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace acqsens {

/// Reference predictor = highest pooled balanced accuracy (ties break on
/// name).
std::string pick_reference_method(const PredictionTable& table, double decision_threshold);

struct OptimizeResult {
    std::vector<CandidateResult> candidates;
    ParetoLayerSet layers;
    SelectionReport selection;
};

/// Grid scan + Pareto decomposition + validated selection; writes
/// candidates.csv, layers.json, selection.csv and manifest.json.
OptimizeResult run_optimize(const PredictionTable& table, const RunConfig& config,
                            const std::filesystem::path& out_dir);

struct SensitivityResult {
    GlmmFit quality_joint;        // quality x method fixed effects, case intercepts
    GlmmFit distance_joint;       // distance x method fixed effects, case intercepts
    GlmmFit distance_population;  // distance with method + case intercepts
    OddsReport odds;
};

/// Writes or_table.csv, distance_model.json, decay_curve.csv and
/// manifest.json.
SensitivityResult run_sensitivity(const PredictionTable& table, const RunConfig& config,
                                  const ThresholdConfig& region,
                                  const std::filesystem::path& out_dir);

struct ImpactRow {
    std::string method;
    std::string quality; // HQ / LQ / ALL
    MetricSet metrics;
};

struct WilcoxonRow {
    std::string metric;
    std::string group_a, group_b;
    long n = 0;
    double statistic = 0.0;
    double p_one_sided = 1.0;
};

struct ImpactResult {
    std::vector<ImpactRow> rows;
    std::vector<WilcoxonRow> wilcoxon;
};

/// Writes metrics.csv, metrics_summary.csv, wilcoxon.csv, boxplot_data.csv
/// and manifest.json.
ImpactResult run_impact(const PredictionTable& table, const RunConfig& config,
                        const ThresholdConfig& region, const std::vector<std::string>& methods,
                        const std::filesystem::path& out_dir);

/// Writes data.csv, truth.json and manifest.json.
SimResult run_simulate(const SimSpec& spec, const std::filesystem::path& out_dir);

/// 0 success, 1 input/validation error, 2 empty analytical result,
/// 3 internal numerical failure.
int exit_code_for(ErrorCode code);

} // namespace acqsens
