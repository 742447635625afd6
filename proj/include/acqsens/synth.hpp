#pragma once

#include "acqsens/dataset.hpp"
#include "acqsens/quality.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace acqsens {

enum class SimMode { QualityFactor, DistanceCovariate };

enum class ScoreMode {
    Indicator, // score encodes correctness exactly under the 0.5 threshold
    Noisy,     // label signal plus clipped Gaussian noise, for AUC-style tests
};

struct MethodEffect {
    std::string name;
    double beta2 = 0.0; // log-odds offset vs the reference
    double beta3 = 0.0; // interaction with the quality/distance term
};

struct AxisSampler {
    enum class Kind { Uniform, Categorical };
    Kind kind = Kind::Uniform;
    std::vector<double> values;  // categorical support
    std::vector<double> weights; // categorical masses (normalized internally)
};

/// Generative counterpart of the failure models: known coefficients, known
/// region, seeded streams.
struct SimSpec {
    ParameterSpace space;
    ThresholdConfig true_region;
    int n_cases = 0;
    std::vector<MethodEffect> methods;
    double beta0 = 0.0;
    double beta1 = 0.0;
    double sigma_case = 0.0;
    double sigma_method = 0.0;
    std::vector<AxisSampler> samplers; // aligned with the axes; empty = all uniform
    SimMode mode = SimMode::QualityFactor;
    std::uint64_t seed = 0;
    int folds = 10;
    double label_prevalence = 0.5;
    ScoreMode score_mode = ScoreMode::Indicator;
    double score_noise_sd = 0.15;

    void validate() const;
};

struct SimResult {
    PredictionTable table;
    std::string ground_truth_json;
};

SimResult generate(const SimSpec& spec);

SimSpec simspec_from_json(const std::string& text);
std::string simspec_to_json(const SimSpec& spec);

} // namespace acqsens
