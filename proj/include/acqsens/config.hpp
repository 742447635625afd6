#pragma once

#include "acqsens/dataset.hpp"
#include "acqsens/pareto.hpp"
#include "acqsens/quality.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace acqsens {

nlohmann::ordered_json space_to_json(const ParameterSpace& space);
ParameterSpace space_from_json(const nlohmann::json& j);

nlohmann::ordered_json region_to_json(const ThresholdConfig& config, const ParameterSpace& space);
ThresholdConfig region_from_json(const nlohmann::json& j, const ParameterSpace& space);

/// Run-level settings shared by the CLI commands; JSON schema carries a
/// versioned `schema_version` field.
struct RunConfig {
    ParameterSpace space;
    double alpha = 0.05;
    double decision_threshold = 0.5;
    int min_group = 10;
    std::vector<AxisConstraint> constraints;
    std::optional<std::string> reference_method; // empty = highest balanced accuracy
    OutOfRangePolicy out_of_range = OutOfRangePolicy::Strict;
    bool bh_correction = false;
    DominanceOrder dominance = DominanceOrder::QualityMaximal;
    bool firth = false;
    int d_grid_points = 101;
    int threads = 1;
    std::uint64_t seed = 0;
};

RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json config_to_json(const RunConfig& config);

} // namespace acqsens
