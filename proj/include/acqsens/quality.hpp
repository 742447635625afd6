#pragma once

#include "acqsens/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace acqsens {

/// One threshold per axis, in native units. A QualityIncreasing axis j
/// imposes P_j >= Th_j, a QualityDecreasing axis imposes P_j <= Th_j;
/// the conjunction over axes is the high-quality region.
struct ThresholdConfig {
    std::vector<double> thresholds;

    bool operator==(const ThresholdConfig&) const = default;
};

enum class QualityLabel : std::uint8_t { HQ = 0, LQ = 1 };

QualityLabel label_quality(std::span<const double> point, const ThresholdConfig& config,
                           const ParameterSpace& space);

/// Max over per-axis scaled signed violations: negative inside the region,
/// zero on the boundary, positive outside (max-norm distance for exterior
/// points).
double signed_distance(std::span<const double> point, const ThresholdConfig& config,
                       const ParameterSpace& space);

bool region_union_membership(std::span<const double> point,
                             std::span<const ThresholdConfig> layer,
                             const ParameterSpace& space);

/// Per-record encoding for modeling: Q = 0 for HQ, Q = 1 for LQ.
std::vector<std::uint8_t> quality_labels(const PredictionTable& table,
                                         const ThresholdConfig& config);

std::vector<double> signed_distances(const PredictionTable& table,
                                     const ThresholdConfig& config);

} // namespace acqsens
