#include "acqsens/quality.hpp"

#include "acqsens/errors.hpp"

#include <algorithm>

namespace acqsens {

namespace {

void check_dims(std::size_t point_dim, const ThresholdConfig& config,
                const ParameterSpace& space) {
    if (point_dim != space.dim() || config.thresholds.size() != space.dim())
        fail(ErrorCode::DimensionMismatch,
             "point/config dimension does not match the parameter space");
}

} // namespace

QualityLabel label_quality(std::span<const double> point, const ThresholdConfig& config,
                           const ParameterSpace& space) {
    check_dims(point.size(), config, space);
    for (std::size_t j = 0; j < space.dim(); ++j) {
        const Axis& axis = space.axis(j);
        // Closed inequalities: boundary points are HQ.
        bool ok = axis.direction == QualityDirection::Increasing
                      ? point[j] >= config.thresholds[j]
                      : point[j] <= config.thresholds[j];
        if (!ok) return QualityLabel::LQ;
    }
    return QualityLabel::HQ;
}

double signed_distance(std::span<const double> point, const ThresholdConfig& config,
                       const ParameterSpace& space) {
    check_dims(point.size(), config, space);
    double d = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < space.dim(); ++j) {
        const Axis& axis = space.axis(j);
        double violation = axis.direction == QualityDirection::Increasing
                               ? (config.thresholds[j] - point[j]) / axis.scale
                               : (point[j] - config.thresholds[j]) / axis.scale;
        d = std::max(d, violation);
    }
    return d;
}

bool region_union_membership(std::span<const double> point,
                             std::span<const ThresholdConfig> layer,
                             const ParameterSpace& space) {
    if (layer.empty()) fail(ErrorCode::EmptyInput, "empty layer");
    for (const auto& config : layer) {
        if (label_quality(point, config, space) == QualityLabel::HQ) return true;
    }
    return false;
}

std::vector<std::uint8_t> quality_labels(const PredictionTable& table,
                                         const ThresholdConfig& config) {
    std::vector<std::uint8_t> q(table.n_records());
    for (std::size_t i = 0; i < table.n_records(); ++i)
        q[i] = static_cast<std::uint8_t>(label_quality(table.params(i), config, table.space()));
    return q;
}

std::vector<double> signed_distances(const PredictionTable& table,
                                     const ThresholdConfig& config) {
    std::vector<double> d(table.n_records());
    for (std::size_t i = 0; i < table.n_records(); ++i)
        d[i] = signed_distance(table.params(i), config, table.space());
    return d;
}

} // namespace acqsens
