#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace acqsens {

enum class QualityDirection {
    Increasing, // larger parameter value = better scan quality
    Decreasing, // smaller parameter value = better scan quality
};

struct Axis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    int bins = 10;
    QualityDirection direction = QualityDirection::Increasing;
    double scale = 1.0; // divisor applied before distance computation
};

/// Ordered acquisition-parameter axes; defines the grid and the dominance order.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<Axis> axes);

    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t dim() const { return axes_.size(); }
    const Axis& axis(std::size_t j) const { return axes_[j]; }
    int axis_index(std::string_view name) const; // -1 if absent

private:
    std::vector<Axis> axes_;
};

struct PredictionRecord {
    std::string case_id;
    std::string method;
    std::optional<int> fold;
    int label = 0;      // true class, 1 = positive
    double score = 0.0; // predicted probability of the positive class
    std::vector<double> params;
};

enum class OutOfRangePolicy {
    Strict, // reject records with params outside the declared axis ranges
    Clamp,  // clamp to [min, max] and count a warning
};

/// Immutable, validated prediction table. Records are stored in canonical
/// (case_id, method) order so all downstream statistics are independent of
/// input row order.
class PredictionTable {
public:
    static PredictionTable from_records(std::vector<PredictionRecord> records,
                                        ParameterSpace space,
                                        double decision_threshold = 0.5,
                                        OutOfRangePolicy policy = OutOfRangePolicy::Strict);

    const std::vector<PredictionRecord>& records() const { return records_; }
    const ParameterSpace& space() const { return space_; }
    double decision_threshold() const { return decision_threshold_; }

    std::size_t n_records() const { return records_.size(); }
    std::size_t n_cases() const { return cases_.size(); }
    std::size_t n_methods() const { return methods_.size(); }

    /// f = 1 iff the thresholded score disagrees with the label.
    int failure(std::size_t i) const { return failures_[i]; }
    const std::vector<std::uint8_t>& failures() const { return failures_; }

    const std::vector<std::string>& cases() const { return cases_; }
    const std::vector<std::string>& methods() const { return methods_; }
    int case_index(std::size_t record) const { return case_index_[record]; }
    int method_index(std::size_t record) const { return method_index_[record]; }

    std::span<const double> params(std::size_t record) const {
        return records_[record].params;
    }

    int clamped_count() const { return clamped_; }

private:
    std::vector<PredictionRecord> records_;
    ParameterSpace space_;
    double decision_threshold_ = 0.5;
    std::vector<std::uint8_t> failures_;
    std::vector<std::string> cases_;
    std::vector<std::string> methods_;
    std::vector<int> case_index_;
    std::vector<int> method_index_;
    int clamped_ = 0;
};

struct AxisSummary {
    std::string name;
    double min, q1, median, q3, max;
};

struct TableSummary {
    std::size_t n_records = 0;
    std::size_t n_cases = 0;
    std::vector<AxisSummary> axes;
    std::map<std::string, int> cases_per_method;
    double positive_prevalence = 0.0;
    std::map<int, int> fold_counts; // -1 bucket = records without a fold
};

PredictionTable load_predictions(const std::filesystem::path& path,
                                 const ParameterSpace& space,
                                 double decision_threshold = 0.5,
                                 OutOfRangePolicy policy = OutOfRangePolicy::Strict);

PredictionTable parse_predictions(const std::string& csv_text,
                                  const ParameterSpace& space,
                                  double decision_threshold = 0.5,
                                  OutOfRangePolicy policy = OutOfRangePolicy::Strict);

void write_predictions(const std::filesystem::path& path, const PredictionTable& table);
std::string predictions_to_csv(const PredictionTable& table);

TableSummary summarize(const PredictionTable& table);

} // namespace acqsens
