#include "acqsens/dataset.hpp"

#include "acqsens/csv.hpp"
#include "acqsens/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace acqsens {

ParameterSpace::ParameterSpace(std::vector<Axis> axes) : axes_(std::move(axes)) {
    std::set<std::string> names;
    for (const auto& a : axes_) {
        if (a.name.empty()) fail(ErrorCode::InvalidConfig, "axis with empty name");
        if (!names.insert(a.name).second)
            fail(ErrorCode::InvalidConfig, "duplicate axis name '" + a.name + "'");
        if (!(a.min < a.max))
            fail(ErrorCode::InvalidConfig, "axis '" + a.name + "' requires min < max");
        if (a.bins < 2)
            fail(ErrorCode::InvalidConfig, "axis '" + a.name + "' requires bins >= 2");
        if (!(a.scale > 0.0))
            fail(ErrorCode::InvalidConfig, "axis '" + a.name + "' requires scale > 0");
    }
}

int ParameterSpace::axis_index(std::string_view name) const {
    for (std::size_t j = 0; j < axes_.size(); ++j) {
        if (axes_[j].name == name) return static_cast<int>(j);
    }
    return -1;
}

namespace {

double parse_double(const std::string& text, const std::string& what) {
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        fail(ErrorCode::NonFiniteValue, "cannot parse " + what + " from '" + text + "'");
    return value;
}

int parse_int(const std::string& text, const std::string& what) {
    int value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        fail(ErrorCode::NonFiniteValue, "cannot parse " + what + " from '" + text + "'");
    return value;
}

} // namespace

PredictionTable PredictionTable::from_records(std::vector<PredictionRecord> records,
                                              ParameterSpace space, double decision_threshold,
                                              OutOfRangePolicy policy) {
    if (records.empty()) fail(ErrorCode::EmptyTable, "no prediction records");
    if (!(decision_threshold > 0.0 && decision_threshold < 1.0))
        fail(ErrorCode::InvalidConfig, "decision threshold must lie in (0,1)");

    PredictionTable table;
    table.space_ = std::move(space);
    table.decision_threshold_ = decision_threshold;
    const std::size_t np = table.space_.dim();

    for (auto& r : records) {
        if (r.label != 0 && r.label != 1)
            fail(ErrorCode::NonFiniteValue,
                 "label must be 0 or 1 for case '" + r.case_id + "'");
        if (!std::isfinite(r.score) || r.score < 0.0 || r.score > 1.0)
            fail(ErrorCode::NonFiniteValue,
                 "score outside [0,1] for case '" + r.case_id + "'");
        if (r.params.size() != np)
            fail(ErrorCode::DimensionMismatch,
                 "record for case '" + r.case_id + "' has " +
                     std::to_string(r.params.size()) + " params, expected " +
                     std::to_string(np));
        for (std::size_t j = 0; j < np; ++j) {
            double v = r.params[j];
            const Axis& axis = table.space_.axis(j);
            if (!std::isfinite(v))
                fail(ErrorCode::NonFiniteValue,
                     "non-finite value for axis '" + axis.name + "', case '" + r.case_id + "'");
            if (v < axis.min || v > axis.max) {
                if (policy == OutOfRangePolicy::Strict)
                    fail(ErrorCode::OutOfRange,
                         "axis '" + axis.name + "' value " + std::to_string(v) +
                             " outside [" + std::to_string(axis.min) + ", " +
                             std::to_string(axis.max) + "] for case '" + r.case_id + "'");
                r.params[j] = std::clamp(v, axis.min, axis.max);
                ++table.clamped_;
            }
        }
    }

    // Canonical order makes every downstream statistic independent of the
    // input row order (bit for bit).
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        if (a.case_id != b.case_id) return a.case_id < b.case_id;
        return a.method < b.method;
    });
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].case_id == records[i - 1].case_id &&
            records[i].method == records[i - 1].method)
            fail(ErrorCode::DuplicateKey, "duplicate (case_id, method) = ('" +
                                              records[i].case_id + "', '" +
                                              records[i].method + "')");
    }

    table.records_ = std::move(records);
    table.failures_.resize(table.records_.size());
    table.case_index_.resize(table.records_.size());
    table.method_index_.resize(table.records_.size());

    std::set<std::string> case_set, method_set;
    for (const auto& r : table.records_) {
        case_set.insert(r.case_id);
        method_set.insert(r.method);
    }
    table.cases_.assign(case_set.begin(), case_set.end());
    table.methods_.assign(method_set.begin(), method_set.end());

    for (std::size_t i = 0; i < table.records_.size(); ++i) {
        const auto& r = table.records_[i];
        int predicted = r.score >= decision_threshold ? 1 : 0;
        table.failures_[i] = static_cast<std::uint8_t>(predicted != r.label);
        table.case_index_[i] = static_cast<int>(
            std::lower_bound(table.cases_.begin(), table.cases_.end(), r.case_id) -
            table.cases_.begin());
        table.method_index_[i] = static_cast<int>(
            std::lower_bound(table.methods_.begin(), table.methods_.end(), r.method) -
            table.methods_.begin());
    }
    return table;
}

PredictionTable parse_predictions(const std::string& csv_text, const ParameterSpace& space,
                                  double decision_threshold, OutOfRangePolicy policy) {
    csv::Table raw = csv::read_string(csv_text);

    const char* required[] = {"case_id", "method", "fold", "label", "score"};
    std::vector<int> cols;
    for (const char* name : required) {
        int c = raw.column(name);
        if (c < 0) fail(ErrorCode::MissingColumn, std::string("missing column '") + name + "'");
        cols.push_back(c);
    }
    std::vector<int> axis_cols;
    for (const auto& axis : space.axes()) {
        int c = raw.column(axis.name);
        if (c < 0) fail(ErrorCode::MissingColumn, "missing axis column '" + axis.name + "'");
        axis_cols.push_back(c);
    }

    if (raw.rows.empty()) fail(ErrorCode::EmptyTable, "CSV contains no data rows");

    std::vector<PredictionRecord> records;
    records.reserve(raw.rows.size());
    for (const auto& row : raw.rows) {
        if (row.size() < raw.header.size())
            fail(ErrorCode::MissingColumn, "row has fewer fields than the header");
        PredictionRecord r;
        r.case_id = row[cols[0]];
        r.method = row[cols[1]];
        if (!row[cols[2]].empty()) r.fold = parse_int(row[cols[2]], "fold");
        r.label = parse_int(row[cols[3]], "label");
        r.score = parse_double(row[cols[4]], "score");
        r.params.reserve(axis_cols.size());
        for (std::size_t j = 0; j < axis_cols.size(); ++j)
            r.params.push_back(parse_double(row[axis_cols[j]], "axis '" + space.axis(j).name + "'"));
        records.push_back(std::move(r));
    }
    return PredictionTable::from_records(std::move(records), space, decision_threshold, policy);
}

PredictionTable load_predictions(const std::filesystem::path& path, const ParameterSpace& space,
                                 double decision_threshold, OutOfRangePolicy policy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_predictions(buffer.str(), space, decision_threshold, policy);
}

std::string predictions_to_csv(const PredictionTable& table) {
    std::ostringstream out;
    csv::Writer w(out);
    std::vector<std::string> row = {"case_id", "method", "fold", "label", "score"};
    for (const auto& axis : table.space().axes()) row.push_back(axis.name);
    w.row(row);
    for (const auto& r : table.records()) {
        row.clear();
        row.push_back(r.case_id);
        row.push_back(r.method);
        row.push_back(r.fold ? std::to_string(*r.fold) : std::string{});
        row.push_back(std::to_string(r.label));
        row.push_back(csv::format_double(r.score));
        for (double v : r.params) row.push_back(csv::format_double(v));
        w.row(row);
    }
    return out.str();
}

void write_predictions(const std::filesystem::path& path, const PredictionTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << predictions_to_csv(table);
}

namespace {

// Linear-interpolation quantile on a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return std::nan("");
    if (sorted.size() == 1) return sorted[0];
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= sorted.size() - 1) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

} // namespace

TableSummary summarize(const PredictionTable& table) {
    if (table.n_records() == 0) fail(ErrorCode::EmptyTable, "cannot summarize an empty table");
    TableSummary s;
    s.n_records = table.n_records();
    s.n_cases = table.n_cases();

    const auto& axes = table.space().axes();
    for (std::size_t j = 0; j < axes.size(); ++j) {
        std::vector<double> values;
        values.reserve(table.n_records());
        for (const auto& r : table.records()) values.push_back(r.params[j]);
        std::sort(values.begin(), values.end());
        s.axes.push_back({axes[j].name, values.front(), quantile_sorted(values, 0.25),
                          quantile_sorted(values, 0.5), quantile_sorted(values, 0.75),
                          values.back()});
    }

    std::map<std::string, std::set<std::string>> method_cases;
    long positives = 0;
    for (const auto& r : table.records()) {
        method_cases[r.method].insert(r.case_id);
        positives += r.label;
        int fold = r.fold ? *r.fold : -1;
        s.fold_counts[fold] += 1;
    }
    for (const auto& [method, cases] : method_cases)
        s.cases_per_method[method] = static_cast<int>(cases.size());
    s.positive_prevalence =
        static_cast<double>(positives) / static_cast<double>(table.n_records());
    return s;
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::DuplicateKey: return "DuplicateKey";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::MissingCovariate: return "MissingCovariate";
        case ErrorCode::ReferenceMethodAbsent: return "ReferenceMethodAbsent";
        case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
        case ErrorCode::CompleteSeparation: return "CompleteSeparation";
        case ErrorCode::UnknownCoefficient: return "UnknownCoefficient";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::SpecMismatch: return "SpecMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NoConfigMeetsConstraints: return "NoConfigMeetsConstraints";
        case ErrorCode::EmptySubset: return "EmptySubset";
        case ErrorCode::DegenerateGroups: return "DegenerateGroups";
        case ErrorCode::AllZeroDiffs: return "AllZeroDiffs";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace acqsens
