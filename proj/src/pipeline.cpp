#include "acqsens/pipeline.hpp"

#include "acqsens/csv.hpp"
#include "acqsens/errors.hpp"
#include "acqsens/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace acqsens {

namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << content;
}

std::string opt_field(const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string{};
}

std::string bool_field(bool b) { return b ? "true" : "false"; }

std::string region_string(const ThresholdConfig& config) {
    std::string s = "[";
    for (std::size_t j = 0; j < config.thresholds.size(); ++j) {
        if (j) s += ", ";
        s += csv::format_double(config.thresholds[j]);
    }
    return s + "]";
}

std::string timestamp_utc() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

class Manifest {
public:
    Manifest(std::string command, const fs::path& out_dir)
        : out_dir_(out_dir), start_(std::chrono::steady_clock::now()) {
        j_["schema_version"] = 1;
        j_["tool"] = "acqsens";
        j_["version"] = kVersion;
        j_["command"] = std::move(command);
        j_["created_utc"] = timestamp_utc();
    }

    nlohmann::ordered_json& json() { return j_; }

    void finish() {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        j_["duration_seconds"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        write_text(out_dir_ / "manifest.json", j_.dump(2) + "\n");
    }

private:
    fs::path out_dir_;
    nlohmann::ordered_json j_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoConfigMeetsConstraints:
        case ErrorCode::EmptyInput:
            return 2;
        case ErrorCode::CompleteSeparation:
        case ErrorCode::ZeroVariance:
            return 3;
        default:
            return 1;
    }
}

std::string pick_reference_method(const PredictionTable& table, double decision_threshold) {
    std::string best;
    double best_acc = -1.0;
    for (const auto& method : table.methods()) {
        std::vector<int> labels;
        std::vector<double> scores;
        for (std::size_t i = 0; i < table.n_records(); ++i) {
            if (table.records()[i].method != method) continue;
            labels.push_back(table.records()[i].label);
            scores.push_back(table.records()[i].score);
        }
        MetricSet m = confusion_metrics(labels, scores, decision_threshold);
        double acc = m.accuracy_balanced ? *m.accuracy_balanced : -0.5;
        if (acc > best_acc) {
            best_acc = acc;
            best = method;
        }
    }
    return best;
}

OptimizeResult run_optimize(const PredictionTable& table, const RunConfig& config,
                            const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Manifest manifest("optimize", out_dir);
    manifest.json()["config"] = config_to_json(config);

    OptimizeResult result;
    auto candidates = grid_candidates(config.space);

    ScanOptions scan;
    scan.alpha = config.alpha;
    scan.min_group = config.min_group;
    scan.bh_correction = config.bh_correction;
    scan.threads = config.threads;
    scan.fit.firth = config.firth;
    result.candidates = significance_scan(table, candidates, scan);

    // candidates.csv
    {
        std::ostringstream out;
        csv::Writer w(out);
        std::vector<std::string> row;
        for (const auto& axis : config.space.axes()) row.push_back("th_" + axis.name);
        row.insert(row.end(),
                   {"n_hq", "n_lq", "beta1", "p_value", "converged", "significant", "skip_reason"});
        w.row(row);
        for (const auto& r : result.candidates) {
            row.clear();
            for (double t : r.config.thresholds) row.push_back(csv::format_double(t));
            row.push_back(std::to_string(r.n_hq));
            row.push_back(std::to_string(r.n_lq));
            bool fitted = r.skipped == SkipReason::None;
            row.push_back(fitted ? csv::format_double(r.beta1) : std::string{});
            row.push_back(fitted ? csv::format_double(r.p_value) : std::string{});
            row.push_back(bool_field(r.converged));
            row.push_back(bool_field(r.significant));
            row.push_back(skip_reason_name(r.skipped));
            w.row(row);
        }
        write_text(out_dir / "candidates.csv", out.str());
    }

    int n_significant = 0, n_nonconverged = 0;
    for (const auto& r : result.candidates) {
        n_significant += r.significant;
        n_nonconverged += (r.skipped == SkipReason::None && !r.converged);
    }
    manifest.json()["counts"] = {{"candidates", result.candidates.size()},
                                 {"significant", n_significant},
                                 {"non_converged", n_nonconverged}};

    try {
        result.layers = pareto_decompose(result.candidates, config.space, config.dominance);
    } catch (const Error&) {
        manifest.finish();
        throw;
    }

    // layers.json
    {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        auto axes = nlohmann::ordered_json::array();
        for (const auto& axis : config.space.axes()) axes.push_back(axis.name);
        j["axes"] = std::move(axes);
        auto layers = nlohmann::ordered_json::array();
        for (std::size_t l = 0; l < result.layers.layers.size(); ++l) {
            nlohmann::ordered_json jl;
            jl["layer"] = l + 1;
            auto configs = nlohmann::ordered_json::array();
            for (const auto& r : result.layers.layers[l]) {
                nlohmann::ordered_json jc;
                jc["thresholds"] = r.config.thresholds;
                jc["beta1"] = r.beta1;
                jc["p_value"] = r.p_value;
                jc["n_hq"] = r.n_hq;
                jc["n_lq"] = r.n_lq;
                configs.push_back(std::move(jc));
            }
            jl["configs"] = std::move(configs);
            layers.push_back(std::move(jl));
        }
        j["layers"] = std::move(layers);
        write_text(out_dir / "layers.json", j.dump(2) + "\n");
    }

    try {
        result.selection =
            select_configurations(result.layers, table, {config.alpha, config.constraints});
    } catch (const Error&) {
        manifest.finish();
        throw;
    }

    // selection.csv, one row per Tukey pair, Table-style
    {
        std::ostringstream out;
        csv::Writer w(out);
        w.row({"layer", "region", "groups", "meandiff", "ci_low", "ci_high", "p_adj", "reject",
               "valid", "rank"});
        for (const auto& e : result.selection.entries) {
            for (const auto& pair : e.comparisons) {
                w.row({std::to_string(e.layer), region_string(e.candidate.config),
                       pair.group_a + "-" + pair.group_b, csv::format_double(pair.meandiff),
                       csv::format_double(pair.ci_low), csv::format_double(pair.ci_high),
                       csv::format_double(pair.p_adj), bool_field(pair.reject),
                       bool_field(e.valid), e.rank > 0 ? std::to_string(e.rank) : std::string{}});
            }
        }
        write_text(out_dir / "selection.csv", out.str());
    }

    manifest.finish();
    return result;
}

namespace {

GlmmFit fit_model(const PredictionTable& table, const ModelSpec& spec,
                  const std::vector<std::uint8_t>* q, const std::vector<double>* d,
                  const FitOptions& options) {
    auto design = build_design(table, spec, q, d);
    return fit(design, options);
}

void append_or_fields(std::vector<std::string>& row, const std::optional<OrEstimate>& e) {
    if (e) {
        row.push_back(csv::format_double(e->estimate));
        row.push_back(csv::format_double(e->ci_low));
        row.push_back(csv::format_double(e->ci_high));
        row.push_back(csv::format_double(e->p_value));
    } else {
        row.insert(row.end(), 4, std::string{});
    }
}

} // namespace

SensitivityResult run_sensitivity(const PredictionTable& table, const RunConfig& config,
                                  const ThresholdConfig& region, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Manifest manifest("sensitivity", out_dir);
    manifest.json()["config"] = config_to_json(config);
    manifest.json()["region"] = region_to_json(region, table.space());

    auto q = quality_labels(table, region);
    auto d = signed_distances(table, region);

    std::string reference = config.reference_method
                                ? *config.reference_method
                                : pick_reference_method(table, config.decision_threshold);
    manifest.json()["reference_method"] = reference;

    FitOptions fit_opts;
    fit_opts.firth = config.firth;

    SensitivityResult result;
    const bool multi_method = table.n_methods() >= 2;

    ModelSpec quality_spec;
    quality_spec.fixed_terms = multi_method
                                   ? std::vector<FixedTerm>{FixedTerm::Intercept,
                                                            FixedTerm::QualityFactor,
                                                            FixedTerm::MethodFactor,
                                                            FixedTerm::QualityByMethod}
                                   : std::vector<FixedTerm>{FixedTerm::Intercept,
                                                            FixedTerm::QualityFactor};
    quality_spec.random_intercepts = {GroupingFactor::CaseId};
    quality_spec.reference_method = multi_method ? reference : "";
    result.quality_joint = fit_model(table, quality_spec, &q, nullptr, fit_opts);

    ModelSpec distance_spec;
    distance_spec.fixed_terms = multi_method
                                    ? std::vector<FixedTerm>{FixedTerm::Intercept,
                                                             FixedTerm::DistanceCovariate,
                                                             FixedTerm::MethodFactor,
                                                             FixedTerm::DistanceByMethod}
                                    : std::vector<FixedTerm>{FixedTerm::Intercept,
                                                             FixedTerm::DistanceCovariate};
    distance_spec.random_intercepts = {GroupingFactor::CaseId};
    distance_spec.reference_method = multi_method ? reference : "";
    result.distance_joint = fit_model(table, distance_spec, nullptr, &d, fit_opts);

    ModelSpec population_spec;
    population_spec.fixed_terms = {FixedTerm::Intercept, FixedTerm::DistanceCovariate};
    population_spec.random_intercepts = {GroupingFactor::Method, GroupingFactor::CaseId};
    result.distance_population = fit_model(table, population_spec, nullptr, &d, fit_opts);

    result.odds = derive_odds_ratios(result.quality_joint);

    // or_table.csv
    {
        std::ostringstream out;
        csv::Writer w(out);
        w.row({"method", "reference", "odd_hq", "odd_lq", "or_n", "or_n_ci_low", "or_n_ci_high",
               "or_n_p", "or_hq_n0", "or_hq_n0_ci_low", "or_hq_n0_ci_high", "or_hq_n0_p",
               "or_lq_n0", "or_lq_n0_ci_low", "or_lq_n0_ci_high", "or_lq_n0_p"});
        for (const auto& m : result.odds.per_method) {
            std::vector<std::string> row = {m.method, bool_field(m.reference),
                                            csv::format_double(m.odd_hq),
                                            csv::format_double(m.odd_lq)};
            append_or_fields(row, m.or_n);
            append_or_fields(row, m.or_hq_n0);
            append_or_fields(row, m.or_lq_n0);
            w.row(row);
        }
        write_text(out_dir / "or_table.csv", out.str());
    }

    // distance_model.json
    {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        const GlmmFit& pop = result.distance_population;
        WaldResult wald = wald_test(pop, "distance");
        nlohmann::ordered_json population;
        population["beta0"] = pop.beta[pop.coef_index("intercept")];
        population["beta1"] = wald.estimate;
        population["sigma_method"] = std::sqrt(pop.variance_components.at("Method"));
        population["sigma_case"] = std::sqrt(pop.variance_components.at("CaseID"));
        population["p_beta1"] = wald.p_two_sided;
        j["population"] = std::move(population);
        j["per_method_fit"] = nlohmann::ordered_json::parse(fit_to_json(result.distance_joint));
        j["population_fit"] = nlohmann::ordered_json::parse(fit_to_json(pop));
        write_text(out_dir / "distance_model.json", j.dump(2) + "\n");
    }

    // decay_curve.csv
    {
        double d_min = *std::min_element(d.begin(), d.end());
        double d_max = *std::max_element(d.begin(), d.end());
        if (d_min == d_max) {
            d_min -= 1.0;
            d_max += 1.0;
        }
        std::vector<double> grid(static_cast<std::size_t>(config.d_grid_points));
        for (std::size_t i = 0; i < grid.size(); ++i)
            grid[i] = d_min + (d_max - d_min) * static_cast<double>(i) /
                                  static_cast<double>(grid.size() - 1);

        std::ostringstream out;
        csv::Writer w(out);
        w.row({"model", "method", "d_q", "probability", "ci_low", "ci_high"});
        auto emit = [&](const std::string& model, const DecayCurves& curves) {
            for (std::size_t m = 0; m < curves.methods.size(); ++m) {
                for (const auto& point : curves.curves[m]) {
                    w.row({model, curves.methods[m], csv::format_double(point.d),
                           csv::format_double(point.probability), csv::format_double(point.ci_low),
                           csv::format_double(point.ci_high)});
                }
            }
        };
        emit("per_method", decay_curve(result.distance_joint, grid));
        emit("population", decay_curve(result.distance_population, grid));
        write_text(out_dir / "decay_curve.csv", out.str());
    }

    manifest.finish();
    return result;
}

ImpactResult run_impact(const PredictionTable& table, const RunConfig& config,
                        const ThresholdConfig& region, const std::vector<std::string>& methods_in,
                        const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Manifest manifest("impact", out_dir);
    manifest.json()["config"] = config_to_json(config);
    manifest.json()["region"] = region_to_json(region, table.space());

    std::vector<std::string> methods = methods_in;
    if (methods.empty()) methods = table.methods();
    for (const auto& m : methods)
        if (std::find(table.methods().begin(), table.methods().end(), m) == table.methods().end())
            fail(ErrorCode::ReferenceMethodAbsent, "method '" + m + "' not present in the table");

    auto q = quality_labels(table, region);

    ImpactResult result;
    const char* group_names[3] = {"HQ", "LQ", "ALL"};
    for (const auto& method : methods) {
        for (int g = 0; g < 3; ++g) {
            std::vector<int> labels;
            std::vector<double> scores;
            for (std::size_t i = 0; i < table.n_records(); ++i) {
                if (table.records()[i].method != method) continue;
                if (g == 0 && q[i] != 0) continue;
                if (g == 1 && q[i] != 1) continue;
                labels.push_back(table.records()[i].label);
                scores.push_back(table.records()[i].score);
            }
            ImpactRow row;
            row.method = method;
            row.quality = group_names[g];
            if (!labels.empty())
                row.metrics = confusion_metrics(labels, scores, config.decision_threshold);
            result.rows.push_back(std::move(row));
        }
    }

    struct MetricAccessor {
        const char* name;
        std::optional<double> MetricSet::* field;
    };
    const MetricAccessor accessors[] = {
        {"specificity", &MetricSet::specificity}, {"sensitivity", &MetricSet::sensitivity},
        {"f1_score", &MetricSet::f1_balanced},    {"accuracy", &MetricSet::accuracy_balanced},
        {"auc", &MetricSet::auc},
    };

    // metrics.csv: exactly |methods| x 3 rows
    {
        std::ostringstream out;
        csv::Writer w(out);
        w.row({"method", "q", "n", "specificity", "sensitivity", "f1_score", "accuracy", "auc"});
        for (const auto& row : result.rows) {
            w.row({row.method, row.quality, std::to_string(row.metrics.n),
                   opt_field(row.metrics.specificity), opt_field(row.metrics.sensitivity),
                   opt_field(row.metrics.f1_balanced), opt_field(row.metrics.accuracy_balanced),
                   opt_field(row.metrics.auc)});
        }
        write_text(out_dir / "metrics.csv", out.str());
    }

    auto metric_values = [&](const char* group, std::optional<double> MetricSet::* field) {
        std::vector<double> values;
        for (const auto& row : result.rows)
            if (row.quality == group && row.metrics.*field) values.push_back(*(row.metrics.*field));
        return values;
    };

    // metrics_summary.csv: mean +/- sd per quality group
    {
        std::ostringstream out;
        csv::Writer w(out);
        w.row({"q", "metric", "mean", "sd", "n_methods"});
        for (const char* group : group_names) {
            for (const auto& acc : accessors) {
                auto values = metric_values(group, acc.field);
                std::vector<std::string> row = {group, acc.name};
                if (!values.empty()) {
                    double mean = 0.0;
                    for (double v : values) mean += v;
                    mean /= static_cast<double>(values.size());
                    double var = 0.0;
                    for (double v : values) var += (v - mean) * (v - mean);
                    double sd = values.size() > 1
                                    ? std::sqrt(var / static_cast<double>(values.size() - 1))
                                    : 0.0;
                    row.push_back(csv::format_double(mean));
                    row.push_back(csv::format_double(sd));
                } else {
                    row.insert(row.end(), 2, std::string{});
                }
                row.push_back(std::to_string(values.size()));
                w.row(row);
            }
        }
        write_text(out_dir / "metrics_summary.csv", out.str());
    }

    // wilcoxon.csv: one-sided paired tests across methods
    {
        std::ostringstream out;
        csv::Writer w(out);
        w.row({"metric", "group_a", "group_b", "alternative", "n", "statistic", "p_value"});
        const std::pair<const char*, const char*> pairs[] = {
            {"HQ", "ALL"}, {"ALL", "LQ"}, {"HQ", "LQ"}};
        for (const auto& acc : accessors) {
            for (const auto& [ga, gb] : pairs) {
                std::vector<double> diffs;
                for (const auto& method : methods) {
                    std::optional<double> va, vb;
                    for (const auto& row : result.rows) {
                        if (row.method != method) continue;
                        if (row.quality == ga) va = row.metrics.*acc.field;
                        if (row.quality == gb) vb = row.metrics.*acc.field;
                    }
                    if (va && vb) diffs.push_back(*va - *vb);
                }
                if (diffs.size() < 2) continue; // too few methods for a paired test
                try {
                    WilcoxonResult wres = wilcoxon_signed_rank(diffs, Alternative::Greater);
                    WilcoxonRow wrow{acc.name, ga, gb, wres.n, wres.statistic, wres.p_value};
                    result.wilcoxon.push_back(wrow);
                    w.row({acc.name, ga, gb, "greater", std::to_string(wres.n),
                           csv::format_double(wres.statistic), csv::format_double(wres.p_value)});
                } catch (const Error&) {
                    // all-zero differences: nothing to test for this metric
                }
            }
        }
        write_text(out_dir / "wilcoxon.csv", out.str());
    }

    // boxplot_data.csv
    {
        std::ostringstream out;
        csv::Writer w(out);
        w.row({"metric", "method", "q", "value"});
        for (const auto& acc : accessors) {
            for (const auto& row : result.rows) {
                if (!(row.metrics.*acc.field)) continue;
                w.row({acc.name, row.method, row.quality,
                       csv::format_double(*(row.metrics.*acc.field))});
            }
        }
        write_text(out_dir / "boxplot_data.csv", out.str());
    }

    manifest.finish();
    return result;
}

SimResult run_simulate(const SimSpec& spec, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Manifest manifest("simulate", out_dir);
    manifest.json()["spec"] = nlohmann::ordered_json::parse(simspec_to_json(spec));

    SimResult result = generate(spec);
    write_text(out_dir / "data.csv", predictions_to_csv(result.table));
    write_text(out_dir / "truth.json", result.ground_truth_json);
    manifest.json()["counts"] = {{"records", result.table.n_records()},
                                 {"cases", result.table.n_cases()},
                                 {"methods", result.table.n_methods()}};
    manifest.finish();
    return result;
}

} // namespace acqsens
