#include "acqsens/pareto.hpp"

#include "acqsens/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

namespace acqsens {

std::vector<double> axis_grid(const Axis& axis) {
    std::vector<double> values(axis.bins);
    for (int b = 0; b < axis.bins; ++b) {
        double t = static_cast<double>(b) / static_cast<double>(axis.bins - 1);
        values[b] = axis.min + t * (axis.max - axis.min);
    }
    values.back() = axis.max; // exact endpoint
    return values;
}

std::vector<ThresholdConfig> grid_candidates(const ParameterSpace& space) {
    std::vector<std::vector<double>> grids;
    std::size_t total = 1;
    for (const auto& axis : space.axes()) {
        grids.push_back(axis_grid(axis));
        total *= grids.back().size();
    }
    std::vector<ThresholdConfig> out;
    out.reserve(total);
    std::vector<std::size_t> idx(space.dim(), 0);
    for (std::size_t c = 0; c < total; ++c) {
        ThresholdConfig config;
        config.thresholds.resize(space.dim());
        for (std::size_t j = 0; j < space.dim(); ++j)
            config.thresholds[j] = grids[j][idx[j]];
        out.push_back(std::move(config));
        // lexicographic: last axis varies fastest
        for (std::size_t j = space.dim(); j-- > 0;) {
            if (++idx[j] < grids[j].size()) break;
            idx[j] = 0;
        }
    }
    return out;
}

const char* skip_reason_name(SkipReason r) {
    switch (r) {
        case SkipReason::None: return "";
        case SkipReason::DegenerateSplit: return "degenerate_split";
        case SkipReason::ConstantResponse: return "constant_response";
        case SkipReason::FitError: return "fit_error";
    }
    return "";
}

namespace {

CandidateResult evaluate_candidate(const PredictionTable& table, const ThresholdConfig& config,
                                   const ScanOptions& options) {
    CandidateResult result;
    result.config = config;

    auto q = quality_labels(table, config);

    // A case is counted once, by the label of its first record in canonical
    // order (acquisition parameters are case-level in practice).
    std::vector<signed char> case_label(table.n_cases(), -1);
    for (std::size_t i = 0; i < table.n_records(); ++i) {
        int c = table.case_index(i);
        if (case_label[c] < 0) case_label[c] = static_cast<signed char>(q[i]);
    }
    for (signed char label : case_label)
        (label == 0 ? result.n_hq : result.n_lq) += 1;

    if (result.n_hq < options.min_group || result.n_lq < options.min_group) {
        result.skipped = SkipReason::DegenerateSplit;
        return result;
    }

    // Each quality arm must contain both response classes.
    bool hq_has[2] = {false, false}, lq_has[2] = {false, false};
    for (std::size_t i = 0; i < table.n_records(); ++i) {
        if (q[i] == 0)
            hq_has[table.failure(i)] = true;
        else
            lq_has[table.failure(i)] = true;
    }
    if (!(hq_has[0] && hq_has[1]) || !(lq_has[0] && lq_has[1])) {
        result.skipped = SkipReason::ConstantResponse;
        return result;
    }

    ModelSpec spec;
    spec.fixed_terms = {FixedTerm::Intercept, FixedTerm::QualityFactor};
    spec.random_intercepts = {GroupingFactor::Method, GroupingFactor::CaseId};
    try {
        auto design = build_design(table, spec, &q, nullptr);
        GlmmFit model = fit(design, options.fit);
        WaldResult wald = wald_test(model, "quality");
        result.beta1 = wald.estimate;
        result.p_value = wald.p_two_sided;
        result.converged = model.converged;
    } catch (const Error&) {
        result.skipped = SkipReason::FitError;
        result.converged = false;
    }
    return result;
}

} // namespace

std::vector<CandidateResult> significance_scan(const PredictionTable& table,
                                               const std::vector<ThresholdConfig>& candidates,
                                               const ScanOptions& options) {
    if (table.n_records() == 0) fail(ErrorCode::EmptyTable, "empty table");
    if (!(options.alpha > 0.0 && options.alpha <= 1.0))
        fail(ErrorCode::InvalidConfig, "alpha must lie in (0,1]");

    std::vector<CandidateResult> results(candidates.size());
    int threads = std::max(1, options.threads);

    if (threads == 1 || candidates.size() <= 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i)
            results[i] = evaluate_candidate(table, candidates[i], options);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= candidates.size()) return;
                results[i] = evaluate_candidate(table, candidates[i], options);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Raw p-values are kept in the results; the optional Benjamini-Hochberg
    // step only affects the significance flags.
    std::vector<double> threshold_p(results.size(), options.alpha);
    if (options.bh_correction) {
        std::vector<std::size_t> fitted;
        for (std::size_t i = 0; i < results.size(); ++i)
            if (results[i].skipped == SkipReason::None && results[i].converged)
                fitted.push_back(i);
        std::sort(fitted.begin(), fitted.end(), [&](std::size_t a, std::size_t b) {
            return results[a].p_value < results[b].p_value;
        });
        const double m = static_cast<double>(fitted.size());
        double running_adj = 1.0;
        for (std::size_t r = fitted.size(); r-- > 0;) {
            double adj = results[fitted[r]].p_value * m / static_cast<double>(r + 1);
            running_adj = std::min(running_adj, adj);
            // reject iff adjusted p < alpha
            threshold_p[fitted[r]] = running_adj < options.alpha
                                         ? std::nextafter(results[fitted[r]].p_value,
                                                          std::numeric_limits<double>::infinity())
                                         : -1.0;
        }
    }

    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& r = results[i];
        r.significant = r.skipped == SkipReason::None && r.converged && r.beta1 > 0.0 &&
                        r.p_value < threshold_p[i];
    }
    return results;
}

bool dominates(const ThresholdConfig& a, const ThresholdConfig& b, const ParameterSpace& space,
               DominanceOrder order) {
    bool strict = false;
    for (std::size_t j = 0; j < space.dim(); ++j) {
        bool increasing = space.axis(j).direction == QualityDirection::Increasing;
        if (order == DominanceOrder::QualityMinimal) increasing = !increasing;
        double da = a.thresholds[j], db = b.thresholds[j];
        if (increasing) {
            if (da < db) return false;
            if (da > db) strict = true;
        } else {
            if (da > db) return false;
            if (da < db) strict = true;
        }
    }
    return strict;
}

std::vector<ThresholdConfig> ParetoLayerSet::layer_configs(std::size_t layer) const {
    std::vector<ThresholdConfig> configs;
    for (const auto& r : layers[layer]) configs.push_back(r.config);
    return configs;
}

ParetoLayerSet pareto_decompose(const std::vector<CandidateResult>& significant,
                                const ParameterSpace& space, DominanceOrder order) {
    std::vector<CandidateResult> pool;
    for (const auto& r : significant) {
        if (!r.significant) continue;
        bool dup = false;
        for (const auto& kept : pool)
            if (kept.config == r.config) {
                dup = true;
                break;
            }
        if (!dup) pool.push_back(r);
    }
    if (pool.empty()) fail(ErrorCode::EmptyInput, "no significant configurations");

    ParetoLayerSet out;
    while (!pool.empty()) {
        std::vector<CandidateResult> layer, rest;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < pool.size() && !dominated; ++j)
                dominated = j != i && dominates(pool[j].config, pool[i].config, space, order);
            (dominated ? rest : layer).push_back(pool[i]);
        }
        out.layers.push_back(std::move(layer));
        pool = std::move(rest);
    }
    return out;
}

namespace {

bool meets_constraints(const ThresholdConfig& config, const ParameterSpace& space,
                       const std::vector<AxisConstraint>& constraints) {
    for (const auto& c : constraints) {
        int j = space.axis_index(c.axis);
        if (j < 0) fail(ErrorCode::InvalidConfig, "constraint on unknown axis '" + c.axis + "'");
        double th = config.thresholds[static_cast<std::size_t>(j)];
        if (c.min && th < *c.min) return false;
        if (c.max && th > *c.max) return false;
    }
    return true;
}

} // namespace

SelectionReport select_configurations(const ParetoLayerSet& layers, const PredictionTable& table,
                                      const SelectionOptions& options) {
    if (layers.layers.empty()) fail(ErrorCode::EmptyInput, "no layers");

    SelectionReport report;
    bool any_candidate = false;

    for (std::size_t l = 0; l < layers.layers.size(); ++l) {
        for (const auto& candidate : layers.layers[l]) {
            if (!meets_constraints(candidate.config, table.space(), options.constraints)) continue;
            any_candidate = true;

            SelectionEntry entry;
            entry.layer = static_cast<int>(l) + 1;
            entry.candidate = candidate;

            auto q = quality_labels(table, candidate.config);

            // Per-(method, fold) accuracy observations; records without a
            // fold share the -1 bucket.
            struct Cell {
                long correct_all = 0, n_all = 0;
                long correct_hq = 0, n_hq = 0;
                long correct_lq = 0, n_lq = 0;
            };
            std::map<std::pair<int, int>, Cell> cells;
            for (std::size_t i = 0; i < table.n_records(); ++i) {
                const auto& r = table.records()[i];
                auto key = std::make_pair(table.method_index(i), r.fold ? *r.fold : -1);
                Cell& cell = cells[key];
                long correct = 1 - table.failure(i);
                cell.correct_all += correct;
                cell.n_all += 1;
                if (q[i] == 0) {
                    cell.correct_hq += correct;
                    cell.n_hq += 1;
                } else {
                    cell.correct_lq += correct;
                    cell.n_lq += 1;
                }
            }
            std::vector<double> acc_all, acc_hq, acc_lq;
            for (const auto& [key, cell] : cells) {
                if (cell.n_all > 0)
                    acc_all.push_back(static_cast<double>(cell.correct_all) / cell.n_all);
                if (cell.n_hq > 0)
                    acc_hq.push_back(static_cast<double>(cell.correct_hq) / cell.n_hq);
                if (cell.n_lq > 0)
                    acc_lq.push_back(static_cast<double>(cell.correct_lq) / cell.n_lq);
            }
            auto mean = [](const std::vector<double>& v) {
                return v.empty() ? std::nan("")
                                 : std::accumulate(v.begin(), v.end(), 0.0) /
                                       static_cast<double>(v.size());
            };
            entry.mean_all = mean(acc_all);
            entry.mean_hq = mean(acc_hq);
            entry.mean_lq = mean(acc_lq);
            entry.hq_minus_all = entry.mean_hq - entry.mean_all;

            try {
                TukeyResult tukey = tukey_hsd(
                    {{"All", acc_all}, {"HQ", acc_hq}, {"LQ", acc_lq}}, options.alpha);
                entry.comparisons = tukey.pairs;
                const auto& all_hq = tukey.pairs[0];
                const auto& all_lq = tukey.pairs[1];
                const auto& hq_lq = tukey.pairs[2];
                entry.valid = all_hq.reject && all_hq.meandiff > 0.0 && all_lq.reject &&
                              all_lq.meandiff < 0.0 && hq_lq.reject && hq_lq.meandiff < 0.0;
            } catch (const Error&) {
                entry.valid = false;
            }
            report.entries.push_back(std::move(entry));
        }
    }

    if (!any_candidate)
        fail(ErrorCode::NoConfigMeetsConstraints, "no configuration meets the constraints");

    // Valid entries ranked by HQ-vs-ALL gain; invalid entries follow in
    // layer order. Ties break on layer then thresholds for determinism.
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const SelectionEntry& a, const SelectionEntry& b) {
                         if (a.valid != b.valid) return a.valid;
                         if (a.valid && a.hq_minus_all != b.hq_minus_all)
                             return a.hq_minus_all > b.hq_minus_all;
                         if (a.layer != b.layer) return a.layer < b.layer;
                         return a.candidate.config.thresholds < b.candidate.config.thresholds;
                     });
    int rank = 0;
    for (auto& entry : report.entries)
        if (entry.valid) entry.rank = ++rank;
    return report;
}

} // namespace acqsens
