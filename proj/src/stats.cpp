#include "acqsens/stats.hpp"

#include "acqsens/distributions.hpp"
#include "acqsens/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acqsens {

std::optional<double> rank_auc(std::span<const int> labels, std::span<const double> scores) {
    const std::size_t n = labels.size();
    long n_pos = 0;
    for (int y : labels) n_pos += y;
    long n_neg = static_cast<long>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over score ties; rank sum of the positive class.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

MetricSet confusion_metrics(std::span<const int> labels, std::span<const double> scores,
                            double threshold) {
    if (labels.empty()) fail(ErrorCode::EmptySubset, "no records to score");
    if (labels.size() != scores.size())
        fail(ErrorCode::DimensionMismatch, "labels/scores length mismatch");

    MetricSet m;
    m.n = static_cast<long>(labels.size());
    bool hard_scores = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int pred = scores[i] >= threshold ? 1 : 0;
        if (labels[i] == 1)
            pred == 1 ? ++m.tp : ++m.fn;
        else
            pred == 1 ? ++m.fp : ++m.tn;
        if (scores[i] != 0.0 && scores[i] != 1.0) hard_scores = false;
    }

    if (m.tp + m.fn > 0) m.sensitivity = static_cast<double>(m.tp) / (m.tp + m.fn);
    if (m.tn + m.fp > 0) m.specificity = static_cast<double>(m.tn) / (m.tn + m.fp);
    if (m.sensitivity && m.specificity)
        m.accuracy_balanced = 0.5 * (*m.sensitivity + *m.specificity);

    // Class-balanced (macro) F1: mean of the per-class F1 scores.
    long pos_denom = 2 * m.tp + m.fp + m.fn;
    long neg_denom = 2 * m.tn + m.fp + m.fn;
    if (pos_denom > 0 && neg_denom > 0) {
        double f1_pos = 2.0 * m.tp / static_cast<double>(pos_denom);
        double f1_neg = 2.0 * m.tn / static_cast<double>(neg_denom);
        m.f1_balanced = 0.5 * (f1_pos + f1_neg);
    }

    if (!hard_scores) m.auc = rank_auc(labels, scores);
    return m;
}

TukeyResult tukey_hsd(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                      double alpha) {
    const std::size_t k = groups.size();
    if (k < 2) fail(ErrorCode::DegenerateGroups, "need at least 2 groups");
    long n_total = 0;
    for (const auto& [name, values] : groups) {
        if (values.size() < 2)
            fail(ErrorCode::DegenerateGroups, "group '" + name + "' needs >= 2 observations");
        n_total += static_cast<long>(values.size());
    }

    std::vector<double> means(k);
    double grand_sum = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
        const auto& values = groups[g].second;
        means[g] = std::accumulate(values.begin(), values.end(), 0.0) /
                   static_cast<double>(values.size());
        grand_sum += means[g] * static_cast<double>(values.size());
    }
    double grand_mean = grand_sum / static_cast<double>(n_total);

    double ss_within = 0.0, ss_between = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
        const auto& values = groups[g].second;
        for (double v : values) ss_within += (v - means[g]) * (v - means[g]);
        double d = means[g] - grand_mean;
        ss_between += static_cast<double>(values.size()) * d * d;
    }
    long df_within = n_total - static_cast<long>(k);
    long df_between = static_cast<long>(k) - 1;
    double ms_within = ss_within / static_cast<double>(df_within);

    TukeyResult result;
    result.ms_within = ms_within;
    result.df_within = df_within;
    if (ms_within > 0.0) {
        result.f_stat = (ss_between / static_cast<double>(df_between)) / ms_within;
        result.p_anova =
            1.0 - dist::f_cdf(result.f_stat, static_cast<double>(df_between),
                              static_cast<double>(df_within));
    } else {
        result.f_stat = ss_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        result.p_anova = ss_between > 0.0 ? 0.0 : 1.0;
    }

    double q_crit = ms_within > 0.0
                        ? dist::studentized_range_quantile(1.0 - alpha, static_cast<int>(k),
                                                           static_cast<double>(df_within))
                        : 0.0;

    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            TukeyPair pair;
            pair.group_a = groups[a].first;
            pair.group_b = groups[b].first;
            pair.meandiff = means[b] - means[a];
            double na = static_cast<double>(groups[a].second.size());
            double nb = static_cast<double>(groups[b].second.size());
            double se = std::sqrt(0.5 * ms_within * (1.0 / na + 1.0 / nb));
            if (se > 0.0) {
                double q = std::fabs(pair.meandiff) / se;
                pair.p_adj = 1.0 - dist::studentized_range_cdf(q, static_cast<int>(k),
                                                               static_cast<double>(df_within));
                pair.ci_low = pair.meandiff - q_crit * se;
                pair.ci_high = pair.meandiff + q_crit * se;
            } else {
                // Zero pooled variance: unequal means are an exact rejection,
                // identical data is not.
                bool differ = pair.meandiff != 0.0;
                pair.p_adj = differ ? 0.0 : 1.0;
                pair.ci_low = pair.ci_high = pair.meandiff;
            }
            pair.reject = pair.p_adj < alpha;
            result.pairs.push_back(pair);
        }
    }
    return result;
}

namespace {

// Average ranks of |d|, doubled so ties yield integers.
std::vector<long> doubled_ranks(const std::vector<double>& abs_diffs) {
    const std::size_t n = abs_diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
    std::vector<long> r2(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
        long doubled = static_cast<long>(i + j) + 2; // 2 * average rank
        for (std::size_t k = i; k <= j; ++k) r2[order[k]] = doubled;
        i = j + 1;
    }
    return r2;
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative) {
    std::vector<double> abs_values;
    std::vector<int> signs;
    for (double d : diffs) {
        if (d == 0.0) continue; // drop-zeros convention
        abs_values.push_back(std::fabs(d));
        signs.push_back(d > 0.0 ? 1 : -1);
    }
    const long n = static_cast<long>(abs_values.size());
    if (n == 0) fail(ErrorCode::AllZeroDiffs, "all paired differences are zero");

    auto r2 = doubled_ranks(abs_values);
    long w2 = 0;   // doubled signed-rank statistic
    long tot2 = 0; // doubled sum of all ranks = n(n+1)
    for (std::size_t i = 0; i < r2.size(); ++i) {
        tot2 += r2[i];
        if (signs[i] > 0) w2 += r2[i];
    }

    WilcoxonResult result;
    result.n = n;
    result.statistic = 0.5 * static_cast<double>(w2);

    if (n <= 25) {
        result.exact = true;
        // Distribution of the doubled statistic over all 2^n sign choices,
        // conditional on the observed tie pattern.
        std::vector<double> count(static_cast<std::size_t>(tot2) + 1, 0.0);
        count[0] = 1.0;
        long reach = 0;
        for (long r : r2) {
            for (long s = reach; s >= 0; --s) {
                if (count[s] > 0.0) count[s + r] += count[s];
            }
            reach += r;
        }
        double total = std::ldexp(1.0, static_cast<int>(n)); // 2^n
        auto tail_ge = [&](long w) {
            double acc = 0.0;
            for (long s = std::max(w, 0L); s <= tot2; ++s) acc += count[s];
            return acc / total;
        };
        auto tail_le = [&](long w) {
            double acc = 0.0;
            for (long s = 0; s <= std::min(w, tot2); ++s) acc += count[s];
            return acc / total;
        };
        switch (alternative) {
            case Alternative::Greater: result.p_value = tail_ge(w2); break;
            case Alternative::Less: result.p_value = tail_le(w2); break;
            case Alternative::TwoSided:
                result.p_value = std::min(1.0, 2.0 * std::min(tail_ge(w2), tail_le(w2)));
                break;
        }
    } else {
        result.exact = false;
        double w = result.statistic;
        double mean = static_cast<double>(n) * (n + 1) / 4.0;
        double var = static_cast<double>(n) * (n + 1) * (2.0 * n + 1.0) / 24.0;
        // Tie correction over groups of equal |d|.
        std::vector<double> sorted(abs_values);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            double t = static_cast<double>(j - i + 1);
            var -= t * (t * t - 1.0) / 48.0;
            i = j + 1;
        }
        double sd = std::sqrt(var);
        if (sd == 0.0) fail(ErrorCode::DegenerateGroups, "zero variance in signed ranks");
        switch (alternative) {
            case Alternative::Greater:
                result.p_value = dist::normal_sf((w - mean - 0.5) / sd);
                break;
            case Alternative::Less:
                result.p_value = dist::normal_cdf((w - mean + 0.5) / sd);
                break;
            case Alternative::TwoSided: {
                double z = (w - mean - 0.5 * (w > mean ? 1.0 : -1.0)) / sd;
                result.p_value = std::min(1.0, 2.0 * dist::normal_sf(std::fabs(z)));
                break;
            }
        }
    }
    return result;
}

} // namespace acqsens
