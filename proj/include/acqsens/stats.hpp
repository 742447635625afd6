#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace acqsens {

/// Clinical performance metrics; a metric is left empty when its denominator
/// is zero (or, for AUC, when scores are degenerate hard 0/1 predictions).
struct MetricSet {
    std::optional<double> specificity;
    std::optional<double> sensitivity;
    std::optional<double> f1_balanced;
    std::optional<double> accuracy_balanced;
    std::optional<double> auc;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    long n = 0;
};

MetricSet confusion_metrics(std::span<const int> labels, std::span<const double> scores,
                            double threshold);

/// Rank-based AUC (equals Mann-Whitney pair counting with 0.5 tie credit);
/// empty when one class is absent.
std::optional<double> rank_auc(std::span<const int> labels, std::span<const double> scores);

struct TukeyPair {
    std::string group_a, group_b;
    double meandiff; // mean(b) - mean(a)
    double ci_low, ci_high;
    double p_adj;
    bool reject;
};

struct TukeyResult {
    std::vector<TukeyPair> pairs;
    double f_stat;
    double p_anova;
    double ms_within;
    long df_within;
};

/// One-way ANOVA pooled variance + all-pairs comparison against the
/// studentized range distribution (Tukey-Kramer for unequal group sizes).
TukeyResult tukey_hsd(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                      double alpha);

enum class Alternative { Greater, Less, TwoSided };

struct WilcoxonResult {
    double statistic; // signed-rank sum of positive differences
    long n;           // non-zero differences
    double p_value;
    bool exact;
};

/// Zero differences are dropped; exact permutation distribution for n <= 25,
/// normal approximation with continuity and tie correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative);

} // namespace acqsens
