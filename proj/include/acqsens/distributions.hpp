#pragma once

namespace acqsens::dist {

double normal_cdf(double x);
double normal_sf(double x); // upper tail, accurate for large x
double normal_pdf(double x);
double normal_quantile(double p);

double lgamma_fn(double x);
double reg_inc_gamma_lower(double a, double x); // P(a, x)
double reg_inc_beta(double a, double b, double x);

double chi2_cdf(double x, double df);
double f_cdf(double x, double df1, double df2);

/// CDF of the studentized range statistic for k groups and df error degrees
/// of freedom (range of k standard normals divided by an independent
/// chi-based scale estimate).
double studentized_range_cdf(double q, int k, double df);
double studentized_range_quantile(double p, int k, double df);

} // namespace acqsens::dist
