#pragma once

#include <functional>
#include <vector>

namespace bayescg {

// Regularized incomplete gamma P(a, x), series for x < a + 1 and continued
// fraction otherwise; absolute error below 1e-10 over the tested range.
double regularized_gamma_p(double a, double x);

// Regularized incomplete beta I_x(a, b) via Lentz continued fraction.
double regularized_beta(double a, double b, double x);

double chi2_cdf(double x, double dof);
double chi2_quantile(double p, double dof);  // bisection on the cdf
double f_cdf(double x, double dof1, double dof2);

// Two-sided Kolmogorov-Smirnov distance between the empirical distribution of
// the samples and the reference cdf.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Asymptotic critical value c(alpha)/sqrt(n) with c = sqrt(-ln(alpha/2)/2).
double ks_critical_value(std::size_t n, double alpha);

}  // namespace bayescg
