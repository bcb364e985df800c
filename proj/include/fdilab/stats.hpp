#pragma once

#include <cstddef>
#include <vector>

namespace fdilab::stats {

// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gammp(double a, double x);
double gammq(double a, double x);

// Inverse of P(a, .): returns x with P(a, x) = p.
double inv_gammp(double p, double a);

// Chi-squared CDF and quantile for dof degrees of freedom.
double chi2_cdf(std::size_t dof, double x);

// Inverse CDF; throws std::invalid_argument unless 0 < p < 1 and dof >= 1.
double chi2_quantile(std::size_t dof, double p);

// Empirical quantile by order statistic: smallest value v such that at least
// ceil(q * n) samples are <= v. q in (0, 1].
double empirical_quantile(std::vector<double> samples, double q);

double mean(const std::vector<double>& xs);
double median(std::vector<double> xs);

}  // namespace fdilab::stats
