#pragma once

#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace srfe {

double normal_cdf(double z);

// Regularized incomplete beta I_x(a, b) via Lentz continued fraction;
// absolute error below 1e-10 over the tested domain.
double regularized_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with `dof` degrees of freedom.
double students_t_cdf(double t, double dof);

double mean_of(std::span<const double> values);
// Median by sorting a copy; +/-inf entries participate and sort to the ends.
double median_of(std::span<const double> values);

struct WilcoxonResult {
  double w_plus = 0.0;     // rank sum of positive values (average ranks)
  int n_used = 0;          // after dropping zeros
  double p_value = 1.0;    // one-sided, alternative: median > 0
  bool exact = false;      // exact enumeration (n_used <= threshold) vs normal
};

// One-sided Wilcoxon signed-rank test against a zero median. Zeros are
// dropped; ties get average ranks. Small samples are enumerated exactly
// (mid-p convention: P(W > w) + P(W = w)/2); larger ones use the normal
// approximation with tie correction and no continuity shift, matching the
// exact branch in the limit.
WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> values);

// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> a, std::span<const double> b);

// OLS with an intercept (prepended) plus classical inference: standard
// errors, two-sided t-test p-values, and R^2.
struct LinearFitStats {
  std::vector<std::string> names;  // "intercept" first
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_values;
  std::vector<double> p_values;
  double r_squared = 0.0;
  int n = 0;
  int dof = 0;
};

LinearFitStats ols_with_stats(const Matrix& covariates, std::span<const double> response,
                              const std::vector<std::string>& covariate_names);

}  // namespace srfe
