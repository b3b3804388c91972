#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/expr.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace srfe {

// One polynomial term: coefficient * prod_j x_j^exponents[j].
struct PolyTerm {
  double coefficient = 1.0;
  std::vector<int> exponents;
};

struct PolynomialSpec {
  int feature_count = 0;
  std::vector<PolyTerm> terms;

  std::string to_string() const;  // "2*x0^3*x1 + x2"
  Expr to_expr() const;
  nlohmann::json to_json() const;
  static PolynomialSpec from_json(const nlohmann::json& j);
};

struct SyntheticConfig {
  int n_samples = 5000;
  double noise_fraction = 0.05;
  int term_count_min = 1;
  int term_count_max = 5;
  std::vector<double> coefficient_choices = {1.0, 2.0, 3.0};
  double feature_min = -2.0;
  double feature_max = 2.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Feature-count and exponent bounds for generated polynomials.
constexpr int kPolyMinFeatures = 2;
constexpr int kPolyMaxFeatures = 5;
constexpr int kPolyMaxExponent = 3;

// Draws feature count, term count, exponent vectors (each term keeps at
// least one nonzero exponent) and coefficients.
PolynomialSpec random_polynomial(const SyntheticConfig& config, Rng& rng);

double eval_polynomial(const PolynomialSpec& spec, std::span<const double> row);

int term_count(const PolynomialSpec& spec);

// Uniform features over [feature_min, feature_max]; the target gets Gaussian
// noise with per-row standard deviation noise_fraction * |p(x)|. The clean
// target is retained in Dataset::y_clean.
Dataset generate_dataset(const PolynomialSpec& spec, int n, double noise_fraction,
                         const SyntheticConfig& config, Rng& rng);

// RMSE between the clean polynomial values and the noisy target: the error
// floor of the instance. Recomputes p(x) from the spec.
double baseline_noise_rmse(const PolynomialSpec& spec, const Dataset& dataset);

}  // namespace srfe
