#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/datagen.hpp"
#include "core/pipeline.hpp"
#include "core/stats.hpp"

#include <nlohmann/json.hpp>

namespace srfe {

// Non-linearity of a training set, two equivalent views: the linear model's
// train RMSE over the target's population standard deviation, and 1 - R^2 of
// the same fit. Both are 0 for a constant target.
double nonlinearity_lr_std(const Matrix& X_train, std::span<const double> y_train);
double nonlinearity_one_minus_r2(const Matrix& X_train, std::span<const double> y_train);

// One-sided signed-rank p-value for "median improvement > 0". Infinite
// sentinel improvements are rank-equivalent to any value beyond the largest
// finite magnitude and are folded in that way.
double significance_test(std::span<const double> improvements);

struct Summary {
  double mean = 0.0;               // over finite values only
  double median = 0.0;             // over all values, sentinels as +inf
  double fraction_positive = 0.0;  // strictly positive share
  int sentinel_count = 0;
  int n_finite = 0;
  int n_total = 0;

  nlohmann::json to_json() const;
};

Summary summarize(std::span<const double> improvements);

// ---- experiment orchestration ----

struct ExperimentSource {
  bool is_synthetic = true;
  SyntheticConfig synthetic;
  std::shared_ptr<const Dataset> table;  // used when !is_synthetic
  std::string id = "synthetic";

  void validate() const;
};

struct ExperimentConfig {
  ExperimentSource source;
  TrialSettings trial;
  std::uint64_t master_seed = 0;
  int workers = 1;
};

struct TrialRecord {
  int index = 0;
  bool ok = false;
  TrialResult result;
  std::string error;

  nlohmann::json to_json() const;
};

// Repeats the paired trial n_reps times. Synthetic sources get a fresh
// polynomial and dataset per repetition; tabular sources are re-split with a
// new seed each time. Failed trials are recorded, never dropped.
std::vector<TrialRecord> repeat_experiment(const ExperimentConfig& config, int n_reps);

struct SweepCell {
  int n_samples = 0;
  double noise_fraction = 0.0;
  int repetitions = 0;
  Summary ml;
  Summary dl;
  int failed = 0;

  nlohmann::json to_json() const;
};

struct SweepResult {
  std::vector<SweepCell> cells;       // row-major over (sample_sizes x noise_levels)
  std::vector<TrialRecord> trials;    // cell-major, then repetition order
};

// Full grid over sample sizes and noise levels, reps_per_cell trials each.
// Only meaningful for synthetic sources.
SweepResult sweep(const ExperimentConfig& config, std::span<const int> sample_sizes,
                  std::span<const double> noise_levels, int reps_per_cell);

std::string sweep_cells_csv(const SweepResult& result);

// ---- robustness regression ----

enum class ModelSide { Ml, Dl, Pooled };

ModelSide model_side_from_string(const std::string& s);
const char* model_side_label(ModelSide side);

// Covariate names accepted by the robustness regression.
inline const std::vector<std::string>& robustness_covariate_names() {
  static const std::vector<std::string> names = {"n_samples", "noise", "terms", "nonlin_lr_std",
                                                 "nonlin_r2"};
  return names;
}

struct RobustnessFit {
  std::vector<std::string> covariates;  // "intercept" first
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> p_values;
  double r_squared = 0.0;
  int n_used = 0;
  std::string side;

  nlohmann::json to_json() const;
};

// OLS of relative improvement on the selected covariates. Pooled mode stacks
// both model classes and appends a model_dl indicator. Trials with missing
// covariates or sentinel improvements are excluded (and counted via n_used).
RobustnessFit ols_robustness_regression(std::span<const TrialRecord> records,
                                        const std::vector<std::string>& covariate_names,
                                        ModelSide side);

}  // namespace srfe
