#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/datagen.hpp"
#include "core/gp.hpp"
#include "core/matrix.hpp"
#include "core/models.hpp"

#include <nlohmann/json.hpp>

namespace srfe {

// Below this RMSE two models are treated as numerically indistinguishable;
// the baseline/augmented ratio would otherwise amplify float dust.
constexpr double kTinyRmse = 1e-12;

// (baseline / augmented - 1) * 100; positive favours the augmented model.
// Throws ZeroAugmentedRmse when augmented is exactly zero against a nonzero
// baseline (callers record that as an infinite-improvement sentinel).
double relative_performance(double baseline_rmse, double augmented_rmse);

// Appends one prediction column per program to both matrices. Original
// columns stay first and unchanged; the same programs drive both splits.
std::pair<Matrix, Matrix> augment_with_sr(const Matrix& X_train, const Matrix& X_test,
                                          std::span<const SrProgram> programs);

// Deterministic shuffled split; both index lists come back sorted ascending.
std::pair<std::vector<int>, std::vector<int>> train_test_split(int n, double test_fraction,
                                                               std::uint64_t seed);

struct TrialCovariates {
  int n_samples = 0;
  std::optional<double> noise_fraction;
  std::optional<int> term_count;
  std::optional<double> nonlin_lr_std;
  std::optional<double> nonlin_one_minus_r2;

  nlohmann::json to_json() const;
};

// Metadata available only for synthetic instances.
struct SyntheticContext {
  PolynomialSpec spec;
  double noise_fraction = 0.0;
};

struct TrialSettings {
  GpConfig gp;
  std::vector<double> parsimony_list = {0.001, 0.01, 0.1};
  SearchConfig search;
  bool append_best_only = false;  // default: every ensemble program becomes a column
  double test_fraction = 0.2;
  int workers = 1;
};

struct TrialResult {
  std::string dataset_id;
  std::uint64_t split_seed = 0;
  double baseline_rmse_ml = 0.0;
  double augmented_rmse_ml = 0.0;
  double baseline_rmse_dl = 0.0;
  double augmented_rmse_dl = 0.0;
  // +inf when the matching sentinel flag is set.
  double relative_improvement_ml = 0.0;
  double relative_improvement_dl = 0.0;
  bool sentinel_ml = false;
  bool sentinel_dl = false;
  bool sr_failed = false;
  std::vector<SrProgram> sr_programs;
  TrialCovariates covariates;
  ModelSummary baseline_ml_model, augmented_ml_model;
  ModelSummary baseline_dl_model, augmented_dl_model;
  // Reporting extras mirroring the per-instance summary table.
  std::optional<double> lr_rmse;                  // plain linear model on raw features
  std::optional<double> sr_rmse;                  // best SR program alone
  std::optional<double> baseline_noise_rmse_test; // synthetic noise floor on the test split
  std::optional<std::string> true_polynomial;

  nlohmann::json to_json() const;
};

// The full paired protocol: one 80/20 split, SR fitted on the training side
// only, then matched model searches on raw and augmented features sharing
// folds, grids and candidate seeds. Needs at least 25 rows.
TrialResult run_paired_trial(const Dataset& dataset, const std::string& dataset_id,
                             std::uint64_t split_seed, const TrialSettings& settings,
                             const SyntheticContext* synthetic = nullptr);

}  // namespace srfe
