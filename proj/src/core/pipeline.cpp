#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/rng.hpp"

namespace srfe {

double relative_performance(double baseline_rmse, double augmented_rmse) {
  require(baseline_rmse >= 0.0 && augmented_rmse >= 0.0, ErrorCode::InvalidArgument,
          "RMSE values must be nonnegative");
  if (baseline_rmse == augmented_rmse) return 0.0;
  if (baseline_rmse < kTinyRmse && augmented_rmse < kTinyRmse) return 0.0;
  require(augmented_rmse > 0.0, ErrorCode::ZeroAugmentedRmse,
          "augmented RMSE is exactly zero");
  return (baseline_rmse / augmented_rmse - 1.0) * 100.0;
}

std::pair<Matrix, Matrix> augment_with_sr(const Matrix& X_train, const Matrix& X_test,
                                          std::span<const SrProgram> programs) {
  require(X_train.cols == X_test.cols, ErrorCode::DimensionMismatch,
          "train and test feature counts differ");
  const int m = X_train.cols;
  const int p = static_cast<int>(programs.size());
  auto build = [&](const Matrix& X) {
    Matrix out(X.rows, m + p);
    for (int i = 0; i < X.rows; ++i) {
      for (int j = 0; j < m; ++j) out.at(i, j) = X.at(i, j);
    }
    std::vector<double> column(static_cast<size_t>(X.rows));
    EvalScratch scratch;
    for (int c = 0; c < p; ++c) {
      programs[static_cast<size_t>(c)].expr.evaluate_batch(X, column, scratch);
      for (int i = 0; i < X.rows; ++i) out.at(i, m + c) = column[static_cast<size_t>(i)];
    }
    return out;
  };
  return {build(X_train), build(X_test)};
}

std::pair<std::vector<int>, std::vector<int>> train_test_split(int n, double test_fraction,
                                                               std::uint64_t seed) {
  require(n >= 2, ErrorCode::TooFewRows, "cannot split fewer than 2 rows");
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::InvalidArgument,
          "test fraction must lie in (0, 1)");
  int n_test = std::max(1, static_cast<int>(std::lround(test_fraction * n)));
  n_test = std::min(n_test, n - 1);
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {stream::kSplit}));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<int> test(order.begin(), order.begin() + n_test);
  std::vector<int> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

nlohmann::json TrialCovariates::to_json() const {
  auto opt = [](const auto& v) {
    return v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"n_samples", n_samples},
          {"noise_fraction", opt(noise_fraction)},
          {"term_count", opt(term_count)},
          {"nonlin_lr_std", opt(nonlin_lr_std)},
          {"nonlin_one_minus_r2", opt(nonlin_one_minus_r2)}};
}

nlohmann::json TrialResult::to_json() const {
  auto improvement = [](double value, bool sentinel) {
    return sentinel ? nlohmann::json(nullptr) : nlohmann::json(value);
  };
  auto opt_num = [](const std::optional<double>& v) {
    return v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json programs = nlohmann::json::array();
  for (const SrProgram& p : sr_programs) programs.push_back(p.to_json());
  return {{"type", "trial"},
          {"dataset_id", dataset_id},
          {"split_seed", split_seed},
          {"baseline_rmse_ml", baseline_rmse_ml},
          {"augmented_rmse_ml", augmented_rmse_ml},
          {"baseline_rmse_dl", baseline_rmse_dl},
          {"augmented_rmse_dl", augmented_rmse_dl},
          {"relative_improvement_ml", improvement(relative_improvement_ml, sentinel_ml)},
          {"relative_improvement_dl", improvement(relative_improvement_dl, sentinel_dl)},
          {"sentinel_ml", sentinel_ml},
          {"sentinel_dl", sentinel_dl},
          {"sr_failed", sr_failed},
          {"sr_reports", programs},
          {"covariates", covariates.to_json()},
          {"models",
           {{"baseline_ml", baseline_ml_model.to_json()},
            {"augmented_ml", augmented_ml_model.to_json()},
            {"baseline_dl", baseline_dl_model.to_json()},
            {"augmented_dl", augmented_dl_model.to_json()}}},
          {"report_metrics",
           {{"lr_rmse", opt_num(lr_rmse)},
            {"sr_rmse", opt_num(sr_rmse)},
            {"baseline_noise_rmse_test", opt_num(baseline_noise_rmse_test)},
            {"true_polynomial",
             true_polynomial.has_value() ? nlohmann::json(*true_polynomial)
                                         : nlohmann::json(nullptr)}}}};
}

TrialResult run_paired_trial(const Dataset& dataset, const std::string& dataset_id,
                             std::uint64_t split_seed, const TrialSettings& settings,
                             const SyntheticContext* synthetic) {
  dataset.validate();
  require(dataset.rows() >= 25, ErrorCode::TooFewRows,
          "paired trials need at least 25 rows");
  settings.gp.validate();
  settings.search.validate();
  require(!settings.parsimony_list.empty(), ErrorCode::ConfigInvalid,
          "parsimony list is empty");

  TrialResult result;
  result.dataset_id = dataset_id;
  result.split_seed = split_seed;

  auto [train_idx, test_idx] = train_test_split(dataset.rows(), settings.test_fraction, split_seed);
  Matrix X_train = dataset.X.select_rows(train_idx);
  Matrix X_test = dataset.X.select_rows(test_idx);
  std::vector<double> y_train = select(dataset.y, train_idx);
  std::vector<double> y_test = select(dataset.y, test_idx);

  // Covariates come from the training split only.
  result.covariates.n_samples = dataset.rows();
  if (synthetic != nullptr) {
    result.covariates.noise_fraction = synthetic->noise_fraction;
    result.covariates.term_count = term_count(synthetic->spec);
    result.true_polynomial = synthetic->spec.to_string();
  }
  try {
    result.covariates.nonlin_lr_std = nonlinearity_lr_std(X_train, y_train);
    result.covariates.nonlin_one_minus_r2 = nonlinearity_one_minus_r2(X_train, y_train);
  } catch (const Error&) {
    // degenerate training design; covariates stay unset
  }

  // SR ensemble on the training split only.
  GpConfig gp = settings.gp;
  gp.workers = settings.workers;
  std::vector<SrProgram> programs;
  try {
    programs = fit_sr_ensemble(X_train, y_train, settings.parsimony_list, gp);
  } catch (const Error&) {
    result.sr_failed = true;
  }
  result.sr_programs = programs;

  std::vector<const SrProgram*> to_append;
  if (!programs.empty()) {
    if (settings.append_best_only) {
      size_t best = 0;
      for (size_t i = 1; i < programs.size(); ++i) {
        if (programs[i].train_rmse < programs[best].train_rmse) best = i;
      }
      to_append.push_back(&programs[best]);
    } else {
      for (const SrProgram& p : programs) to_append.push_back(&p);
    }
  }
  std::vector<SrProgram> appended;
  appended.reserve(to_append.size());
  for (const SrProgram* p : to_append) appended.push_back(*p);

  auto [Xa_train, Xa_test] = augment_with_sr(X_train, X_test, appended);

  // All four searches share the fold assignment and candidate streams; the
  // appended columns are the only difference between the paired runs.
  const int n_train = X_train.rows;
  std::uint64_t search_seed = derive_seed(split_seed, {stream::kTrial});
  std::vector<int> folds = make_folds(n_train, settings.search.cv_folds, search_seed);
  SearchConfig search = settings.search;
  search.workers = settings.workers;

  SearchResult base_ml = model_search(X_train, y_train, ModelClass::ProxyMl, search, folds,
                                      search_seed);
  SearchResult aug_ml = model_search(Xa_train, y_train, ModelClass::ProxyMl, search, folds,
                                     search_seed);
  SearchResult base_dl = model_search(X_train, y_train, ModelClass::ProxyDl, search, folds,
                                      search_seed);
  SearchResult aug_dl = model_search(Xa_train, y_train, ModelClass::ProxyDl, search, folds,
                                     search_seed);

  result.baseline_ml_model = base_ml.summary;
  result.augmented_ml_model = aug_ml.summary;
  result.baseline_dl_model = base_dl.summary;
  result.augmented_dl_model = aug_dl.summary;

  result.baseline_rmse_ml = rmse(base_ml.model->predict(X_test), y_test);
  result.augmented_rmse_ml = rmse(aug_ml.model->predict(Xa_test), y_test);
  result.baseline_rmse_dl = rmse(base_dl.model->predict(X_test), y_test);
  result.augmented_rmse_dl = rmse(aug_dl.model->predict(Xa_test), y_test);

  auto improvement = [](double baseline, double augmented, bool& sentinel) {
    try {
      sentinel = false;
      return relative_performance(baseline, augmented);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroAugmentedRmse) throw;
      sentinel = true;
      return std::numeric_limits<double>::infinity();
    }
  };
  result.relative_improvement_ml =
      improvement(result.baseline_rmse_ml, result.augmented_rmse_ml, result.sentinel_ml);
  result.relative_improvement_dl =
      improvement(result.baseline_rmse_dl, result.augmented_rmse_dl, result.sentinel_dl);

  // Reporting extras.
  try {
    OlsModel lr = fit_ols(X_train, y_train);
    result.lr_rmse = rmse(lr.predict(X_test), y_test);
  } catch (const Error&) {
  }
  if (!programs.empty()) {
    size_t best = 0;
    for (size_t i = 1; i < programs.size(); ++i) {
      if (programs[i].train_rmse < programs[best].train_rmse) best = i;
    }
    result.sr_rmse = rmse(programs[best].expr.evaluate_batch(X_test), y_test);
  }
  if (synthetic != nullptr) {
    Dataset test_rows = dataset.select_rows(test_idx);
    result.baseline_noise_rmse_test = baseline_noise_rmse(synthetic->spec, test_rows);
  }
  return result;
}

}  // namespace srfe
