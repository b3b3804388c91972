#include "core/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/models.hpp"
#include "core/rng.hpp"
#include "core/threading.hpp"

namespace srfe {

namespace {

double population_std(std::span<const double> y) {
  double mean = mean_of(y);
  double sumsq = 0.0;
  for (double v : y) {
    double d = v - mean;
    sumsq += d * d;
  }
  return std::sqrt(sumsq / static_cast<double>(y.size()));
}

}  // namespace

double nonlinearity_lr_std(const Matrix& X_train, std::span<const double> y_train) {
  double sd = population_std(y_train);
  if (sd == 0.0) return 0.0;  // constant target is perfectly predictable
  OlsModel model = fit_ols(X_train, y_train);
  double train_rmse = rmse(model.predict(X_train), y_train);
  return train_rmse / sd;
}

double nonlinearity_one_minus_r2(const Matrix& X_train, std::span<const double> y_train) {
  if (population_std(y_train) == 0.0) return 0.0;
  OlsModel model = fit_ols(X_train, y_train);
  return 1.0 - r_squared(model, X_train, y_train);
}

double significance_test(std::span<const double> improvements) {
  require(improvements.size() >= 6, ErrorCode::TooFewSamples,
          "significance test needs at least 6 improvements");
  double max_abs = 0.0;
  for (double v : improvements) {
    if (std::isfinite(v)) max_abs = std::max(max_abs, std::fabs(v));
  }
  std::vector<double> folded;
  folded.reserve(improvements.size());
  for (double v : improvements) {
    if (std::isinf(v)) {
      folded.push_back(v > 0 ? max_abs + 1.0 : -(max_abs + 1.0));
    } else {
      require(std::isfinite(v), ErrorCode::NonFiniteInput, "NaN improvement");
      folded.push_back(v);
    }
  }
  return wilcoxon_signed_rank_greater(folded).p_value;
}

nlohmann::json Summary::to_json() const {
  return {{"mean", n_finite > 0 ? nlohmann::json(mean) : nlohmann::json(nullptr)},
          {"median", std::isfinite(median) ? nlohmann::json(median) : nlohmann::json(nullptr)},
          {"fraction_positive", fraction_positive},
          {"sentinel_count", sentinel_count},
          {"n_finite", n_finite},
          {"n_total", n_total}};
}

Summary summarize(std::span<const double> improvements) {
  require(!improvements.empty(), ErrorCode::EmptyResults, "no improvements to summarize");
  Summary s;
  s.n_total = static_cast<int>(improvements.size());
  double sum = 0.0;
  int positive = 0;
  for (double v : improvements) {
    if (std::isinf(v) && v > 0) {
      ++s.sentinel_count;
      ++positive;
      continue;
    }
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "NaN improvement");
    sum += v;
    ++s.n_finite;
    if (v > 0.0) ++positive;
  }
  s.mean = s.n_finite > 0 ? sum / s.n_finite : std::numeric_limits<double>::quiet_NaN();
  s.median = median_of(improvements);
  s.fraction_positive = static_cast<double>(positive) / static_cast<double>(s.n_total);
  return s;
}

void ExperimentSource::validate() const {
  if (is_synthetic) {
    synthetic.validate();
  } else {
    require(table != nullptr, ErrorCode::ConfigInvalid, "tabular source has no data");
    table->validate();
  }
}

nlohmann::json TrialRecord::to_json() const {
  if (!ok) {
    return {{"type", "trial_error"}, {"rep", index}, {"error", error}};
  }
  nlohmann::json j = result.to_json();
  j["rep"] = index;
  return j;
}

namespace {

// Builds the dataset and runs the paired trial for one repetition. All
// randomness comes from seeds derived from (master_seed, rep), so any
// repetition can run on any worker.
TrialRecord run_repetition(const ExperimentConfig& config, int rep) {
  TrialRecord record;
  record.index = rep;
  const std::uint64_t rep_key =
      derive_seed(config.master_seed, {stream::kTrial, static_cast<std::uint64_t>(rep)});
  try {
    TrialSettings settings = config.trial;
    settings.gp.rng_seed = derive_seed(rep_key, {stream::kGpRun});
    std::uint64_t split_seed = derive_seed(rep_key, {stream::kSplit});
    if (config.source.is_synthetic) {
      const SyntheticConfig& syn = config.source.synthetic;
      Rng poly_rng(derive_seed(rep_key, {stream::kPolynomial}));
      PolynomialSpec spec = random_polynomial(syn, poly_rng);
      Rng data_rng(derive_seed(rep_key, {stream::kData}));
      Dataset data = generate_dataset(spec, syn.n_samples, syn.noise_fraction, syn, data_rng);
      SyntheticContext context{spec, syn.noise_fraction};
      record.result = run_paired_trial(data, config.source.id + "-" + std::to_string(rep),
                                       split_seed, settings, &context);
    } else {
      record.result =
          run_paired_trial(*config.source.table, config.source.id, split_seed, settings, nullptr);
    }
    record.ok = true;
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
  }
  return record;
}

}  // namespace

std::vector<TrialRecord> repeat_experiment(const ExperimentConfig& config, int n_reps) {
  require(n_reps >= 1, ErrorCode::InvalidArgument, "need at least one repetition");
  config.source.validate();
  std::vector<TrialRecord> records(static_cast<size_t>(n_reps));
  parallel_for(n_reps, config.workers, [&](int rep) {
    ExperimentConfig local = config;
    local.trial.workers = 1;  // trials already run in parallel
    records[static_cast<size_t>(rep)] = run_repetition(local, rep);
  });
  return records;
}

nlohmann::json SweepCell::to_json() const {
  return {{"n_samples", n_samples},
          {"noise_fraction", noise_fraction},
          {"repetitions", repetitions},
          {"ml", ml.to_json()},
          {"dl", dl.to_json()},
          {"failed", failed}};
}

namespace {

double improvement_value(const TrialResult& r, bool dl) {
  bool sentinel = dl ? r.sentinel_dl : r.sentinel_ml;
  if (sentinel) return std::numeric_limits<double>::infinity();
  return dl ? r.relative_improvement_dl : r.relative_improvement_ml;
}

}  // namespace

SweepResult sweep(const ExperimentConfig& config, std::span<const int> sample_sizes,
                  std::span<const double> noise_levels, int reps_per_cell) {
  require(!sample_sizes.empty() && !noise_levels.empty(), ErrorCode::InvalidArgument,
          "sweep axes must be non-empty");
  require(reps_per_cell >= 1, ErrorCode::InvalidArgument, "need at least one rep per cell");
  require(config.source.is_synthetic, ErrorCode::ConfigInvalid,
          "sweeps require a synthetic source");

  const int n_cells = static_cast<int>(sample_sizes.size() * noise_levels.size());
  const int n_trials = n_cells * reps_per_cell;

  SweepResult result;
  result.trials.resize(static_cast<size_t>(n_trials));
  parallel_for(n_trials, config.workers, [&](int t) {
    const int cell = t / reps_per_cell;
    const int rep = t % reps_per_cell;
    const size_t si = static_cast<size_t>(cell) / noise_levels.size();
    const size_t ni = static_cast<size_t>(cell) % noise_levels.size();
    ExperimentConfig local = config;
    local.workers = 1;
    local.trial.workers = 1;
    local.source.synthetic.n_samples = sample_sizes[si];
    local.source.synthetic.noise_fraction = noise_levels[ni];
    local.source.id = "synthetic-n" + std::to_string(sample_sizes[si]) + "-noise" +
                      format_double(noise_levels[ni]);
    local.master_seed = derive_seed(config.master_seed, {stream::kSweepCell, si, ni});
    TrialRecord record = run_repetition(local, rep);
    record.index = t;
    result.trials[static_cast<size_t>(t)] = std::move(record);
  });

  result.cells.reserve(static_cast<size_t>(n_cells));
  for (int cell = 0; cell < n_cells; ++cell) {
    const size_t si = static_cast<size_t>(cell) / noise_levels.size();
    const size_t ni = static_cast<size_t>(cell) % noise_levels.size();
    SweepCell summary;
    summary.n_samples = sample_sizes[si];
    summary.noise_fraction = noise_levels[ni];
    summary.repetitions = reps_per_cell;
    std::vector<double> ml, dl;
    for (int rep = 0; rep < reps_per_cell; ++rep) {
      const TrialRecord& record = result.trials[static_cast<size_t>(cell * reps_per_cell + rep)];
      if (!record.ok) {
        ++summary.failed;
        continue;
      }
      ml.push_back(improvement_value(record.result, false));
      dl.push_back(improvement_value(record.result, true));
    }
    if (!ml.empty()) {
      summary.ml = summarize(ml);
      summary.dl = summarize(dl);
    }
    result.cells.push_back(std::move(summary));
  }
  return result;
}

std::string sweep_cells_csv(const SweepResult& result) {
  std::string out = "n,noise,mean_ml,median_ml,mean_dl,median_dl,reps,sentinels\n";
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    return format_double(v);
  };
  for (const SweepCell& cell : result.cells) {
    out += std::to_string(cell.n_samples) + "," + format_double(cell.noise_fraction) + "," +
           num(cell.ml.mean) + "," + num(cell.ml.median) + "," + num(cell.dl.mean) + "," +
           num(cell.dl.median) + "," + std::to_string(cell.repetitions) + "," +
           std::to_string(cell.ml.sentinel_count + cell.dl.sentinel_count) + "\n";
  }
  return out;
}

ModelSide model_side_from_string(const std::string& s) {
  if (s == "ml") return ModelSide::Ml;
  if (s == "dl") return ModelSide::Dl;
  if (s == "pooled") return ModelSide::Pooled;
  fail(ErrorCode::ConfigInvalid, "model side must be ml, dl or pooled");
}

const char* model_side_label(ModelSide side) {
  switch (side) {
    case ModelSide::Ml: return "ml";
    case ModelSide::Dl: return "dl";
    default: return "pooled";
  }
}

nlohmann::json RobustnessFit::to_json() const {
  return {{"covariates", covariates},
          {"coefficients", coefficients},
          {"std_errors", std_errors},
          {"p_values", p_values},
          {"r2", r_squared},
          {"n_used", n_used},
          {"side", side}};
}

namespace {

bool covariate_value(const TrialResult& r, const std::string& name, double& out) {
  if (name == "n_samples") {
    out = static_cast<double>(r.covariates.n_samples);
    return true;
  }
  if (name == "noise") {
    if (!r.covariates.noise_fraction) return false;
    out = *r.covariates.noise_fraction;
    return true;
  }
  if (name == "terms") {
    if (!r.covariates.term_count) return false;
    out = static_cast<double>(*r.covariates.term_count);
    return true;
  }
  if (name == "nonlin_lr_std") {
    if (!r.covariates.nonlin_lr_std) return false;
    out = *r.covariates.nonlin_lr_std;
    return true;
  }
  if (name == "nonlin_r2") {
    if (!r.covariates.nonlin_one_minus_r2) return false;
    out = *r.covariates.nonlin_one_minus_r2;
    return true;
  }
  fail(ErrorCode::InvalidArgument, "unknown covariate: " + name);
}

}  // namespace

RobustnessFit ols_robustness_regression(std::span<const TrialRecord> records,
                                        const std::vector<std::string>& covariate_names,
                                        ModelSide side) {
  require(!covariate_names.empty(), ErrorCode::InvalidArgument, "no covariates selected");

  const bool pooled = side == ModelSide::Pooled;
  std::vector<std::vector<double>> rows;
  std::vector<double> response;
  auto add_row = [&](const TrialResult& r, bool dl) {
    double improvement = improvement_value(r, dl);
    if (!std::isfinite(improvement)) return;  // sentinels cannot enter a linear fit
    std::vector<double> row;
    row.reserve(covariate_names.size() + (pooled ? 1 : 0));
    for (const std::string& name : covariate_names) {
      double v = 0.0;
      if (!covariate_value(r, name, v)) return;
      row.push_back(v);
    }
    if (pooled) row.push_back(dl ? 1.0 : 0.0);
    rows.push_back(std::move(row));
    response.push_back(improvement);
  };
  for (const TrialRecord& record : records) {
    if (!record.ok) continue;
    if (side == ModelSide::Ml || pooled) add_row(record.result, false);
    if (side == ModelSide::Dl || pooled) add_row(record.result, true);
  }

  std::vector<std::string> names = covariate_names;
  if (pooled) names.push_back("model_dl");
  require(static_cast<int>(rows.size()) >= static_cast<int>(names.size()) + 2,
          ErrorCode::TooFewSamples, "too few usable trials for the regression");

  Matrix covariates(static_cast<int>(rows.size()), static_cast<int>(names.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      covariates.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  LinearFitStats stats = ols_with_stats(covariates, response, names);

  RobustnessFit fit;
  fit.covariates = stats.names;
  fit.coefficients = stats.coefficients;
  fit.std_errors = stats.std_errors;
  fit.p_values = stats.p_values;
  fit.r_squared = stats.r_squared;
  fit.n_used = stats.n;
  fit.side = model_side_label(side);
  return fit;
}

}  // namespace srfe
