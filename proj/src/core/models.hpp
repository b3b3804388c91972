#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"
#include "core/rng.hpp"

#include <nlohmann/json.hpp>

namespace srfe {

class Model {
public:
  virtual ~Model() = default;
  virtual std::vector<double> predict(const Matrix& X) const = 0;
  virtual const char* kind() const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

// ---- linear regression ----

struct OlsModel final : public Model {
  double intercept = 0.0;
  std::vector<double> coefficients;

  std::vector<double> predict(const Matrix& X) const override;
  const char* kind() const override { return "ols"; }
};

// Strict least squares with intercept; requires rows > cols + 1 and full
// column rank (TooFewRows / RankDeficient otherwise).
OlsModel fit_ols(const Matrix& X, std::span<const double> y);

// Rank-tolerant variant for the search grid: collinear columns get a zero
// coefficient instead of an error, so augmented designs with duplicated
// features still fit.
ModelPtr fit_ols_tolerant(const Matrix& X, std::span<const double> y);

// 1 - SSE/SST on the given data (SST = 0 degenerates to 1 when SSE = 0).
double r_squared(const OlsModel& model, const Matrix& X, std::span<const double> y);

// ---- decision tree / random forest ----

struct CartParams {
  int max_depth = 8;
  int min_leaf = 4;
};

ModelPtr fit_cart(const Matrix& X, std::span<const double> y, const CartParams& params);

struct ForestParams {
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 2;
  double feature_fraction = 1.0 / 3.0;  // per-split subsample share
};

ModelPtr fit_forest(const Matrix& X, std::span<const double> y, const ForestParams& params,
                    std::uint64_t seed);

// ---- k nearest neighbours ----

// Euclidean distance on z-scored features (training statistics only);
// predicts the mean target of the k closest rows.
ModelPtr fit_knn(const Matrix& X, std::span<const double> y, int k);

// ---- multilayer perceptron ----

struct MlpParams {
  std::vector<int> hidden = {16};
  int epochs = 200;
  double learning_rate = 0.01;
  int batch_size = 32;
};

// Weights as a plain struct so gradients can be checked externally.
struct MlpNetwork {
  std::vector<int> layer_sizes;  // input, hidden..., 1
  std::vector<Matrix> weights;   // weights[l]: rows = out, cols = in
  std::vector<std::vector<double>> biases;

  static MlpNetwork initialize(int inputs, const std::vector<int>& hidden, Rng& rng);
  double forward(std::span<const double> x) const;
};

// Mean squared-error loss 0.5*mean((pred-y)^2) over the given rows, with
// gradients accumulated into grad (same shapes as the network).
double mlp_loss_and_gradient(const MlpNetwork& net, const Matrix& X, std::span<const double> y,
                             std::span<const int> rows, MlpNetwork& grad);

// Tanh hidden layers, linear output, mini-batch gradient descent on z-scored
// inputs and target (predictions are mapped back to the original scale).
ModelPtr fit_mlp(const Matrix& X, std::span<const double> y, const MlpParams& params,
                 std::uint64_t seed);

// ---- cross-validated model search ----

enum class ModelClass { ProxyMl, ProxyDl };

const char* model_class_label(ModelClass c);  // "proxy_ml" / "proxy_dl"

struct SearchConfig {
  int cv_folds = 5;
  int budget_ml = 24;
  int budget_dl = 24;
  std::string preset = "default";  // "default" or "fast"
  int workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct ModelSummary {
  std::string kind;
  nlohmann::json hyperparameters;
  double cv_rmse = 0.0;
  std::string error;  // non-empty when the candidate failed

  nlohmann::json to_json() const;
};

struct CandidateSpec {
  std::string kind;
  nlohmann::json hyperparameters;
  std::function<ModelPtr(const Matrix&, std::span<const double>, std::uint64_t)> fit;
};

// Fixed candidate list per model class; order defines budget truncation and
// tie-breaks. n_train scales the MLP epoch count.
std::vector<CandidateSpec> candidate_grid(ModelClass model_class, const SearchConfig& config,
                                          int n_train);

// Balanced fold assignment by shuffled indices; entry i is the fold of row i.
std::vector<int> make_folds(int n, int k, std::uint64_t seed);

struct SearchResult {
  ModelPtr model;
  ModelSummary summary;
  std::vector<ModelSummary> evaluated;
};

// Evaluates up to the class budget of grid candidates by k-fold CV mean RMSE,
// then refits the winner on all rows. Ties go to the earlier grid entry.
SearchResult model_search(const Matrix& X, std::span<const double> y, ModelClass model_class,
                          const SearchConfig& config, std::span<const int> fold_of_row,
                          std::uint64_t seed);
SearchResult model_search(const Matrix& X, std::span<const double> y, ModelClass model_class,
                          const SearchConfig& config, std::uint64_t seed);

}  // namespace srfe
