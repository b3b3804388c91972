#include "core/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/error.hpp"
#include "core/gp.hpp"
#include "core/linalg.hpp"
#include "core/threading.hpp"

namespace srfe {

namespace {

Matrix with_intercept(const Matrix& X) {
  Matrix design(X.rows, X.cols + 1);
  for (int i = 0; i < X.rows; ++i) {
    design.at(i, 0) = 1.0;
    for (int j = 0; j < X.cols; ++j) design.at(i, j + 1) = X.at(i, j);
  }
  return design;
}

// Population z-scoring fitted on training data; zero-variance columns pass
// through unscaled.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> sds;

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    s.means.assign(static_cast<size_t>(X.cols), 0.0);
    s.sds.assign(static_cast<size_t>(X.cols), 1.0);
    for (int j = 0; j < X.cols; ++j) {
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < X.rows; ++i) sum += X.at(i, j);
      double mean = sum / X.rows;
      for (int i = 0; i < X.rows; ++i) {
        double d = X.at(i, j) - mean;
        sumsq += d * d;
      }
      double sd = std::sqrt(sumsq / X.rows);
      s.means[static_cast<size_t>(j)] = mean;
      s.sds[static_cast<size_t>(j)] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& X) const {
    Matrix out = X;
    for (int i = 0; i < X.rows; ++i) {
      for (int j = 0; j < X.cols; ++j) {
        out.at(i, j) = (X.at(i, j) - means[static_cast<size_t>(j)]) / sds[static_cast<size_t>(j)];
      }
    }
    return out;
  }
};

struct TargetScaler {
  double mean = 0.0;
  double sd = 1.0;

  static TargetScaler fit(std::span<const double> y) {
    TargetScaler t;
    double sum = 0.0;
    for (double v : y) sum += v;
    t.mean = sum / static_cast<double>(y.size());
    double sumsq = 0.0;
    for (double v : y) {
      double d = v - t.mean;
      sumsq += d * d;
    }
    double sd = std::sqrt(sumsq / static_cast<double>(y.size()));
    t.sd = sd > 0.0 ? sd : 1.0;
    return t;
  }
};

}  // namespace

// ---- OLS ----

std::vector<double> OlsModel::predict(const Matrix& X) const {
  require(X.cols == static_cast<int>(coefficients.size()), ErrorCode::DimensionMismatch,
          "feature count does not match fitted model");
  std::vector<double> out(static_cast<size_t>(X.rows), intercept);
  for (int i = 0; i < X.rows; ++i) {
    double s = intercept;
    for (int j = 0; j < X.cols; ++j) s += coefficients[static_cast<size_t>(j)] * X.at(i, j);
    out[static_cast<size_t>(i)] = s;
  }
  return out;
}

OlsModel fit_ols(const Matrix& X, std::span<const double> y) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows > X.cols + 1, ErrorCode::TooFewRows,
          "least squares needs more rows than coefficients");
  Matrix design = with_intercept(X);
  std::vector<double> beta = least_squares(design, y);  // RankDeficient on collinear designs
  OlsModel model;
  model.intercept = beta[0];
  model.coefficients.assign(beta.begin() + 1, beta.end());
  return model;
}

namespace {

struct TolerantOls final : public Model {
  OlsModel inner;
  std::vector<double> predict(const Matrix& X) const override { return inner.predict(X); }
  const char* kind() const override { return "ols"; }
};

}  // namespace

ModelPtr fit_ols_tolerant(const Matrix& X, std::span<const double> y) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows >= 2, ErrorCode::TooFewRows, "need at least two rows");
  // Greedy column selection by modified Gram-Schmidt: a column whose residual
  // against the already-kept columns is negligible is dropped (coefficient 0).
  const int n = X.rows;
  std::vector<std::vector<double>> basis;  // orthonormal columns
  std::vector<int> kept;
  std::vector<double> column(static_cast<size_t>(n));
  auto orthogonalize = [&](std::vector<double>& v) {
    for (const auto& q : basis) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += q[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
      for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] -= dot * q[static_cast<size_t>(i)];
    }
  };
  // Intercept column first.
  {
    std::vector<double> ones(static_cast<size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
    basis.push_back(std::move(ones));
  }
  for (int j = 0; j < X.cols && static_cast<int>(basis.size()) < n; ++j) {
    double norm0 = 0.0;
    for (int i = 0; i < n; ++i) {
      column[static_cast<size_t>(i)] = X.at(i, j);
      norm0 += X.at(i, j) * X.at(i, j);
    }
    norm0 = std::sqrt(norm0);
    orthogonalize(column);
    orthogonalize(column);  // second pass for numerical hygiene
    double norm = 0.0;
    for (double v : column) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 1e-8 * std::max(1.0, norm0)) {
      for (double& v : column) v /= norm;
      basis.push_back(column);
      kept.push_back(j);
    }
  }

  Matrix reduced(n, static_cast<int>(kept.size()) + 1);
  for (int i = 0; i < n; ++i) {
    reduced.at(i, 0) = 1.0;
    for (size_t c = 0; c < kept.size(); ++c) {
      reduced.at(i, static_cast<int>(c) + 1) = X.at(i, kept[c]);
    }
  }
  std::vector<double> beta = least_squares(reduced, y);

  auto model = std::make_shared<TolerantOls>();
  model->inner.intercept = beta[0];
  model->inner.coefficients.assign(static_cast<size_t>(X.cols), 0.0);
  for (size_t c = 0; c < kept.size(); ++c) {
    model->inner.coefficients[static_cast<size_t>(kept[c])] = beta[c + 1];
  }
  return model;
}

double r_squared(const OlsModel& model, const Matrix& X, std::span<const double> y) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows >= 1, ErrorCode::EmptyDataset, "empty data");
  std::vector<double> pred = model.predict(X);
  double ybar = 0.0;
  for (double v : y) ybar += v;
  ybar /= static_cast<double>(y.size());
  double sse = 0.0, sst = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double r = y[i] - pred[i];
    sse += r * r;
    double d = y[i] - ybar;
    sst += d * d;
  }
  if (sst <= 0.0) return sse <= 0.0 ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

// ---- CART ----

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct TreeBuilder {
  const Matrix& X;
  std::span<const double> y;
  int max_depth;
  int min_leaf;
  Rng* rng;   // only for forests
  int mtry;   // features per split; X.cols when not subsampling
  std::vector<TreeNode> nodes;
  std::vector<int> feature_pool;

  int build(std::vector<int>& idx, int depth) {
    const int n = static_cast<int>(idx.size());
    double sum = 0.0, sumsq = 0.0;
    for (int i : idx) {
      sum += y[static_cast<size_t>(i)];
      sumsq += y[static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
    }
    double mean = sum / n;
    double sse_total = sumsq - sum * sum / n;

    int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{});
    nodes[static_cast<size_t>(node_id)].value = mean;
    if (depth >= max_depth || n < 2 * min_leaf || sse_total <= 1e-12) return node_id;

    // candidate features, ascending for a deterministic scan order
    feature_pool.resize(static_cast<size_t>(X.cols));
    std::iota(feature_pool.begin(), feature_pool.end(), 0);
    int n_feats = X.cols;
    if (rng != nullptr && mtry < X.cols) {
      for (int t = 0; t < mtry; ++t) {
        int pick = t + static_cast<int>(rng->below(static_cast<std::uint64_t>(X.cols - t)));
        std::swap(feature_pool[static_cast<size_t>(t)], feature_pool[static_cast<size_t>(pick)]);
      }
      n_feats = mtry;
      std::sort(feature_pool.begin(), feature_pool.begin() + n_feats);
    }

    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> sorted = idx;
    for (int fi = 0; fi < n_feats; ++fi) {
      int f = feature_pool[static_cast<size_t>(fi)];
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        double va = X.at(a, f), vb = X.at(b, f);
        return va < vb || (va == vb && a < b);
      });
      double left_sum = 0.0, left_sumsq = 0.0;
      for (int s = 1; s <= n - 1; ++s) {
        double ys = y[static_cast<size_t>(sorted[static_cast<size_t>(s - 1)])];
        left_sum += ys;
        left_sumsq += ys * ys;
        if (s < min_leaf || n - s < min_leaf) continue;
        double lo = X.at(sorted[static_cast<size_t>(s - 1)], f);
        double hi = X.at(sorted[static_cast<size_t>(s)], f);
        if (lo == hi) continue;
        double right_sum = sum - left_sum, right_sumsq = sumsq - left_sumsq;
        double sse_l = left_sumsq - left_sum * left_sum / s;
        double sse_r = right_sumsq - right_sum * right_sum / (n - s);
        double gain = sse_total - sse_l - sse_r;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = lo + 0.5 * (hi - lo);
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(static_cast<size_t>(n));
    right_idx.reserve(static_cast<size_t>(n));
    for (int i : idx) {
      (X.at(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return node_id;  // degenerate threshold

    nodes[static_cast<size_t>(node_id)].feature = best_feature;
    nodes[static_cast<size_t>(node_id)].threshold = best_threshold;
    int left = build(left_idx, depth + 1);
    nodes[static_cast<size_t>(node_id)].left = left;
    int right = build(right_idx, depth + 1);
    nodes[static_cast<size_t>(node_id)].right = right;
    return node_id;
  }
};

double tree_predict_row(const std::vector<TreeNode>& nodes, std::span<const double> row) {
  int at = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<size_t>(at)];
    if (node.feature < 0) return node.value;
    at = row[static_cast<size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
}

std::vector<TreeNode> build_cart_nodes(const Matrix& X, std::span<const double> y,
                                       std::vector<int> idx, int max_depth, int min_leaf,
                                       Rng* rng, int mtry) {
  TreeBuilder builder{X, y, max_depth, min_leaf, rng, mtry, {}, {}};
  builder.build(idx, 0);
  return std::move(builder.nodes);
}

struct CartModel final : public Model {
  std::vector<TreeNode> nodes;

  std::vector<double> predict(const Matrix& X) const override {
    std::vector<double> out(static_cast<size_t>(X.rows));
    for (int i = 0; i < X.rows; ++i) out[static_cast<size_t>(i)] = tree_predict_row(nodes, X.row(i));
    return out;
  }
  const char* kind() const override { return "cart"; }
};

}  // namespace

ModelPtr fit_cart(const Matrix& X, std::span<const double> y, const CartParams& params) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows >= 1, ErrorCode::EmptyDataset, "empty data");
  require(params.max_depth >= 1 && params.min_leaf >= 1, ErrorCode::ConfigInvalid,
          "tree hyperparameters must be positive");
  std::vector<int> idx(static_cast<size_t>(X.rows));
  std::iota(idx.begin(), idx.end(), 0);
  auto model = std::make_shared<CartModel>();
  model->nodes = build_cart_nodes(X, y, std::move(idx), params.max_depth, params.min_leaf,
                                  nullptr, X.cols);
  return model;
}

namespace {

struct ForestModel final : public Model {
  std::vector<std::vector<TreeNode>> trees;

  std::vector<double> predict(const Matrix& X) const override {
    std::vector<double> out(static_cast<size_t>(X.rows), 0.0);
    for (const auto& tree : trees) {
      for (int i = 0; i < X.rows; ++i) {
        out[static_cast<size_t>(i)] += tree_predict_row(tree, X.row(i));
      }
    }
    for (double& v : out) v /= static_cast<double>(trees.size());
    return out;
  }
  const char* kind() const override { return "random_forest"; }
};

}  // namespace

ModelPtr fit_forest(const Matrix& X, std::span<const double> y, const ForestParams& params,
                    std::uint64_t seed) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows >= 1, ErrorCode::EmptyDataset, "empty data");
  require(params.n_trees >= 1 && params.max_depth >= 1 && params.min_leaf >= 1 &&
              params.feature_fraction > 0.0 && params.feature_fraction <= 1.0,
          ErrorCode::ConfigInvalid, "bad forest hyperparameters");
  const int n = X.rows;
  int mtry = std::max(1, static_cast<int>(std::ceil(params.feature_fraction * X.cols)));
  auto model = std::make_shared<ForestModel>();
  model->trees.resize(static_cast<size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, {stream::kBootstrap, static_cast<std::uint64_t>(t)}));
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      idx[static_cast<size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    }
    model->trees[static_cast<size_t>(t)] =
        build_cart_nodes(X, y, std::move(idx), params.max_depth, params.min_leaf, &rng, mtry);
  }
  return model;
}

// ---- KNN ----

namespace {

struct KnnModel final : public Model {
  Standardizer scaler;
  Matrix train;  // already standardized
  std::vector<double> targets;
  int k = 5;

  std::vector<double> predict(const Matrix& X) const override {
    require(X.cols == train.cols, ErrorCode::DimensionMismatch,
            "feature count does not match fitted model");
    Matrix Q = scaler.apply(X);
    const int n = train.rows;
    const int kk = std::min(k, n);
    std::vector<double> out(static_cast<size_t>(X.rows));
    std::vector<std::pair<double, int>> dist(static_cast<size_t>(n));
    for (int q = 0; q < X.rows; ++q) {
      auto row = Q.row(q);
      for (int i = 0; i < n; ++i) {
        double d = 0.0;
        auto t = train.row(i);
        for (int j = 0; j < train.cols; ++j) {
          double diff = row[static_cast<size_t>(j)] - t[static_cast<size_t>(j)];
          d += diff * diff;
        }
        dist[static_cast<size_t>(i)] = {d, i};
      }
      std::nth_element(dist.begin(), dist.begin() + (kk - 1), dist.end());
      std::sort(dist.begin(), dist.begin() + kk);
      double s = 0.0;
      for (int i = 0; i < kk; ++i) s += targets[static_cast<size_t>(dist[static_cast<size_t>(i)].second)];
      out[static_cast<size_t>(q)] = s / kk;
    }
    return out;
  }
  const char* kind() const override { return "knn"; }
};

}  // namespace

ModelPtr fit_knn(const Matrix& X, std::span<const double> y, int k) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows >= 1, ErrorCode::EmptyDataset, "empty data");
  require(k >= 1, ErrorCode::ConfigInvalid, "k must be >= 1");
  auto model = std::make_shared<KnnModel>();
  model->scaler = Standardizer::fit(X);
  model->train = model->scaler.apply(X);
  model->targets.assign(y.begin(), y.end());
  model->k = k;
  return model;
}

// ---- MLP ----

MlpNetwork MlpNetwork::initialize(int inputs, const std::vector<int>& hidden, Rng& rng) {
  MlpNetwork net;
  net.layer_sizes.push_back(inputs);
  for (int h : hidden) net.layer_sizes.push_back(h);
  net.layer_sizes.push_back(1);
  for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    int in = net.layer_sizes[l];
    int out = net.layer_sizes[l + 1];
    double scale = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (double& v : w.data) v = rng.uniform(-scale, scale);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(static_cast<size_t>(out), 0.0);
  }
  return net;
}

double MlpNetwork::forward(std::span<const double> x) const {
  std::vector<double> act(x.begin(), x.end());
  std::vector<double> next;
  for (size_t l = 0; l < weights.size(); ++l) {
    const Matrix& w = weights[l];
    next.assign(static_cast<size_t>(w.rows), 0.0);
    for (int o = 0; o < w.rows; ++o) {
      double s = biases[l][static_cast<size_t>(o)];
      for (int i = 0; i < w.cols; ++i) s += w.at(o, i) * act[static_cast<size_t>(i)];
      next[static_cast<size_t>(o)] = (l + 1 < weights.size()) ? std::tanh(s) : s;
    }
    act.swap(next);
  }
  return act[0];
}

double mlp_loss_and_gradient(const MlpNetwork& net, const Matrix& X, std::span<const double> y,
                             std::span<const int> rows, MlpNetwork& grad) {
  const size_t layers = net.weights.size();
  for (size_t l = 0; l < layers; ++l) {
    std::fill(grad.weights[l].data.begin(), grad.weights[l].data.end(), 0.0);
    std::fill(grad.biases[l].begin(), grad.biases[l].end(), 0.0);
  }
  const double inv_batch = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;

  std::vector<std::vector<double>> acts(layers + 1);
  std::vector<std::vector<double>> deltas(layers);
  for (int r : rows) {
    auto x = X.row(r);
    acts[0].assign(x.begin(), x.end());
    for (size_t l = 0; l < layers; ++l) {
      const Matrix& w = net.weights[l];
      acts[l + 1].assign(static_cast<size_t>(w.rows), 0.0);
      for (int o = 0; o < w.rows; ++o) {
        double s = net.biases[l][static_cast<size_t>(o)];
        for (int i = 0; i < w.cols; ++i) s += w.at(o, i) * acts[l][static_cast<size_t>(i)];
        acts[l + 1][static_cast<size_t>(o)] = (l + 1 < layers) ? std::tanh(s) : s;
      }
    }
    double err = acts[layers][0] - y[static_cast<size_t>(r)];
    loss += 0.5 * err * err * inv_batch;

    deltas[layers - 1].assign(1, err * inv_batch);
    for (size_t l = layers - 1; l-- > 0;) {
      const Matrix& w_next = net.weights[l + 1];
      deltas[l].assign(static_cast<size_t>(w_next.cols), 0.0);
      for (int i = 0; i < w_next.cols; ++i) {
        double s = 0.0;
        for (int o = 0; o < w_next.rows; ++o) {
          s += w_next.at(o, i) * deltas[l + 1][static_cast<size_t>(o)];
        }
        double a = acts[l + 1][static_cast<size_t>(i)];
        deltas[l][static_cast<size_t>(i)] = s * (1.0 - a * a);  // d tanh
      }
    }
    for (size_t l = 0; l < layers; ++l) {
      Matrix& gw = grad.weights[l];
      for (int o = 0; o < gw.rows; ++o) {
        double d = deltas[l][static_cast<size_t>(o)];
        grad.biases[l][static_cast<size_t>(o)] += d;
        for (int i = 0; i < gw.cols; ++i) gw.at(o, i) += d * acts[l][static_cast<size_t>(i)];
      }
    }
  }
  return loss;
}

namespace {

struct MlpModel final : public Model {
  Standardizer scaler;
  TargetScaler target;
  MlpNetwork net;

  std::vector<double> predict(const Matrix& X) const override {
    require(X.cols == net.layer_sizes.front(), ErrorCode::DimensionMismatch,
            "feature count does not match fitted model");
    Matrix Q = scaler.apply(X);
    std::vector<double> out(static_cast<size_t>(X.rows));
    for (int i = 0; i < X.rows; ++i) {
      out[static_cast<size_t>(i)] = net.forward(Q.row(i)) * target.sd + target.mean;
    }
    return out;
  }
  const char* kind() const override { return "mlp"; }
};

}  // namespace

ModelPtr fit_mlp(const Matrix& X, std::span<const double> y, const MlpParams& params,
                 std::uint64_t seed) {
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.rows >= 1, ErrorCode::EmptyDataset, "empty data");
  require(!params.hidden.empty() && params.epochs >= 1 && params.learning_rate > 0.0 &&
              params.batch_size >= 1,
          ErrorCode::ConfigInvalid, "bad MLP hyperparameters");

  auto model = std::make_shared<MlpModel>();
  model->scaler = Standardizer::fit(X);
  model->target = TargetScaler::fit(y);
  Matrix Xs = model->scaler.apply(X);
  std::vector<double> ys(y.size());
  for (size_t i = 0; i < y.size(); ++i) ys[i] = (y[i] - model->target.mean) / model->target.sd;

  Rng rng(seed);
  model->net = MlpNetwork::initialize(X.cols, params.hidden, rng);
  MlpNetwork grad = model->net;  // same shapes

  const int n = X.rows;
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> batch;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    // Fisher-Yates reshuffle per epoch
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    for (int start = 0; start < n; start += params.batch_size) {
      int stop = std::min(n, start + params.batch_size);
      batch.assign(order.begin() + start, order.begin() + stop);
      mlp_loss_and_gradient(model->net, Xs, ys, batch, grad);
      for (size_t l = 0; l < model->net.weights.size(); ++l) {
        Matrix& w = model->net.weights[l];
        const Matrix& gw = grad.weights[l];
        for (size_t i = 0; i < w.data.size(); ++i) {
          w.data[i] -= params.learning_rate * gw.data[i];
        }
        for (size_t i = 0; i < model->net.biases[l].size(); ++i) {
          model->net.biases[l][i] -= params.learning_rate * grad.biases[l][i];
        }
      }
    }
  }
  return model;
}

// ---- model search ----

const char* model_class_label(ModelClass c) {
  return c == ModelClass::ProxyMl ? "proxy_ml" : "proxy_dl";
}

void SearchConfig::validate() const {
  require(cv_folds >= 2, ErrorCode::ConfigInvalid, "cv_folds must be >= 2");
  require(budget_ml >= 1 && budget_dl >= 1, ErrorCode::ConfigInvalid, "budgets must be >= 1");
  require(preset == "default" || preset == "fast", ErrorCode::ConfigInvalid,
          "preset must be 'default' or 'fast'");
}

nlohmann::json SearchConfig::to_json() const {
  return {{"cv_folds", cv_folds},
          {"budget_ml", budget_ml},
          {"budget_dl", budget_dl},
          {"preset", preset}};
}

nlohmann::json ModelSummary::to_json() const {
  nlohmann::json j = {{"kind", kind}, {"hyperparameters", hyperparameters}, {"cv_rmse", cv_rmse}};
  if (!error.empty()) j["error"] = error;
  return j;
}

namespace {

int scaled_epochs(int n_train, bool fast) {
  // Keeps the sample-update count roughly constant across dataset sizes.
  double target = fast ? 1.2e5 : 1.2e6;
  int lo = fast ? 20 : 30;
  int hi = fast ? 120 : 400;
  int e = static_cast<int>(std::lround(target / std::max(1, n_train)));
  return std::clamp(e, lo, hi);
}

}  // namespace

std::vector<CandidateSpec> candidate_grid(ModelClass model_class, const SearchConfig& config,
                                          int n_train) {
  const bool fast = config.preset == "fast";
  std::vector<CandidateSpec> grid;
  if (model_class == ModelClass::ProxyMl) {
    auto add_ols = [&] {
      grid.push_back({"ols", nlohmann::json::object(),
                      [](const Matrix& X, std::span<const double> y, std::uint64_t) {
                        return fit_ols_tolerant(X, y);
                      }});
    };
    auto add_cart = [&](int depth, int leaf) {
      CartParams p{depth, leaf};
      grid.push_back({"cart", {{"max_depth", depth}, {"min_leaf", leaf}},
                      [p](const Matrix& X, std::span<const double> y, std::uint64_t) {
                        return fit_cart(X, y, p);
                      }});
    };
    auto add_forest = [&](int trees, int depth, int leaf) {
      ForestParams p;
      p.n_trees = trees;
      p.max_depth = depth;
      p.min_leaf = leaf;
      grid.push_back({"random_forest",
                      {{"n_trees", trees}, {"max_depth", depth}, {"min_leaf", leaf}},
                      [p](const Matrix& X, std::span<const double> y, std::uint64_t seed) {
                        return fit_forest(X, y, p, seed);
                      }});
    };
    auto add_knn = [&](int k) {
      grid.push_back({"knn", {{"k", k}},
                      [k](const Matrix& X, std::span<const double> y, std::uint64_t) {
                        return fit_knn(X, y, k);
                      }});
    };
    if (fast) {
      add_ols();
      add_cart(8, 4);
      add_knn(7);
      add_forest(25, 8, 4);
      add_cart(4, 8);
      add_knn(15);
    } else {
      add_ols();
      add_cart(4, 8);
      add_cart(8, 4);
      add_cart(12, 2);
      add_forest(50, 10, 3);
      add_forest(100, 12, 2);
      add_knn(3);
      add_knn(7);
      add_knn(15);
    }
  } else {
    const int epochs = scaled_epochs(n_train, fast);
    auto add_mlp = [&](std::vector<int> hidden) {
      MlpParams p;
      p.hidden = hidden;
      p.epochs = epochs;
      grid.push_back({"mlp",
                      {{"hidden", hidden},
                       {"epochs", epochs},
                       {"learning_rate", p.learning_rate},
                       {"batch_size", p.batch_size}},
                      [p](const Matrix& X, std::span<const double> y, std::uint64_t seed) {
                        return fit_mlp(X, y, p, seed);
                      }});
    };
    add_mlp({16});
    add_mlp({32});
    add_mlp({32, 16});
    add_mlp({64, 32});
  }
  return grid;
}

std::vector<int> make_folds(int n, int k, std::uint64_t seed) {
  require(n >= k && k >= 2, ErrorCode::InvalidArgument, "need at least cv_folds rows");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {stream::kFolds}));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  std::vector<int> fold_of_row(static_cast<size_t>(n));
  int base = n / k, extra = n % k, pos = 0;
  for (int f = 0; f < k; ++f) {
    int count = base + (f < extra ? 1 : 0);
    for (int c = 0; c < count; ++c) fold_of_row[static_cast<size_t>(order[static_cast<size_t>(pos++)])] = f;
  }
  return fold_of_row;
}

SearchResult model_search(const Matrix& X, std::span<const double> y, ModelClass model_class,
                          const SearchConfig& config, std::span<const int> fold_of_row,
                          std::uint64_t seed) {
  config.validate();
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(static_cast<int>(fold_of_row.size()) == X.rows, ErrorCode::LengthMismatch,
          "fold assignment does not match row count");

  std::vector<CandidateSpec> grid = candidate_grid(model_class, config, X.rows);
  const int budget = model_class == ModelClass::ProxyMl ? config.budget_ml : config.budget_dl;
  const int n_candidates = std::min<int>(budget, static_cast<int>(grid.size()));
  const int k = config.cv_folds;

  // Per-fold row index lists, shared by every candidate.
  std::vector<std::vector<int>> train_rows(static_cast<size_t>(k));
  std::vector<std::vector<int>> test_rows(static_cast<size_t>(k));
  for (int i = 0; i < X.rows; ++i) {
    for (int f = 0; f < k; ++f) {
      (fold_of_row[static_cast<size_t>(i)] == f ? test_rows : train_rows)[static_cast<size_t>(f)]
          .push_back(i);
    }
  }
  for (int f = 0; f < k; ++f) {
    require(!train_rows[static_cast<size_t>(f)].empty() && !test_rows[static_cast<size_t>(f)].empty(),
            ErrorCode::TooFewRows, "a CV fold is empty");
  }

  std::vector<ModelSummary> evaluated(static_cast<size_t>(n_candidates));
  parallel_for(n_candidates, config.workers, [&](int c) {
    const CandidateSpec& cand = grid[static_cast<size_t>(c)];
    ModelSummary summary;
    summary.kind = cand.kind;
    summary.hyperparameters = cand.hyperparameters;
    try {
      double total = 0.0;
      for (int f = 0; f < k; ++f) {
        Matrix Xtr = X.select_rows(train_rows[static_cast<size_t>(f)]);
        std::vector<double> ytr = select(y, train_rows[static_cast<size_t>(f)]);
        Matrix Xte = X.select_rows(test_rows[static_cast<size_t>(f)]);
        std::vector<double> yte = select(y, test_rows[static_cast<size_t>(f)]);
        ModelPtr model = cand.fit(
            Xtr, ytr,
            derive_seed(seed, {stream::kCandidate, static_cast<std::uint64_t>(c),
                               static_cast<std::uint64_t>(f)}));
        total += rmse(model->predict(Xte), yte);
      }
      summary.cv_rmse = total / k;
    } catch (const std::exception& e) {
      summary.cv_rmse = std::numeric_limits<double>::infinity();
      summary.error = e.what();
    }
    evaluated[static_cast<size_t>(c)] = std::move(summary);
  });

  int winner = -1;
  for (int c = 0; c < n_candidates; ++c) {
    if (winner < 0 || evaluated[static_cast<size_t>(c)].cv_rmse <
                          evaluated[static_cast<size_t>(winner)].cv_rmse) {
      winner = c;
    }
  }
  require(winner >= 0 && std::isfinite(evaluated[static_cast<size_t>(winner)].cv_rmse),
          ErrorCode::DegenerateData, "every search candidate failed");

  SearchResult result;
  result.evaluated = std::move(evaluated);
  result.summary = result.evaluated[static_cast<size_t>(winner)];
  result.model = grid[static_cast<size_t>(winner)].fit(
      X, y, derive_seed(seed, {stream::kRefit, static_cast<std::uint64_t>(winner)}));
  return result;
}

SearchResult model_search(const Matrix& X, std::span<const double> y, ModelClass model_class,
                          const SearchConfig& config, std::uint64_t seed) {
  std::vector<int> folds = make_folds(X.rows, config.cv_folds, seed);
  return model_search(X, y, model_class, config, folds, seed);
}

}  // namespace srfe
