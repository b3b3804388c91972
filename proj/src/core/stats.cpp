#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/linalg.hpp"

namespace srfe {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

constexpr int kMaxBetaIterations = 300;
constexpr double kBetaEps = 1e-14;
constexpr double kTinyFloor = 1e-300;

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTinyFloor) d = kTinyFloor;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxBetaIterations; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTinyFloor) d = kTinyFloor;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTinyFloor) c = kTinyFloor;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTinyFloor) d = kTinyFloor;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTinyFloor) c = kTinyFloor;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kBetaEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorCode::InvalidArgument, "beta parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double students_t_cdf(double t, double dof) {
  require(dof > 0.0, ErrorCode::InvalidArgument, "degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  double x = dof / (dof + t * t);
  double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double mean_of(std::span<const double> values) {
  require(!values.empty(), ErrorCode::EmptyVector, "mean of empty sequence");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double median_of(std::span<const double> values) {
  require(!values.empty(), ErrorCode::EmptyVector, "median of empty sequence");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

namespace {

constexpr int kWilcoxonExactLimit = 25;

// Average ranks of |values|; returns ranks doubled so that ties stay integral.
std::vector<long long> doubled_abs_ranks(const std::vector<double>& values,
                                         std::vector<double>& tie_sizes) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::fabs(values[a]) < std::fabs(values[b]);
  });
  std::vector<long long> doubled(n, 0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && std::fabs(values[order[j + 1]]) == std::fabs(values[order[i]])) ++j;
    // positions i..j share the average rank ((i+1) + (j+1)) / 2
    long long doubled_rank = static_cast<long long>(i + j + 2);
    for (size_t k = i; k <= j; ++k) doubled[order[k]] = doubled_rank;
    if (j > i) tie_sizes.push_back(static_cast<double>(j - i + 1));
    i = j + 1;
  }
  return doubled;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> values) {
  require(values.size() >= 6, ErrorCode::TooFewSamples,
          "signed-rank test needs at least 6 values");
  std::vector<double> nonzero;
  nonzero.reserve(values.size());
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::NonFiniteInput, "signed-rank input must be finite");
    if (v != 0.0) nonzero.push_back(v);
  }
  WilcoxonResult result;
  result.n_used = static_cast<int>(nonzero.size());
  if (nonzero.empty()) {
    result.p_value = 0.5;  // all zeros carry no evidence either way
    result.exact = true;
    return result;
  }

  std::vector<double> tie_sizes;
  std::vector<long long> doubled = doubled_abs_ranks(nonzero, tie_sizes);
  long long w2 = 0;   // 2 * W+
  long long tot2 = 0; // 2 * sum of ranks
  for (size_t i = 0; i < nonzero.size(); ++i) {
    tot2 += doubled[i];
    if (nonzero[i] > 0.0) w2 += doubled[i];
  }
  result.w_plus = static_cast<double>(w2) / 2.0;

  const int n = result.n_used;
  if (n <= kWilcoxonExactLimit) {
    // Exact null distribution of 2*W+ by subset-sum counting.
    std::vector<double> count(static_cast<size_t>(tot2) + 1, 0.0);
    count[0] = 1.0;
    long long reach = 0;
    for (size_t i = 0; i < doubled.size(); ++i) {
      long long r = doubled[i];
      reach += r;
      for (long long s = reach; s >= r; --s) {
        count[static_cast<size_t>(s)] += count[static_cast<size_t>(s - r)];
      }
    }
    double total = std::ldexp(1.0, n);  // 2^n sign patterns
    double above = 0.0, equal = 0.0;
    for (long long s = 0; s <= tot2; ++s) {
      if (s > w2) above += count[static_cast<size_t>(s)];
      else if (s == w2) equal += count[static_cast<size_t>(s)];
    }
    result.p_value = (above + 0.5 * equal) / total;
    result.exact = true;
  } else {
    double nn = static_cast<double>(n);
    double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (double t : tie_sizes) var -= (t * t * t - t) / 48.0;
    require(var > 0.0, ErrorCode::DegenerateData, "zero variance in signed-rank statistic");
    double z = (result.w_plus - mu) / std::sqrt(var);
    result.p_value = 1.0 - normal_cdf(z);
    result.exact = false;
  }
  return result;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = static_cast<double>(i + j + 2) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::LengthMismatch, "rank correlation needs equal lengths");
  require(a.size() >= 2, ErrorCode::TooFewSamples, "rank correlation needs at least 2 pairs");
  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  double ma = mean_of(ra), mb = mean_of(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    double da = ra[i] - ma, db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  require(saa > 0.0 && sbb > 0.0, ErrorCode::ZeroVariance, "constant input to rank correlation");
  return sab / std::sqrt(saa * sbb);
}

LinearFitStats ols_with_stats(const Matrix& covariates, std::span<const double> response,
                              const std::vector<std::string>& covariate_names) {
  const int n = covariates.rows;
  const int p = covariates.cols + 1;  // + intercept
  require(static_cast<int>(response.size()) == n, ErrorCode::LengthMismatch,
          "response length does not match covariate rows");
  require(static_cast<int>(covariate_names.size()) == covariates.cols, ErrorCode::LengthMismatch,
          "covariate name count mismatch");
  require(n > p, ErrorCode::TooFewRows, "need more observations than coefficients");

  Matrix design(n, p);
  for (int i = 0; i < n; ++i) {
    design.at(i, 0) = 1.0;
    for (int j = 0; j < covariates.cols; ++j) design.at(i, j + 1) = covariates.at(i, j);
  }
  QrDecomposition qr = qr_decompose(design);
  std::vector<double> beta = qr.solve(response);  // throws RankDeficient

  LinearFitStats fit;
  fit.names.push_back("intercept");
  for (const auto& name : covariate_names) fit.names.push_back(name);
  fit.coefficients = beta;
  fit.n = n;
  fit.dof = n - p;

  double sse = 0.0;
  double ybar = mean_of(response);
  double sst = 0.0;
  for (int i = 0; i < n; ++i) {
    double pred = 0.0;
    for (int j = 0; j < p; ++j) pred += design.at(i, j) * beta[static_cast<size_t>(j)];
    double r = response[static_cast<size_t>(i)] - pred;
    sse += r * r;
    double d = response[static_cast<size_t>(i)] - ybar;
    sst += d * d;
  }
  fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : (sse <= 0.0 ? 1.0 : 0.0);

  double sigma2 = sse / static_cast<double>(fit.dof);
  std::vector<double> gram_diag = gram_inverse_diagonal(qr);
  fit.std_errors.resize(static_cast<size_t>(p));
  fit.t_values.resize(static_cast<size_t>(p));
  fit.p_values.resize(static_cast<size_t>(p));
  for (int j = 0; j < p; ++j) {
    double se = std::sqrt(sigma2 * gram_diag[static_cast<size_t>(j)]);
    fit.std_errors[static_cast<size_t>(j)] = se;
    double t = se > 0.0 ? beta[static_cast<size_t>(j)] / se
                        : (beta[static_cast<size_t>(j)] == 0.0 ? 0.0 : 1e30);
    fit.t_values[static_cast<size_t>(j)] = t;
    fit.p_values[static_cast<size_t>(j)] =
        2.0 * (1.0 - students_t_cdf(std::fabs(t), static_cast<double>(fit.dof)));
  }
  return fit;
}

}  // namespace srfe
