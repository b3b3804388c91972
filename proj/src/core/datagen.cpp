#include "core/datagen.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace srfe {

void SyntheticConfig::validate() const {
  require(n_samples >= 1, ErrorCode::ConfigInvalid, "n_samples must be >= 1");
  require(noise_fraction >= 0.0 && noise_fraction <= 1.0, ErrorCode::ConfigInvalid,
          "noise_fraction must lie in [0, 1]");
  require(term_count_min >= 1 && term_count_min <= term_count_max, ErrorCode::ConfigInvalid,
          "term count range is empty");
  require(!coefficient_choices.empty(), ErrorCode::ConfigInvalid,
          "coefficient_choices must be non-empty");
  require(feature_min < feature_max, ErrorCode::ConfigInvalid, "feature range is empty");
}

std::string PolynomialSpec::to_string() const {
  if (terms.empty()) return "0";
  std::string out;
  for (size_t t = 0; t < terms.size(); ++t) {
    if (t > 0) out += " + ";
    const PolyTerm& term = terms[t];
    bool wrote_factor = false;
    if (term.coefficient != 1.0) {
      out += format_double(term.coefficient);
      wrote_factor = true;
    }
    for (int j = 0; j < feature_count; ++j) {
      int e = term.exponents[static_cast<size_t>(j)];
      if (e == 0) continue;
      if (wrote_factor) out += "*";
      out += "x" + std::to_string(j);
      if (e > 1) out += "^" + std::to_string(e);
      wrote_factor = true;
    }
    if (!wrote_factor) out += format_double(term.coefficient);
  }
  return out;
}

Expr PolynomialSpec::to_expr() const {
  require(!terms.empty(), ErrorCode::InvalidArgument, "polynomial has no terms");
  auto term_expr = [&](const PolyTerm& term) {
    Expr product = Expr::constant(term.coefficient);
    bool have_factor = false;
    for (int j = 0; j < feature_count; ++j) {
      for (int e = 0; e < term.exponents[static_cast<size_t>(j)]; ++e) {
        Expr var = Expr::variable(j);
        if (!have_factor && term.coefficient == 1.0) {
          product = var;
          have_factor = true;
        } else {
          product = Expr::function(Op::Mul, {product, var});
          have_factor = true;
        }
      }
    }
    return product;
  };
  Expr sum = term_expr(terms[0]);
  for (size_t t = 1; t < terms.size(); ++t) {
    sum = Expr::function(Op::Add, {sum, term_expr(terms[t])});
  }
  return sum;
}

nlohmann::json PolynomialSpec::to_json() const {
  nlohmann::json jterms = nlohmann::json::array();
  for (const PolyTerm& t : terms) {
    jterms.push_back({{"coefficient", t.coefficient}, {"exponents", t.exponents}});
  }
  return {{"feature_count", feature_count}, {"terms", jterms}, {"formula", to_string()}};
}

PolynomialSpec PolynomialSpec::from_json(const nlohmann::json& j) {
  PolynomialSpec spec;
  spec.feature_count = j.at("feature_count").get<int>();
  for (const auto& jt : j.at("terms")) {
    PolyTerm term;
    term.coefficient = jt.at("coefficient").get<double>();
    term.exponents = jt.at("exponents").get<std::vector<int>>();
    require(static_cast<int>(term.exponents.size()) == spec.feature_count,
            ErrorCode::DimensionMismatch, "exponent vector length mismatch");
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

PolynomialSpec random_polynomial(const SyntheticConfig& config, Rng& rng) {
  config.validate();
  PolynomialSpec spec;
  spec.feature_count =
      static_cast<int>(rng.uniform_int(kPolyMinFeatures, kPolyMaxFeatures));
  int n_terms = static_cast<int>(rng.uniform_int(config.term_count_min, config.term_count_max));
  spec.terms.reserve(static_cast<size_t>(n_terms));
  for (int t = 0; t < n_terms; ++t) {
    PolyTerm term;
    term.coefficient = config.coefficient_choices[rng.below(config.coefficient_choices.size())];
    term.exponents.assign(static_cast<size_t>(spec.feature_count), 0);
    // redraw until the term actually involves a variable
    bool any = false;
    while (!any) {
      for (int j = 0; j < spec.feature_count; ++j) {
        int e = static_cast<int>(rng.uniform_int(0, kPolyMaxExponent));
        term.exponents[static_cast<size_t>(j)] = e;
        if (e > 0) any = true;
      }
    }
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

double eval_polynomial(const PolynomialSpec& spec, std::span<const double> row) {
  require(static_cast<int>(row.size()) == spec.feature_count, ErrorCode::DimensionMismatch,
          "row length does not match polynomial feature count");
  double sum = 0.0;
  for (const PolyTerm& term : spec.terms) {
    double prod = term.coefficient;
    for (int j = 0; j < spec.feature_count; ++j) {
      int e = term.exponents[static_cast<size_t>(j)];
      for (int k = 0; k < e; ++k) prod *= row[static_cast<size_t>(j)];
    }
    sum += prod;
  }
  return sum;
}

int term_count(const PolynomialSpec& spec) { return static_cast<int>(spec.terms.size()); }

Dataset generate_dataset(const PolynomialSpec& spec, int n, double noise_fraction,
                         const SyntheticConfig& config, Rng& rng) {
  require(n >= 1, ErrorCode::InvalidArgument, "need at least one sample");
  const int m = spec.feature_count;
  Dataset ds;
  ds.X = Matrix(n, m);
  ds.y.resize(static_cast<size_t>(n));
  ds.y_clean.resize(static_cast<size_t>(n));
  ds.feature_names.reserve(static_cast<size_t>(m));
  for (int j = 0; j < m; ++j) ds.feature_names.push_back("x" + std::to_string(j));

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      ds.X.at(i, j) = rng.uniform(config.feature_min, config.feature_max);
    }
    double clean = eval_polynomial(spec, ds.X.row(i));
    ds.y_clean[static_cast<size_t>(i)] = clean;
    double sd = noise_fraction * std::fabs(clean);
    ds.y[static_cast<size_t>(i)] = sd > 0.0 ? rng.normal(clean, sd) : clean;
  }
  return ds;
}

double baseline_noise_rmse(const PolynomialSpec& spec, const Dataset& dataset) {
  require(dataset.cols() == spec.feature_count, ErrorCode::DimensionMismatch,
          "dataset feature count does not match polynomial");
  require(dataset.rows() >= 1, ErrorCode::EmptyDataset, "empty dataset");
  double sum = 0.0;
  for (int i = 0; i < dataset.rows(); ++i) {
    double clean = eval_polynomial(spec, dataset.X.row(i));
    double d = clean - dataset.y[static_cast<size_t>(i)];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(dataset.rows()));
}

}  // namespace srfe
