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

struct GpConfig {
  int population_size = 1000;
  int generations = 30;
  int tournament_size = 20;
  // Remaining probability mass is plain reproduction (copy).
  double p_crossover = 0.9;
  double p_subtree_mutation = 0.01;
  double p_hoist_mutation = 0.01;
  double p_point_mutation = 0.01;
  double point_replace_probability = 0.05;  // per-node rate inside point mutation
  int init_depth_min = 2;
  int init_depth_max = 6;
  int max_depth = 17;
  double parsimony_coefficient = 0.001;
  double constant_min = -1.0;
  double constant_max = 1.0;
  std::vector<Op> function_set = {Op::Add, Op::Sub, Op::Mul, Op::PDiv};
  std::uint64_t rng_seed = 0;
  int workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// A fitted symbolic-regression program: the lowest-raw-RMSE expression seen
// anywhere in the run, which is not necessarily in the final population.
struct SrProgram {
  Expr expr = Expr::constant(0.0);
  double train_rmse = 0.0;
  double parsimony_coefficient = 0.0;
  int generation_found = 0;

  nlohmann::json to_json() const;
};

double rmse(std::span<const double> predicted, std::span<const double> actual);

// Raw RMSE plus parsimony penalty c * size; lower is better.
double penalized_fitness(const Expr& expr, const Matrix& X, std::span<const double> y, double c);

// Ramped half-and-half initialization; every tree depth lands inside
// [init_depth_min, init_depth_max] and variable indices stay below m.
std::vector<Expr> init_population(const GpConfig& config, int feature_count, std::uint64_t seed);

// Index of the best of k candidates drawn uniformly with replacement.
// Ties by lower penalized fitness, then smaller tree, then lower index.
int tournament_select(std::span<const Expr> population, std::span<const double> penalized,
                      int k, Rng& rng);

// Variation operators; offspring deeper than max_depth are discarded and the
// (first) parent is returned unchanged.
Expr crossover(const Expr& parent1, const Expr& parent2, const GpConfig& config, Rng& rng);
Expr subtree_mutation(const Expr& parent, const GpConfig& config, int feature_count, Rng& rng);
Expr hoist_mutation(const Expr& parent, Rng& rng);
Expr point_mutation(const Expr& parent, const GpConfig& config, int feature_count, Rng& rng);

SrProgram evolve(const Matrix& X, std::span<const double> y, const GpConfig& config);

// One evolve() run per parsimony coefficient. Member i > 0 runs on a stream
// derived from (rng_seed, i); member 0 uses rng_seed itself, so a singleton
// list reproduces a plain evolve() call.
std::vector<SrProgram> fit_sr_ensemble(const Matrix& X, std::span<const double> y,
                                       std::span<const double> parsimony_list,
                                       const GpConfig& config);

}  // namespace srfe
