#include "core/gp.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/threading.hpp"

namespace srfe {

void GpConfig::validate() const {
  require(population_size >= 1, ErrorCode::ConfigInvalid, "population_size must be >= 1");
  require(generations >= 0, ErrorCode::ConfigInvalid, "generations must be >= 0");
  require(tournament_size >= 1 && tournament_size <= population_size, ErrorCode::ConfigInvalid,
          "need population_size >= tournament_size >= 1");
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  require(prob_ok(p_crossover) && prob_ok(p_subtree_mutation) && prob_ok(p_hoist_mutation) &&
              prob_ok(p_point_mutation) && prob_ok(point_replace_probability),
          ErrorCode::ConfigInvalid, "operator probabilities must lie in [0, 1]");
  require(p_crossover + p_subtree_mutation + p_hoist_mutation + p_point_mutation <= 1.0 + 1e-12,
          ErrorCode::ConfigInvalid, "operator probabilities must sum to at most 1");
  require(init_depth_min >= 1 && init_depth_min <= init_depth_max && init_depth_max <= max_depth,
          ErrorCode::ConfigInvalid, "need 1 <= init_depth_min <= init_depth_max <= max_depth");
  require(parsimony_coefficient >= 0.0, ErrorCode::ConfigInvalid,
          "parsimony_coefficient must be nonnegative");
  require(constant_min <= constant_max, ErrorCode::ConfigInvalid, "constant range is empty");
  require(!function_set.empty(), ErrorCode::ConfigInvalid, "function set is empty");
}

nlohmann::json GpConfig::to_json() const {
  std::vector<std::string> ops;
  ops.reserve(function_set.size());
  for (Op op : function_set) ops.emplace_back(op_name(op));
  return {{"population_size", population_size},
          {"generations", generations},
          {"tournament_size", tournament_size},
          {"p_crossover", p_crossover},
          {"p_subtree_mutation", p_subtree_mutation},
          {"p_hoist_mutation", p_hoist_mutation},
          {"p_point_mutation", p_point_mutation},
          {"point_replace_probability", point_replace_probability},
          {"init_depth_min", init_depth_min},
          {"init_depth_max", init_depth_max},
          {"max_depth", max_depth},
          {"parsimony_coefficient", parsimony_coefficient},
          {"constant_min", constant_min},
          {"constant_max", constant_max},
          {"function_set", ops},
          {"rng_seed", rng_seed}};
}

nlohmann::json SrProgram::to_json() const {
  return {{"formula_infix", expr.to_infix()},
          {"formula_prefix", expr.to_prefix()},
          {"parsimony", parsimony_coefficient},
          {"train_rmse", train_rmse},
          {"generation_found", generation_found},
          {"size", expr.size()},
          {"depth", expr.depth()}};
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  require(!predicted.empty(), ErrorCode::EmptyVector, "rmse of empty vectors");
  require(predicted.size() == actual.size(), ErrorCode::LengthMismatch,
          "rmse needs equal-length vectors");
  double sum = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    double d = predicted[i] - actual[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double penalized_fitness(const Expr& expr, const Matrix& X, std::span<const double> y, double c) {
  require(X.rows >= 1, ErrorCode::EmptyDataset, "fitness over empty dataset");
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  std::vector<double> pred = expr.evaluate_batch(X);
  return rmse(pred, y) + c * static_cast<double>(expr.size());
}

namespace {

Expr random_terminal(const GpConfig& config, int feature_count, Rng& rng) {
  // One terminal slot per feature plus one for a fresh constant.
  std::uint64_t pick = rng.below(static_cast<std::uint64_t>(feature_count) + 1);
  if (pick < static_cast<std::uint64_t>(feature_count)) {
    return Expr::variable(static_cast<int>(pick));
  }
  return Expr::constant(rng.uniform(config.constant_min, config.constant_max));
}

Op random_op(const GpConfig& config, Rng& rng) {
  return config.function_set[rng.below(config.function_set.size())];
}

// target_depth counts levels (a single node is depth 1). `full` expands every
// branch to target_depth; grow may stop early once min_depth is guaranteed.
Expr build_tree(const GpConfig& config, int feature_count, int level, int target_depth,
                int min_depth, bool full, Rng& rng) {
  bool at_limit = level >= target_depth;
  bool must_branch = level < min_depth;
  bool branch;
  if (at_limit) {
    branch = false;
  } else if (full || must_branch) {
    branch = true;
  } else {
    branch = rng.bernoulli(0.5);
  }
  if (!branch) return random_terminal(config, feature_count, rng);
  Op op = random_op(config, rng);
  std::vector<Expr> children;
  children.reserve(2);
  for (int i = 0; i < op_arity(op); ++i) {
    children.push_back(
        build_tree(config, feature_count, level + 1, target_depth, min_depth, full, rng));
  }
  return Expr::function(op, std::move(children));
}

Expr random_subtree(const GpConfig& config, int feature_count, int target_depth, Rng& rng) {
  return build_tree(config, feature_count, 1, target_depth, 1, false, rng);
}

}  // namespace

std::vector<Expr> init_population(const GpConfig& config, int feature_count, std::uint64_t seed) {
  config.validate();
  require(feature_count >= 1, ErrorCode::InvalidArgument, "need at least one feature");
  const int span = config.init_depth_max - config.init_depth_min + 1;
  std::vector<Expr> population;
  population.reserve(static_cast<size_t>(config.population_size));
  for (int i = 0; i < config.population_size; ++i) {
    Rng rng(derive_seed(seed, {stream::kInitTree, static_cast<std::uint64_t>(i)}));
    int target = config.init_depth_min + (i / 2) % span;
    bool full = (i % 2) == 0;
    population.push_back(build_tree(config, feature_count, 1, target, config.init_depth_min,
                                    full, rng));
  }
  return population;
}

int tournament_select(std::span<const Expr> population, std::span<const double> penalized,
                      int k, Rng& rng) {
  require(!population.empty() && population.size() == penalized.size(), ErrorCode::LengthMismatch,
          "population/fitness size mismatch");
  require(k >= 1 && k <= static_cast<int>(population.size()), ErrorCode::InvalidArgument,
          "tournament size exceeds population");
  int best = -1;
  for (int t = 0; t < k; ++t) {
    int c = static_cast<int>(rng.below(population.size()));
    if (best < 0) {
      best = c;
      continue;
    }
    double fc = penalized[static_cast<size_t>(c)], fb = penalized[static_cast<size_t>(best)];
    if (fc < fb ||
        (fc == fb && (population[static_cast<size_t>(c)].size() <
                          population[static_cast<size_t>(best)].size() ||
                      (population[static_cast<size_t>(c)].size() ==
                           population[static_cast<size_t>(best)].size() &&
                       c < best)))) {
      best = c;
    }
  }
  return best;
}

Expr crossover(const Expr& parent1, const Expr& parent2, const GpConfig& config, Rng& rng) {
  int at = static_cast<int>(rng.below(static_cast<std::uint64_t>(parent1.size())));
  int from = static_cast<int>(rng.below(static_cast<std::uint64_t>(parent2.size())));
  Expr child = parent1.replace_at(at, parent2.subtree_at(from));
  return child.depth() <= config.max_depth ? child : parent1;
}

Expr subtree_mutation(const Expr& parent, const GpConfig& config, int feature_count, Rng& rng) {
  int at = static_cast<int>(rng.below(static_cast<std::uint64_t>(parent.size())));
  int target =
      static_cast<int>(rng.uniform_int(config.init_depth_min, config.init_depth_max));
  Expr child = parent.replace_at(at, random_subtree(config, feature_count, target, rng));
  return child.depth() <= config.max_depth ? child : parent;
}

Expr hoist_mutation(const Expr& parent, Rng& rng) {
  int at = static_cast<int>(rng.below(static_cast<std::uint64_t>(parent.size())));
  Expr picked = parent.subtree_at(at);
  int inner = static_cast<int>(rng.below(static_cast<std::uint64_t>(picked.size())));
  return parent.replace_at(at, picked.subtree_at(inner));
}

namespace {

Expr point_mutate_rec(const Expr& e, const GpConfig& config, int feature_count, Rng& rng) {
  // Preorder: the draw for a node happens before its children's draws.
  bool swap = rng.bernoulli(config.point_replace_probability);
  if (e.kind() != Expr::Kind::Function) {
    return swap ? random_terminal(config, feature_count, rng) : e;
  }
  Op op = swap ? random_op(config, rng) : e.op();
  std::vector<Expr> children;
  children.reserve(e.children().size());
  for (const Expr& c : e.children()) {
    children.push_back(point_mutate_rec(c, config, feature_count, rng));
  }
  return Expr::function(op, std::move(children));
}

}  // namespace

Expr point_mutation(const Expr& parent, const GpConfig& config, int feature_count, Rng& rng) {
  return point_mutate_rec(parent, config, feature_count, rng);
}

namespace {

struct BestTracker {
  bool have = false;
  Expr expr = Expr::constant(0.0);
  double raw = 0.0;
  int generation = 0;

  void offer(const Expr& e, double raw_rmse, int gen) {
    if (!have || raw_rmse < raw || (raw_rmse == raw && e.size() < expr.size())) {
      have = true;
      expr = e;
      raw = raw_rmse;
      generation = gen;
    }
  }
};

}  // namespace

SrProgram evolve(const Matrix& X, std::span<const double> y, const GpConfig& config) {
  config.validate();
  require(X.rows >= 1, ErrorCode::EmptyDataset, "cannot evolve on an empty dataset");
  require(static_cast<int>(y.size()) == X.rows, ErrorCode::LengthMismatch,
          "target length does not match row count");
  require(X.all_finite(), ErrorCode::NonFiniteInput, "feature matrix has non-finite entries");
  for (double v : y) require(std::isfinite(v), ErrorCode::NonFiniteInput, "non-finite target");

  const int pop_size = config.population_size;
  const int m = X.cols;
  std::vector<Expr> population = init_population(config, m, config.rng_seed);
  std::vector<double> raw(static_cast<size_t>(pop_size));
  std::vector<double> penalized(static_cast<size_t>(pop_size));

  auto evaluate_all = [&](const std::vector<Expr>& pop) {
    parallel_for(pop_size, config.workers, [&](int i) {
      thread_local EvalScratch scratch;
      thread_local std::vector<double> pred;
      pred.resize(static_cast<size_t>(X.rows));
      pop[static_cast<size_t>(i)].evaluate_batch(X, pred, scratch);
      double r = rmse(pred, y);
      raw[static_cast<size_t>(i)] = r;
      penalized[static_cast<size_t>(i)] =
          r + config.parsimony_coefficient * static_cast<double>(pop[static_cast<size_t>(i)].size());
    });
  };

  BestTracker best;
  auto track_generation = [&](const std::vector<Expr>& pop, int gen) {
    for (int i = 0; i < pop_size; ++i) {
      best.offer(pop[static_cast<size_t>(i)], raw[static_cast<size_t>(i)], gen);
    }
  };

  evaluate_all(population);
  track_generation(population, 0);

  for (int gen = 1; gen <= config.generations; ++gen) {
    std::vector<Expr> next;
    next.reserve(static_cast<size_t>(pop_size));
    // Elitism: the generation's best raw-RMSE individual survives unchanged.
    int elite = 0;
    for (int i = 1; i < pop_size; ++i) {
      if (raw[static_cast<size_t>(i)] < raw[static_cast<size_t>(elite)] ||
          (raw[static_cast<size_t>(i)] == raw[static_cast<size_t>(elite)] &&
           population[static_cast<size_t>(i)].size() <
               population[static_cast<size_t>(elite)].size())) {
        elite = i;
      }
    }
    next.push_back(population[static_cast<size_t>(elite)]);
    next.resize(static_cast<size_t>(pop_size), population[static_cast<size_t>(elite)]);

    parallel_for(pop_size - 1, config.workers, [&](int slot) {
      int i = slot + 1;
      Rng rng(derive_seed(config.rng_seed,
                          {stream::kGeneration, static_cast<std::uint64_t>(gen),
                           static_cast<std::uint64_t>(i)}));
      double u = rng.uniform();
      int p1 = tournament_select(population, penalized, config.tournament_size, rng);
      const Expr& parent1 = population[static_cast<size_t>(p1)];
      Expr child = parent1;
      double threshold = config.p_crossover;
      if (u < threshold) {
        int p2 = tournament_select(population, penalized, config.tournament_size, rng);
        child = crossover(parent1, population[static_cast<size_t>(p2)], config, rng);
      } else if (u < (threshold += config.p_subtree_mutation)) {
        child = subtree_mutation(parent1, config, m, rng);
      } else if (u < (threshold += config.p_hoist_mutation)) {
        child = hoist_mutation(parent1, rng);
      } else if (u < (threshold += config.p_point_mutation)) {
        child = point_mutation(parent1, config, m, rng);
      }
      // else: reproduction, parent copied unchanged
      next[static_cast<size_t>(i)] = child;
    });

    population = std::move(next);
    evaluate_all(population);
    track_generation(population, gen);
  }

  SrProgram program;
  program.expr = best.expr;
  program.train_rmse = best.raw;
  program.parsimony_coefficient = config.parsimony_coefficient;
  program.generation_found = best.generation;
  return program;
}

std::vector<SrProgram> fit_sr_ensemble(const Matrix& X, std::span<const double> y,
                                       std::span<const double> parsimony_list,
                                       const GpConfig& config) {
  require(!parsimony_list.empty(), ErrorCode::InvalidArgument, "parsimony list is empty");
  std::vector<SrProgram> programs;
  programs.reserve(parsimony_list.size());
  for (size_t i = 0; i < parsimony_list.size(); ++i) {
    GpConfig member = config;
    member.parsimony_coefficient = parsimony_list[i];
    if (i > 0) {
      member.rng_seed = derive_seed(config.rng_seed, {stream::kEnsembleMember, i});
    }
    programs.push_back(evolve(X, y, member));
  }
  return programs;
}

}  // namespace srfe
