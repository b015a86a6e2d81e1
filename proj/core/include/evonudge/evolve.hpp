#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "evonudge/expr.hpp"
#include "evonudge/library.hpp"
#include "evonudge/problem.hpp"

namespace evonudge {

// I: library initialization. M: library mutation. MM: library or grow mutation with a fair coin.
enum class Variant { GP, I, M, MM, IM, IMM };

std::string_view variant_name(Variant v) noexcept;
Variant variant_from_name(std::string_view name);
bool library_init(Variant v) noexcept;
bool library_mutation(Variant v) noexcept;
inline bool needs_library(Variant v) noexcept { return library_init(v) || library_mutation(v); }

enum class CrossoverKind { OnePoint, GradientMatched };

struct GpConfig {
  int population = 1000;
  int generations = 50;
  int tournament = 7;
  double crossover_prob = 0.8;
  double mutation_prob = 0.2;
  int height_limit = 13;
  int h = 2;  // height bound of mutation subtrees
  Variant variant = Variant::GP;
  CrossoverKind crossover = CrossoverKind::OnePoint;
  double success_threshold = 1e-10;
  bool stop_on_success = true;
  int workers = 1;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct RunResult {
  ExprTree best;
  double best_train_mse = kWorstFitness;
  double best_test_mse = kWorstFitness;
  bool success = false;
  int gen_of_success = -1;
  int generations_run = 0;
  double time_library_s = 0.0;
  double time_gp_s = 0.0;
  std::vector<double> best_fitness;    // best-ever train MSE after each generation
  std::vector<double> median_fitness;  // population median per generation
};

// Heights cycle through 1..6, alternating grow and full between blocks of six.
std::vector<ExprTree> ramped_half_and_half(const Dsl& dsl, int arity, std::size_t count, Rng& rng);

// Library-first initialization for I/IM/IMM, ramped half-and-half otherwise.
std::vector<ExprTree> init_population(const GpConfig& config, const Dsl& dsl, int arity, const Library* library,
                                      Rng& rng);

std::pair<ExprTree, ExprTree> one_point_crossover(const ExprTree& a, const ExprTree& b, Rng& rng);

// Uniform over [0, h].
int draw_subtree_height(int h, Rng& rng);

ExprTree mutate(const ExprTree& parent, const GpConfig& config, const Dsl& dsl, int arity, const Library* library,
                Rng& rng);

// Index of the lowest-fitness entrant among `size` uniform draws with replacement.
std::size_t tournament_select(std::span<const double> fitness, int size, Rng& rng);

// Called with the population of every generation, starting from the initial one.
using GenerationObserver = std::function<void(int generation, std::span<const ExprTree> population,
                                              std::span<const double> fitness)>;

// Throws std::invalid_argument when the variant and library presence disagree.
RunResult run(const GpConfig& config, const Problem& problem, const Library* library, const Dsl& dsl = Dsl::standard(),
              const GenerationObserver& observer = {});

}  // namespace evonudge
