#include "evonudge/evolve.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>
#include <string>

#include "evonudge/gradmatch.hpp"
#include "evonudge/parallel.hpp"

namespace evonudge {

namespace {
constexpr std::string_view kVariantNames[] = {"GP", "I", "M", "MM", "IM", "IMM"};
constexpr int kRampMin = 1;
constexpr int kRampMax = 6;
constexpr int kHeightRetries = 5;
}  // namespace

std::string_view variant_name(Variant v) noexcept { return kVariantNames[static_cast<int>(v)]; }

Variant variant_from_name(std::string_view name) {
  for (int i = 0; i < 6; ++i) {
    if (kVariantNames[i] == name) return static_cast<Variant>(i);
  }
  throw std::invalid_argument("unknown GP variant '" + std::string(name) + "'");
}

bool library_init(Variant v) noexcept { return v == Variant::I || v == Variant::IM || v == Variant::IMM; }
bool library_mutation(Variant v) noexcept {
  return v == Variant::M || v == Variant::MM || v == Variant::IM || v == Variant::IMM;
}

void GpConfig::validate() const {
  if (population < 1) throw std::invalid_argument("population must be >= 1");
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (tournament < 1) throw std::invalid_argument("tournament size must be >= 1");
  if (crossover_prob < 0 || crossover_prob > 1) throw std::invalid_argument("crossover probability outside [0,1]");
  if (mutation_prob < 0 || mutation_prob > 1) throw std::invalid_argument("mutation probability outside [0,1]");
  if (height_limit < 1) throw std::invalid_argument("height limit must be >= 1");
  if (h < 0) throw std::invalid_argument("h must be >= 0");
}

std::vector<ExprTree> ramped_half_and_half(const Dsl& dsl, int arity, std::size_t count, Rng& rng) {
  constexpr std::size_t span = kRampMax - kRampMin + 1;
  std::vector<ExprTree> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int height = kRampMin + static_cast<int>(i % span);
    const GrowMethod method = (i / span) % 2 == 0 ? GrowMethod::Grow : GrowMethod::Full;
    out.push_back(random_tree(dsl, arity, height, method, rng));
  }
  return out;
}

std::vector<ExprTree> init_population(const GpConfig& config, const Dsl& dsl, int arity, const Library* library,
                                      Rng& rng) {
  const auto m = static_cast<std::size_t>(config.population);
  if (!library_init(config.variant)) return ramped_half_and_half(dsl, arity, m, rng);
  if (!library) throw std::invalid_argument("library initialization needs a library");
  const auto entries = library->entries();
  std::vector<ExprTree> out;
  out.reserve(m);
  if (entries.size() > m) {
    std::vector<std::size_t> idx(entries.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.push_back(entries[idx[i]].expr);
    }
    return out;
  }
  for (const auto& e : entries) out.push_back(e.expr);
  auto rest = ramped_half_and_half(dsl, arity, m - out.size(), rng);
  for (auto& t : rest) out.push_back(std::move(t));
  return out;
}

std::pair<ExprTree, ExprTree> one_point_crossover(const ExprTree& a, const ExprTree& b, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pa(0, a.size() - 1), pb(0, b.size() - 1);
  const std::size_t i = pa(rng);
  const std::size_t j = pb(rng);
  return {splice(a, i, b.subtree(j)), splice(b, j, a.subtree(i))};
}

int draw_subtree_height(int h, Rng& rng) { return std::uniform_int_distribution<int>(0, h)(rng); }

namespace {

ExprTree grow_mutation(const ExprTree& parent, std::size_t at, const GpConfig& config, const Dsl& dsl, int arity,
                       Rng& rng) {
  const int height = draw_subtree_height(config.h, rng);
  return splice(parent, at, random_tree(dsl, arity, height, GrowMethod::Grow, rng));
}

}  // namespace

ExprTree mutate(const ExprTree& parent, const GpConfig& config, const Dsl& dsl, int arity, const Library* library,
                Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, parent.size() - 1);
  const std::size_t at = pick(rng);
  if (!library_mutation(config.variant)) return grow_mutation(parent, at, config, dsl, arity, rng);
  if (!library) throw std::invalid_argument("library mutation needs a library");
  const bool coin = config.variant == Variant::MM || config.variant == Variant::IMM;
  if (coin && std::bernoulli_distribution(0.5)(rng)) return grow_mutation(parent, at, config, dsl, arity, rng);
  for (int attempt = 0; attempt < kHeightRetries; ++attempt) {
    const auto pool = library->with_height(draw_subtree_height(config.h, rng));
    if (pool.empty()) continue;
    std::uniform_int_distribution<std::size_t> entry(0, pool.size() - 1);
    return splice(parent, at, library->entries()[pool[entry(rng)]].expr);
  }
  return grow_mutation(parent, at, config, dsl, arity, rng);
}

std::size_t tournament_select(std::span<const double> fitness, int size, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, fitness.size() - 1);
  std::size_t best = pick(rng);
  for (int i = 1; i < size; ++i) {
    const std::size_t c = pick(rng);
    if (fitness[c] < fitness[best]) best = c;
  }
  return best;
}

RunResult run(const GpConfig& config, const Problem& problem, const Library* library, const Dsl& dsl,
              const GenerationObserver& observer) {
  config.validate();
  if (needs_library(config.variant) && !library) {
    throw std::invalid_argument(std::string("variant ") + std::string(variant_name(config.variant)) +
                                " needs a library");
  }
  if (!needs_library(config.variant) && library) {
    throw std::invalid_argument("variant GP does not take a library");
  }
  if (problem.dataset.empty()) throw std::invalid_argument("problem has no data points");
  const auto start = std::chrono::steady_clock::now();
  Rng rng(config.seed);
  const auto test = problem.test_or_train();

  std::vector<ExprTree> pop = init_population(config, dsl, problem.arity, library, rng);
  std::vector<double> fitness(pop.size());
  RunResult result;

  auto evaluate = [&](int generation) {
    parallel_for(pop.size(), config.workers, [&](std::size_t i) { fitness[i] = mse(pop[i], problem.dataset); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
      if (fitness[i] < fitness[best]) best = i;
    }
    if (result.best.empty() || fitness[best] < result.best_train_mse) {
      result.best = pop[best];
      result.best_train_mse = fitness[best];
      result.best_test_mse = mse(result.best, test);
    }
    result.success = result.best_test_mse < config.success_threshold;
    if (result.success && result.gen_of_success < 0) result.gen_of_success = generation;
    result.best_fitness.push_back(result.best_train_mse);
    std::vector<double> sorted = fitness;
    auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    result.median_fitness.push_back(*mid);
    result.generations_run = generation;
    if (observer) observer(generation, pop, fitness);
  };

  evaluate(0);
  std::bernoulli_distribution cross(config.crossover_prob), mut(config.mutation_prob);
  for (int gen = 1; gen <= config.generations; ++gen) {
    if (config.stop_on_success && result.success) break;
    std::vector<ExprTree> next;
    next.reserve(pop.size());
    while (next.size() < pop.size()) {
      const ExprTree& a = pop[tournament_select(fitness, config.tournament, rng)];
      const ExprTree& b = pop[tournament_select(fitness, config.tournament, rng)];
      ExprTree c1, c2;
      if (cross(rng)) {
        if (config.crossover == CrossoverKind::GradientMatched) {
          c1 = gradient_matched_crossover(a, b, problem.dataset, rng);
          c2 = gradient_matched_crossover(b, a, problem.dataset, rng);
        } else {
          std::tie(c1, c2) = one_point_crossover(a, b, rng);
        }
      } else {
        c1 = a;
        c2 = b;
      }
      if (mut(rng)) c1 = mutate(c1, config, dsl, problem.arity, library, rng);
      if (mut(rng)) c2 = mutate(c2, config, dsl, problem.arity, library, rng);
      if (c1.height() > config.height_limit) c1 = a;
      if (c2.height() > config.height_limit) c2 = b;
      next.push_back(std::move(c1));
      if (next.size() < pop.size()) next.push_back(std::move(c2));
    }
    pop = std::move(next);
    evaluate(gen);
  }
  result.time_gp_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace evonudge
