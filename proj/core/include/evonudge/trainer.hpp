#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evonudge/gnn.hpp"
#include "evonudge/problem.hpp"
#include "evonudge/semgraph.hpp"

namespace evonudge {

struct TrainConfig {
  double lr = 1e-3;
  int max_epochs = 50;
  int patience = 5;
  double min_improvement = 1e-4;
  int negatives_per_step = 20;     // non-target applications expanded when advancing a trajectory
  int negative_pool = 512;         // negatives stored per trajectory step
  int loss_negatives = 64;         // negatives drawn from the pool for each gradient step
  int examples_per_step = 4;       // examples averaged per gradient step, 0 = all
  int validation = 60;             // problems held out from the training list
  bool full_first_layer = true;    // expand the height-1 layer before the first step, as at inference
  double time_limit_s = 0.0;       // stop after the epoch that crosses it, 0 = none
  double stop_below = 0.0;         // stop once the monitored loss drops below it, 0 = never
  int workers = 1;
  std::uint64_t seed = 0;
};

// One pre-expansion graph state. Candidates are the positives first, then a sampled pool of
// semantically novel negatives.
struct TrajectoryStep {
  std::size_t problem = 0;
  SearchGraph graph;
  std::vector<ApplicationCandidate> candidates;
  std::vector<double> labels;
  std::size_t positives() const noexcept;
};

// 1 for every candidate whose output matches a subexpression of `target` that the graph
// does not yet hold, 0 otherwise.
std::vector<double> label_candidates(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                                     const ExprTree& target);

// Teacher-forced rollout. Throws std::invalid_argument if the target uses variables beyond
// the problem arity or operators outside `dsl`.
std::vector<TrajectoryStep> make_trajectory(const Problem& problem, const ExprTree& target, const TrainConfig& config,
                                            const Dsl& dsl = Dsl::standard());

struct EpochLog {
  int epoch;
  double train_bce;
  double val_bce;
};

struct TrainResult {
  ModelParams params;  // best-validation checkpoint
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::size_t train_steps = 0;
  std::size_t validation_steps = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Holds out `config.validation` problems (seeded), or trains on all of them and stops on the
// training loss when that leaves nothing to train on. Throws on an empty list or a problem
// without a target.
TrainResult train(std::span<const Problem> problems, const TrainConfig& config, const EpochCallback& on_epoch = {},
                  const Dsl& dsl = Dsl::standard());
TrainResult train(std::span<const Problem> train_problems, std::span<const Problem> validation_problems,
                  const TrainConfig& config, const EpochCallback& on_epoch = {}, const Dsl& dsl = Dsl::standard());

// Mean BCE of `params` over the steps, using the first `examples` data points of each problem.
double evaluate_bce(const ModelParams& params, std::span<const TrajectoryStep> steps, std::span<const Problem> problems,
                    int examples);

std::string training_log_csv(std::span<const EpochLog> log);

}  // namespace evonudge
