#include "evonudge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "evonudge/parallel.hpp"
#include "evonudge/random.hpp"

namespace evonudge {

namespace {

std::unordered_set<Fingerprint, FingerprintHash> subexpression_classes(const ExprTree& target, int arity) {
  std::unordered_set<Fingerprint, FingerprintHash> out;
  for (std::size_t i = 0; i < target.size(); ++i) out.insert(fingerprint_of(target.subtree(i), arity));
  return out;
}

void check_target(const ExprTree& target, int arity, const Dsl& dsl) {
  if (target.empty()) throw std::invalid_argument("empty target expression");
  if (target.max_variable_index() >= arity) throw std::invalid_argument("target uses a variable beyond the arity");
  for (const auto& n : target.nodes()) {
    if (n.kind == NodeKind::Apply && !dsl.enabled(static_cast<Op>(n.code))) {
      throw std::invalid_argument("target uses an operator outside the DSL");
    }
    if (n.kind == NodeKind::Constant &&
        std::find(dsl.constants().begin(), dsl.constants().end(), n.code) == dsl.constants().end()) {
      throw std::invalid_argument("target uses a constant outside the DSL");
    }
  }
}

// Partial Fisher-Yates: the first `take` entries become a uniform sample.
template <class T>
void sample_prefix(std::vector<T>& v, std::size_t take, Rng& rng) {
  take = std::min(take, v.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
    std::swap(v[i], v[pick(rng)]);
  }
}

double bce_from_logits(std::span<const double> logits, std::span<const double> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    total += std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))) - labels[i] * x;
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace

std::size_t TrajectoryStep::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1.0));
}

std::vector<double> label_candidates(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                                     const ExprTree& target) {
  const auto classes = subexpression_classes(target, graph.arity());
  std::vector<double> labels(candidates.size(), 0.0);
  std::vector<double> probes(kProbeCount);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    graph.candidate_probe_values(candidates[i], probes);
    const Fingerprint fp = make_fingerprint(probes);
    if (classes.contains(fp) && !graph.find_value(fp)) labels[i] = 1.0;
  }
  return labels;
}

std::vector<TrajectoryStep> make_trajectory(const Problem& problem, const ExprTree& target, const TrainConfig& config,
                                            const Dsl& dsl) {
  check_target(target, problem.arity, dsl);
  const int arity = problem.arity;
  const FingerprintHash hash;
  std::unordered_set<std::size_t> classes;
  for (const auto& fp : subexpression_classes(target, arity)) classes.insert(hash(fp));
  const Fingerprint root = fingerprint_of(target, arity);

  Rng rng(mix_seed(config.seed, "trajectory:" + problem.id));
  SearchGraph graph(dsl, arity);
  if (config.full_first_layer) graph.expand(enumerate_candidates(graph, 1));

  std::vector<TrajectoryStep> steps;
  const int height = target.height();
  CandidateFrontier frontier(graph, height + 2);
  std::vector<double> probes(kProbeCount);
  for (int guard = 0; guard <= height + 2 && !graph.find_value(root); ++guard) {
    std::vector<ApplicationCandidate> positives, negatives;
    for (const auto& c : frontier.candidates()) {
      graph.candidate_probe_values(c, probes);
      (classes.contains(hash(make_fingerprint(probes))) ? positives : negatives).push_back(c);
    }
    if (positives.empty()) break;
    sample_prefix(negatives, static_cast<std::size_t>(config.negative_pool), rng);
    negatives.resize(std::min(negatives.size(), static_cast<std::size_t>(config.negative_pool)));

    // Clutter expanded alongside the positives: a uniform prefix of the already-shuffled pool.
    std::vector<ApplicationCandidate> advance = positives;
    const std::size_t clutter = std::min(negatives.size(), static_cast<std::size_t>(config.negatives_per_step));
    advance.insert(advance.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(clutter));

    TrajectoryStep step{0, graph, positives, {}};
    step.labels.assign(positives.size(), 1.0);
    step.candidates.insert(step.candidates.end(), negatives.begin(), negatives.end());
    step.labels.resize(step.candidates.size(), 0.0);
    steps.push_back(std::move(step));

    graph.expand(advance);
    frontier.update(graph);
  }
  return steps;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<TrajectoryStep> trajectories(std::span<const Problem> problems, const TrainConfig& config, const Dsl& dsl) {
  std::vector<std::vector<TrajectoryStep>> per(problems.size());
  parallel_for(problems.size(), config.workers, [&](std::size_t i) {
    const Problem& p = problems[i];
    if (!p.target) throw std::invalid_argument("training problem '" + p.id + "' has no target expression");
    per[i] = make_trajectory(p, *p.target, config, dsl);
    for (auto& s : per[i]) s.problem = i;
  });
  std::vector<TrajectoryStep> out;
  for (auto& v : per) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> example_indices(std::size_t n, int wanted, Rng* rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = wanted <= 0 ? n : std::min(n, static_cast<std::size_t>(wanted));
  if (rng) sample_prefix(idx, take, *rng);
  idx.resize(take);
  return idx;
}

struct StepGradient {
  std::vector<ad::Matrix> grads;
  double loss = 0.0;
};

StepGradient step_gradient(const ModelParams& params, const TrajectoryStep& step, const Problem& problem,
                           const TrainConfig& config, Rng& rng) {
  // Loss pool: all positives plus a fresh sample of the stored negatives.
  const std::size_t pos = step.positives();
  std::vector<std::size_t> neg(step.candidates.size() - pos);
  std::iota(neg.begin(), neg.end(), pos);
  sample_prefix(neg, static_cast<std::size_t>(config.loss_negatives), rng);
  neg.resize(std::min(neg.size(), static_cast<std::size_t>(config.loss_negatives)));
  std::sort(neg.begin(), neg.end());
  std::vector<ApplicationCandidate> cands(step.candidates.begin(), step.candidates.begin() + static_cast<std::ptrdiff_t>(pos));
  std::vector<double> labels(pos, 1.0);
  for (std::size_t i : neg) {
    cands.push_back(step.candidates[i]);
    labels.push_back(0.0);
  }

  const auto examples = example_indices(problem.dataset.size(), config.examples_per_step, &rng);
  std::vector<StepGradient> parts(examples.size());
  parallel_for(examples.size(), config.workers, [&](std::size_t e) {
    ad::Tape tape;
    const ParamVars pv = record_params(tape, params);
    const GraphInput in = featurize(step.graph, cands, problem.dataset[examples[e]]);
    const ad::Var loss = ad::bce_with_logits(tape, forward_logits(tape, pv, in), labels);
    tape.backward(loss);
    parts[e].loss = tape.value(loss)(0, 0);
    for (ad::Var v : pv.vars) parts[e].grads.push_back(tape.grad(v));
  });

  StepGradient total = std::move(parts[0]);
  for (std::size_t e = 1; e < parts.size(); ++e) {
    total.loss += parts[e].loss;
    for (std::size_t i = 0; i < total.grads.size(); ++i) total.grads[i] += parts[e].grads[i];
  }
  const double scale = 1.0 / static_cast<double>(parts.size());
  total.loss *= scale;
  for (auto& g : total.grads) g *= scale;
  return total;
}

}  // namespace

double evaluate_bce(const ModelParams& params, std::span<const TrajectoryStep> steps, std::span<const Problem> problems,
                    int examples) {
  if (steps.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& step : steps) {
    const Problem& p = problems[step.problem];
    const auto idx = example_indices(p.dataset.size(), examples, nullptr);
    double s = 0.0;
    for (std::size_t j : idx) s += bce_from_logits(forward_logits(params, featurize(step.graph, step.candidates, p.dataset[j])), step.labels);
    total += s / static_cast<double>(idx.size());
  }
  return total / static_cast<double>(steps.size());
}

TrainResult train(std::span<const Problem> problems, const TrainConfig& config, const EpochCallback& on_epoch,
                  const Dsl& dsl) {
  if (problems.empty()) throw std::invalid_argument("empty training set");
  std::vector<std::size_t> order(problems.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(config.seed, "validation-split"));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t held = static_cast<std::size_t>(std::max(config.validation, 0));
  if (held >= problems.size()) held = 0;
  std::vector<Problem> val, tr;
  for (std::size_t i = 0; i < order.size(); ++i) (i < held ? val : tr).push_back(problems[order[i]]);
  return train(tr, val, config, on_epoch, dsl);
}

TrainResult train(std::span<const Problem> train_problems, std::span<const Problem> validation_problems,
                  const TrainConfig& config, const EpochCallback& on_epoch, const Dsl& dsl) {
  if (train_problems.empty()) throw std::invalid_argument("empty training set");
  if (!(config.lr > 0)) throw std::invalid_argument("learning rate must be positive");
  if (config.patience < 1) throw std::invalid_argument("patience must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  const auto steps = trajectories(train_problems, config, dsl);
  const auto val_steps = trajectories(validation_problems, config, dsl);
  if (steps.empty()) throw std::invalid_argument("training problems yield no trajectory steps");

  TrainResult result;
  result.train_steps = steps.size();
  result.validation_steps = val_steps.size();
  ModelParams params = ModelParams::initialize(config.seed);
  result.params = params;
  ad::AdamState adam;
  adam.lr = config.lr;

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::vector<std::size_t> order(steps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double train_loss = 0.0;
    for (std::size_t i : order) {
      const auto& step = steps[i];
      StepGradient g = step_gradient(params, step, train_problems[step.problem], config, rng);
      train_loss += g.loss;
      std::vector<ad::Matrix> tensors;
      auto named = params.named();
      for (auto& [n, m] : named) tensors.push_back(std::move(*m));
      ad::adam_step(tensors, g.grads, adam);
      for (std::size_t t = 0; t < named.size(); ++t) *named[t].second = std::move(tensors[t]);
    }
    train_loss /= static_cast<double>(steps.size());
    const double val_loss =
        val_steps.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : evaluate_bce(params, val_steps, validation_problems, config.examples_per_step);
    const EpochLog entry{epoch, train_loss, val_loss};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    const double monitored = val_steps.empty() ? train_loss : val_loss;
    if (monitored < best - config.min_improvement) {
      best = monitored;
      stale = 0;
      result.params = params;
      result.best_epoch = epoch;
    } else if (++stale >= config.patience) {
      break;
    }
    if (config.stop_below > 0 && monitored < config.stop_below) break;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (config.time_limit_s > 0 && elapsed >= config.time_limit_s) break;
  }
  return result;
}

std::string training_log_csv(std::span<const EpochLog> log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_bce,val_bce\n";
  for (const auto& e : log) out << e.epoch << ',' << e.train_bce << ',' << e.val_bce << '\n';
  return out.str();
}

}  // namespace evonudge
