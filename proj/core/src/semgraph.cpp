#include "evonudge/semgraph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evonudge/random.hpp"

namespace evonudge {

SearchGraph::SearchGraph(const Dsl& dsl, int arity) : dsl_(dsl), arity_(arity) {
  if (arity < 1 || arity > dsl.max_variables()) throw std::invalid_argument("graph arity out of range");
  op_node_.fill(-1);
  const auto& probes = ProbeSet::for_arity(arity).points();
  std::vector<double> values(kProbeCount);
  for (int v = 0; v < arity; ++v) {
    GraphNode node;
    node.kind = GraphNodeKind::Variable;
    node.payload = v;
    node.expr = ExprTree::variable(v);
    for (std::size_t p = 0; p < kProbeCount; ++p) values[p] = probes[p].x[static_cast<std::size_t>(v)];
    const Fingerprint fp = make_fingerprint(values);
    if (index_.contains(fp)) throw std::logic_error("probe points do not separate the input variables");
    add_value_node(std::move(node), fp, values);
  }
  for (int c : dsl.constants()) {
    GraphNode node;
    node.kind = GraphNodeKind::Constant;
    node.payload = c;
    node.expr = ExprTree::constant(c);
    std::fill(values.begin(), values.end(), constant_table()[static_cast<std::size_t>(c)].value);
    const Fingerprint fp = make_fingerprint(values);
    if (index_.contains(fp)) continue;  // a DSL with duplicate-valued constants keeps the first
    add_value_node(std::move(node), fp, values);
  }
  for (Op op : dsl.operators()) {
    GraphNode node;
    node.kind = GraphNodeKind::Operation;
    node.payload = static_cast<int>(op);
    const int id = add_node(std::move(node));
    operation_nodes_.push_back(id);
    op_node_[static_cast<std::size_t>(op)] = id;
  }
}

int SearchGraph::add_node(GraphNode node) {
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int SearchGraph::add_value_node(GraphNode node, const Fingerprint& fp, std::span<const double> probes) {
  node.slot = static_cast<int>(value_nodes_.size());
  node.height = node.expr.height();
  const int id = add_node(std::move(node));
  value_nodes_.push_back(id);
  probes_.insert(probes_.end(), probes.begin(), probes.end());
  fingerprints_.push_back(fp);
  index_.emplace(fp, id);
  return id;
}

std::uint64_t SearchGraph::application_key(Op op, std::array<int, 2> args) noexcept {
  return (static_cast<std::uint64_t>(op) << 60) | (static_cast<std::uint64_t>(args[0] + 1) << 30) |
         static_cast<std::uint64_t>(args[1] + 1);
}

std::span<const double> SearchGraph::probe_values(int value_node) const {
  const int slot = node(value_node).slot;
  if (slot < 0) throw std::invalid_argument("node carries no value");
  return {probes_.data() + static_cast<std::size_t>(slot) * kProbeCount, kProbeCount};
}

const Fingerprint& SearchGraph::fingerprint(int value_node) const {
  const int slot = node(value_node).slot;
  if (slot < 0) throw std::invalid_argument("node carries no value");
  return fingerprints_[static_cast<std::size_t>(slot)];
}

std::optional<int> SearchGraph::find_value(const Fingerprint& fp) const {
  const auto it = index_.find(fp);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool SearchGraph::has_application(const ApplicationCandidate& candidate) const {
  return applications_.contains(application_key(candidate.op, candidate.args));
}

void SearchGraph::candidate_probe_values(const ApplicationCandidate& c, std::span<double> out) const {
  const auto a = probe_values(c.args[0]);
  if (evonudge::arity(c.op) == 1) {
    for (std::size_t p = 0; p < kProbeCount; ++p) out[p] = apply_op(c.op, a[p]);
  } else {
    const auto b = probe_values(c.args[1]);
    for (std::size_t p = 0; p < kProbeCount; ++p) out[p] = apply_op(c.op, a[p], b[p]);
  }
}

void SearchGraph::candidate_data_values(const ApplicationCandidate& c, std::span<double> out) const {
  const auto a = data_values(c.args[0]);
  const std::size_t n = data_size();
  if (evonudge::arity(c.op) == 1) {
    for (std::size_t j = 0; j < n; ++j) out[j] = apply_op(c.op, a[j]);
  } else {
    const auto b = data_values(c.args[1]);
    for (std::size_t j = 0; j < n; ++j) out[j] = apply_op(c.op, a[j], b[j]);
  }
}

ExprTree SearchGraph::candidate_expr(const ApplicationCandidate& c) const {
  if (evonudge::arity(c.op) == 1) return ExprTree::apply(c.op, node(c.args[0]).expr);
  return ExprTree::apply(c.op, node(c.args[0]).expr, node(c.args[1]).expr);
}

void SearchGraph::attach_dataset(std::span<const DataPoint> dataset) {
  const std::size_t n = dataset.size();
  targets_.resize(n);
  data_.assign(value_nodes_.size() * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (static_cast<int>(dataset[j].x.size()) < arity_) throw std::invalid_argument("data point arity mismatch");
    targets_[j] = dataset[j].y;
    const auto values = instantiate(dataset[j].x);
    for (std::size_t s = 0; s < values.size(); ++s) data_[s * n + j] = values[s];
  }
}

std::span<const double> SearchGraph::data_values(int value_node) const {
  const int slot = node(value_node).slot;
  if (slot < 0) throw std::invalid_argument("node carries no value");
  const std::size_t n = data_size();
  return {data_.data() + static_cast<std::size_t>(slot) * n, n};
}

std::vector<double> SearchGraph::instantiate(std::span<const double> x) const {
  std::vector<double> values(value_nodes_.size());
  for (int id : value_nodes_) {
    const GraphNode& n = nodes_[static_cast<std::size_t>(id)];
    double v;
    switch (n.kind) {
      case GraphNodeKind::Variable: v = x[static_cast<std::size_t>(n.payload)]; break;
      case GraphNodeKind::Constant: v = constant_table()[static_cast<std::size_t>(n.payload)].value; break;
      default: {
        // Creator arguments precede the value node, so their slots are already filled.
        const GraphNode& app = nodes_[static_cast<std::size_t>(n.creator)];
        const Op op = static_cast<Op>(app.payload);
        const double a = values[static_cast<std::size_t>(node(app.args[0]).slot)];
        const double b = app.num_args > 1 ? values[static_cast<std::size_t>(node(app.args[1]).slot)] : 0.0;
        v = apply_op(op, a, b);
      }
    }
    values[static_cast<std::size_t>(n.slot)] = v;
  }
  return values;
}

std::vector<ExpansionRecord> SearchGraph::expand(std::span<const ApplicationCandidate> chosen) {
  ++iteration_;
  std::vector<ExpansionRecord> records;
  records.reserve(chosen.size());
  std::vector<double> probes(kProbeCount);
  std::vector<double> data(data_size());
  for (const auto& c : chosen) {
    const int k = evonudge::arity(c.op);
    const int op_node = operation_node(c.op);
    if (op_node < 0) throw std::invalid_argument("candidate operator not in the DSL");
    for (int a = 0; a < k; ++a) {
      if (c.args[static_cast<std::size_t>(a)] < 0 || !carries_value(node(c.args[static_cast<std::size_t>(a)]).kind)) {
        throw std::invalid_argument("candidate argument is not a value node");
      }
    }
    const std::uint64_t key = application_key(c.op, c.args);
    if (applications_.contains(key)) continue;

    candidate_probe_values(c, probes);
    if (!targets_.empty()) candidate_data_values(c, data);
    const Fingerprint fp = make_fingerprint(probes);

    GraphNode app;
    app.kind = GraphNodeKind::Application;
    app.payload = static_cast<int>(c.op);
    app.iteration = iteration_;
    app.args = c.args;
    app.num_args = k;
    app.expr = candidate_expr(c);
    app.height = app.expr.height();
    const int app_id = add_node(std::move(app));
    application_nodes_.push_back(app_id);
    applications_.insert(key);

    edges_.emplace_back(op_node, app_id);
    for (int a = 0; a < k; ++a) edges_.emplace_back(c.args[static_cast<std::size_t>(a)], app_id);

    int value_id;
    bool merged;
    if (const auto existing = find_value(fp)) {
      value_id = *existing;
      merged = true;
    } else {
      GraphNode value;
    value.kind = GraphNodeKind::Value;
      value.iteration = iteration_;
      value.creator = app_id;
      value.expr = nodes_[static_cast<std::size_t>(app_id)].expr;
      value_id = add_value_node(std::move(value), fp, probes);
      if (!targets_.empty()) data_.insert(data_.end(), data.begin(), data.end());
      merged = false;
    }
    nodes_[static_cast<std::size_t>(app_id)].output = value_id;
    edges_.emplace_back(app_id, value_id);
    records.push_back({app_id, value_id, merged});
  }
  return records;
}

// ---------------------------------------------------------------------------

SearchGraph init_graph(const Dsl& dsl, int arity) { return SearchGraph(dsl, arity); }

std::vector<ApplicationCandidate> enumerate_candidates(const SearchGraph& graph, int height_cap) {
  std::vector<ApplicationCandidate> out;
  if (height_cap < 1) return out;
  const auto values = graph.value_nodes();
  std::vector<int> eligible;  // value nodes that can still serve as arguments
  for (int v : values) {
    if (graph.node(v).height + 1 <= height_cap) eligible.push_back(v);
  }
  for (Op op : graph.dsl().operators()) {
    if (arity(op) == 1) {
      for (int a : eligible) {
        ApplicationCandidate c{op, {a, -1}, graph.node(a).height + 1};
        if (!graph.has_application(c)) out.push_back(c);
      }
    } else {
      for (int a : eligible) {
        const int ha = graph.node(a).height;
        for (int b : eligible) {
          ApplicationCandidate c{op, {a, b}, std::max(ha, graph.node(b).height) + 1};
          if (!graph.has_application(c)) out.push_back(c);
        }
      }
    }
  }
  return out;
}

SearchGraph expand(SearchGraph graph, std::span<const ApplicationCandidate> chosen) {
  graph.expand(chosen);
  return graph;
}

std::vector<std::size_t> novel_candidates(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates) {
  std::vector<std::size_t> out;
  std::unordered_set<Fingerprint, FingerprintHash> seen;
  std::vector<double> probes(kProbeCount);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    graph.candidate_probe_values(candidates[i], probes);
    Fingerprint fp = make_fingerprint(probes);
    if (graph.find_value(fp)) continue;
    if (seen.insert(std::move(fp)).second) out.push_back(i);
  }
  return out;
}

void close_graph(SearchGraph& graph, int height_cap) {
  for (;;) {
    const auto candidates = enumerate_candidates(graph, height_cap);
    if (candidates.empty()) return;
    graph.expand(candidates);
  }
}

Library extract_library(const SearchGraph& graph, std::string source) {
  std::vector<LibraryEntry> entries;
  entries.reserve(graph.value_nodes().size());
  for (int v : graph.value_nodes()) {
    const GraphNode& n = graph.node(v);
    entries.push_back({n.expr, n.height});
  }
  return Library(std::move(entries), std::move(source));
}

std::optional<int> find_exact_fit(const SearchGraph& graph, double tolerance, std::span<const int> among) {
  const auto targets = graph.targets();
  if (targets.empty()) return std::nullopt;
  const auto candidates = among.empty() ? graph.value_nodes() : among;
  for (int v : candidates) {
    const auto values = graph.data_values(v);
    bool fits = true;
    for (std::size_t j = 0; j < targets.size() && fits; ++j) {
      fits = !is_undefined(values[j]) && std::fabs(values[j] - targets[j]) < tolerance;
    }
    if (fits) return v;
  }
  return std::nullopt;
}

std::vector<std::size_t> select_topk(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  order.resize(take);
  return order;
}

LibraryBuildResult build_library(const Problem& problem, const CandidateScorer& scorer,
                                 const LibraryBuildConfig& config, const Dsl& dsl) {
  if (config.h < 1) throw std::invalid_argument("library height h must be >= 1");
  if (config.k < 1) throw std::invalid_argument("k must be >= 1");
  if (problem.dataset.empty()) throw std::invalid_argument("problem has no data points");

  Rng rng(mix_seed(config.seed, problem.id));

  // Examples presented to the scorer: a fixed seeded subsample when requested.
  std::vector<DataPoint> examples(problem.dataset.begin(), problem.dataset.end());
  if (config.saliency_examples > 0 && config.saliency_examples < examples.size()) {
    std::shuffle(examples.begin(), examples.end(), rng);
    examples.resize(config.saliency_examples);
  }

  SearchGraph graph(dsl, problem.arity);
  graph.attach_dataset(problem.dataset);

  // The height-1 layer is expanded in full before the scorer is ever consulted.
  graph.expand(enumerate_candidates(graph, 1));

  LibraryBuildResult result;
  result.exact_fit = find_exact_fit(graph, config.exact_fit_tolerance);

  if (!result.exact_fit && config.budget > 0 && config.h > 1) {
    CandidateFrontier frontier(graph, config.h);
    while (!result.exact_fit && result.guided_iterations < config.budget) {
      const auto candidates = frontier.candidates();
      if (candidates.empty()) break;
      std::vector<ApplicationCandidate> scored(candidates.begin(), candidates.end());
      if (config.candidate_pool > 0 && scored.size() > config.candidate_pool) {
        std::vector<std::size_t> pool(scored.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < config.candidate_pool; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
          std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(config.candidate_pool);
        std::sort(pool.begin(), pool.end());
        std::vector<ApplicationCandidate> sub;
        sub.reserve(pool.size());
        for (std::size_t i : pool) sub.push_back(scored[i]);
        scored = std::move(sub);
      }

      const auto scores = scorer.score(graph, scored, examples);
      if (scores.size() != scored.size()) throw std::logic_error("scorer returned the wrong number of scores");
      std::vector<ApplicationCandidate> chosen;
      for (std::size_t i : select_topk(scores, static_cast<std::size_t>(config.k))) chosen.push_back(scored[i]);

      const auto records = graph.expand(chosen);
      ++result.guided_iterations;
      frontier.update(graph);
      std::vector<int> fresh;
      for (const auto& r : records) {
        if (!r.merged) fresh.push_back(r.value);
      }
      result.exact_fit = find_exact_fit(graph, config.exact_fit_tolerance, fresh);
    }
  }

  result.value_nodes = graph.value_nodes().size();
  result.library = extract_library(graph, problem.id);
  return result;
}

}  // namespace evonudge

// ---------------------------------------------------------------------------

namespace evonudge {

CandidateFrontier::CandidateFrontier(const SearchGraph& graph, int height_cap) : cap_(height_cap) {
  absorb_values(graph);
  if (cap_ < 1) return;
  seen_values_ = graph.value_nodes().size();
  std::vector<double> scratch(kProbeCount);
  for (const auto& c : enumerate_candidates(graph, cap_)) consider(graph, c, scratch);
}

void CandidateFrontier::absorb_values(const SearchGraph& graph) {
  const FingerprintHash hash;
  const auto values = graph.value_nodes();
  for (; absorbed_ < values.size(); ++absorbed_) graph_classes_.insert(hash(graph.fingerprint(values[absorbed_])));
}

void CandidateFrontier::consider(const SearchGraph& graph, const ApplicationCandidate& c, std::span<double> scratch) {
  if (graph.has_application(c)) return;
  graph.candidate_probe_values(c, scratch);
  const std::size_t h = FingerprintHash{}(make_fingerprint(scratch));
  if (graph_classes_.contains(h) || !frontier_classes_.insert(h).second) return;
  candidates_.push_back(c);
  hashes_.push_back(h);
}

void CandidateFrontier::update(const SearchGraph& graph) {
  absorb_values(graph);
  std::size_t keep = 0;
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    if (graph_classes_.contains(hashes_[i])) {
      frontier_classes_.erase(hashes_[i]);
      continue;
    }
    candidates_[keep] = candidates_[i];
    hashes_[keep] = hashes_[i];
    ++keep;
  }
  candidates_.resize(keep);
  hashes_.resize(keep);
  if (cap_ < 1) return;

  const auto values = graph.value_nodes();
  const std::size_t old = seen_values_;
  seen_values_ = values.size();
  if (old == values.size()) return;
  std::vector<double> scratch(kProbeCount);
  auto usable = [&](int v) { return graph.node(v).height + 1 <= cap_; };
  for (Op op : graph.dsl().operators()) {
    if (arity(op) == 1) {
      for (std::size_t i = old; i < values.size(); ++i) {
        if (usable(values[i])) consider(graph, {op, {values[i], -1}, graph.node(values[i]).height + 1}, scratch);
      }
      continue;
    }
    // Ordered pairs with at least one new argument.
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!usable(values[i])) continue;
      const std::size_t j0 = i < old ? old : 0;
      for (std::size_t j = j0; j < values.size(); ++j) {
        if (!usable(values[j])) continue;
        const int h = std::max(graph.node(values[i]).height, graph.node(values[j]).height) + 1;
        consider(graph, {op, {values[i], values[j]}, h}, scratch);
      }
    }
  }
}

}  // namespace evonudge
