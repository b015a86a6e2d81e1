#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "evonudge/dsl.hpp"
#include "evonudge/expr.hpp"
#include "evonudge/fingerprint.hpp"
#include "evonudge/library.hpp"
#include "evonudge/problem.hpp"

namespace evonudge {

enum class GraphNodeKind : std::uint8_t { Variable, Constant, Operation, Application, Value };

// Variables, constants and computed values all carry a semantic value.
constexpr bool carries_value(GraphNodeKind kind) noexcept {
  return kind == GraphNodeKind::Variable || kind == GraphNodeKind::Constant || kind == GraphNodeKind::Value;
}

struct GraphNode {
  GraphNodeKind kind = GraphNodeKind::Value;
  int payload = -1;    // variable index, constant index or Op; -1 otherwise
  int height = 0;      // value-bearing and application nodes
  int iteration = 0;   // expansion that created the node, 0 for the initial graph
  int slot = -1;       // row in the value caches, value-bearing nodes only
  int output = -1;     // application: its value node
  int creator = -1;    // computed value: the application that first produced it
  std::array<int, 2> args{-1, -1};
  int num_args = 0;
  ExprTree expr;       // realizing tree (first materialized); applied tree for applications
};

// One operator applied to existing value nodes, not yet in the graph.
struct ApplicationCandidate {
  Op op;
  std::array<int, 2> args{-1, -1};
  int height = 1;
  bool operator==(const ApplicationCandidate&) const = default;
};

struct ExpansionRecord {
  int application;
  int value;
  bool merged;  // linked to a pre-existing value node
};

// The bottom-up search state: value nodes are unique per semantic class (fingerprint).
class SearchGraph {
 public:
  SearchGraph(const Dsl& dsl, int arity);

  const Dsl& dsl() const noexcept { return dsl_; }
  int arity() const noexcept { return arity_; }
  int iteration() const noexcept { return iteration_; }

  std::span<const GraphNode> nodes() const noexcept { return nodes_; }
  const GraphNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::span<const std::pair<int, int>> edges() const noexcept { return edges_; }
  std::span<const int> value_nodes() const noexcept { return value_nodes_; }
  std::span<const int> application_nodes() const noexcept { return application_nodes_; }
  std::span<const int> operation_nodes() const noexcept { return operation_nodes_; }
  // Node id of the operation node for `op`, -1 if the DSL lacks it.
  int operation_node(Op op) const noexcept { return op_node_[static_cast<std::size_t>(op)]; }

  std::span<const double> probe_values(int value_node) const;
  const Fingerprint& fingerprint(int value_node) const;
  std::optional<int> find_value(const Fingerprint& fp) const;
  bool has_application(const ApplicationCandidate& candidate) const;

  // Values of a candidate's output at the probe points / attached dataset.
  void candidate_probe_values(const ApplicationCandidate& candidate, std::span<double> out) const;
  void candidate_data_values(const ApplicationCandidate& candidate, std::span<double> out) const;
  ExprTree candidate_expr(const ApplicationCandidate& candidate) const;

  // Instantiation cache over a dataset; maintained across expansions once attached.
  void attach_dataset(std::span<const DataPoint> dataset);
  std::size_t data_size() const noexcept { return targets_.size(); }
  std::span<const double> targets() const noexcept { return targets_; }
  std::span<const double> data_values(int value_node) const;

  // Value of every value-bearing node for one input vector, indexed by slot.
  std::vector<double> instantiate(std::span<const double> x) const;

  std::vector<ExpansionRecord> expand(std::span<const ApplicationCandidate> chosen);

 private:
  int add_node(GraphNode node);
  int add_value_node(GraphNode node, const Fingerprint& fp, std::span<const double> probes);
  static std::uint64_t application_key(Op op, std::array<int, 2> args) noexcept;

  Dsl dsl_;
  int arity_;
  int iteration_ = 0;
  std::vector<GraphNode> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<int> value_nodes_;
  std::vector<int> application_nodes_;
  std::vector<int> operation_nodes_;
  std::array<int, kNumOps> op_node_{};
  std::vector<double> probes_;  // slot-major, kProbeCount per slot
  std::vector<Fingerprint> fingerprints_;
  std::unordered_map<Fingerprint, int, FingerprintHash> index_;
  std::unordered_set<std::uint64_t> applications_;
  std::vector<double> targets_;
  std::vector<double> data_;  // slot-major, data_size() per slot
};

// G0: one value node per variable and constant, one operation node per operator, no edges.
SearchGraph init_graph(const Dsl& dsl, int arity);

// Every operator over ordered tuples of value nodes whose application height stays
// within `height_cap` and which is not already present. Order: DSL operator order, then
// argument node ids lexicographically.
std::vector<ApplicationCandidate> enumerate_candidates(const SearchGraph& graph, int height_cap);

SearchGraph expand(SearchGraph graph, std::span<const ApplicationCandidate> chosen);

// Indices of candidates whose output is semantically new to the graph, keeping only the
// first candidate of each new semantic class.
std::vector<std::size_t> novel_candidates(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates);

// Novel candidates under a height cap, one per semantic class not yet in the graph,
// maintained incrementally: update() drops classes the graph has since acquired and adds
// candidates over value nodes created after the previous call. Classes are compared by
// fingerprint hash.
class CandidateFrontier {
 public:
  CandidateFrontier(const SearchGraph& graph, int height_cap);
  void update(const SearchGraph& graph);
  std::span<const ApplicationCandidate> candidates() const noexcept { return candidates_; }
  std::size_t size() const noexcept { return candidates_.size(); }

 private:
  void absorb_values(const SearchGraph& graph);
  void consider(const SearchGraph& graph, const ApplicationCandidate& c, std::span<double> scratch);

  int cap_;
  std::size_t seen_values_ = 0;
  std::size_t absorbed_ = 0;
  std::vector<ApplicationCandidate> candidates_;
  std::vector<std::size_t> hashes_;
  std::unordered_set<std::size_t> graph_classes_;
  std::unordered_set<std::size_t> frontier_classes_;
};

// Expands every candidate under the cap until none remain.
void close_graph(SearchGraph& graph, int height_cap);

// One entry per value node in node-id order.
Library extract_library(const SearchGraph& graph, std::string source = {});

// First value node whose values match the attached targets within `tolerance` at every point.
std::optional<int> find_exact_fit(const SearchGraph& graph, double tolerance, std::span<const int> among = {});

// ---------------------------------------------------------------------------
// Guided library construction

// Scores candidate applications; higher means more worth expanding.
class CandidateScorer {
 public:
  virtual ~CandidateScorer() = default;
  virtual std::vector<double> score(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                                    std::span<const DataPoint> dataset) const = 0;
};

struct LibraryBuildConfig {
  int h = 2;                           // height cap of library expressions
  int k = 5;                           // applications expanded per guided iteration
  int budget = 40;                     // guided iterations
  std::size_t candidate_pool = 1024;   // candidates scored per iteration, 0 = all
  std::size_t saliency_examples = 4;   // examples averaged per query, 0 = all
  double exact_fit_tolerance = 1e-10;
  std::uint64_t seed = 0;
};

struct LibraryBuildResult {
  Library library;
  int guided_iterations = 0;
  std::optional<int> exact_fit;  // value node matching the targets
  std::size_t value_nodes = 0;
};

// Expands the full height-1 layer, then runs guided top-k iterations until the budget is
// spent, no novel candidate remains, or a value node fits the dataset exactly.
LibraryBuildResult build_library(const Problem& problem, const CandidateScorer& scorer,
                                 const LibraryBuildConfig& config, const Dsl& dsl = Dsl::standard());

// Top-k indices by descending score, ties to the lower index.
std::vector<std::size_t> select_topk(std::span<const double> scores, std::size_t k);

}  // namespace evonudge
