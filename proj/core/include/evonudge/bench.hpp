#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evonudge/evolve.hpp"
#include "evonudge/gnn.hpp"
#include "evonudge/library.hpp"
#include "evonudge/problem.hpp"
#include "evonudge/semgraph.hpp"

namespace evonudge {

// ---------------------------------------------------------------------------
// Problem suites

struct SuiteConfig {
  std::size_t train = 462;
  std::size_t validation = 60;
  std::size_t test = 510;
  int min_arity = 1;
  int max_arity = 6;
  int max_height = 6;
  int points = 30;
  double low = 1.0;
  double high = 5.0;
  std::uint64_t seed = 0;

  // Splits in the proportions 462 : 60 : 510 of a 1032-problem suite.
  static SuiteConfig proportional(std::size_t total, std::uint64_t seed);
};

struct Suite {
  std::vector<Problem> train, validation, test;
  std::vector<Problem> all() const;
};

// Draws targets with a uniform arity and a uniform height bound, grows them with an operator
// at the root, rejects constant targets and targets undefined at any sampled point, dedups
// by fingerprint, and partitions the survivors at random.
Suite generate_suite(const Dsl& dsl, const SuiteConfig& config);

// Dataset of `count` points for `target` with every coordinate uniform in [low, high].
// nullopt if the target is undefined at any drawn point.
std::optional<std::vector<DataPoint>> sample_dataset(const ExprTree& target, std::span<const std::pair<double, double>> ranges,
                                                     int count, Rng& rng);

// JSON array of {id, split, arity, target, dataset: [[[x...], y], ...], test: [...]}.
std::string problems_to_json(std::span<const Problem> problems);
std::vector<Problem> problems_from_json(std::string_view json);
void save_problems(std::span<const Problem> problems, const std::string& path);
std::vector<Problem> load_problems(const std::string& path);

// ---------------------------------------------------------------------------
// Feynman equations

struct SkippedRow {
  std::size_t row;  // 1-based line number in the file
  std::string id;
  std::string reason;
};

struct FeynmanSuite {
  std::vector<Problem> problems;
  std::vector<SkippedRow> skipped;
};

// Tab-separated: id, prefix formula, arity, ranges "lo:hi,lo:hi,...". Lines starting with '#'
// and blank lines are ignored. Throws only if the file cannot be opened.
FeynmanSuite load_feynman(const std::string& path, std::uint64_t seed, int points = 30);
FeynmanSuite parse_feynman(std::string_view text, std::uint64_t seed, int points = 30);

// ---------------------------------------------------------------------------
// EvoRnd control

// For each problem, the index of the problem whose library it receives: a uniform random
// permutation within each arity group.
std::vector<std::size_t> evo_rnd_assignment(std::span<const int> arities, Rng& rng);
std::vector<Library> evo_rnd_permute(std::span<const Library> libraries, std::span<const int> arities, Rng& rng);

// ---------------------------------------------------------------------------
// Experiments

enum class MethodKind { GP, NUDGE, EvoNUDGE, EvoRnd };

struct MethodSpec {
  MethodKind kind = MethodKind::GP;
  Variant variant = Variant::GP;
  int h = 2;
  std::string label() const;
};

// Parses "GP", "NUDGE", "EvoNUDGE-IM", "EvoRnd-IMM", or a bare variant (taken as EvoNUDGE).
MethodSpec method_from_label(std::string_view label, int h);

struct SuiteRunConfig {
  GpConfig gp;
  LibraryBuildConfig library;
  int seeds = 3;
  int workers = 1;
  std::uint64_t seed = 0;
};

struct ResultRow {
  std::string problem_id;
  std::string variant;  // method label
  int h = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double best_mse = kWorstFitness;
  int gen_of_success = -1;
  double time_library_s = 0.0;
  double time_gp_s = 0.0;
};

struct LibraryStat {
  std::string problem_id;
  int h = 0;
  std::size_t size = 0;
  int guided_iterations = 0;
  bool exact_fit = false;
  double build_s = 0.0;
};

struct SummaryRow {
  std::string variant;
  int h = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;  // percent
  double mean_library_s = 0.0;
  double mean_gp_s = 0.0;
};

struct LibrarySummary {
  int h = 0;
  std::size_t count = 0;
  double mean = 0.0, stddev = 0.0;
  std::size_t min = 0, max = 0;
};

struct SuiteReport {
  std::vector<ResultRow> rows;
  std::vector<LibraryStat> libraries;
  std::vector<SummaryRow> summary;
  std::vector<LibrarySummary> library_summary;
};

// Builds one library per (problem, h) needed by the methods and reuses it across them.
// Throws std::invalid_argument if an informed method is requested without parameters.
SuiteReport run_suite(std::span<const Problem> problems, std::span<const MethodSpec> methods, const ModelParams* params,
                      const SuiteRunConfig& config);
// Same, with an arbitrary scorer standing in for the network.
SuiteReport run_suite(std::span<const Problem> problems, std::span<const MethodSpec> methods,
                      const CandidateScorer* scorer, const SuiteRunConfig& config);

void summarize(SuiteReport& report);

std::string results_csv(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results_csv(std::string_view csv);
std::string library_stats_csv(std::span<const LibraryStat> stats);
std::vector<LibraryStat> parse_library_stats_csv(std::string_view csv);

// Success rates, library sizes and run times as aligned text, or as one CSV block per table.
std::string render_report_text(const SuiteReport& report);
std::string render_report_csv(const SuiteReport& report);

}  // namespace evonudge
