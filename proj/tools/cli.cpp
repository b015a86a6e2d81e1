#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evonudge/bench.hpp"
#include "evonudge/parallel.hpp"
#include "evonudge/random.hpp"
#include "evonudge/trainer.hpp"
#include "json.hpp"

#ifndef EVONUDGE_VERSION
#define EVONUDGE_VERSION "unknown"
#endif

namespace evonudge::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-subcommand parameters. Every option is registered with a default so that the manifest
// records the complete resolved parameter set.

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  int workers = default_workers();
};

struct GenSuiteArgs {
  std::string out, feynman;
  std::size_t size = 1032;
  long train = -1, validation = -1, test = -1;
  int min_arity = 1, max_arity = 6, max_height = 6, points = 30;
  double low = 1.0, high = 5.0;
};

struct TrainArgs {
  std::string suite, out, log;
  std::size_t max_problems = 0;
  TrainConfig train;
};

struct LibraryArgs {
  int k = 5, budget = 40;
  std::size_t candidate_pool = 1024, saliency_examples = 4;
  double tolerance = 1e-10;
};

struct BuildLibraryArgs {
  std::string suite, checkpoint, problems, split = "test", out, stats;
  int h = 2;
  LibraryArgs library;
};

struct GpArgs {
  int population = 1000, generations = 50, tournament = 7, height_limit = 13, seeds = 1;
  double crossover_prob = 0.8, mutation_prob = 0.2;
  std::string crossover = "one-point";
};

struct RunArgs {
  std::string suite, checkpoint, problems, split = "test", out, library_stats, report, timings = "on";
  std::string variants = "GP";
  std::string hs = "2";
  GpArgs gp;
  LibraryArgs library;
};

struct ReportArgs {
  std::string results, library_stats, format = "text", out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON file of option values (flags take precedence); a manifest also works");
  app->add_option("--seed", c.seed, "Global seed");
  app->add_option("--workers", c.workers, "Worker threads; results do not depend on it");
}

void add_library_options(CLI::App* app, LibraryArgs& l) {
  app->add_option("--k", l.k, "Applications expanded per guided iteration")->check(CLI::PositiveNumber);
  app->add_option("--budget", l.budget, "Guided iterations per library")->check(CLI::NonNegativeNumber);
  app->add_option("--candidate-pool", l.candidate_pool, "Candidates scored per iteration, 0 = all");
  app->add_option("--saliency-examples", l.saliency_examples, "Examples averaged per saliency query, 0 = all");
  app->add_option("--fit-tolerance", l.tolerance, "Exact-fit tolerance that stops library construction");
}

void add_gp_options(CLI::App* app, GpArgs& g) {
  app->add_option("--population", g.population, "Population size")->check(CLI::PositiveNumber);
  app->add_option("--generations", g.generations, "Generations")->check(CLI::NonNegativeNumber);
  app->add_option("--tournament", g.tournament, "Tournament size")->check(CLI::PositiveNumber);
  app->add_option("--crossover-prob", g.crossover_prob, "Crossover probability")->check(CLI::Range(0.0, 1.0));
  app->add_option("--mutation-prob", g.mutation_prob, "Mutation probability")->check(CLI::Range(0.0, 1.0));
  app->add_option("--height-limit", g.height_limit, "Offspring above this height are replaced by their parents");
  app->add_option("--crossover", g.crossover, "one-point or gradmatch-xover")
      ->check(CLI::IsMember({"one-point", "gradmatch-xover"}));
  app->add_option("--seeds", g.seeds, "Independent runs per problem and method")->check(CLI::PositiveNumber);
}

LibraryBuildConfig library_config(const LibraryArgs& l, int h, std::uint64_t seed) {
  LibraryBuildConfig c;
  c.h = h;
  c.k = l.k;
  c.budget = l.budget;
  c.candidate_pool = l.candidate_pool;
  c.saliency_examples = l.saliency_examples;
  c.exact_fit_tolerance = l.tolerance;
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------------------
// Config files and manifests

std::string json_token(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string out;
    for (const auto& e : v) out += (out.empty() ? "" : ",") + json_token(e);
    return out;
  }
  throw DataError("config values must be strings, numbers, booleans or arrays");
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Tokens for the config-file values that the command line does not override.
std::vector<std::string> config_tokens(const CLI::App& sub, const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return {};
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("parameters") && doc.contains("subcommand")) {
    if (doc.at("subcommand") != sub.get_name()) {
      throw DataError("manifest " + path + " belongs to subcommand " + json_token(doc.at("subcommand")));
    }
    doc = doc.at("parameters");
  }
  if (!doc.is_object()) throw DataError("config " + path + " must hold a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : doc.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    if (!sub.get_option_no_throw(flag)) throw DataError("unknown config key '" + key + "' in " + path);
    if (given_on_command_line(args, flag)) continue;
    out.push_back(flag);
    out.push_back(json_token(value));
  }
  return out;
}

json resolved_parameters(const CLI::App& sub) {
  json params = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    params[name] = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
  }
  return params;
}

void write_manifest(const CLI::App& sub, const std::vector<std::string>& outputs, const std::vector<std::string>& inputs) {
  if (outputs.empty()) return;
  json m;
  m["subcommand"] = sub.get_name();
  m["version"] = EVONUDGE_VERSION;
  m["parameters"] = resolved_parameters(sub);
  json in = json::array();
  for (const auto& i : inputs) {
    if (!i.empty()) in.push_back(i);
  }
  m["inputs"] = in;
  m["outputs"] = outputs;
  write_text(outputs.front() + ".manifest.json", m.dump(2) + "\n");
}

// Inputs must exist; outputs must not overwrite an input.
void check_paths(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  for (const auto& in : inputs) {
    if (!in.empty() && !fs::is_regular_file(in)) throw DataError("input file not found: " + in);
  }
  for (const auto& out : outputs) {
    if (out.empty()) continue;
    for (const auto& in : inputs) {
      if (!in.empty() && fs::exists(out) && fs::equivalent(in, out)) {
        throw DataError("output " + out + " would overwrite input " + in);
      }
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<Problem> load_suite(const std::string& path) {
  try {
    return load_problems(path);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

ModelParams load_checkpoint(const std::string& path) {
  try {
    return load_params(path);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Problems named in `ids`, or every problem of `split` ("all" keeps every problem).
std::vector<Problem> select_problems(const std::vector<Problem>& all, const std::string& ids, const std::string& split) {
  std::vector<Problem> out;
  const auto wanted = split_list(ids);
  if (!wanted.empty()) {
    for (const auto& id : wanted) {
      auto it = std::find_if(all.begin(), all.end(), [&](const Problem& p) { return p.id == id; });
      if (it == all.end()) throw DataError("problem '" + id + "' not in the suite");
      out.push_back(*it);
    }
    return out;
  }
  if (split == "all") return all;
  const Split s = split_from_name(split);
  for (const auto& p : all) {
    if (p.split == s) out.push_back(p);
  }
  if (out.empty()) throw DataError("suite has no problems in split '" + split + "'");
  return out;
}

int cmd_gen_suite(const CLI::App& sub, const Common& c, const GenSuiteArgs& a) {
  check_paths({a.feynman}, {a.out});
  std::vector<Problem> problems;
  if (!a.feynman.empty()) {
    const FeynmanSuite f = load_feynman(a.feynman, c.seed, a.points);
    for (const auto& s : f.skipped) std::cerr << "skipped row " << s.row << " (" << s.id << "): " << s.reason << "\n";
    problems = f.problems;
  } else {
    SuiteConfig sc = SuiteConfig::proportional(a.size, c.seed);
    if (a.train >= 0) sc.train = static_cast<std::size_t>(a.train);
    if (a.validation >= 0) sc.validation = static_cast<std::size_t>(a.validation);
    if (a.test >= 0) sc.test = static_cast<std::size_t>(a.test);
    sc.min_arity = a.min_arity;
    sc.max_arity = a.max_arity;
    sc.max_height = a.max_height;
    sc.points = a.points;
    sc.low = a.low;
    sc.high = a.high;
    if (sc.min_arity < 1 || sc.max_arity > kMaxVariables || sc.min_arity > sc.max_arity) {
      throw DataError("arity range must lie within [1, " + std::to_string(kMaxVariables) + "]");
    }
    problems = generate_suite(Dsl::standard(), sc).all();
  }
  save_problems(problems, a.out);
  std::cerr << "wrote " << problems.size() << " problems to " << a.out << "\n";
  write_manifest(sub, {a.out}, {a.feynman});
  return 0;
}

int cmd_train(const CLI::App& sub, const Common& c, TrainArgs a) {
  const std::string log = a.log.empty() ? a.out + ".log.csv" : a.log;
  check_paths({a.suite}, {a.out, log});
  const auto all = load_suite(a.suite);
  std::vector<Problem> tr, val;
  for (const auto& p : all) {
    if (p.split == Split::Train) tr.push_back(p);
    if (p.split == Split::Validation) val.push_back(p);
  }
  if (tr.empty()) throw DataError("suite has no training problems");
  if (a.max_problems > 0 && tr.size() > a.max_problems) tr.resize(a.max_problems);
  a.train.seed = c.seed;
  a.train.workers = c.workers;
  auto progress = [](const EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " train_bce " << e.train_bce << " val_bce " << e.val_bce << "\n";
  };
  const TrainResult r = val.empty() ? train(tr, a.train, progress) : train(tr, val, a.train, progress);
  save_params(r.params, a.out);
  write_text(log, training_log_csv(r.log));
  std::cerr << "best epoch " << r.best_epoch << " of " << r.log.size() << ", " << r.train_steps << " training steps\n";
  write_manifest(sub, {a.out, log}, {a.suite});
  return 0;
}

int cmd_build_library(const CLI::App& sub, const Common& c, const BuildLibraryArgs& a) {
  check_paths({a.suite, a.checkpoint}, {a.out, a.stats});
  const auto problems = select_problems(load_suite(a.suite), a.problems, a.split);
  const ModelParams params = load_checkpoint(a.checkpoint);
  const LibraryBuildConfig lc = library_config(a.library, a.h, mix_seed(c.seed, "library"));
  std::vector<LibraryBuildResult> built(problems.size());
  parallel_for(problems.size(), c.workers, [&](std::size_t i) { built[i] = build_library(problems[i], params, lc); });
  json out = json::object();
  std::vector<LibraryStat> stats;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    out[problems[i].id] = json::parse(library_to_json(built[i].library));
    stats.push_back({problems[i].id, a.h, built[i].library.size(), built[i].guided_iterations,
                     built[i].exact_fit.has_value(), 0.0});
  }
  write_text(a.out, out.dump(1) + "\n");
  std::vector<std::string> outputs = {a.out};
  if (!a.stats.empty()) {
    write_text(a.stats, library_stats_csv(stats));
    outputs.push_back(a.stats);
  }
  write_manifest(sub, outputs, {a.suite, a.checkpoint});
  return 0;
}

int cmd_run(const CLI::App& sub, const Common& c, const RunArgs& a) {
  check_paths({a.suite, a.checkpoint}, {a.out, a.library_stats, a.report});
  if (a.timings != "on" && a.timings != "off") throw UsageError("--timings must be on or off");
  std::vector<int> hs;
  for (const auto& h : split_list(a.hs)) {
    try {
      hs.push_back(std::stoi(h));
    } catch (const std::exception&) {
      throw UsageError("--h expects integers, got '" + h + "'");
    }
    if (hs.back() < 1) throw UsageError("--h values must be >= 1");
  }
  if (hs.empty()) throw UsageError("--h needs at least one value");
  std::vector<MethodSpec> methods;
  bool informed = false;
  for (const auto& label : split_list(a.variants)) {
    for (int h : hs) {
      MethodSpec m;
      try {
        m = method_from_label(label, h);
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
      if (m.kind == MethodKind::GP && h != hs.front()) continue;  // GP ignores h
      informed = informed || m.kind != MethodKind::GP;
      methods.push_back(m);
    }
  }
  if (methods.empty()) throw UsageError("no method selected");
  if (informed && a.checkpoint.empty()) {
    throw DataError("informed methods need a trained model: pass --checkpoint");
  }
  const auto problems = select_problems(load_suite(a.suite), a.problems, a.split);
  ModelParams params;
  if (informed) params = load_checkpoint(a.checkpoint);

  SuiteRunConfig rc;
  rc.gp.population = a.gp.population;
  rc.gp.generations = a.gp.generations;
  rc.gp.tournament = a.gp.tournament;
  rc.gp.crossover_prob = a.gp.crossover_prob;
  rc.gp.mutation_prob = a.gp.mutation_prob;
  rc.gp.height_limit = a.gp.height_limit;
  rc.gp.crossover = a.gp.crossover == "gradmatch-xover" ? CrossoverKind::GradientMatched : CrossoverKind::OnePoint;
  rc.library = library_config(a.library, hs.front(), 0);
  rc.seeds = a.gp.seeds;
  rc.workers = c.workers;
  rc.seed = c.seed;
  SuiteReport report = run_suite(problems, methods, informed ? &params : nullptr, rc);
  if (a.timings == "off") {
    for (auto& r : report.rows) r.time_library_s = r.time_gp_s = 0.0;
    for (auto& l : report.libraries) l.build_s = 0.0;
    summarize(report);
  }
  write_text(a.out, results_csv(report.rows));
  std::vector<std::string> outputs = {a.out};
  if (!a.library_stats.empty()) {
    write_text(a.library_stats, library_stats_csv(report.libraries));
    outputs.push_back(a.library_stats);
  }
  if (!a.report.empty()) {
    write_text(a.report, render_report_text(report));
    outputs.push_back(a.report);
  }
  for (const auto& s : report.summary) {
    std::cerr << s.variant << " h=" << s.h << ": " << s.successes << "/" << s.runs << " successful\n";
  }
  write_manifest(sub, outputs, {a.suite, a.checkpoint});
  return 0;
}

int cmd_report(const CLI::App& sub, const ReportArgs& a) {
  check_paths({a.results, a.library_stats}, {a.out});
  SuiteReport report;
  try {
    report.rows = parse_results_csv(read_text(a.results));
    if (!a.library_stats.empty()) report.libraries = parse_library_stats_csv(read_text(a.library_stats));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  summarize(report);
  const std::string text = a.format == "csv" ? render_report_csv(report) : render_report_text(report);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_text(a.out, text);
    write_manifest(sub, {a.out}, {a.results, a.library_stats});
  }
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Library-guided genetic programming for symbolic regression", "evonudge"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", EVONUDGE_VERSION);
  app.option_defaults()->always_capture_default();

  Common common;
  GenSuiteArgs gen;
  TrainArgs tr;
  BuildLibraryArgs bl;
  RunArgs run_args;
  RunArgs bench_args;
  ReportArgs rep;

  auto* gen_cmd = app.add_subcommand("gen-suite", "Generate a problem suite or load the Feynman equations");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--out", gen.out, "Problems JSON to write")->required();
  gen_cmd->add_option("--size", gen.size, "Problems in total, split 462:60:510 unless overridden");
  gen_cmd->add_option("--train", gen.train, "Training problems, -1 = proportional");
  gen_cmd->add_option("--validation", gen.validation, "Validation problems, -1 = proportional");
  gen_cmd->add_option("--test", gen.test, "Test problems, -1 = proportional");
  gen_cmd->add_option("--min-arity", gen.min_arity, "Smallest number of input variables");
  gen_cmd->add_option("--max-arity", gen.max_arity, "Largest number of input variables");
  gen_cmd->add_option("--max-height", gen.max_height, "Height bound of sampled targets");
  gen_cmd->add_option("--points", gen.points, "Data points per problem")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--low", gen.low, "Lower bound of sampled inputs");
  gen_cmd->add_option("--high", gen.high, "Upper bound of sampled inputs");
  gen_cmd->add_option("--feynman", gen.feynman, "Load this Feynman TSV instead of generating");

  auto* train_cmd = app.add_subcommand("train", "Train the saliency model on a suite's training split");
  add_common(train_cmd, common);
  train_cmd->add_option("--suite", tr.suite, "Problems JSON with train and validation splits")->required();
  train_cmd->add_option("--out", tr.out, "Checkpoint JSON to write")->required();
  train_cmd->add_option("--log", tr.log, "Training log CSV, default <out>.log.csv");
  train_cmd->add_option("--max-problems", tr.max_problems, "Cap on training problems, 0 = all");
  train_cmd->add_option("--lr", tr.train.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-epochs", tr.train.max_epochs, "Epoch limit");
  train_cmd->add_option("--patience", tr.train.patience, "Epochs without improvement before stopping")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--min-improvement", tr.train.min_improvement, "Loss decrease that counts as improvement");
  train_cmd->add_option("--negatives-per-step", tr.train.negatives_per_step, "Negatives expanded per trajectory step");
  train_cmd->add_option("--negative-pool", tr.train.negative_pool, "Negatives stored per trajectory step");
  train_cmd->add_option("--loss-negatives", tr.train.loss_negatives, "Negatives sampled per gradient step");
  train_cmd->add_option("--examples-per-step", tr.train.examples_per_step, "Examples per gradient step, 0 = all");
  train_cmd->add_option("--validation", tr.train.validation, "Held-out problems when the suite has no validation split");
  train_cmd->add_option("--time-limit", tr.train.time_limit_s, "Stop after the epoch exceeding this many seconds, 0 = none");
  train_cmd->add_option("--stop-below", tr.train.stop_below, "Stop once the monitored loss drops below this, 0 = never");

  auto* lib_cmd = app.add_subcommand("build-library", "Build libraries with a trained model");
  add_common(lib_cmd, common);
  lib_cmd->add_option("--suite", bl.suite, "Problems JSON")->required();
  lib_cmd->add_option("--checkpoint", bl.checkpoint, "Trained model")->required();
  lib_cmd->add_option("--problems", bl.problems, "Comma-separated problem ids, default the whole split");
  lib_cmd->add_option("--split", bl.split, "train, validation, test, external or all");
  lib_cmd->add_option("--h", bl.h, "Height bound of library expressions")->check(CLI::PositiveNumber);
  lib_cmd->add_option("--out", bl.out, "JSON object of libraries keyed by problem id")->required();
  lib_cmd->add_option("--stats", bl.stats, "Library statistics CSV");
  add_library_options(lib_cmd, bl.library);

  auto add_run_like = [&](CLI::App* cmd, RunArgs& a, bool bench) {
    add_common(cmd, common);
    cmd->add_option("--suite", a.suite, "Problems JSON")->required();
    cmd->add_option("--checkpoint", a.checkpoint, "Trained model, required by informed methods");
    cmd->add_option("--problems", a.problems, "Comma-separated problem ids, default the whole split");
    cmd->add_option("--split", a.split, "train, validation, test, external or all");
    cmd->add_option(bench ? "--methods" : "--variant", a.variants,
                    "GP, NUDGE, I, M, MM, IM, IMM, EvoNUDGE-<v> or EvoRnd-<v>, comma-separated");
    cmd->add_option("--h", a.hs, "Library height bounds, comma-separated");
    cmd->add_option("--out", a.out, "Results CSV to write")->required();
    cmd->add_option("--library-stats", a.library_stats, "Library statistics CSV");
    cmd->add_option("--report", a.report, "Aligned-text report");
    cmd->add_option("--timings", a.timings, "on, or off to write zero times for byte-identical outputs")
        ->check(CLI::IsMember({"on", "off"}));
    add_gp_options(cmd, a.gp);
    add_library_options(cmd, a.library);
  };
  auto* run_cmd = app.add_subcommand("run", "Run one method on selected problems");
  add_run_like(run_cmd, run_args, false);
  bench_args.variants = "GP,NUDGE,I,M,MM,IM,IMM,EvoRnd-IM";
  bench_args.gp.population = 200;
  bench_args.gp.generations = 30;
  bench_args.gp.seeds = 3;
  auto* bench_cmd = app.add_subcommand("bench", "Compare methods over a suite");
  add_run_like(bench_cmd, bench_args, true);

  auto* report_cmd = app.add_subcommand("report", "Render success-rate, library-size and run-time tables");
  report_cmd->add_option("--config", common.config, "JSON file of option values (flags take precedence)");
  report_cmd->add_option("--results", rep.results, "Results CSV")->required();
  report_cmd->add_option("--library-stats", rep.library_stats, "Library statistics CSV");
  report_cmd->add_option("--format", rep.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  report_cmd->add_option("--out", rep.out, "File to write, default standard output");

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    if (!args.empty()) {
      for (CLI::App* sub : app.get_subcommands({})) {
        if (sub->get_name() == args.front()) {
          auto extra = config_tokens(*sub, args);
          args.insert(args.begin() + 1, extra.begin(), extra.end());
        }
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_suite(*gen_cmd, common, gen);
    if (train_cmd->parsed()) return cmd_train(*train_cmd, common, tr);
    if (lib_cmd->parsed()) return cmd_build_library(*lib_cmd, common, bl);
    if (run_cmd->parsed()) return cmd_run(*run_cmd, common, run_args);
    if (bench_cmd->parsed()) return cmd_run(*bench_cmd, common, bench_args);
    if (report_cmd->parsed()) return cmd_report(*report_cmd, rep);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace evonudge::cli
