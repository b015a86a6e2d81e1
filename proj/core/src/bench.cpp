#include "evonudge/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "evonudge/parallel.hpp"
#include "evonudge/random.hpp"

namespace evonudge {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  for (;;) {
    const std::size_t next = s.find(sep, at);
    out.push_back(s.substr(at, next == std::string_view::npos ? std::string_view::npos : next - at));
    if (next == std::string_view::npos) return out;
    at = next + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool is_constant(std::span<const DataPoint> data) {
  for (const auto& p : data) {
    if (std::fabs(p.y - data.front().y) > 1e-12 * std::max(1.0, std::fabs(data.front().y))) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

SuiteConfig SuiteConfig::proportional(std::size_t total, std::uint64_t seed) {
  SuiteConfig c;
  c.seed = seed;
  c.validation = static_cast<std::size_t>(std::llround(static_cast<double>(total) * 60.0 / 1032.0));
  c.test = static_cast<std::size_t>(std::llround(static_cast<double>(total) * 510.0 / 1032.0));
  c.train = total - c.validation - c.test;
  return c;
}

std::vector<Problem> Suite::all() const {
  std::vector<Problem> out = train;
  out.insert(out.end(), validation.begin(), validation.end());
  out.insert(out.end(), test.begin(), test.end());
  return out;
}

std::optional<std::vector<DataPoint>> sample_dataset(const ExprTree& target,
                                                     std::span<const std::pair<double, double>> ranges, int count,
                                                     Rng& rng) {
  std::vector<DataPoint> out(static_cast<std::size_t>(count));
  for (auto& p : out) {
    p.x.resize(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      p.x[i] = std::uniform_real_distribution<double>(ranges[i].first, ranges[i].second)(rng);
    }
    const auto y = evaluate(target, p.x);
    if (!y) return std::nullopt;
    p.y = *y;
  }
  return out;
}

Suite generate_suite(const Dsl& dsl, const SuiteConfig& config) {
  if (config.min_arity < 1 || config.max_arity > dsl.max_variables() || config.min_arity > config.max_arity) {
    throw std::invalid_argument("suite arity range is invalid");
  }
  if (config.max_height < 1) throw std::invalid_argument("suite height bound must be >= 1");
  if (config.points < 1) throw std::invalid_argument("suite needs at least one point per problem");
  const std::size_t total = config.train + config.validation + config.test;
  Rng rng(mix_seed(config.seed, "suite"));
  std::uniform_int_distribution<int> pick_arity(config.min_arity, config.max_arity);
  std::uniform_int_distribution<int> pick_height(1, config.max_height);
  std::unordered_set<Fingerprint, FingerprintHash> seen;
  std::vector<Problem> problems;
  problems.reserve(total);
  const std::size_t max_attempts = 10000 + 2000 * total;
  for (std::size_t attempt = 0; problems.size() < total; ++attempt) {
    if (attempt >= max_attempts) throw std::runtime_error("could not generate enough distinct problems");
    const int arity = pick_arity(rng);
    ExprTree t = random_tree(dsl, arity, pick_height(rng), GrowMethod::Grow, rng);
    if (t.height() == 0 || t.max_variable_index() < 0) continue;
    Fingerprint fp = fingerprint_of(t, arity);
    if (fp.undefined_mask != 0) continue;
    if (std::all_of(fp.quantized.begin(), fp.quantized.end(), [&](auto q) { return q == fp.quantized[0]; })) continue;
    if (seen.contains(fp)) continue;
    const std::vector<std::pair<double, double>> ranges(static_cast<std::size_t>(arity), {config.low, config.high});
    auto data = sample_dataset(t, ranges, config.points, rng);
    if (!data || is_constant(*data)) continue;
    auto test = sample_dataset(t, ranges, config.points, rng);
    if (!test) continue;
    seen.insert(std::move(fp));
    Problem p;
    char id[32];
    std::snprintf(id, sizeof id, "g%05zu", problems.size() + 1);
    p.id = id;
    p.arity = arity;
    p.target = std::move(t);
    p.dataset = std::move(*data);
    p.test = std::move(*test);
    problems.push_back(std::move(p));
  }

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  Suite suite;
  for (std::size_t i = 0; i < total; ++i) {
    Problem& p = problems[order[i]];
    if (i < config.train) {
      p.split = Split::Train;
    } else if (i < config.train + config.validation) {
      p.split = Split::Validation;
    } else {
      p.split = Split::Test;
    }
  }
  for (auto& p : problems) {
    auto& dst = p.split == Split::Train ? suite.train : p.split == Split::Validation ? suite.validation : suite.test;
    dst.push_back(std::move(p));
  }
  return suite;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json points_json(std::span<const DataPoint> points) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : points) out.push_back({p.x, p.y});
  return out;
}

std::vector<DataPoint> points_from(const nlohmann::json& j, int arity) {
  std::vector<DataPoint> out;
  for (const auto& item : j) {
    DataPoint p{item.at(0).get<std::vector<double>>(), item.at(1).get<double>()};
    if (static_cast<int>(p.x.size()) != arity) throw std::runtime_error("data point arity mismatch");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::string problems_to_json(std::span<const Problem> problems) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : problems) {
    nlohmann::json j = {{"id", p.id}, {"split", split_name(p.split)}, {"arity", p.arity}};
    j["target"] = p.target ? nlohmann::json(to_text(*p.target)) : nlohmann::json(nullptr);
    j["dataset"] = points_json(p.dataset);
    j["test"] = points_json(p.test);
    out.push_back(std::move(j));
  }
  return out.dump();
}

std::vector<Problem> problems_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    if (!doc.is_array()) throw std::runtime_error("problem file must hold a JSON array");
    std::vector<Problem> out;
    std::size_t index = 0;
    for (const auto& j : doc) {
      ++index;
      Problem p;
      p.id = j.contains("id") ? j.at("id").get<std::string>() : "problem" + std::to_string(index);
      p.arity = j.at("arity").get<int>();
      if (p.arity < 1 || p.arity > kMaxVariables) throw std::runtime_error("problem arity out of range: " + p.id);
      if (j.contains("split")) p.split = split_from_name(j.at("split").get<std::string>());
      if (j.contains("target") && !j.at("target").is_null()) {
        p.target = parse_expr(j.at("target").get<std::string>());
        if (p.target->max_variable_index() >= p.arity) throw std::runtime_error("target exceeds arity: " + p.id);
      }
      p.dataset = points_from(j.at("dataset"), p.arity);
      if (p.dataset.empty()) throw std::runtime_error("problem without data points: " + p.id);
      if (j.contains("test")) p.test = points_from(j.at("test"), p.arity);
      out.push_back(std::move(p));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid problem JSON: ") + e.what());
  }
}

void save_problems(std::span<const Problem> problems, const std::string& path) {
  write_file(path, problems_to_json(problems) + "\n");
}

std::vector<Problem> load_problems(const std::string& path) { return problems_from_json(read_file(path)); }

// ---------------------------------------------------------------------------

FeynmanSuite load_feynman(const std::string& path, std::uint64_t seed, int points) {
  return parse_feynman(read_file(path), seed, points);
}

FeynmanSuite parse_feynman(std::string_view text, std::uint64_t seed, int points) {
  FeynmanSuite out;
  const auto lines = split(text, '\n');
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string_view line = trim(lines[ln]);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t row = ln + 1;
    const auto cols = split(line, '\t');
    const std::string id = cols.empty() ? std::string() : std::string(trim(cols[0]));
    auto skip = [&](std::string reason) { out.skipped.push_back({row, id, std::move(reason)}); };
    if (cols.size() != 4) {
      skip("malformed row: expected 4 tab-separated columns");
      continue;
    }
    const std::string formula(trim(cols[1]));

    // Operator names follow an opening parenthesis.
    std::string foreign;
    for (std::size_t i = 0; i < formula.size() && foreign.empty(); ++i) {
      if (formula[i] != '(') continue;
      std::size_t a = i + 1;
      while (a < formula.size() && std::isspace(static_cast<unsigned char>(formula[a]))) ++a;
      std::size_t b = a;
      while (b < formula.size() && !std::isspace(static_cast<unsigned char>(formula[b])) && formula[b] != '(' &&
             formula[b] != ')') {
        ++b;
      }
      const std::string_view name(formula.data() + a, b - a);
      if (!name.empty() && !op_from_symbol(name)) foreign = name;
    }
    if (!foreign.empty()) {
      skip("operator '" + foreign + "' outside the DSL");
      continue;
    }
    int arity = 0;
    if (!parse_number(cols[2], arity) || arity < 1 || arity > kMaxVariables) {
      skip("malformed row: bad arity");
      continue;
    }
    std::vector<std::pair<double, double>> ranges;
    bool ranges_ok = true;
    for (const auto r : split(trim(cols[3]), ',')) {
      const auto lohi = split(r, ':');
      double lo = 0, hi = 0;
      if (lohi.size() != 2 || !parse_number(lohi[0], lo) || !parse_number(lohi[1], hi) || !(lo < hi)) {
        ranges_ok = false;
        break;
      }
      ranges.emplace_back(lo, hi);
    }
    if (!ranges_ok || static_cast<int>(ranges.size()) != arity) {
      skip("malformed row: bad sampling ranges");
      continue;
    }
    ExprTree target;
    try {
      target = parse_expr(formula);
    } catch (const ParseError& e) {
      skip(std::string("malformed formula: ") + e.what());
      continue;
    }
    if (target.max_variable_index() >= arity) {
      skip("malformed row: formula uses more variables than its arity");
      continue;
    }
    Rng rng(mix_seed(seed, id));
    std::optional<std::vector<DataPoint>> data, test;
    for (int attempt = 0; attempt < 20 && !(data && test); ++attempt) {
      data = sample_dataset(target, ranges, points, rng);
      test = sample_dataset(target, ranges, points, rng);
    }
    if (!data || !test) {
      skip("formula undefined on sampled points");
      continue;
    }
    Problem p;
    p.id = id;
    p.arity = arity;
    p.target = std::move(target);
    p.dataset = std::move(*data);
    p.test = std::move(*test);
    p.split = Split::External;
    out.problems.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> evo_rnd_assignment(std::span<const int> arities, Rng& rng) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < arities.size(); ++i) groups[arities[i]].push_back(i);
  std::vector<std::size_t> out(arities.size());
  for (auto& [arity, members] : groups) {
    std::vector<std::size_t> shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) out[members[i]] = shuffled[i];
  }
  return out;
}

std::vector<Library> evo_rnd_permute(std::span<const Library> libraries, std::span<const int> arities, Rng& rng) {
  if (libraries.size() != arities.size()) throw std::invalid_argument("one library per problem expected");
  const auto assign = evo_rnd_assignment(arities, rng);
  std::vector<Library> out;
  out.reserve(libraries.size());
  for (std::size_t i = 0; i < libraries.size(); ++i) out.push_back(libraries[assign[i]]);
  return out;
}

// ---------------------------------------------------------------------------

std::string MethodSpec::label() const {
  switch (kind) {
    case MethodKind::GP: return "GP";
    case MethodKind::NUDGE: return "NUDGE";
    case MethodKind::EvoNUDGE: return "EvoNUDGE-" + std::string(variant_name(variant));
    case MethodKind::EvoRnd: return "EvoRnd-" + std::string(variant_name(variant));
  }
  return "GP";
}

MethodSpec method_from_label(std::string_view label, int h) {
  MethodSpec m;
  m.h = h;
  if (label == "GP") return m;
  if (label == "NUDGE") {
    m.kind = MethodKind::NUDGE;
    return m;
  }
  auto variant_of = [&](std::string_view v) {
    const Variant var = variant_from_name(v);
    if (!needs_library(var)) throw std::invalid_argument("method '" + std::string(label) + "' needs an informed variant");
    return var;
  };
  if (label.starts_with("EvoNUDGE-")) {
    m.kind = MethodKind::EvoNUDGE;
    m.variant = variant_of(label.substr(9));
  } else if (label.starts_with("EvoRnd-")) {
    m.kind = MethodKind::EvoRnd;
    m.variant = variant_of(label.substr(7));
  } else {
    m.kind = MethodKind::EvoNUDGE;
    m.variant = variant_of(label);
  }
  return m;
}

namespace {

bool uses_library(const MethodSpec& m) { return m.kind != MethodKind::GP; }

class NoScorer : public CandidateScorer {
 public:
  std::vector<double> score(const SearchGraph&, std::span<const ApplicationCandidate>,
                            std::span<const DataPoint>) const override {
    throw std::logic_error("no scorer");
  }
};

}  // namespace

SuiteReport run_suite(std::span<const Problem> problems, std::span<const MethodSpec> methods, const ModelParams* params,
                      const SuiteRunConfig& config) {
  const bool informed = std::any_of(methods.begin(), methods.end(), uses_library);
  if (informed && (!params || params->empty())) {
    throw std::invalid_argument("informed methods need a trained checkpoint");
  }
  if (!informed) return run_suite(problems, methods, static_cast<const CandidateScorer*>(nullptr), config);
  const GnnScorer scorer(*params);
  return run_suite(problems, methods, &scorer, config);
}

SuiteReport run_suite(std::span<const Problem> problems, std::span<const MethodSpec> methods,
                      const CandidateScorer* scorer, const SuiteRunConfig& config) {
  config.gp.validate();
  if (config.seeds < 1) throw std::invalid_argument("at least one seed per problem is required");
  std::vector<int> hs;
  for (const auto& m : methods) {
    if (m.kind != MethodKind::GP && m.kind != MethodKind::NUDGE && !needs_library(m.variant)) {
      throw std::invalid_argument("method " + m.label() + " needs an informed variant");
    }
    if (uses_library(m) && std::find(hs.begin(), hs.end(), m.h) == hs.end()) hs.push_back(m.h);
  }
  if (!hs.empty() && !scorer) throw std::invalid_argument("informed methods need a trained checkpoint");
  const NoScorer none;
  const CandidateScorer& sc = scorer ? *scorer : none;

  SuiteReport report;
  // Libraries, one per (h, problem).
  std::map<int, std::vector<LibraryBuildResult>> libs;
  std::map<int, std::vector<double>> lib_time;
  for (int h : hs) {
    auto& built = libs[h];
    auto& times = lib_time[h];
    built.resize(problems.size());
    times.resize(problems.size());
    parallel_for(problems.size(), config.workers, [&](std::size_t i) {
      LibraryBuildConfig lc = config.library;
      lc.h = h;
      lc.seed = mix_seed(config.seed, "library");
      const auto t0 = std::chrono::steady_clock::now();
      built[i] = build_library(problems[i], sc, lc);
      times[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    for (std::size_t i = 0; i < problems.size(); ++i) {
      report.libraries.push_back({problems[i].id, h, built[i].library.size(), built[i].guided_iterations,
                                  built[i].exact_fit.has_value(), times[i]});
    }
  }
  std::vector<int> arities;
  for (const auto& p : problems) arities.push_back(p.arity);
  std::map<int, std::vector<std::size_t>> rnd;
  for (int h : hs) {
    Rng rng(mix_seed(config.seed, "evornd:h" + std::to_string(h)));
    rnd[h] = evo_rnd_assignment(arities, rng);
  }

  struct Job {
    std::size_t method, problem;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    for (std::size_t p = 0; p < problems.size(); ++p) {
      const int seeds = methods[m].kind == MethodKind::NUDGE ? 1 : config.seeds;
      for (int s = 0; s < seeds; ++s) jobs.push_back({m, p, s});
    }
  }
  report.rows.resize(jobs.size());
  parallel_for(jobs.size(), config.workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    const MethodSpec& method = methods[job.method];
    const Problem& problem = problems[job.problem];
    ResultRow& row = report.rows[j];
    row.problem_id = problem.id;
    row.variant = method.label();
    row.h = method.h;
    row.seed = mix_seed(config.seed, problem.id + "|" + row.variant + "|" + std::to_string(job.seed_index));

    if (method.kind == MethodKind::NUDGE) {
      const auto& lib = libs.at(method.h)[job.problem].library;
      const auto test = problem.test_or_train();
      for (const auto& e : lib.entries()) row.best_mse = std::min(row.best_mse, mse(e.expr, test));
      row.success = row.best_mse < config.gp.success_threshold;
      row.gen_of_success = row.success ? 0 : -1;
      row.time_library_s = lib_time.at(method.h)[job.problem];
      return;
    }
    GpConfig gp = config.gp;
    gp.seed = row.seed;
    gp.h = method.h;
    gp.variant = method.kind == MethodKind::GP ? Variant::GP : method.variant;
    gp.workers = 1;
    const Library* lib = nullptr;
    if (method.kind == MethodKind::EvoNUDGE) {
      lib = &libs.at(method.h)[job.problem].library;
      row.time_library_s = lib_time.at(method.h)[job.problem];
    } else if (method.kind == MethodKind::EvoRnd) {
      const std::size_t donor = rnd.at(method.h)[job.problem];
      lib = &libs.at(method.h)[donor].library;
      row.time_library_s = lib_time.at(method.h)[donor];
    }
    const RunResult r = run(gp, problem, lib);
    row.success = r.success;
    row.best_mse = r.best_test_mse;
    row.gen_of_success = r.gen_of_success;
    row.time_gp_s = r.time_gp_s;
  });
  summarize(report);
  return report;
}

void summarize(SuiteReport& report) {
  report.summary.clear();
  for (const auto& row : report.rows) {
    auto it = std::find_if(report.summary.begin(), report.summary.end(),
                           [&](const SummaryRow& s) { return s.variant == row.variant && s.h == row.h; });
    if (it == report.summary.end()) {
      report.summary.push_back({row.variant, row.h});
      it = report.summary.end() - 1;
    }
    ++it->runs;
    if (row.success) ++it->successes;
    it->mean_library_s += row.time_library_s;
    it->mean_gp_s += row.time_gp_s;
  }
  for (auto& s : report.summary) {
    s.success_rate = 100.0 * static_cast<double>(s.successes) / static_cast<double>(s.runs);
    s.mean_library_s /= static_cast<double>(s.runs);
    s.mean_gp_s /= static_cast<double>(s.runs);
  }
  report.library_summary.clear();
  std::map<int, std::vector<std::size_t>> sizes;
  for (const auto& l : report.libraries) sizes[l.h].push_back(l.size);
  for (const auto& [h, v] : sizes) {
    LibrarySummary s;
    s.h = h;
    s.count = v.size();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (auto x : v) var += (static_cast<double>(x) - s.mean) * (static_cast<double>(x) - s.mean);
    s.stddev = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    report.library_summary.push_back(s);
  }
}

// ---------------------------------------------------------------------------

std::string results_csv(std::span<const ResultRow> rows) {
  std::string out = "problem_id,variant,h,seed,success,best_mse,gen_of_success,time_library_s,time_gp_s\n";
  for (const auto& r : rows) {
    out += r.problem_id + ',' + r.variant + ',' + std::to_string(r.h) + ',' + std::to_string(r.seed) + ',' +
           (r.success ? "1" : "0") + ',' + fmt_double(r.best_mse) + ',' + std::to_string(r.gen_of_success) + ',' +
           fmt_double(r.time_library_s) + ',' + fmt_double(r.time_gp_s) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view csv) {
  std::vector<ResultRow> out;
  const auto lines = split(csv, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto c = split(line, ',');
    ResultRow r;
    int success = 0;
    if (c.size() != 9 || !parse_number(c[2], r.h) || !parse_number(c[3], r.seed) || !parse_number(c[4], success) ||
        !parse_number(c[5], r.best_mse) || !parse_number(c[6], r.gen_of_success) ||
        !parse_number(c[7], r.time_library_s) || !parse_number(c[8], r.time_gp_s)) {
      throw std::runtime_error("malformed results row " + std::to_string(i + 1));
    }
    r.problem_id = std::string(c[0]);
    r.variant = std::string(c[1]);
    r.success = success != 0;
    out.push_back(std::move(r));
  }
  return out;
}

std::string library_stats_csv(std::span<const LibraryStat> stats) {
  std::string out = "problem_id,h,size,guided_iterations,exact_fit,build_s\n";
  for (const auto& s : stats) {
    out += s.problem_id + ',' + std::to_string(s.h) + ',' + std::to_string(s.size) + ',' +
           std::to_string(s.guided_iterations) + ',' + (s.exact_fit ? "1" : "0") + ',' + fmt_double(s.build_s) + '\n';
  }
  return out;
}

std::vector<LibraryStat> parse_library_stats_csv(std::string_view csv) {
  std::vector<LibraryStat> out;
  const auto lines = split(csv, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto c = split(line, ',');
    LibraryStat s;
    int fit = 0;
    if (c.size() != 6 || !parse_number(c[1], s.h) || !parse_number(c[2], s.size) ||
        !parse_number(c[3], s.guided_iterations) || !parse_number(c[4], fit) || !parse_number(c[5], s.build_s)) {
      throw std::runtime_error("malformed library stats row " + std::to_string(i + 1));
    }
    s.problem_id = std::string(c[0]);
    s.exact_fit = fit != 0;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << r[c];
      } else {
        out << "  " << std::right << std::setw(static_cast<int>(width[c])) << r[c];
      }
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::vector<std::vector<std::string>> success_rows(const SuiteReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.summary) {
    rows.push_back({s.variant, std::to_string(s.h), std::to_string(s.runs), std::to_string(s.successes),
                    fixed(s.success_rate, 2)});
  }
  return rows;
}

std::vector<std::vector<std::string>> library_rows(const SuiteReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.library_summary) {
    rows.push_back({std::to_string(s.h), std::to_string(s.count), fixed(s.mean, 2), fixed(s.stddev, 2),
                    std::to_string(s.min), std::to_string(s.max)});
  }
  return rows;
}

std::vector<std::vector<std::string>> time_rows(const SuiteReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.summary) {
    rows.push_back({s.variant, std::to_string(s.h), fixed(s.mean_library_s, 3), fixed(s.mean_gp_s, 3)});
  }
  return rows;
}

const std::vector<std::string> kSuccessHeader = {"method", "h", "runs", "successes", "success_rate"};
const std::vector<std::string> kLibraryHeader = {"h", "libraries", "mean", "std", "min", "max"};
const std::vector<std::string> kTimeHeader = {"method", "h", "library_s", "gp_s"};

std::string csv_block(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

}  // namespace

std::string render_report_text(const SuiteReport& report) {
  std::string out = "Success rates (%)\n" + table(kSuccessHeader, success_rows(report));
  if (!report.library_summary.empty()) out += "\nLibrary sizes\n" + table(kLibraryHeader, library_rows(report));
  out += "\nMean run times (s)\n" + table(kTimeHeader, time_rows(report));
  return out;
}

std::string render_report_csv(const SuiteReport& report) {
  std::string out = "# success\n" + csv_block(kSuccessHeader, success_rows(report));
  out += "# library_sizes\n" + csv_block(kLibraryHeader, library_rows(report));
  out += "# run_times\n" + csv_block(kTimeHeader, time_rows(report));
  return out;
}

}  // namespace evonudge
