#include <gtest/gtest.h>

#include <cmath>

#include "evonudge/gradmatch.hpp"

using namespace evonudge;

namespace {

ExprTree T(const char* s) { return parse_expr(s); }

std::vector<DataPoint> line_data(int n, double (*f)(double)) {
  std::vector<DataPoint> d;
  for (int i = 0; i < n; ++i) {
    const double x = 1.0 + 4.0 * i / std::max(1, n - 1);
    d.push_back({{x}, f(x)});
  }
  return d;
}

// Independent recursive evaluator that adds `delta` to the output of node `at`.
double eval_offset(const ExprTree& t, std::size_t& pos, std::span<const double> x, std::size_t at, double delta) {
  const std::size_t here = pos++;
  const auto node = t.nodes()[here];
  double v;
  if (node.kind == NodeKind::Variable) {
    v = x[node.code];
  } else if (node.kind == NodeKind::Constant) {
    v = constant_table()[node.code].value;
  } else {
    const Op op = static_cast<Op>(node.code);
    const double a = eval_offset(t, pos, x, at, delta);
    const double b = arity(op) == 2 ? eval_offset(t, pos, x, at, delta) : 0.0;
    v = apply_op(op, a, b);
  }
  return here == at ? v + delta : v;
}

// Brute-force argmax of quality over every donor subtree, ties to smaller size then lower index.
std::size_t brute_force_donor(const ExprTree& parent, std::size_t at, const ExprTree& donor,
                              std::span<const DataPoint> data, double g_scale = 1.0) {
  SubtreeGradient g = subtree_gradient(parent, at, data);
  for (double& v : g.g) v *= g_scale;
  const auto s = evaluate_all(parent.subtree(at), data);
  std::size_t best = 0;
  double best_q = 0;
  for (std::size_t i = 0; i < donor.size(); ++i) {
    const double q = quality(s, evaluate_all(donor.subtree(i), data), g);
    const std::size_t size = donor.subtree(i).size();
    if (i == 0 || q > best_q || (q == best_q && size < donor.subtree(best).size())) {
      best = i;
      best_q = q;
    }
  }
  return best;
}

}  // namespace

TEST(GradMatch, RootGradientPointsTowardsTarget) {
  const std::vector<DataPoint> one = {{{2.0}, 10.0}};
  const auto g = subtree_gradient(T("(sq x1)"), 0, one);
  ASSERT_EQ(g.valid_count(), 1u);
  EXPECT_DOUBLE_EQ(g.g[0], 2.0 * (10.0 - 4.0));
}

TEST(GradMatch, AdditiveAndScaledContexts) {
  const auto data = line_data(7, [](double x) { return std::exp(x / 3); });
  const auto root = subtree_gradient(T("(sin x1)"), 0, data);
  const auto add = subtree_gradient(T("(+ (sin x1) 0)"), 1, data);
  const auto add_c = subtree_gradient(T("(+ (sin x1) 0)"), 3, data);
  const auto tri = subtree_gradient(T("(* 3 (sin x1))"), 2, data);
  for (std::size_t j = 0; j < data.size(); ++j) {
    EXPECT_DOUBLE_EQ(add.g[j], root.g[j]);
    EXPECT_DOUBLE_EQ(add_c.g[j], root.g[j]);
    EXPECT_NEAR(tri.g[j], 3.0 * subtree_gradient(T("(* 3 (sin x1))"), 0, data).g[j], 1e-12);
  }
}

TEST(GradMatch, MatchesFiniteDifferencesOnRandomTrees) {
  Rng rng(17);
  std::vector<DataPoint> data;
  std::uniform_real_distribution<double> u(1, 5);
  for (int i = 0; i < 5; ++i) data.push_back({{u(rng), u(rng)}, u(rng)});
  const double n = static_cast<double>(data.size());
  int checked = 0;
  for (int pair = 0; pair < 1000; ++pair) {
    const ExprTree t = random_tree(Dsl::standard(), 2, 4, GrowMethod::Grow, rng);
    const std::size_t at = std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng);
    const auto g = subtree_gradient(t, at, data);
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (!g.valid[j]) continue;
      auto loss = [&](double delta) {
        std::size_t pos = 0;
        const double f = eval_offset(t, pos, data[j].x, at, delta);
        return (f - data[j].y) * (f - data[j].y) / n;
      };
      const double z = evaluate_nodes(t, data[j].x)[at];
      // Richardson-extrapolated central differences at two step sizes; entries where the two
      // disagree are too curved for the oracle to be trusted and are skipped.
      auto central = [&](double h) { return -(loss(h) - loss(-h)) / (2 * h); };
      auto richardson = [&](double h) { return (4 * central(h / 2) - central(h)) / 3; };
      const double h = 1e-4 * std::max(1.0, std::fabs(z));
      const double a = richardson(h), b = richardson(h / 4);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      if (std::fabs(a - b) > 1e-7 * std::max(1.0, std::fabs(b))) continue;
      EXPECT_NEAR(g.g[j], b, 1e-4 * std::max(1.0, std::fabs(b))) << to_text(t) << " @" << at;
      ++checked;
    }
  }
  EXPECT_GT(checked, 2000);
}

TEST(GradMatch, QualityIsCosine) {
  SubtreeGradient g{{1.0, 2.0, -1.0}, {1, 1, 1}};
  const std::vector<double> s = {0, 0, 0};
  EXPECT_NEAR(quality(s, std::vector<double>{2, 4, -2}, g), 1.0, 1e-12);
  EXPECT_NEAR(quality(s, std::vector<double>{-1, -2, 1}, g), -1.0, 1e-12);
  EXPECT_NEAR(quality(s, std::vector<double>{2, -1, 0}, g), 0.0, 1e-12);
  EXPECT_EQ(quality(s, s, g), kWorstQuality);
  // Invalid examples are ignored.
  g.valid[2] = 0;
  EXPECT_NEAR(quality(s, std::vector<double>{1, 2, 100}, g), 1.0, 1e-12);
}

TEST(GradMatch, QualitySurvivesHugeMagnitudes) {
  SubtreeGradient g{{1e250, 2e250, -1e250}, {1, 1, 1}};
  const std::vector<double> s = {0, 0, 0};
  EXPECT_NEAR(quality(s, std::vector<double>{2e200, 4e200, -2e200}, g), 1.0, 1e-12);
  EXPECT_NEAR(quality(s, std::vector<double>{-1e-200, -2e-200, 1e-200}, g), -1.0, 1e-12);
  SubtreeGradient zero{{0, 0, 0}, {1, 1, 1}};
  EXPECT_EQ(quality(s, std::vector<double>{1, 2, 3}, zero), 0.0);
}

TEST(GradMatch, AlignedCandidateBeatsOpposedOne) {
  SubtreeGradient g{{0.5, -0.25, 1.0}, {1, 1, 1}};
  const std::vector<double> s = {1, 1, 1};
  const std::vector<double> along = {1.5, 0.8, 1.9};
  const std::vector<double> against = {0.5, 1.2, 0.1};
  EXPECT_GT(quality(s, along, g), quality(s, against, g));
}

TEST(GradMatch, PicksResidualCorrectingSubtree) {
  const auto data = line_data(10, [](double x) { return x * x + std::sin(x); });
  const ExprTree p1 = T("(+ (sq x1) 0)");
  const ExprTree p2 = T("(* (cos x1) (+ (sin x1) x1))");
  const DonorChoice d = choose_donor(p1, 3, p2, data);
  EXPECT_EQ(to_text(p2.subtree(d.index)), "(sin x1)");
  EXPECT_NEAR(d.quality, 1.0, 1e-9);
  EXPECT_EQ(d.index, brute_force_donor(p1, 3, p2, data));
  const ExprTree single = T("x1");
  EXPECT_EQ(choose_donor(p1, 3, single, data).index, 0u);
}

TEST(GradMatch, DonorMatchesBruteForceAndIsScaleInvariant) {
  Rng rng(5);
  std::vector<DataPoint> data;
  std::uniform_real_distribution<double> u(1, 5);
  for (int i = 0; i < 8; ++i) {
    const double a = u(rng), b = u(rng);
    data.push_back({{a, b}, a * std::sin(b) + 1.0});
  }
  for (int pair = 0; pair < 100; ++pair) {
    const ExprTree p1 = random_tree(Dsl::standard(), 2, 3, GrowMethod::Grow, rng);
    const ExprTree p2 = random_tree(Dsl::standard(), 2, 3, GrowMethod::Full, rng);
    const std::size_t at = std::uniform_int_distribution<std::size_t>(0, p1.size() - 1)(rng);
    const DonorChoice d = choose_donor(p1, at, p2, data);
    EXPECT_EQ(d.index, brute_force_donor(p1, at, p2, data)) << to_text(p1) << " " << to_text(p2);
    const auto g = subtree_gradient(p1, at, data);
    const auto s = evaluate_all(p1.subtree(at), data);
    // Scaling g keeps the winner up to floating-point ties between parallel displacements.
    const std::size_t scaled = brute_force_donor(p1, at, p2, data, 7.5);
    EXPECT_NEAR(quality(s, evaluate_all(p2.subtree(scaled), data), g), d.quality, 1e-9);
    for (std::size_t i = 0; i < p2.size(); ++i) {
      EXPECT_GE(d.quality, quality(s, evaluate_all(p2.subtree(i), data), g));
    }
  }
}

TEST(GradMatch, CrossoverSplicesDonorSubtree) {
  const auto data = line_data(10, [](double x) { return std::sin(x); });
  Rng rng(3);
  const ExprTree p1 = T("x1");
  const ExprTree p2 = T("(+ (sin x1) (cos x1))");
  // The only node of p1 is the root, whose ideal replacement is sin(x1).
  EXPECT_EQ(to_text(gradient_matched_crossover(p1, p2, data, rng)), "(sin x1)");
}
