#include "evonudge/gnn.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "evonudge/random.hpp"

namespace evonudge {

using ad::Matrix;

std::uint32_t value_bits(double v) noexcept {
  if (is_undefined(v)) return 0xFFFFFFFFu;
  return std::bit_cast<std::uint32_t>(static_cast<float>(v));
}

void encode_bits(float v, std::span<double> out) {
  if (out.size() != kBitDim) throw std::invalid_argument("bit segment must have 32 entries");
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < kBitDim; ++i) out[static_cast<std::size_t>(i)] = (bits >> (31 - i)) & 1u;
}

float decode_bits(std::span<const double> bits) {
  if (bits.size() != kBitDim) throw std::invalid_argument("bit segment must have 32 entries");
  std::uint32_t v = 0;
  for (int i = 0; i < kBitDim; ++i) v = (v << 1) | (bits[static_cast<std::size_t>(i)] != 0.0 ? 1u : 0u);
  return std::bit_cast<float>(v);
}

namespace {

enum TypeSlot { kTypeVariable = 0, kTypeValue = 1, kTypeOperation = 2, kTypeApplication = 3 };

void put_bits(Matrix& f, int row, int offset, std::uint32_t bits) {
  for (int i = 0; i < kBitDim; ++i) f(row, offset + i) = (bits >> (31 - i)) & 1u;
}

void put_value(Matrix& f, int row, double v, double y) {
  put_bits(f, row, kTypeDim + kNumOps, value_bits(v));
  put_bits(f, row, kTypeDim + kNumOps + kBitDim, value_bits(v - y));
}

}  // namespace

GraphInput featurize(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                     const DataPoint& example) {
  if (static_cast<int>(example.x.size()) < graph.arity()) throw std::invalid_argument("example arity mismatch");
  const auto nodes = graph.nodes();
  const int n = static_cast<int>(nodes.size());
  const int rows = n + 2 * static_cast<int>(candidates.size());
  const double y = example.y;
  const auto values = graph.instantiate(example.x);

  GraphInput in;
  in.features = Matrix::Zero(rows, kFeatureDim);
  Matrix& f = in.features;
  for (int i = 0; i < n; ++i) {
    const GraphNode& node = nodes[static_cast<std::size_t>(i)];
    switch (node.kind) {
      case GraphNodeKind::Variable: f(i, kTypeVariable) = 1; break;
      case GraphNodeKind::Constant:
      case GraphNodeKind::Value: f(i, kTypeValue) = 1; break;
      case GraphNodeKind::Operation:
        f(i, kTypeOperation) = 1;
        f(i, kTypeDim + node.payload) = 1;
        break;
      case GraphNodeKind::Application: f(i, kTypeApplication) = 1; break;
    }
    if (node.slot >= 0) put_value(f, i, values[static_cast<std::size_t>(node.slot)], y);
  }

  std::vector<std::pair<int, int>> edges;  // (dst, src)
  edges.reserve(2 * graph.edges().size() + static_cast<std::size_t>(rows) + 6 * candidates.size());
  for (const auto& [a, b] : graph.edges()) {
    edges.emplace_back(b, a);
    edges.emplace_back(a, b);
  }
  in.readout.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& cand = candidates[c];
    const int app = n + 2 * static_cast<int>(c);
    const int val = app + 1;
    f(app, kTypeApplication) = 1;
    f(val, kTypeValue) = 1;
    const double a = values[static_cast<std::size_t>(graph.node(cand.args[0]).slot)];
    const double b = arity(cand.op) > 1 ? values[static_cast<std::size_t>(graph.node(cand.args[1]).slot)] : 0.0;
    put_value(f, val, apply_op(cand.op, a, b), y);
    edges.emplace_back(app, graph.operation_node(cand.op));
    for (int k = 0; k < arity(cand.op); ++k) edges.emplace_back(app, cand.args[static_cast<std::size_t>(k)]);
    edges.emplace_back(app, val);
    edges.emplace_back(val, app);
    in.readout.push_back(app);
  }
  for (int i = 0; i < rows; ++i) edges.emplace_back(i, i);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  in.src.reserve(edges.size());
  in.dst.reserve(edges.size());
  for (const auto& [d, s] : edges) {
    in.dst.push_back(d);
    in.src.push_back(s);
  }
  return in;
}

// ---------------------------------------------------------------------------

namespace {

Matrix glorot(int rows, int cols, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

ModelParams ModelParams::initialize(std::uint64_t seed) {
  Rng rng(mix_seed(seed, "gat-init"));
  ModelParams p;
  p.input_weight = glorot(kFeatureDim, kHidden, kFeatureDim, kHidden, rng);
  p.input_bias = Matrix::Zero(1, kHidden);
  for (auto& layer : p.gat) {
    layer.weight = glorot(kHidden, kHidden, kHidden, kHidden, rng);
    layer.att_src = glorot(kHeads, kHeadDim, kHeadDim, 1, rng);
    layer.att_dst = glorot(kHeads, kHeadDim, kHeadDim, 1, rng);
    layer.bias = Matrix::Zero(1, kHidden);
  }
  p.output_weight = glorot(kHidden, 1, kHidden, 1, rng);
  p.output_bias = Matrix::Zero(1, 1);
  return p;
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::named() {
  std::vector<std::pair<std::string, Matrix*>> out = {{"input.weight", &input_weight}, {"input.bias", &input_bias}};
  for (int l = 0; l < kGatLayers; ++l) {
    auto& g = gat[static_cast<std::size_t>(l)];
    const std::string p = "gat" + std::to_string(l) + ".";
    out.emplace_back(p + "weight", &g.weight);
    out.emplace_back(p + "att_src", &g.att_src);
    out.emplace_back(p + "att_dst", &g.att_dst);
    out.emplace_back(p + "bias", &g.bias);
  }
  out.emplace_back("output.weight", &output_weight);
  out.emplace_back("output.bias", &output_bias);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named() const {
  auto mut = const_cast<ModelParams*>(this)->named();
  return {mut.begin(), mut.end()};
}

bool ModelParams::operator==(const ModelParams& other) const {
  const auto a = named();
  const auto b = other.named();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Matrix& x = *a[i].second;
    const Matrix& y = *b[i].second;
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (!std::equal(x.data(), x.data() + x.size(), y.data())) return false;
  }
  return true;
}

namespace {

nlohmann::json arch_json() {
  return {{"input_dim", kFeatureDim}, {"hidden", kHidden},         {"heads", kHeads},
          {"head_dim", kHeadDim},     {"gat_layers", kGatLayers}, {"leaky_slope", kLeakySlope}};
}

std::pair<int, int> expected_shape(const std::string& name) {
  if (name == "input.weight") return {kFeatureDim, kHidden};
  if (name == "input.bias") return {1, kHidden};
  if (name == "output.weight") return {kHidden, 1};
  if (name == "output.bias") return {1, 1};
  if (name.ends_with(".weight")) return {kHidden, kHidden};
  if (name.ends_with(".bias")) return {1, kHidden};
  return {kHeads, kHeadDim};
}

}  // namespace

std::string params_to_json(const ModelParams& params) {
  if (params.empty()) throw std::invalid_argument("cannot serialize empty parameters");
  nlohmann::json tensors = nlohmann::json::object();
  for (const auto& [name, m] : params.named()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m->cols(); ++c) row.push_back((*m)(r, c));
      rows.push_back(std::move(row));
    }
    tensors[name] = std::move(rows);
  }
  return nlohmann::json{{"arch", arch_json()}, {"tensors", std::move(tensors)}}.dump();
}

ModelParams params_from_json(std::string_view json) {
  try {
    const auto doc = nlohmann::json::parse(json);
    if (doc.at("arch") != arch_json()) throw std::runtime_error("checkpoint architecture does not match this build");
    const auto& tensors = doc.at("tensors");
    ModelParams p;
    for (auto& [name, m] : p.named()) {
      if (!tensors.contains(name)) throw std::runtime_error("checkpoint lacks tensor " + name);
      const auto& rows = tensors.at(name);
      const auto [er, ec] = expected_shape(name);
      if (static_cast<int>(rows.size()) != er) throw std::runtime_error("bad shape for tensor " + name);
      m->resize(er, ec);
      for (int r = 0; r < er; ++r) {
        const auto& row = rows.at(static_cast<std::size_t>(r));
        if (static_cast<int>(row.size()) != ec) throw std::runtime_error("bad shape for tensor " + name);
        for (int c = 0; c < ec; ++c) {
          const double v = row.at(static_cast<std::size_t>(c)).get<double>();
          if (!std::isfinite(v)) throw std::runtime_error("non-finite entry in tensor " + name);
          (*m)(r, c) = v;
        }
      }
    }
    if (tensors.size() != p.named().size()) throw std::runtime_error("checkpoint has unexpected tensors");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid checkpoint JSON: ") + e.what());
  }
}

void save_params(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << params_to_json(params) << '\n';
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

// ---------------------------------------------------------------------------

ParamVars record_params(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  ParamVars pv;
  for (const auto& [name, m] : params.named()) pv.vars.push_back(tape.leaf(*m, requires_grad));
  return pv;
}

ad::Var forward_logits(ad::Tape& t, const ParamVars& p, const GraphInput& in) {
  if (in.features.cols() != kFeatureDim) throw std::invalid_argument("feature width must be 79");
  if (p.vars.size() != 4 + 4 * kGatLayers) throw std::invalid_argument("parameter count mismatch");
  const int n = in.rows();
  ad::Var h = ad::add_row(t, ad::matmul(t, t.constant(in.features), p.vars[0]), p.vars[1]);
  for (int l = 0; l < kGatLayers; ++l) {
    const auto* v = &p.vars[static_cast<std::size_t>(2 + 4 * l)];
    const ad::Var wh = ad::matmul(t, h, v[0]);
    const ad::Var es = ad::head_dot(t, wh, v[1]);
    const ad::Var ed = ad::head_dot(t, wh, v[2]);
    const ad::Var e = ad::leaky_relu(t, ad::add(t, ad::gather_rows(t, ed, in.dst), ad::gather_rows(t, es, in.src)),
                                     kLeakySlope);
    const ad::Var alpha = ad::segment_softmax(t, e, in.dst, n);
    const ad::Var msg = ad::head_scale(t, alpha, ad::gather_rows(t, wh, in.src));
    h = ad::elu(t, ad::add_row(t, ad::scatter_add_rows(t, msg, in.dst, n), v[3]));
  }
  const ad::Var r = ad::gather_rows(t, h, in.readout);
  return ad::add_row(t, ad::matmul(t, r, p.vars[p.vars.size() - 2]), p.vars.back());
}

namespace {

double clamp_open(double s) {
  return std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> forward(const ModelParams& params, const GraphInput& in) {
  auto out = forward_logits(params, in);
  for (auto& v : out) v = clamp_open(sigmoid(v));
  return out;
}

namespace {

double elu(double x) { return x > 0 ? x : std::expm1(x); }

struct LayerState {
  Matrix wh, es, ed;
};

// One GAT layer over an explicit edge list. Leaves Wh and the per-head source and
// destination scores in `st` and returns the next hidden state.
Matrix gat_layer(const GatLayer& layer, const Matrix& h, std::span<const int> src, std::span<const int> dst,
                 LayerState& st) {
  const auto n = h.rows();
  const std::size_t ne = src.size();
  st.wh.noalias() = h * layer.weight;
  st.es.resize(n, kHeads);
  st.ed.resize(n, kHeads);
  for (int k = 0; k < kHeads; ++k) {
    st.es.col(k) = st.wh.middleCols(k * kHeadDim, kHeadDim) * layer.att_src.row(k).transpose();
    st.ed.col(k) = st.wh.middleCols(k * kHeadDim, kHeadDim) * layer.att_dst.row(k).transpose();
  }
  Matrix score(static_cast<Eigen::Index>(ne), kHeads);
  Matrix top = Matrix::Constant(n, kHeads, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < ne; ++e) {
    for (int k = 0; k < kHeads; ++k) {
      double s = st.ed(dst[e], k) + st.es(src[e], k);
      s = s > 0 ? s : kLeakySlope * s;
      score(static_cast<Eigen::Index>(e), k) = s;
      top(dst[e], k) = std::max(top(dst[e], k), s);
    }
  }
  Matrix total = Matrix::Zero(n, kHeads);
  for (std::size_t e = 0; e < ne; ++e) {
    for (int k = 0; k < kHeads; ++k) {
      double& s = score(static_cast<Eigen::Index>(e), k);
      s = std::exp(s - top(dst[e], k));
      total(dst[e], k) += s;
    }
  }
  Matrix agg = Matrix::Zero(n, kHidden);
  for (std::size_t e = 0; e < ne; ++e) {
    const int d = dst[e], s = src[e];
    for (int k = 0; k < kHeads; ++k) {
      const double a = score(static_cast<Eigen::Index>(e), k) / total(d, k);
      agg.row(d).segment(k * kHeadDim, kHeadDim) += a * st.wh.row(s).segment(k * kHeadDim, kHeadDim);
    }
  }
  return (agg.rowwise() + layer.bias.row(0)).unaryExpr(&elu);
}

}  // namespace

std::vector<double> forward_logits(const ModelParams& params, const GraphInput& in) {
  if (params.empty()) throw std::invalid_argument("model parameters are empty");
  if (in.features.cols() != kFeatureDim) throw std::invalid_argument("feature width must be 79");
  Matrix h = (in.features * params.input_weight).rowwise() + params.input_bias.row(0);
  LayerState st;
  for (const auto& layer : params.gat) h = gat_layer(layer, h, in.src, in.dst, st);
  std::vector<double> out;
  out.reserve(in.readout.size());
  for (int r : in.readout) {
    out.push_back(h.row(r).dot(params.output_weight.col(0)) + params.output_bias(0, 0));
  }
  return out;
}

namespace {

// Logits for every candidate against one example. Tentative nodes only receive
// messages, so the graph rows are computed once and the candidates' application
// and value rows go through the layers as two batched blocks. Equal to
// forward_logits(featurize(...)) up to summation order.
std::vector<double> candidate_logits(const ModelParams& params, const SearchGraph& graph,
                                     std::span<const ApplicationCandidate> candidates, const DataPoint& example) {
  const GraphInput base = featurize(graph, {}, example);
  const auto c = static_cast<Eigen::Index>(candidates.size());
  const auto values = graph.instantiate(example.x);

  Matrix fv = Matrix::Zero(c, kFeatureDim);
  for (Eigen::Index i = 0; i < c; ++i) {
    const auto& cand = candidates[static_cast<std::size_t>(i)];
    const double a = values[static_cast<std::size_t>(graph.node(cand.args[0]).slot)];
    const double b = arity(cand.op) > 1 ? values[static_cast<std::size_t>(graph.node(cand.args[1]).slot)] : 0.0;
    fv(i, kTypeValue) = 1;
    put_value(fv, static_cast<int>(i), apply_op(cand.op, a, b), example.y);
  }
  // Fixed in-neighbourhood of each application row: op node and distinct args.
  std::vector<std::array<int, 3>> nb(static_cast<std::size_t>(c));
  std::vector<int> nb_count(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < nb.size(); ++i) {
    const auto& cand = candidates[i];
    int m = 0;
    nb[i][m++] = graph.operation_node(cand.op);
    for (int k = 0; k < arity(cand.op); ++k) {
      const int a = cand.args[static_cast<std::size_t>(k)];
      if (std::find(nb[i].begin(), nb[i].begin() + m, a) == nb[i].begin() + m) nb[i][m++] = a;
    }
    nb_count[i] = m;
  }

  Matrix hg = (base.features * params.input_weight).rowwise() + params.input_bias.row(0);
  Matrix ha = Matrix::Zero(c, kHidden);
  ha.rowwise() = params.input_weight.row(kTypeApplication) + params.input_bias.row(0);
  Matrix hv = (fv * params.input_weight).rowwise() + params.input_bias.row(0);

  LayerState st;
  Matrix wa, wv, esa(c, kHeads), eda(c, kHeads), esv(c, kHeads), edv(c, kHeads);
  Matrix na(c, kHidden), nv(c, kHidden);
  auto leaky = [](double s) { return s > 0 ? s : kLeakySlope * s; };
  for (const auto& layer : params.gat) {
    Matrix hg_next = gat_layer(layer, hg, base.src, base.dst, st);
    wa.noalias() = ha * layer.weight;
    wv.noalias() = hv * layer.weight;
    for (int k = 0; k < kHeads; ++k) {
      esa.col(k) = wa.middleCols(k * kHeadDim, kHeadDim) * layer.att_src.row(k).transpose();
      eda.col(k) = wa.middleCols(k * kHeadDim, kHeadDim) * layer.att_dst.row(k).transpose();
      esv.col(k) = wv.middleCols(k * kHeadDim, kHeadDim) * layer.att_src.row(k).transpose();
      edv.col(k) = wv.middleCols(k * kHeadDim, kHeadDim) * layer.att_dst.row(k).transpose();
    }
    for (Eigen::Index i = 0; i < c; ++i) {
      const auto& ids = nb[static_cast<std::size_t>(i)];
      const int m = nb_count[static_cast<std::size_t>(i)];
      for (int k = 0; k < kHeads; ++k) {
        const auto seg = [k](auto row) { return row.segment(k * kHeadDim, kHeadDim); };
        // application row: self, value row, graph neighbours
        double s[5];
        s[0] = leaky(eda(i, k) + esa(i, k));
        s[1] = leaky(eda(i, k) + esv(i, k));
        for (int j = 0; j < m; ++j) s[2 + j] = leaky(eda(i, k) + st.es(ids[static_cast<std::size_t>(j)], k));
        const double top = *std::max_element(s, s + 2 + m);
        double total = 0;
        for (int j = 0; j < 2 + m; ++j) total += (s[j] = std::exp(s[j] - top));
        auto out = seg(na.row(i));
        out = (s[0] / total) * seg(wa.row(i)) + (s[1] / total) * seg(wv.row(i));
        for (int j = 0; j < m; ++j) out += (s[2 + j] / total) * seg(st.wh.row(ids[static_cast<std::size_t>(j)]));
        // value row: self and its application
        const double v0 = leaky(edv(i, k) + esv(i, k));
        const double v1 = leaky(edv(i, k) + esa(i, k));
        const double vt = std::max(v0, v1);
        const double e0 = std::exp(v0 - vt), e1 = std::exp(v1 - vt);
        seg(nv.row(i)) = (e0 / (e0 + e1)) * seg(wv.row(i)) + (e1 / (e0 + e1)) * seg(wa.row(i));
      }
    }
    ha = (na.rowwise() + layer.bias.row(0)).unaryExpr(&elu);
    hv = (nv.rowwise() + layer.bias.row(0)).unaryExpr(&elu);
    hg = std::move(hg_next);
  }
  Eigen::VectorXd logits = (ha * params.output_weight.col(0)).array() + params.output_bias(0, 0);
  return {logits.data(), logits.data() + logits.size()};
}

}  // namespace

std::vector<double> saliency(const ModelParams& params, const SearchGraph& graph,
                             std::span<const ApplicationCandidate> candidates, std::span<const DataPoint> dataset) {
  if (params.empty()) throw std::invalid_argument("model parameters are empty");
  if (dataset.empty()) throw std::invalid_argument("saliency needs at least one example");
  std::vector<double> mean(candidates.size(), 0.0);
  if (candidates.empty()) return mean;
  for (const auto& example : dataset) {
    const auto s = candidate_logits(params, graph, candidates, example);
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += clamp_open(sigmoid(s[i]));
  }
  for (auto& m : mean) m = clamp_open(m / static_cast<double>(dataset.size()));
  return mean;
}

GnnScorer::GnnScorer(const ModelParams& params) : params_(params) {
  if (params.empty()) throw std::invalid_argument("saliency model has no parameters");
}

std::vector<double> GnnScorer::score(const SearchGraph& graph, std::span<const ApplicationCandidate> candidates,
                                     std::span<const DataPoint> dataset) const {
  return saliency(params_, graph, candidates, dataset);
}

LibraryBuildResult build_library(const Problem& problem, const ModelParams& params, const LibraryBuildConfig& config,
                                 const Dsl& dsl) {
  const GnnScorer scorer(params);
  return build_library(problem, scorer, config, dsl);
}

}  // namespace evonudge
