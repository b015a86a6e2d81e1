#include "evonudge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace evonudge::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::leaf(Matrix value, bool requires_grad) { return record(std::move(value), requires_grad, nullptr); }

Var Tape::record(Matrix value, bool requires_grad, Backward fn) {
  nodes_.push_back({std::move(value), Matrix(), requires_grad, std::move(fn)});
  return {static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var out) {
  const Matrix& v = value(out);
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("backward needs a scalar output");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(out.id)].grad = Matrix::Ones(1, 1);
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad, n.value);
  }
}

Var matmul(Tape& t, Var a, Var b) {
  require(t.value(a).cols() == t.value(b).rows(), "matmul shape mismatch");
  Matrix out = t.value(a) * t.value(b);
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.record(std::move(out), rg, [a, b](Tape& t, const Matrix& g, const Matrix&) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var add(Tape& t, Var a, Var b) {
  require(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "add shape mismatch");
  Matrix out = t.value(a) + t.value(b);
  return t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var add_row(Tape& t, Var a, Var row) {
  require(t.value(row).rows() == 1 && t.value(row).cols() == t.value(a).cols(), "add_row shape mismatch");
  Matrix out = t.value(a).rowwise() + t.value(row).row(0);
  return t.record(std::move(out), t.requires_grad(a) || t.requires_grad(row), [a, row](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var scale(Tape& t, Var a, double s) {
  Matrix out = t.value(a) * s;
  return t.record(std::move(out), t.requires_grad(a), [a, s](Tape& t, const Matrix& g, const Matrix&) { t.accumulate(a, g * s); });
}

Var elu(Tape& t, Var a) {
  Matrix out = t.value(a).unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
  return t.record(std::move(out), t.requires_grad(a), [a](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& x = t.value(a);
    Matrix d = x.unaryExpr([](double v) { return v > 0 ? 1.0 : std::exp(v); });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var sigmoid(Tape& t, Var a) {
  Matrix out = t.value(a).unaryExpr([](double x) { return stable_sigmoid(x); });
  return t.record(std::move(out), t.requires_grad(a), [a](Tape& t, const Matrix& g, const Matrix& s) {
    t.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var leaky_relu(Tape& t, Var a, double slope) {
  Matrix out = t.value(a).unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return t.record(std::move(out), t.requires_grad(a), [a, slope](Tape& t, const Matrix& g, const Matrix&) {
    Matrix d = t.value(a).unaryExpr([slope](double v) { return v > 0 ? 1.0 : slope; });
    t.accumulate(a, g.cwiseProduct(d));
  });
}

Var head_dot(Tape& t, Var h, Var att) {
  const Matrix& H = t.value(h);
  const Matrix& A = t.value(att);
  const Eigen::Index heads = A.rows(), d = A.cols();
  require(H.cols() == heads * d, "head_dot shape mismatch");
  Matrix out(H.rows(), heads);
  for (Eigen::Index k = 0; k < heads; ++k) {
    out.col(k) = H.middleCols(k * d, d) * A.row(k).transpose();
  }
  return t.record(std::move(out), t.requires_grad(h) || t.requires_grad(att), [h, att](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& H = t.value(h);
    const Matrix& A = t.value(att);
    const Eigen::Index heads = A.rows(), d = A.cols();
    if (t.requires_grad(h)) {
      Matrix gh(H.rows(), H.cols());
      for (Eigen::Index k = 0; k < heads; ++k) gh.middleCols(k * d, d) = g.col(k) * A.row(k);
      t.accumulate(h, gh);
    }
    if (t.requires_grad(att)) {
      Matrix ga(heads, d);
      for (Eigen::Index k = 0; k < heads; ++k) ga.row(k) = g.col(k).transpose() * H.middleCols(k * d, d);
      t.accumulate(att, ga);
    }
  });
}

Var gather_rows(Tape& t, Var a, std::span<const int> index) {
  const Matrix& A = t.value(a);
  Matrix out(static_cast<Eigen::Index>(index.size()), A.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    require(index[e] >= 0 && index[e] < A.rows(), "gather index out of range");
    out.row(static_cast<Eigen::Index>(e)) = A.row(index[e]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return t.record(std::move(out), t.requires_grad(a), [a, idx = std::move(idx)](Tape& t, const Matrix& g, const Matrix&) {
    Matrix ga = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    for (std::size_t e = 0; e < idx.size(); ++e) ga.row(idx[e]) += g.row(static_cast<Eigen::Index>(e));
    t.accumulate(a, ga);
  });
}

Var scatter_add_rows(Tape& t, Var a, std::span<const int> index, int rows) {
  const Matrix& A = t.value(a);
  require(static_cast<std::size_t>(A.rows()) == index.size(), "scatter index length mismatch");
  Matrix out = Matrix::Zero(rows, A.cols());
  for (std::size_t e = 0; e < index.size(); ++e) {
    require(index[e] >= 0 && index[e] < rows, "scatter index out of range");
    out.row(index[e]) += A.row(static_cast<Eigen::Index>(e));
  }
  std::vector<int> idx(index.begin(), index.end());
  return t.record(std::move(out), t.requires_grad(a), [a, idx = std::move(idx)](Tape& t, const Matrix& g, const Matrix&) {
    Matrix ga(static_cast<Eigen::Index>(idx.size()), g.cols());
    for (std::size_t e = 0; e < idx.size(); ++e) ga.row(static_cast<Eigen::Index>(e)) = g.row(idx[e]);
    t.accumulate(a, ga);
  });
}

Var segment_softmax(Tape& t, Var a, std::span<const int> segment, int segments) {
  const Matrix& A = t.value(a);
  require(static_cast<std::size_t>(A.rows()) == segment.size(), "segment length mismatch");
  const Eigen::Index cols = A.cols();
  Matrix top = Matrix::Constant(segments, cols, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < segment.size(); ++e) {
    require(segment[e] >= 0 && segment[e] < segments, "segment id out of range");
    top.row(segment[e]) = top.row(segment[e]).cwiseMax(A.row(static_cast<Eigen::Index>(e)));
  }
  Matrix out(A.rows(), cols);
  Matrix total = Matrix::Zero(segments, cols);
  for (std::size_t e = 0; e < segment.size(); ++e) {
    const auto r = static_cast<Eigen::Index>(e);
    out.row(r) = (A.row(r) - top.row(segment[e])).array().exp().matrix();
    total.row(segment[e]) += out.row(r);
  }
  for (std::size_t e = 0; e < segment.size(); ++e) {
    const auto r = static_cast<Eigen::Index>(e);
    out.row(r) = out.row(r).cwiseQuotient(total.row(segment[e]));
  }
  std::vector<int> seg(segment.begin(), segment.end());
  return t.record(std::move(out), t.requires_grad(a),
                  [a, seg = std::move(seg), segments](Tape& t, const Matrix& g, const Matrix& s) {
                    Matrix dot = Matrix::Zero(segments, s.cols());
                    const Matrix sg = s.cwiseProduct(g);
                    for (std::size_t e = 0; e < seg.size(); ++e) dot.row(seg[e]) += sg.row(static_cast<Eigen::Index>(e));
                    Matrix ga(s.rows(), s.cols());
                    for (std::size_t e = 0; e < seg.size(); ++e) {
                      const auto r = static_cast<Eigen::Index>(e);
                      ga.row(r) = s.row(r).cwiseProduct(g.row(r) - dot.row(seg[e]));
                    }
                    t.accumulate(a, ga);
                  });
}

Var head_scale(Tape& t, Var alpha, Var m) {
  const Matrix& Al = t.value(alpha);
  const Matrix& M = t.value(m);
  const Eigen::Index heads = Al.cols();
  require(Al.rows() == M.rows() && heads > 0 && M.cols() % heads == 0, "head_scale shape mismatch");
  const Eigen::Index d = M.cols() / heads;
  Matrix out(M.rows(), M.cols());
  for (Eigen::Index k = 0; k < heads; ++k) {
    out.middleCols(k * d, d) = M.middleCols(k * d, d).array().colwise() * Al.col(k).array();
  }
  return t.record(std::move(out), t.requires_grad(alpha) || t.requires_grad(m), [alpha, m](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& Al = t.value(alpha);
    const Matrix& M = t.value(m);
    const Eigen::Index heads = Al.cols(), d = M.cols() / heads;
    if (t.requires_grad(m)) {
      Matrix gm(M.rows(), M.cols());
      for (Eigen::Index k = 0; k < heads; ++k) {
        gm.middleCols(k * d, d) = g.middleCols(k * d, d).array().colwise() * Al.col(k).array();
      }
      t.accumulate(m, gm);
    }
    if (t.requires_grad(alpha)) {
      Matrix ga(Al.rows(), heads);
      for (Eigen::Index k = 0; k < heads; ++k) {
        ga.col(k) = g.middleCols(k * d, d).cwiseProduct(M.middleCols(k * d, d)).rowwise().sum();
      }
      t.accumulate(alpha, ga);
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "concat of nothing");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "concat row mismatch");
    cols += t.value(p).cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, t.value(p).cols()) = t.value(p);
    at += t.value(p).cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return t.record(std::move(out), rg, [ps = std::move(ps)](Tape& t, const Matrix& g, const Matrix&) {
    Eigen::Index at = 0;
    for (Var p : ps) {
      const Eigen::Index c = t.value(p).cols();
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(at, c));
      at += c;
    }
  });
}

Var sum(Tape& t, Var a) {
  Matrix out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.record(std::move(out), t.requires_grad(a), [a](Tape& t, const Matrix& g, const Matrix&) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

Var mean(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  require(n > 0, "mean of an empty matrix");
  return scale(t, sum(t, a), 1.0 / n);
}

Var bce_with_logits(Tape& t, Var logits, std::span<const double> labels) {
  const Matrix& z = t.value(logits);
  require(z.cols() == 1 && static_cast<std::size_t>(z.rows()) == labels.size() && !labels.empty(),
          "bce shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double x = z(i, 0);
    // log(1 + e^x) - y*x, evaluated without overflow
    total += std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))) - labels[static_cast<std::size_t>(i)] * x;
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(z.rows());
  std::vector<double> y(labels.begin(), labels.end());
  return t.record(std::move(out), t.requires_grad(logits), [logits, y = std::move(y)](Tape& t, const Matrix& g, const Matrix&) {
    const Matrix& z = t.value(logits);
    Matrix gz(z.rows(), 1);
    const double n = static_cast<double>(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      gz(i, 0) = g(0, 0) * (stable_sigmoid(z(i, 0)) - y[static_cast<std::size_t>(i)]) / n;
    }
    t.accumulate(logits, gz);
  });
}

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state) {
  require(params.size() == grads.size(), "adam: parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  require(state.m.size() == params.size(), "adam: state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i].rows() == grads[i].rows() && params[i].cols() == grads[i].cols() &&
                state.m[i].rows() == params[i].rows() && state.m[i].cols() == params[i].cols(),
            "adam: shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= state.lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + state.eps);
  }
}

}  // namespace evonudge::ad
