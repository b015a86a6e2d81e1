#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace evonudge::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Handle to a recorded value on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode tape over dense row-major matrices. Values are recorded in creation
// order, which is a topological order, so backward() simply walks it in reverse.
class Tape {
 public:
  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  // Zero-shaped if no gradient reached the node.
  const Matrix& grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 and propagates. Throws std::invalid_argument unless `out` is 1x1.
  void backward(Var out);

  // Internal: used by the primitive functions below.
  using Backward = std::function<void(Tape&, const Matrix& upstream, const Matrix& output)>;
  Var record(Matrix value, bool requires_grad, Backward fn);
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  void accumulate(Var v, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
// a (n x c) plus a 1 x c row broadcast over rows.
Var add_row(Tape& t, Var a, Var row);
Var scale(Tape& t, Var a, double s);

Var elu(Tape& t, Var a);
Var sigmoid(Tape& t, Var a);
Var leaky_relu(Tape& t, Var a, double slope);

// h (n x heads*d), att (heads x d) -> (n x heads), out(i,k) = <h(i, k-th block), att(k, :)>.
Var head_dot(Tape& t, Var h, Var att);
// Rows of `a` picked by `index`.
Var gather_rows(Tape& t, Var a, std::span<const int> index);
// out(index[e], :) += a(e, :) over an output with `rows` rows.
Var scatter_add_rows(Tape& t, Var a, std::span<const int> index, int rows);
// Softmax of each column over the entries that share a segment id.
Var segment_softmax(Tape& t, Var a, std::span<const int> segment, int segments);
// alpha (e x heads), m (e x heads*d): block k of row r scaled by alpha(r, k).
Var head_scale(Tape& t, Var alpha, Var m);
Var concat_cols(Tape& t, std::span<const Var> parts);

Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);
// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels; logits is n x 1.
Var bce_with_logits(Tape& t, Var logits, std::span<const double> labels);

// ---------------------------------------------------------------------------

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update in place. Moments are allocated lazily on the first call.
// Throws std::invalid_argument on any shape mismatch.
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state);

}  // namespace evonudge::ad
