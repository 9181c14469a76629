#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "common.hpp"

// Minimal reverse-mode autodiff over dense double matrices. The graph is
// built dynamically per forward pass; backward() walks it in reverse
// topological order. Column vectors (d x 1) carry per-token states, 1x1
// matrices carry scalars such as losses and mask values.
namespace dar::ag {

using Mat = Eigen::MatrixXd;

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Mat value;
  Mat grad;  // same shape as value, lazily allocated
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;  // scatter this->grad into parents

  void ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  }
};

Var constant(Mat v);
Var leaf(Mat v);  // trainable parameter; requires_grad = true

inline double scalar(const Var& v) { return v->value(0, 0); }
Var scalar_const(double x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);      // elementwise, equal shapes
Var scale(const Var& a, double k);
Var add_const(const Var& a, double k);
Var matmul(const Var& a, const Var& b);
Var sigmoid(const Var& a);
Var tanh_(const Var& a);
Var abs_(const Var& a);                    // subgradient 0 at the kink
Var sum(const Var& a);                     // -> 1x1
Var mean(const Var& a);                    // -> 1x1
Var pick(const Var& a, int row, int col);  // -> 1x1
Var softmax_col(const Var& a);             // column vector -> column vector
Var neg_log_clamped(const Var& p, double floor);  // 1x1 prob -> 1x1 loss
Var scalar_mul_vec(const Var& s, const Var& v);   // (1x1) * (d x 1)
Var max_elems(const std::vector<Var>& cols);      // elementwise max of columns
Var concat_rows(const Var& top, const Var& bottom);

// Forward value is `hard`, gradient flows through as identity to `soft`.
Var straight_through(const Var& soft, const Mat& hard);

Var add_all(const std::vector<Var>& terms);  // sum of 1x1 scalars

void backward(const Var& root);  // seeds d(root)/d(root) = 1
void zero_grad(const std::vector<Var>& params);

}  // namespace dar::ag
