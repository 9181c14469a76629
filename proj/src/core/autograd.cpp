#include "autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace dar::ag {

namespace {

Var make(Mat value, std::vector<Var> parents,
         std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  bool rg = false;
  for (const auto& p : n->parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) n->backward_fn = std::move(backward_fn);
  return n;
}

}  // namespace

Var constant(Mat v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return n;
}

Var leaf(Mat v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return n;
}

Var scalar_const(double x) { return constant(Mat::Constant(1, 1, x)); }

Var add(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "add: shape mismatch");
  return make(a->value + b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad;
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "sub: shape mismatch");
  return make(a->value - b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad -= n.grad;
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(),
          "mul: shape mismatch");
  return make(a->value.cwiseProduct(b->value), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad.cwiseProduct(n.parents[1]->value);
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad.cwiseProduct(n.parents[0]->value);
    }
  });
}

Var scale(const Var& a, double k) {
  return make(a->value * k, {a}, [k](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += n.grad * k;
  });
}

Var add_const(const Var& a, double k) {
  return make(a->value.array() + k, {a}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += n.grad;
  });
}

Var matmul(const Var& a, const Var& b) {
  require(a->value.cols() == b->value.rows(), "matmul: inner dim mismatch");
  return make(a->value * b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad * n.parents[1]->value.transpose();
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.parents[0]->value.transpose() * n.grad;
    }
  });
}

Var sigmoid(const Var& a) {
  Mat v = (1.0 / (1.0 + (-a->value.array()).exp())).matrix();
  return make(std::move(v), {a}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

Var tanh_(const Var& a) {
  Mat v = a->value.array().tanh().matrix();
  return make(std::move(v), {a}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * (1.0 - n.value.array().square());
  });
}

Var abs_(const Var& a) {
  return make(a->value.array().abs().matrix(), {a}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * n.parents[0]->value.array().sign();
  });
}

Var sum(const Var& a) {
  return make(Mat::Constant(1, 1, a->value.sum()), {a}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() += n.grad(0, 0);
  });
}

Var mean(const Var& a) {
  double inv = 1.0 / static_cast<double>(a->value.size());
  return make(Mat::Constant(1, 1, a->value.mean()), {a}, [inv](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() += n.grad(0, 0) * inv;
  });
}

Var pick(const Var& a, int row, int col) {
  require(row < a->value.rows() && col < a->value.cols(), "pick: out of range");
  return make(Mat::Constant(1, 1, a->value(row, col)), {a}, [row, col](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad(row, col) += n.grad(0, 0);
  });
}

Var softmax_col(const Var& a) {
  require(a->value.cols() == 1, "softmax_col: expects a column vector");
  Eigen::ArrayXd z = a->value.col(0).array();
  z -= z.maxCoeff();
  Eigen::ArrayXd e = z.exp();
  Mat p = (e / e.sum()).matrix();
  return make(std::move(p), {a}, [](Node& n) {
    n.parents[0]->ensure_grad();
    const auto p = n.value.col(0).array();
    const auto g = n.grad.col(0).array();
    double dot = (p * g).sum();
    n.parents[0]->grad.col(0).array() += p * (g - dot);
  });
}

Var neg_log_clamped(const Var& p, double floor) {
  require(p->value.size() == 1, "neg_log_clamped: scalar expected");
  double v = p->value(0, 0);
  double c = std::max(v, floor);
  return make(Mat::Constant(1, 1, -std::log(c)), {p}, [v, c, floor](Node& n) {
    n.parents[0]->ensure_grad();
    // Gradient is zero once the clamp is active.
    if (v > floor) n.parents[0]->grad(0, 0) += n.grad(0, 0) * (-1.0 / c);
  });
}

Var scalar_mul_vec(const Var& s, const Var& v) {
  require(s->value.size() == 1, "scalar_mul_vec: scalar expected");
  return make(v->value * s->value(0, 0), {s, v}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad(0, 0) +=
          (n.grad.array() * n.parents[1]->value.array()).sum();
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad * n.parents[0]->value(0, 0);
    }
  });
}

Var max_elems(const std::vector<Var>& cols) {
  require(!cols.empty(), "max_elems: empty input");
  const auto rows = cols[0]->value.rows();
  Mat v = cols[0]->value;
  std::vector<int> argmax(static_cast<std::size_t>(rows), 0);
  for (std::size_t k = 1; k < cols.size(); ++k) {
    require(cols[k]->value.rows() == rows && cols[k]->value.cols() == 1,
            "max_elems: shape mismatch");
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (cols[k]->value(r, 0) > v(r, 0)) {
        v(r, 0) = cols[k]->value(r, 0);
        argmax[static_cast<std::size_t>(r)] = static_cast<int>(k);
      }
    }
  }
  std::vector<Var> parents(cols.begin(), cols.end());
  return make(std::move(v), std::move(parents), [argmax](Node& n) {
    for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
      auto& p = n.parents[static_cast<std::size_t>(argmax[static_cast<std::size_t>(r)])];
      if (!p->requires_grad) continue;
      p->ensure_grad();
      p->grad(r, 0) += n.grad(r, 0);
    }
  });
}

Var concat_rows(const Var& top, const Var& bottom) {
  require(top->value.cols() == bottom->value.cols(), "concat_rows: col mismatch");
  Mat v(top->value.rows() + bottom->value.rows(), top->value.cols());
  v << top->value, bottom->value;
  const auto nt = top->value.rows();
  return make(std::move(v), {top, bottom}, [nt](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad.topRows(nt);
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad.bottomRows(n.grad.rows() - nt);
    }
  });
}

Var straight_through(const Var& soft, const Mat& hard) {
  require(soft->value.rows() == hard.rows() && soft->value.cols() == hard.cols(),
          "straight_through: shape mismatch");
  return make(hard, {soft}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += n.grad;
  });
}

Var add_all(const std::vector<Var>& terms) {
  require(!terms.empty(), "add_all: empty input");
  double total = 0.0;
  for (const auto& t : terms) {
    require(t->value.size() == 1, "add_all: scalar terms expected");
    total += t->value(0, 0);
  }
  std::vector<Var> parents(terms.begin(), terms.end());
  return make(Mat::Constant(1, 1, total), std::move(parents), [](Node& n) {
    for (auto& p : n.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      p->grad(0, 0) += n.grad(0, 0);
    }
  });
}

void backward(const Var& root) {
  require(root->value.size() == 1, "backward: root must be scalar");
  // Iterative post-order topological sort; graphs can be deep (long sequences).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
  }
}

void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) p->grad.setZero();
}

}  // namespace dar::ag
