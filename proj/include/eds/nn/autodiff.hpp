#pragma once

/// Minimal reverse-mode automatic differentiation over Eigen matrices.
/// A Tape is built per example (dynamic graph), consumed by one backward
/// pass, and discarded. Parameters live outside the tape and accumulate
/// gradients across examples until the optimizer steps.

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eds/util.hpp"

namespace eds::nn {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  Mat opt0, opt1;  // optimizer slots (momentum / adam moments)

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}
};

/// Owns parameters in a deterministic order; the order defines the
/// serialization layout and the optimizer traversal.
class ParamCollection {
 public:
  /// Glorot-uniform initialized parameter: U(-s, s), s = sqrt(6/(fan_in+fan_out)).
  Parameter* add(const std::string& name, int rows, int cols, Rng& rng) {
    Parameter* p = add_zero(name, rows, cols);
    double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-s, s);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) p->value(i, j) = dist(rng);
    return p;
  }

  Parameter* add_zero(const std::string& name, int rows, int cols) {
    if (by_name_.count(name)) throw Error("duplicate parameter name: " + name);
    params_.push_back(std::make_unique<Parameter>(name, rows, cols));
    by_name_[name] = params_.back().get();
    return params_.back().get();
  }

  Parameter* find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : it->second;
  }

  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

  void zero_grads() {
    for (auto& p : params_) p->grad.setZero();
  }

  std::map<std::string, Mat> snapshot() const {
    std::map<std::string, Mat> out;
    for (const auto& p : params_) out[p->name] = p->value;
    return out;
  }

  void restore(const std::map<std::string, Mat>& snap) {
    for (auto& p : params_) {
      auto it = snap.find(p->name);
      if (it == snap.end()) throw Error("snapshot missing parameter: " + p->name);
      p->value = it->second;
    }
  }

  double grad_norm() const {
    double sq = 0;
    for (const auto& p : params_) sq += p->grad.squaredNorm();
    return std::sqrt(sq);
  }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> by_name_;
};

class Tape {
 public:
  using Var = int;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(Mat v) { return push(std::move(v), {}); }

  Var param(Parameter& p) {
    auto it = param_vars_.find(&p);
    if (it != param_vars_.end()) return it->second;
    Parameter* pp = &p;
    Var v = push(p.value, [pp](Tape& t, Var self) { pp->grad += t.grad(self); });
    param_vars_[&p] = v;
    return v;
  }

  Var matmul(Var a, Var b) {
    return push(value(a) * value(b), [a, b](Tape& t, Var self) {
      t.grad(a) += t.grad(self) * t.value(b).transpose();
      t.grad(b) += t.value(a).transpose() * t.grad(self);
    });
  }

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    return push(value(a) + value(b), [a, b](Tape& t, Var self) {
      t.grad(a) += t.grad(self);
      t.grad(b) += t.grad(self);
    });
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    return push(value(a) - value(b), [a, b](Tape& t, Var self) {
      t.grad(a) += t.grad(self);
      t.grad(b) -= t.grad(self);
    });
  }

  Var cmul(Var a, Var b) {
    check_same_shape(a, b, "cmul");
    return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, Var self) {
      t.grad(a) += t.grad(self).cwiseProduct(t.value(b));
      t.grad(b) += t.grad(self).cwiseProduct(t.value(a));
    });
  }

  Var scale(Var a, double s) {
    return push(value(a) * s, [a, s](Tape& t, Var self) { t.grad(a) += t.grad(self) * s; });
  }

  Var sigmoid(Var a) {
    Mat y = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return push(std::move(y), [a](Tape& t, Var self) {
      const Mat& y = t.value(self);
      t.grad(a) += t.grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    });
  }

  Var tanh(Var a) {
    Mat y = value(a).array().tanh().matrix();
    return push(std::move(y), [a](Tape& t, Var self) {
      const Mat& y = t.value(self);
      t.grad(a) += t.grad(self).cwiseProduct((1.0 - y.array().square()).matrix());
    });
  }

  Var relu(Var a) {
    Mat y = value(a).cwiseMax(0.0);
    return push(std::move(y), [a](Tape& t, Var self) {
      const Mat& x = t.value(a);
      t.grad(a) += t.grad(self)
                       .cwiseProduct(x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    });
  }

  /// Vertical concatenation of column blocks with equal column counts.
  Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw Error("concat: no inputs");
    int cols = static_cast<int>(value(parts[0]).cols());
    int rows = 0;
    for (Var p : parts) rows += static_cast<int>(value(p).rows());
    Mat y(rows, cols);
    int at = 0;
    for (Var p : parts) {
      y.middleRows(at, value(p).rows()) = value(p);
      at += static_cast<int>(value(p).rows());
    }
    std::vector<Var> ps = parts;
    return push(std::move(y), [ps](Tape& t, Var self) {
      int at = 0;
      for (Var p : ps) {
        int n = static_cast<int>(t.value(p).rows());
        t.grad(p) += t.grad(self).middleRows(at, n);
        at += n;
      }
    });
  }

  Var rows(Var a, int start, int n) {
    return push(value(a).middleRows(start, n), [a, start, n](Tape& t, Var self) {
      t.grad(a).middleRows(start, n) += t.grad(self);
    });
  }

  Var cols(Var a, int start, int n) {
    return push(value(a).middleCols(start, n), [a, start, n](Tape& t, Var self) {
      t.grad(a).middleCols(start, n) += t.grad(self);
    });
  }

  /// Multiply a matrix by a 1x1 variable.
  Var scale_by(Var a, Var s) {
    return push(value(a) * value(s)(0, 0), [a, s](Tape& t, Var self) {
      t.grad(a) += t.grad(self) * t.value(s)(0, 0);
      t.grad(s)(0, 0) += t.grad(self).cwiseProduct(t.value(a)).sum();
    });
  }

  /// Softmax over a column vector.
  Var softmax_col(Var a) {
    const Mat& x = value(a);
    if (x.cols() != 1) throw Error("softmax_col expects a column");
    double m = x.maxCoeff();
    Mat e = (x.array() - m).exp().matrix();
    Mat y = e / e.sum();
    return push(std::move(y), [a](Tape& t, Var self) {
      const Mat& y = t.value(self);
      const Mat& g = t.grad(self);
      double dot = y.cwiseProduct(g).sum();
      t.grad(a) += y.cwiseProduct((g.array() - dot).matrix());
    });
  }

  Var pick(Var a, int r, int c = 0) {
    Mat y(1, 1);
    y(0, 0) = value(a)(r, c);
    return push(std::move(y),
                [a, r, c](Tape& t, Var self) { t.grad(a)(r, c) += t.grad(self)(0, 0); });
  }

  Var sum_all(Var a) {
    Mat y(1, 1);
    y(0, 0) = value(a).sum();
    return push(std::move(y), [a](Tape& t, Var self) {
      t.grad(a).array() += t.grad(self)(0, 0);
    });
  }

  /// Sum of same-shape terms.
  Var sum(const std::vector<Var>& xs) {
    if (xs.empty()) throw Error("sum: no inputs");
    Var acc = xs[0];
    for (size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
    return acc;
  }

  Var affine(Var w, Var x, Var b) { return add(matmul(w, x), b); }

  /// -log softmax(logits)[index] for a column of logits; numerically stable.
  Var neg_log_softmax_pick(Var logits, int index) {
    const Mat& x = value(logits);
    if (x.cols() != 1) throw Error("neg_log_softmax_pick expects a column");
    double m = x.maxCoeff();
    double lse = m + std::log((x.array() - m).exp().sum());
    Mat soft = (x.array() - lse).exp().matrix();
    Mat y(1, 1);
    y(0, 0) = lse - x(index, 0);
    return push(std::move(y), [logits, index, soft](Tape& t, Var self) {
      double g = t.grad(self)(0, 0);
      Mat delta = soft * g;
      delta(index, 0) -= g;
      t.grad(logits) += delta;
    });
  }

  const Mat& value(Var v) const { return nodes_[v].value; }
  double scalar(Var v) const { return nodes_[v].value(0, 0); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to all reachable leaves;
  /// parameter gradients are accumulated into their owning Parameter.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw Error("backward expects a scalar loss");
    for (auto& n : nodes_) {
      n.grad.setZero(n.value.rows(), n.value.cols());
    }
    nodes_[loss].grad(0, 0) = 1.0;
    for (int v = static_cast<int>(nodes_.size()) - 1; v >= 0; --v)
      if (nodes_[v].backward) nodes_[v].backward(*this, v);
  }

  Mat& grad(Var v) { return nodes_[v].grad; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, Var)> backward;
  };

  Var push(Mat value, std::function<void(Tape&, Var)> backward) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(backward)});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw Error(std::string(op) + ": shape mismatch");
  }

  std::vector<Node> nodes_;
  std::map<Parameter*, Var> param_vars_;
};

using Var = Tape::Var;

inline Mat softmax(const Mat& x) {
  double m = x.maxCoeff();
  Mat e = (x.array() - m).exp().matrix();
  return e / e.sum();
}

// ---------------------------------------------------------------------------
// Optimizers (SGD family)
// ---------------------------------------------------------------------------

struct OptimizerConfig {
  std::string kind = "adam";  // sgd | momentum | adam
  double lr = 0.002;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip = 5.0;  // global gradient norm clip; <= 0 disables
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.kind != "sgd" && cfg_.kind != "momentum" && cfg_.kind != "adam")
      throw Error("unknown optimizer: " + cfg_.kind);
  }

  void step(ParamCollection& params) {
    ++t_;
    double norm = params.grad_norm();
    double scale = 1.0;
    if (cfg_.clip > 0 && norm > cfg_.clip) scale = cfg_.clip / norm;
    for (const auto& up : params.all()) {
      Parameter& p = *up;
      Mat g = p.grad * scale;
      if (cfg_.kind == "sgd") {
        p.value -= cfg_.lr * g;
      } else if (cfg_.kind == "momentum") {
        if (p.opt0.size() == 0) p.opt0 = Mat::Zero(g.rows(), g.cols());
        p.opt0 = cfg_.momentum * p.opt0 + g;
        p.value -= cfg_.lr * p.opt0;
      } else {
        if (p.opt0.size() == 0) {
          p.opt0 = Mat::Zero(g.rows(), g.cols());
          p.opt1 = Mat::Zero(g.rows(), g.cols());
        }
        p.opt0 = cfg_.adam_beta1 * p.opt0 + (1.0 - cfg_.adam_beta1) * g;
        p.opt1 = cfg_.adam_beta2 * p.opt1.array().matrix() +
                 (1.0 - cfg_.adam_beta2) * g.array().square().matrix();
        double c1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
        double c2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
        Mat mhat = p.opt0 / c1;
        Mat vhat = p.opt1 / c2;
        p.value -=
            (cfg_.lr * mhat.array() / (vhat.array().sqrt() + cfg_.adam_eps)).matrix();
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  long t_ = 0;
};

}  // namespace eds::nn
