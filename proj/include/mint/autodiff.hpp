#pragma once

#include "mint/common.hpp"

#include <functional>
#include <memory>
#include <vector>

// Reverse-mode automatic differentiation over dense Eigen matrices.
// A Tape owns the computation graph for one forward pass; Var is a
// lightweight handle into it. Gradients are accumulated by replaying
// the recorded nodes in reverse order.
namespace mint::ad {

class Tape;

class Var {
 public:
  Var() : tape_(nullptr), id_(-1) {}
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  const Mat& value() const;
  const Mat& grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_;
  int id_;
};

class Tape {
 public:
  // backward receives the node's own accumulated gradient.
  using BackwardFn = std::function<void(Tape&, const Mat&)>;

  struct Node {
    Mat value;
    Mat grad;  // allocated lazily on first accumulation
    BackwardFn backward;
  };

  Var leaf(Mat v) {
    nodes_.push_back(Node{std::move(v), Mat{}, nullptr});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var make(Mat v, BackwardFn bw) {
    nodes_.push_back(Node{std::move(v), Mat{}, std::move(bw)});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  const Mat& grad(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) {
      zero_.setZero(n.value.rows(), n.value.cols());
      return zero_;
    }
    return n.grad;
  }

  void accumulate(int id, const Mat& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Backpropagate from a 1x1 scalar root. Grads from a previous backward
  // pass on this tape are cleared first.
  void backward(const Var& root) {
    if (root.tape() != this) throw MintError("backward: var not on this tape");
    const Node& r = nodes_[static_cast<std::size_t>(root.id())];
    if (r.value.rows() != 1 || r.value.cols() != 1) {
      throw MintError("backward: root must be a 1x1 scalar");
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    accumulate(root.id(), Mat::Ones(1, 1));
    for (int i = root.id(); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  mutable Mat zero_;
};

inline const Mat& Var::value() const { return tape_->value(id_); }
inline const Mat& Var::grad() const { return tape_->grad(id_); }

namespace detail {
inline void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw MintError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()) + ")");
  }
}
inline Tape* tape_of(const Var& a, const Var& b, const char* op) {
  if (a.tape() != b.tape()) throw MintError(std::string(op) + ": vars on different tapes");
  return a.tape();
}
}  // namespace detail

// ---------------------------------------------------------------------------
// arithmetic
// ---------------------------------------------------------------------------

inline Var add(Var a, Var b) {
  detail::check_same_shape(a, b, "add");
  Tape* t = detail::tape_of(a, b, "add");
  return t->make(a.value() + b.value(), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g);
    tp.accumulate(b.id(), g);
  });
}

inline Var sub(Var a, Var b) {
  detail::check_same_shape(a, b, "sub");
  Tape* t = detail::tape_of(a, b, "sub");
  return t->make(a.value() - b.value(), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g);
    tp.accumulate(b.id(), -g);
  });
}

// elementwise product
inline Var cmul(Var a, Var b) {
  detail::check_same_shape(a, b, "cmul");
  Tape* t = detail::tape_of(a, b, "cmul");
  return t->make(a.value().cwiseProduct(b.value()), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g.cwiseProduct(b.value()));
    tp.accumulate(b.id(), g.cwiseProduct(a.value()));
  });
}

// elementwise product with a constant matrix (no gradient into the constant)
inline Var cmul_const(Var a, Mat c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) {
    throw MintError("cmul_const: shape mismatch");
  }
  auto cp = std::make_shared<Mat>(std::move(c));
  return a.tape()->make(a.value().cwiseProduct(*cp), [a, cp](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g.cwiseProduct(*cp));
  });
}

inline Var scale(Var a, double s) {
  return a.tape()->make(a.value() * s, [a, s](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g * s);
  });
}

inline Var neg(Var a) { return scale(a, -1.0); }

inline Var add_const(Var a, double c) {
  return a.tape()->make(a.value().array() + c, [a](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g);
  });
}

inline Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw MintError("matmul: inner dimension mismatch");
  Tape* t = detail::tape_of(a, b, "matmul");
  return t->make(a.value() * b.value(), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g * b.value().transpose());
    tp.accumulate(b.id(), a.value().transpose() * g);
  });
}

// sparse constant matrix times dense var
inline Var spmm(std::shared_ptr<const SpMat> sp, Var x) {
  if (sp->cols() != x.rows()) throw MintError("spmm: inner dimension mismatch");
  return x.tape()->make(*sp * x.value(), [sp, x](Tape& tp, const Mat& g) {
    tp.accumulate(x.id(), sp->transpose() * g);
  });
}

// broadcast a 1xD row vector over the rows of an NxD matrix
inline Var add_rowvec(Var x, Var b) {
  if (b.rows() != 1 || b.cols() != x.cols()) throw MintError("add_rowvec: bad bias shape");
  Tape* t = detail::tape_of(x, b, "add_rowvec");
  Mat out = x.value();
  out.rowwise() += b.value().row(0);
  return t->make(std::move(out), [x, b](Tape& tp, const Mat& g) {
    tp.accumulate(x.id(), g);
    tp.accumulate(b.id(), g.colwise().sum());
  });
}

// ---------------------------------------------------------------------------
// elementwise nonlinearities
// ---------------------------------------------------------------------------

inline Var sigmoid(Var a) {
  Mat s = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  auto sp = std::make_shared<Mat>(std::move(s));
  return a.tape()->make(*sp, [a, sp](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), (g.array() * sp->array() * (1.0 - sp->array())).matrix());
  });
}

inline Var tanh_(Var a) {
  Mat s = a.value().array().tanh().matrix();
  auto sp = std::make_shared<Mat>(std::move(s));
  return a.tape()->make(*sp, [a, sp](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), (g.array() * (1.0 - sp->array().square())).matrix());
  });
}

inline Var relu(Var a) {
  return a.tape()->make(a.value().cwiseMax(0.0), [a](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), (g.array() * (a.value().array() > 0.0).cast<double>()).matrix());
  });
}

inline Var exp_(Var a) {
  Mat e = a.value().array().exp().matrix();
  auto ep = std::make_shared<Mat>(std::move(e));
  return a.tape()->make(*ep, [a, ep](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g.cwiseProduct(*ep));
  });
}

inline Var log_(Var a) {
  return a.tape()->make(a.value().array().log().matrix(), [a](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g.cwiseQuotient(a.value()));
  });
}

inline Var square(Var a) {
  return a.tape()->make(a.value().array().square().matrix(), [a](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), (2.0 * g.array() * a.value().array()).matrix());
  });
}

// log(1 + exp(x)), numerically stable
inline Var softplus(Var a) {
  Mat out = a.value().unaryExpr([](double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
  });
  return a.tape()->make(std::move(out), [a](Tape& tp, const Mat& g) {
    Mat sig = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
    tp.accumulate(a.id(), g.cwiseProduct(sig));
  });
}

// clamp with pass-through gradient strictly inside [lo, hi]
inline Var clamp(Var a, double lo, double hi) {
  return a.tape()->make(a.value().cwiseMax(lo).cwiseMin(hi), [a, lo, hi](Tape& tp, const Mat& g) {
    Mat inside = ((a.value().array() > lo) && (a.value().array() < hi)).cast<double>();
    tp.accumulate(a.id(), g.cwiseProduct(inside));
  });
}

// ---------------------------------------------------------------------------
// reductions and reshaping
// ---------------------------------------------------------------------------

// full reduction to a 1x1 scalar
inline Var sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->make(std::move(out), [a](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), Mat::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

// per-row sum: NxD -> Nx1
inline Var rowsum(Var a) {
  return a.tape()->make(a.value().rowwise().sum(), [a](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g * Mat::Ones(1, a.cols()));
  });
}

// column concatenation
inline Var hcat(Var a, Var b) {
  if (a.rows() != b.rows()) throw MintError("hcat: row count mismatch");
  Tape* t = detail::tape_of(a, b, "hcat");
  Mat out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  return t->make(std::move(out), [a, b](Tape& tp, const Mat& g) {
    tp.accumulate(a.id(), g.leftCols(a.cols()));
    tp.accumulate(b.id(), g.rightCols(b.cols()));
  });
}

inline Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
  if (c0 < 0 || n < 0 || c0 + n > a.cols()) throw MintError("slice_cols: out of range");
  return a.tape()->make(a.value().middleCols(c0, n), [a, c0, n](Tape& tp, const Mat& g) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    full.middleCols(c0, n) = g;
    tp.accumulate(a.id(), full);
  });
}

// row gather: out.row(k) = a.row(idx[k]); duplicate indices accumulate on backward
inline Var rows(Var a, std::vector<int> idx) {
  for (int i : idx) {
    if (i < 0 || i >= a.rows()) throw MintError("rows: index out of range");
  }
  auto ip = std::make_shared<std::vector<int>>(std::move(idx));
  Mat out(static_cast<Eigen::Index>(ip->size()), a.cols());
  for (std::size_t k = 0; k < ip->size(); ++k) out.row(static_cast<Eigen::Index>(k)) = a.value().row((*ip)[k]);
  return a.tape()->make(std::move(out), [a, ip](Tape& tp, const Mat& g) {
    Mat full = Mat::Zero(a.rows(), a.cols());
    for (std::size_t k = 0; k < ip->size(); ++k) {
      full.row((*ip)[k]) += g.row(static_cast<Eigen::Index>(k));
    }
    tp.accumulate(a.id(), full);
  });
}

// stack a list of same-width matrices vertically
inline Var vcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw MintError("vcat: empty list");
  Tape* t = parts[0].tape();
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.cols() != parts[0].cols()) throw MintError("vcat: column mismatch");
    total += p.rows();
  }
  Mat out(total, parts[0].cols());
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  auto ps = std::make_shared<std::vector<Var>>(parts);
  return t->make(std::move(out), [ps](Tape& tp, const Mat& g) {
    Eigen::Index r = 0;
    for (const Var& p : *ps) {
      tp.accumulate(p.id(), g.middleRows(r, p.rows()));
      r += p.rows();
    }
  });
}

// per-row dot product of two NxD matrices -> Nx1
inline Var dot_rows(Var a, Var b) { return rowsum(cmul(a, b)); }

inline Var mean(Var a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.rows() * a.cols()));
}

}  // namespace mint::ad
