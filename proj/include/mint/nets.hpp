#pragma once

#include "mint/autodiff.hpp"
#include "mint/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace mint {

// Named parameter arrays plus per-parameter Adam state.
class ParamStore {
 public:
  Mat& create(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto [it, inserted] = values_.emplace(name, Mat::Zero(rows, cols));
    if (!inserted) throw MintError("parameter already exists: " + name);
    return it->second;
  }

  Mat& at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw MintError("unknown parameter: " + name);
    return it->second;
  }
  const Mat& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw MintError("unknown parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return values_.count(name) != 0; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  std::map<std::string, Mat>& values() { return values_; }
  const std::map<std::string, Mat>& values() const { return values_; }

 private:
  std::map<std::string, Mat> values_;  // ordered, for deterministic iteration
};

// Binds parameters to tape leaves for the duration of one forward pass and
// collects their gradients after backward.
class ForwardCtx {
 public:
  explicit ForwardCtx(ParamStore* params) : params_(params) {}

  ad::Tape& tape() { return tape_; }

  // Parameter leaf; bound once per forward pass.
  ad::Var P(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    ad::Var v = tape_.leaf(params_->at(name));
    bound_.emplace(name, v);
    return v;
  }

  ad::Var constant(Mat m) { return tape_.leaf(std::move(m)); }

  // After tape().backward(root): gradient per bound parameter.
  std::map<std::string, Mat> param_grads() const {
    std::map<std::string, Mat> out;
    for (const auto& [name, var] : bound_) out.emplace(name, var.grad());
    return out;
  }

  const std::map<std::string, ad::Var>& bound() const { return bound_; }

 private:
  ParamStore* params_;
  ad::Tape tape_;
  std::map<std::string, ad::Var> bound_;
};

inline void xavier_init(Mat& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
  }
}

inline void normal_init(Mat& w, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.normal(0.0, stddev);
  }
}

// y = x W + b, with b broadcast over rows.
struct Linear {
  std::string prefix;
  int in = 0, out = 0;

  Linear() = default;
  Linear(std::string prefix_, int in_, int out_) : prefix(std::move(prefix_)), in(in_), out(out_) {}

  void init(ParamStore& ps, Rng& rng) const {
    xavier_init(ps.create(prefix + ".w", in, out), rng);
    ps.create(prefix + ".b", 1, out);
  }

  ad::Var apply(ForwardCtx& ctx, ad::Var x) const {
    return ad::add_rowvec(ad::matmul(x, ctx.P(prefix + ".w")), ctx.P(prefix + ".b"));
  }
};

// Gated recurrent cell over row-batched states.
//   r = sigmoid(x W_xr + h W_hr + b_r)
//   u = sigmoid(x W_xu + h W_hu + b_u)
//   n = tanh(x W_xn + b_xn + r .* (h W_hn + b_hn))
//   h' = (1 - u) .* n + u .* h
struct GruCell {
  std::string prefix;
  int in = 0, hidden = 0;

  GruCell() = default;
  GruCell(std::string prefix_, int in_, int hidden_)
      : prefix(std::move(prefix_)), in(in_), hidden(hidden_) {}

  void init(ParamStore& ps, Rng& rng) const {
    for (const char* g : {"xr", "xu", "xn"}) {
      xavier_init(ps.create(prefix + ".w_" + g, in, hidden), rng);
    }
    for (const char* g : {"hr", "hu", "hn"}) {
      xavier_init(ps.create(prefix + ".w_" + g, hidden, hidden), rng);
    }
    for (const char* g : {"r", "u", "xn", "hn"}) {
      ps.create(prefix + ".b_" + std::string(g), 1, hidden);
    }
  }

  ad::Var step(ForwardCtx& ctx, ad::Var x, ad::Var h) const {
    using namespace ad;
    Var r = sigmoid(add_rowvec(add(matmul(x, ctx.P(prefix + ".w_xr")), matmul(h, ctx.P(prefix + ".w_hr"))),
                               ctx.P(prefix + ".b_r")));
    Var u = sigmoid(add_rowvec(add(matmul(x, ctx.P(prefix + ".w_xu")), matmul(h, ctx.P(prefix + ".w_hu"))),
                               ctx.P(prefix + ".b_u")));
    Var hn = add_rowvec(matmul(h, ctx.P(prefix + ".w_hn")), ctx.P(prefix + ".b_hn"));
    Var n = tanh_(add(add_rowvec(matmul(x, ctx.P(prefix + ".w_xn")), ctx.P(prefix + ".b_xn")),
                      cmul(r, hn)));
    // h' = n + u .* (h - n)
    return add(n, cmul(u, sub(h, n)));
  }
};

// Adam with global-norm gradient clipping.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double clip_norm, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), clip_(clip_norm), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& params, const std::map<std::string, Mat>& grads) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    const double factor = (clip_ > 0.0 && norm > clip_) ? clip_ / norm : 1.0;
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (const auto& [name, g_raw] : grads) {
      Mat g = g_raw * factor;
      auto [mit, minserted] = m_.emplace(name, Mat::Zero(g.rows(), g.cols()));
      auto [vit, vinserted] = v_.emplace(name, Mat::Zero(g.rows(), g.cols()));
      Mat& m = mit->second;
      Mat& v = vit->second;
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
      Mat mhat = m / bc1;
      Mat vhat = v / bc2;
      params.at(name) -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
    }
  }

  int iterations() const { return t_; }

 private:
  double lr_, clip_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, Mat> m_, v_;
};

}  // namespace mint
