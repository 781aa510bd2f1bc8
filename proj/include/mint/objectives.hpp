#pragma once

#include "mint/autodiff.hpp"
#include "mint/common.hpp"

#include <vector>

namespace mint {

struct LossWeights {
  double alpha = 0.01;   // L_dis
  double gamma = 0.1;    // L_smo
  double lambda = 1.0;   // L_bpr
  double beta = 0.001;   // L_reg + L_cons

  void validate() const {
    if (alpha < 0 || gamma < 0 || lambda < 0 || beta < 0) {
      throw ConfigError("loss weights must be non-negative");
    }
  }
};

// One BPR triplet. View indices address rows of e_p / e_q; patient ids and
// interaction steps feed the VAE-side losses and the pair constraint.
struct Triplet {
  int a_view = 0;
  int pos_view = 0;
  int neg_view = 0;
  int seeker = 0;
  int pos = 0;
  int neg = 0;
  int t_seek = 1;  // 1-based step of the positive interaction (seeker timeline)
  int t_help = 1;  // helper step after the fallback rule
};
using TripletBatch = std::vector<Triplet>;

enum class ConsMode { kHinge, kRaw };

struct LossComponents {
  double dis = 0.0;
  double smo = 0.0;
  double bpr = 0.0;
  double reg = 0.0;
  double cons = 0.0;
};

inline double total_objective(const LossComponents& c, const LossWeights& w) {
  w.validate();
  return w.alpha * c.dis + w.gamma * c.smo + w.lambda * c.bpr + w.beta * (c.reg + c.cons);
}

namespace losses {

// sum_{t>=2} mask_t ||z_t - z_{t-1}||^2, averaged over the batch rows.
// z: T vars of shape N x D; step_masks: T constant N x 1 masks.
ad::Var smoothness(const std::vector<ad::Var>& z, const std::vector<Mat>& step_masks);

// -mean ln sigmoid(r_pos - r_neg) over the batch, scores by row dot product.
ad::Var bpr(ad::Var e_p, ad::Var e_q, const TripletBatch& batch);

// sum_{t>=2} mask_t sum_i ReLU[(s_t - s_{t-1}) ([z_{t-1}]_i - [z_t]_i)],
// averaged over batch rows. coeff[t] must hold (s_t - s_{t-1}) * mask_t
// tiled to N x D (first entry unused).
ad::Var monotonic(const std::vector<ad::Var>& z, const std::vector<Mat>& coeff);

// Pairwise seniority constraint on gathered latents (one row per pair),
// averaged over pairs. Hinge: sum_i ReLU(z_p_i - z_q_i); raw: sum_i (z_p_i - z_q_i).
ad::Var seniority_constraint(ad::Var z_p, ad::Var z_q, ConsMode mode);

}  // namespace losses

// Plain-matrix wrappers (single trajectory / plain batches) running the same
// graph code on a throwaway tape.
double smoothness_loss(const Mat& z, const std::vector<char>& mask);
double bpr_loss(const Mat& e_p, const Mat& e_q, const TripletBatch& batch);
double monotonic_regularizer(const Mat& z, const std::vector<double>& seniority,
                             const std::vector<char>& mask);
double seniority_constraint_loss(const Mat& z_p, const Mat& z_q, ConsMode mode = ConsMode::kHinge);

// Uniform negatives for BPR. Candidates are helper view indices [0, n) not
// linked to the seeker.
class NegativeSampler {
 public:
  NegativeSampler(int n_helpers, std::vector<std::vector<int>> linked_sorted)
      : n_(n_helpers), linked_(std::move(linked_sorted)) {}

  // Draws k distinct candidates; returns fewer (with a warning) when the
  // candidate pool is smaller than k.
  std::vector<int> sample(int seeker_view, int k, Rng& rng, WarningList* warnings = nullptr) const;

  int pool_size(int seeker_view) const {
    return n_ - static_cast<int>(linked_[static_cast<std::size_t>(seeker_view)].size());
  }

 private:
  bool is_linked(int seeker_view, int helper) const;
  int n_;
  std::vector<std::vector<int>> linked_;
};

}  // namespace mint
