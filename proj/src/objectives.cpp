#include "mint/objectives.hpp"

#include <algorithm>

namespace mint {

namespace losses {

ad::Var smoothness(const std::vector<ad::Var>& z, const std::vector<Mat>& step_masks) {
  if (z.empty()) throw MintError("smoothness: empty sequence");
  const double n = static_cast<double>(z[0].rows());
  ad::Var total = z[0].tape()->leaf(Mat::Zero(1, 1));
  for (std::size_t t = 1; t < z.size(); ++t) {
    ad::Var sq = ad::rowsum(ad::square(ad::sub(z[t], z[t - 1])));
    total = ad::add(total, ad::sum(ad::cmul_const(sq, step_masks[t])));
  }
  return ad::scale(total, 1.0 / n);
}

ad::Var bpr(ad::Var e_p, ad::Var e_q, const TripletBatch& batch) {
  if (batch.empty()) throw MintError("bpr: empty batch");
  std::vector<int> a, pos, neg;
  a.reserve(batch.size());
  pos.reserve(batch.size());
  neg.reserve(batch.size());
  for (const Triplet& t : batch) {
    a.push_back(t.a_view);
    pos.push_back(t.pos_view);
    neg.push_back(t.neg_view);
  }
  ad::Var seeker = ad::rows(e_p, a);
  ad::Var diff = ad::sub(ad::dot_rows(seeker, ad::rows(e_q, pos)),
                         ad::dot_rows(seeker, ad::rows(e_q, neg)));
  // -ln sigmoid(d) = softplus(-d)
  return ad::scale(ad::sum(ad::softplus(ad::neg(diff))), 1.0 / static_cast<double>(batch.size()));
}

ad::Var monotonic(const std::vector<ad::Var>& z, const std::vector<Mat>& coeff) {
  if (z.empty()) throw MintError("monotonic: empty sequence");
  const double n = static_cast<double>(z[0].rows());
  ad::Var total = z[0].tape()->leaf(Mat::Zero(1, 1));
  for (std::size_t t = 1; t < z.size(); ++t) {
    ad::Var arg = ad::cmul_const(ad::sub(z[t - 1], z[t]), coeff[t]);
    total = ad::add(total, ad::sum(ad::relu(arg)));
  }
  return ad::scale(total, 1.0 / n);
}

ad::Var seniority_constraint(ad::Var z_p, ad::Var z_q, ConsMode mode) {
  const double n = static_cast<double>(z_p.rows());
  ad::Var diff = ad::sub(z_p, z_q);
  ad::Var per_entry = (mode == ConsMode::kHinge) ? ad::relu(diff) : diff;
  return ad::scale(ad::sum(per_entry), 1.0 / n);
}

}  // namespace losses

double smoothness_loss(const Mat& z, const std::vector<char>& mask) {
  if (static_cast<std::size_t>(z.rows()) != mask.size()) {
    throw MintError("smoothness_loss: mask length mismatch");
  }
  ad::Tape tape;
  std::vector<ad::Var> steps;
  std::vector<Mat> masks;
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    steps.push_back(tape.leaf(z.row(t)));
    masks.push_back(Mat::Constant(1, 1, mask[static_cast<std::size_t>(t)] ? 1.0 : 0.0));
  }
  return losses::smoothness(steps, masks).scalar();
}

double bpr_loss(const Mat& e_p, const Mat& e_q, const TripletBatch& batch) {
  ad::Tape tape;
  return losses::bpr(tape.leaf(e_p), tape.leaf(e_q), batch).scalar();
}

double monotonic_regularizer(const Mat& z, const std::vector<double>& seniority,
                             const std::vector<char>& mask) {
  if (static_cast<std::size_t>(z.rows()) != seniority.size() || seniority.size() != mask.size()) {
    throw MintError("monotonic_regularizer: sequence length mismatch");
  }
  ad::Tape tape;
  std::vector<ad::Var> steps;
  std::vector<Mat> coeff;
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    steps.push_back(tape.leaf(z.row(t)));
    double c = 0.0;
    if (t > 0 && mask[static_cast<std::size_t>(t)]) {
      c = seniority[static_cast<std::size_t>(t)] - seniority[static_cast<std::size_t>(t) - 1];
    }
    coeff.push_back(Mat::Constant(1, z.cols(), c));
  }
  return losses::monotonic(steps, coeff).scalar();
}

double seniority_constraint_loss(const Mat& z_p, const Mat& z_q, ConsMode mode) {
  if (z_p.rows() != z_q.rows() || z_p.cols() != z_q.cols()) {
    throw MintError("seniority_constraint_loss: shape mismatch");
  }
  ad::Tape tape;
  return losses::seniority_constraint(tape.leaf(z_p), tape.leaf(z_q), mode).scalar();
}

bool NegativeSampler::is_linked(int seeker_view, int helper) const {
  const auto& v = linked_[static_cast<std::size_t>(seeker_view)];
  return std::binary_search(v.begin(), v.end(), helper);
}

std::vector<int> NegativeSampler::sample(int seeker_view, int k, Rng& rng,
                                         WarningList* warnings) const {
  if (seeker_view < 0 || seeker_view >= static_cast<int>(linked_.size())) {
    throw MintError("negative sampler: seeker view index out of range");
  }
  const int pool = pool_size(seeker_view);
  if (pool <= 0) {
    warn(warnings, "no negative candidate exists for seeker view " + std::to_string(seeker_view) +
                       "; triplet skipped");
    return {};
  }
  std::vector<int> out;
  if (k >= pool) {
    if (k > pool) {
      warn(warnings, "negative pool smaller than k for seeker view " +
                         std::to_string(seeker_view) + "; returning all " + std::to_string(pool));
    }
    for (int h = 0; h < n_; ++h) {
      if (!is_linked(seeker_view, h)) out.push_back(h);
    }
    return out;
  }
  std::vector<char> taken(static_cast<std::size_t>(n_), 0);
  while (static_cast<int>(out.size()) < k) {
    const int h = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_)));
    if (taken[static_cast<std::size_t>(h)] || is_linked(seeker_view, h)) continue;
    taken[static_cast<std::size_t>(h)] = 1;
    out.push_back(h);
  }
  return out;
}

}  // namespace mint
