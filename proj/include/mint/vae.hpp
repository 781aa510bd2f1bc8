#pragma once

#include "mint/autodiff.hpp"
#include "mint/common.hpp"
#include "mint/dataset.hpp"
#include "mint/nets.hpp"

#include <string>
#include <vector>

namespace mint {

inline constexpr double kLogSigmaClamp = 8.0;

struct GaussianParams {
  Mat mu;
  Mat log_sigma;
};

// Closed-form KL(q || p) for diagonal Gaussians, summed over dimensions,
// one value per row.
template <typename D1, typename D2, typename D3, typename D4>
Vec kl_diag_rowwise(const Eigen::MatrixBase<D1>& mu_q, const Eigen::MatrixBase<D2>& log_sigma_q,
                    const Eigen::MatrixBase<D3>& mu_p, const Eigen::MatrixBase<D4>& log_sigma_p) {
  if (mu_q.rows() != mu_p.rows() || mu_q.cols() != mu_p.cols()) {
    throw MintError("kl_diag: dimension mismatch");
  }
  auto var_ratio = ((log_sigma_q - log_sigma_p).array() * 2.0).exp();
  auto diff = (mu_q - mu_p).array();
  auto term = (log_sigma_p - log_sigma_q).array() +
              0.5 * (var_ratio + diff.square() * ((-2.0) * log_sigma_p.array()).exp()) - 0.5;
  return term.matrix().rowwise().sum();
}

inline double kl_diag_gaussians(const GaussianParams& q, const GaussianParams& p) {
  return kl_diag_rowwise(q.mu, q.log_sigma, p.mu, p.log_sigma).sum();
}

inline Mat reparameterize(const GaussianParams& params, const Mat& noise) {
  if (params.mu.rows() != noise.rows() || params.mu.cols() != noise.cols()) {
    throw MintError("reparameterize: noise shape mismatch");
  }
  Mat ls = params.log_sigma.cwiseMax(-kLogSigmaClamp).cwiseMin(kLogSigmaClamp);
  return params.mu + ls.array().exp().matrix().cwiseProduct(noise);
}

struct EmbeddingTables {
  Mat thread_table;  // n_threads x D_v
  Mat stage_table;   // n_stages x D_h
};

// u_t = concat[v_t, h_t] per step; masked steps repeat the last real row
// (the timeline already carries forwarded ids). A fully masked timeline
// maps to the zero matrix.
Mat embed_features(const PatientTimeline& timeline, const EmbeddingTables& tables);

struct VaeDims {
  int d_thread = 8;
  int d_stage = 8;
  int d_x = 8;
  int d_z = 8;
  int hidden = 16;
  int d_u() const { return d_thread + d_stage; }
};

// Autodiff-side Gaussian parameter pair.
struct AdGaussian {
  ad::Var mu;
  ad::Var log_sigma;
};

// The recurrent nets of the graph-based disentangled VAE:
//   prior      f_theta: GRU over z_{<t} -> params of p(z_t | z_{<t})
//   posterior  h_eta:   GRU over u_{<=t} -> params of q(z_t | u_{<=t})
//   posterior  h_delta: GRU over u_{1:T} + one linear layer -> params of q(x | u_{1:T})
//   decoder    g_phi:   two-layer perceptron on [x_cond, z_t] -> mu_{u,t}
struct VaeNets {
  VaeDims dims;
  GruCell enc_z_gru;
  Linear enc_z_head;
  GruCell enc_x_gru;
  Linear enc_x_head;
  GruCell prior_gru;
  Linear prior_head;
  Linear dec_l1;
  Linear dec_l2;

  explicit VaeNets(const VaeDims& d = {})
      : dims(d),
        enc_z_gru("enc_z.gru", d.d_u(), d.hidden),
        enc_z_head("enc_z.head", d.hidden, 2 * d.d_z),
        enc_x_gru("enc_x.gru", d.d_u(), d.hidden),
        enc_x_head("enc_x.head", d.hidden, 2 * d.d_x),
        prior_gru("prior.gru", d.d_z, d.hidden),
        prior_head("prior.head", d.hidden, 2 * d.d_z),
        dec_l1("dec.l1", d.d_x + d.d_z, d.hidden),
        dec_l2("dec.l2", d.hidden, d.d_u()) {}

  void init_params(ParamStore& ps, Rng& rng) const {
    enc_z_gru.init(ps, rng);
    enc_z_head.init(ps, rng);
    enc_x_gru.init(ps, rng);
    enc_x_head.init(ps, rng);
    prior_gru.init(ps, rng);
    prior_head.init(ps, rng);
    dec_l1.init(ps, rng);
    dec_l2.init(ps, rng);
  }

  // Parameter set for an x-less model (ablation): encoder for x is absent.
  void init_params_without_x(ParamStore& ps, Rng& rng) const {
    enc_z_gru.init(ps, rng);
    enc_z_head.init(ps, rng);
    prior_gru.init(ps, rng);
    prior_head.init(ps, rng);
    dec_l1.init(ps, rng);
    dec_l2.init(ps, rng);
  }

  static AdGaussian split_head(ad::Var packed, int d) {
    AdGaussian g;
    g.mu = ad::slice_cols(packed, 0, d);
    g.log_sigma = ad::clamp(ad::slice_cols(packed, d, d), -kLogSigmaClamp, kLogSigmaClamp);
    return g;
  }

  // q(z_t | u_{<=t}) for all steps; the hidden state freezes on masked steps
  // so padded inputs cannot leak into earlier (or later) real-state params.
  std::vector<AdGaussian> posterior_z(ForwardCtx& ctx, const std::vector<ad::Var>& u_steps,
                                      const std::vector<Mat>& step_masks) const {
    std::vector<AdGaussian> out;
    const auto n = u_steps[0].rows();
    ad::Var h = ctx.constant(Mat::Zero(n, dims.hidden));
    for (std::size_t t = 0; t < u_steps.size(); ++t) {
      ad::Var h_new = enc_z_gru.step(ctx, u_steps[t], h);
      // h = mask ? h_new : h
      ad::Var delta = ad::cmul_const(ad::sub(h_new, h), step_masks[t]);
      h = ad::add(h, delta);
      out.push_back(split_head(enc_z_head.apply(ctx, h), dims.d_z));
    }
    return out;
  }

  // q(x | u_{1:T}): hidden at the last real step, then one linear layer.
  AdGaussian posterior_x(ForwardCtx& ctx, const std::vector<ad::Var>& u_steps,
                         const std::vector<Mat>& step_masks) const {
    const auto n = u_steps[0].rows();
    ad::Var h = ctx.constant(Mat::Zero(n, dims.hidden));
    for (std::size_t t = 0; t < u_steps.size(); ++t) {
      ad::Var h_new = enc_x_gru.step(ctx, u_steps[t], h);
      ad::Var delta = ad::cmul_const(ad::sub(h_new, h), step_masks[t]);
      h = ad::add(h, delta);
    }
    return split_head(enc_x_head.apply(ctx, h), dims.d_x);
  }

  // p(z_t | z_{<t}) for t = 1..T given sampled z. The base case is the
  // standard normal; later steps come from the recurrent prior.
  std::vector<AdGaussian> prior_z(ForwardCtx& ctx, const std::vector<ad::Var>& z_samples) const {
    std::vector<AdGaussian> out;
    const auto n = z_samples[0].rows();
    AdGaussian base;
    base.mu = ctx.constant(Mat::Zero(n, dims.d_z));
    base.log_sigma = ctx.constant(Mat::Zero(n, dims.d_z));
    out.push_back(base);
    ad::Var h = ctx.constant(Mat::Zero(n, dims.hidden));
    for (std::size_t t = 0; t + 1 < z_samples.size(); ++t) {
      h = prior_gru.step(ctx, z_samples[t], h);
      out.push_back(split_head(prior_head.apply(ctx, h), dims.d_z));
    }
    return out;
  }

  ad::Var decode(ForwardCtx& ctx, ad::Var x_cond, ad::Var z_t) const {
    return dec_l2.apply(ctx, ad::tanh_(dec_l1.apply(ctx, ad::hcat(x_cond, z_t))));
  }

  static ad::Var sample(const AdGaussian& g, const Mat& noise) {
    return ad::add(g.mu, ad::cmul_const(ad::exp_(g.log_sigma), noise));
  }

  static ad::Var kl_rowwise(const AdGaussian& q, const AdGaussian& p) {
    using namespace ad;
    Var lsd = sub(p.log_sigma, q.log_sigma);                       // log sp - log sq
    Var var_ratio = exp_(scale(lsd, -2.0));                        // sq^2 / sp^2
    Var diff = sub(q.mu, p.mu);
    Var quad = cmul(square(diff), exp_(scale(p.log_sigma, -2.0)));  // (mq-mp)^2 / sp^2
    Var inner = add(lsd, scale(add_const(add(var_ratio, quad), -1.0), 0.5));
    return rowsum(inner);
  }
};

// Plain-matrix convenience wrappers exposing the spec-level operations; each
// runs the same network code on a fresh tape.

// Prior params for step t = prefix length + 1 given samples z_{<t}
// (rows of z_prefix are timesteps). Empty prefix -> standard normal.
GaussianParams prior_step(const VaeNets& nets, ParamStore& params, const Mat& z_prefix);

struct LatentParams {
  GaussianParams x;
  std::vector<GaussianParams> z;  // one per step
};

// Posterior params for one patient sequence u (T x D_u) under a step mask.
LatentParams infer_posteriors(const VaeNets& nets, ParamStore& params, const Mat& u,
                              const std::vector<char>& mask);

// Decoder mean for a single [x_cond, z_t] pair (row vectors).
Mat decode(const VaeNets& nets, ParamStore& params, const Mat& x_cond, const Mat& z_t);

// Negative timestep-wise ELBO for one patient sequence, constants dropped:
//   sum_t mask_t [ 0.5 ||u_t - mu_{u,t}||^2 + KL(q(z_t) || p(z_t)) ] + KL(q(x) || N(0, I))
double elbo_loss(const Mat& u, const std::vector<char>& mask, const LatentParams& latents,
                 const Mat& recon_mu, const std::vector<GaussianParams>& prior_params);

}  // namespace mint
