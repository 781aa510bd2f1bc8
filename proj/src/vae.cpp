#include "mint/vae.hpp"

namespace mint {

Mat embed_features(const PatientTimeline& timeline, const EmbeddingTables& tables) {
  const int T = timeline.T();
  const auto dv = tables.thread_table.cols();
  const auto dh = tables.stage_table.cols();
  Mat u = Mat::Zero(T, dv + dh);
  if (timeline.n_real == 0) return u;
  for (int t = 0; t < T; ++t) {
    const ThreadId v = timeline.v[static_cast<std::size_t>(t)];
    const StageId h = timeline.h[static_cast<std::size_t>(t)];
    if (v < 0 || v >= tables.thread_table.rows()) {
      throw MintError("embed_features: thread id " + std::to_string(v) + " out of range");
    }
    if (h < 0 || h >= tables.stage_table.rows()) {
      throw MintError("embed_features: stage id " + std::to_string(h) + " out of range");
    }
    u.row(t).head(dv) = tables.thread_table.row(v);
    u.row(t).tail(dh) = tables.stage_table.row(h);
  }
  return u;
}

namespace {

std::vector<Mat> tile_masks(const std::vector<char>& mask, Eigen::Index rows, Eigen::Index cols) {
  std::vector<Mat> out;
  out.reserve(mask.size());
  for (char m : mask) out.push_back(Mat::Constant(rows, cols, m ? 1.0 : 0.0));
  return out;
}

}  // namespace

GaussianParams prior_step(const VaeNets& nets, ParamStore& params, const Mat& z_prefix) {
  const int d = nets.dims.d_z;
  if (z_prefix.rows() == 0) {
    return GaussianParams{Mat::Zero(1, d), Mat::Zero(1, d)};
  }
  if (z_prefix.cols() != d) throw MintError("prior_step: z dimension mismatch");
  ForwardCtx ctx(&params);
  std::vector<ad::Var> z_steps;
  for (Eigen::Index t = 0; t < z_prefix.rows(); ++t) {
    z_steps.push_back(ctx.constant(z_prefix.row(t)));
  }
  // one extra slot so prior_z emits params for step prefix+1
  z_steps.push_back(ctx.constant(Mat::Zero(1, d)));
  auto priors = nets.prior_z(ctx, z_steps);
  return GaussianParams{priors.back().mu.value(), priors.back().log_sigma.value()};
}

LatentParams infer_posteriors(const VaeNets& nets, ParamStore& params, const Mat& u,
                              const std::vector<char>& mask) {
  if (u.cols() != nets.dims.d_u()) throw MintError("infer_posteriors: feature dimension mismatch");
  if (static_cast<std::size_t>(u.rows()) != mask.size()) {
    throw MintError("infer_posteriors: mask length mismatch");
  }
  ForwardCtx ctx(&params);
  std::vector<ad::Var> u_steps;
  for (Eigen::Index t = 0; t < u.rows(); ++t) u_steps.push_back(ctx.constant(u.row(t)));
  auto hmasks = tile_masks(mask, 1, nets.dims.hidden);
  auto zq = nets.posterior_z(ctx, u_steps, hmasks);
  auto xq = nets.posterior_x(ctx, u_steps, hmasks);
  LatentParams out;
  out.x = GaussianParams{xq.mu.value(), xq.log_sigma.value()};
  for (const auto& g : zq) out.z.push_back(GaussianParams{g.mu.value(), g.log_sigma.value()});
  return out;
}

Mat decode(const VaeNets& nets, ParamStore& params, const Mat& x_cond, const Mat& z_t) {
  if (x_cond.cols() != nets.dims.d_x || z_t.cols() != nets.dims.d_z) {
    throw MintError("decode: latent dimension mismatch");
  }
  ForwardCtx ctx(&params);
  return nets.decode(ctx, ctx.constant(x_cond), ctx.constant(z_t)).value();
}

double elbo_loss(const Mat& u, const std::vector<char>& mask, const LatentParams& latents,
                 const Mat& recon_mu, const std::vector<GaussianParams>& prior_params) {
  const auto T = u.rows();
  if (recon_mu.rows() != T || recon_mu.cols() != u.cols()) {
    throw MintError("elbo_loss: reconstruction shape mismatch");
  }
  if (latents.z.size() != static_cast<std::size_t>(T) ||
      prior_params.size() != static_cast<std::size_t>(T) ||
      mask.size() != static_cast<std::size_t>(T)) {
    throw MintError("elbo_loss: step count mismatch");
  }
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!mask[static_cast<std::size_t>(t)]) continue;
    total += 0.5 * (u.row(t) - recon_mu.row(t)).squaredNorm();
    total += kl_diag_gaussians(latents.z[static_cast<std::size_t>(t)],
                               prior_params[static_cast<std::size_t>(t)]);
  }
  GaussianParams std_normal{Mat::Zero(latents.x.mu.rows(), latents.x.mu.cols()),
                            Mat::Zero(latents.x.mu.rows(), latents.x.mu.cols())};
  total += kl_diag_gaussians(latents.x, std_normal);
  return total;
}

}  // namespace mint
