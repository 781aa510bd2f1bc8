#include "mint/model.hpp"

#include <algorithm>
#include <set>

namespace mint {

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kWithVae: return "w_vae";
    case Ablation::kWithoutSenior: return "wo_senior";
  }
  return "full";
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "full") return Ablation::kFull;
  if (name == "w_vae") return Ablation::kWithVae;
  if (name == "wo_senior") return Ablation::kWithoutSenior;
  throw ConfigError("unknown ablation '" + name + "' (expected full|w_vae|wo_senior)");
}

ModelInputs build_model_inputs(const Dataset& ds, std::size_t train_pair_count,
                               const ModelConfig& cfg) {
  ModelInputs in;
  in.n = ds.n_patients;
  in.T = ds.config.T;
  const int n = in.n;
  const int T = in.T;
  const VaeDims& dims = cfg.dims;

  in.thread_ids.assign(static_cast<std::size_t>(T), std::vector<int>(static_cast<std::size_t>(n), 0));
  in.stage_ids.assign(static_cast<std::size_t>(T), std::vector<int>(static_cast<std::size_t>(n), 0));
  in.mask.assign(static_cast<std::size_t>(T), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int t = 0; t < T; ++t) {
    Mat m1 = Mat::Zero(n, 1);
    Mat coeff = Mat::Zero(n, dims.d_z);
    for (int p = 0; p < n; ++p) {
      const PatientTimeline& tl = ds.timelines[static_cast<std::size_t>(p)];
      in.thread_ids[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = tl.v[static_cast<std::size_t>(t)];
      in.stage_ids[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = tl.h[static_cast<std::size_t>(t)];
      const bool real = tl.mask[static_cast<std::size_t>(t)] != 0;
      in.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = real ? 1 : 0;
      if (real) {
        m1(p, 0) = 1.0;
        if (t > 0) {
          const double ds_t = tl.seniority[static_cast<std::size_t>(t)] -
                              tl.seniority[static_cast<std::size_t>(t) - 1];
          coeff.row(p).setConstant(ds_t);
        }
      }
    }
    in.mask_n1.push_back(m1);
    in.mask_hidden.push_back(m1 * Mat::Ones(1, dims.hidden));
    in.reg_coeff.push_back(coeff);
  }

  // Train subgraph: first train_pair_count chronological pairs.
  DynamicSupportGraph sub;
  sub.m = ds.graph.m;
  sub.T = ds.graph.T;
  sub.pairs.assign(ds.graph.pairs.begin(),
                   ds.graph.pairs.begin() + static_cast<std::ptrdiff_t>(train_pair_count));
  std::set<std::pair<PatientId, PatientId>> seen;
  for (const PairRecord& pr : sub.pairs) {
    if (seen.insert({pr.seeker, pr.helper}).second) {
      sub.edges.emplace_back(pr.seeker, pr.helper, pr.global_step);
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end());

  const BipartiteAdjacency adj = build_adjacency(sub, ds.graph.T);
  in.a_hat = std::make_shared<SpMat>(graph::normalize_adjacency(adj));

  if (cfg.decoder_graph_cond) {
    for (int t = 1; t <= T; ++t) {
      std::vector<Eigen::Triplet<double>> trips;
      for (const auto& [s, h, first] : sub.edges) {
        if (first <= t) {
          trips.emplace_back(s, h, 1.0);
          trips.emplace_back(h, s, 1.0);
        }
      }
      SpMat a(n, n);
      a.setFromTriplets(trips.begin(), trips.end(),
                        [](const double& a_, const double& b_) { (void)b_; return a_; });
      in.a_hat_patient.push_back(std::make_shared<SpMat>(graph::normalize_adjacency<double>(a)));
    }
  }

  in.seekers = ds.graph.seekers;
  in.helpers = ds.graph.helpers;
  in.seeker_row.assign(static_cast<std::size_t>(n), -1);
  in.helper_row.assign(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < in.seekers.size(); ++k) in.seeker_row[static_cast<std::size_t>(in.seekers[k])] = static_cast<int>(k);
  for (std::size_t k = 0; k < in.helpers.size(); ++k) in.helper_row[static_cast<std::size_t>(in.helpers[k])] = static_cast<int>(k);

  in.train_seeker.assign(static_cast<std::size_t>(n), 0);
  in.train_helper.assign(static_cast<std::size_t>(n), 0);
  in.linked_helpers.assign(in.seekers.size(), {});
  std::size_t violations = 0;
  for (const PairRecord& pr : sub.pairs) {
    in.train_seeker[static_cast<std::size_t>(pr.seeker)] = 1;
    in.train_helper[static_cast<std::size_t>(pr.helper)] = 1;
    Triplet trip;
    trip.seeker = pr.seeker;
    trip.pos = pr.helper;
    trip.a_view = in.seeker_row[static_cast<std::size_t>(pr.seeker)];
    trip.pos_view = in.helper_row[static_cast<std::size_t>(pr.helper)];
    trip.t_seek = pr.seeker_step;
    trip.t_help = pr.helper_step;
    in.train_positives.push_back(trip);
    in.linked_helpers[static_cast<std::size_t>(trip.a_view)].push_back(trip.pos_view);
    const PatientTimeline& stl = ds.timelines[static_cast<std::size_t>(pr.seeker)];
    const PatientTimeline& htl = ds.timelines[static_cast<std::size_t>(pr.helper)];
    const double s = stl.seniority[static_cast<std::size_t>(pr.seeker_step - 1)];
    const double o = htl.seniority[static_cast<std::size_t>(pr.helper_step - 1)];
    if (!(s < o)) ++violations;
  }
  for (auto& v : in.linked_helpers) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  in.pair_order_violation_rate =
      sub.pairs.empty() ? 0.0 : static_cast<double>(violations) / static_cast<double>(sub.pairs.size());
  return in;
}

NoiseBundle make_noise(int n, int T, const VaeDims& dims, Rng& rng) {
  NoiseBundle nb;
  for (int t = 0; t < T; ++t) {
    Mat z(n, dims.d_z);
    normal_init(z, rng, 1.0);
    nb.z.push_back(std::move(z));
  }
  nb.x.resize(n, dims.d_x);
  normal_init(nb.x, rng, 1.0);
  return nb;
}

NoiseBundle zero_noise(int n, int T, const VaeDims& dims) {
  NoiseBundle nb;
  for (int t = 0; t < T; ++t) nb.z.push_back(Mat::Zero(n, dims.d_z));
  nb.x = Mat::Zero(n, dims.d_x);
  return nb;
}

void MintModel::init_params(ParamStore& ps, Rng& rng) const {
  normal_init(ps.create("emb.thread", n_threads_, cfg_.dims.d_thread), rng, 1.0);
  normal_init(ps.create("emb.stage", n_stages_, cfg_.dims.d_stage), rng, 1.0);
  if (cfg_.ablation == Ablation::kWithVae) {
    nets_.init_params_without_x(ps, rng);
    normal_init(ps.create("x_static", n_, cfg_.dims.d_x), rng, 0.3);
  } else {
    nets_.init_params(ps, rng);
  }
}

PopulationForward MintModel::population_forward(ForwardCtx& ctx, const ModelInputs& in,
                                                const NoiseBundle& noise) const {
  using namespace ad;
  const VaeDims& dims = cfg_.dims;
  PopulationForward fwd;

  Var thread_table = ctx.P("emb.thread");
  Var stage_table = ctx.P("emb.stage");
  std::vector<Var> u_steps;
  for (int t = 0; t < in.T; ++t) {
    Var u = hcat(rows(thread_table, in.thread_ids[static_cast<std::size_t>(t)]),
                 rows(stage_table, in.stage_ids[static_cast<std::size_t>(t)]));
    u_steps.push_back(u);
  }

  fwd.z_post = nets_.posterior_z(ctx, u_steps, in.mask_hidden);
  for (int t = 0; t < in.T; ++t) {
    fwd.z_samples.push_back(
        VaeNets::sample(fwd.z_post[static_cast<std::size_t>(t)], noise.z[static_cast<std::size_t>(t)]));
  }
  fwd.z_prior = nets_.prior_z(ctx, fwd.z_samples);

  if (cfg_.ablation == Ablation::kWithVae) {
    fwd.x_for_prop = ctx.P("x_static");
  } else {
    fwd.x_post = nets_.posterior_x(ctx, u_steps, in.mask_hidden);
    fwd.x_for_prop = VaeNets::sample(fwd.x_post, noise.x);
  }

  // per-patient negative ELBO, masked steps contribute exactly zero
  Var elbo = ctx.constant(Mat::Zero(in.n, 1));
  for (int t = 0; t < in.T; ++t) {
    Var x_cond = fwd.x_for_prop;
    if (cfg_.decoder_graph_cond) {
      x_cond = scale(add(x_cond, spmm(in.a_hat_patient[static_cast<std::size_t>(t)], x_cond)), 0.5);
    }
    Var recon = nets_.decode(ctx, x_cond, fwd.z_samples[static_cast<std::size_t>(t)]);
    Var recon_term = scale(rowsum(square(sub(u_steps[static_cast<std::size_t>(t)], recon))), 0.5);
    Var klz = VaeNets::kl_rowwise(fwd.z_post[static_cast<std::size_t>(t)],
                                  fwd.z_prior[static_cast<std::size_t>(t)]);
    elbo = add(elbo, cmul_const(add(recon_term, klz), in.mask_n1[static_cast<std::size_t>(t)]));
  }
  if (cfg_.ablation != Ablation::kWithVae) {
    AdGaussian std_normal;
    std_normal.mu = ctx.constant(Mat::Zero(in.n, dims.d_x));
    std_normal.log_sigma = ctx.constant(Mat::Zero(in.n, dims.d_x));
    elbo = add(elbo, VaeNets::kl_rowwise(fwd.x_post, std_normal));
  }
  fwd.elbo_per_patient = elbo;

  // LightGCN-style propagation over the train adjacency; the same per-patient
  // vector seeds both the seeker and the helper side.
  Var x_stack = vcat({fwd.x_for_prop, fwd.x_for_prop});
  std::vector<Var> layers{x_stack};
  for (int l = 1; l <= cfg_.layers; ++l) layers.push_back(spmm(in.a_hat, layers.back()));
  Var acc = layers[0];
  for (std::size_t l = 1; l < layers.size(); ++l) acc = add(acc, layers[l]);
  const double denom = (cfg_.layer_avg == graph::LayerAverage::kUniform)
                           ? static_cast<double>(cfg_.layers + 1)
                           : static_cast<double>(std::max(cfg_.layers, 1));
  fwd.e = scale(acc, 1.0 / denom);

  std::vector<int> seeker_rows, helper_rows;
  for (PatientId p : in.seekers) seeker_rows.push_back(p);
  for (PatientId p : in.helpers) helper_rows.push_back(in.n + p);
  fwd.e_p = rows(fwd.e, seeker_rows);
  fwd.e_q = rows(fwd.e, helper_rows);

  fwd.z_stack = vcat(fwd.z_samples);
  return fwd;
}

BatchLossVars MintModel::batch_losses(ForwardCtx& ctx, const PopulationForward& fwd,
                                      const ModelInputs& in, const TripletBatch& batch,
                                      const LossWeights& weights) const {
  using namespace ad;
  if (batch.empty()) throw MintError("batch_losses: empty batch");
  weights.validate();

  std::vector<int> pids;
  for (const Triplet& t : batch) {
    pids.push_back(t.seeker);
    pids.push_back(t.pos);
    pids.push_back(t.neg);
  }
  std::sort(pids.begin(), pids.end());
  pids.erase(std::unique(pids.begin(), pids.end()), pids.end());
  const double nb = static_cast<double>(pids.size());

  BatchLossVars out;
  out.dis = scale(sum(rows(fwd.elbo_per_patient, pids)), 1.0 / nb);

  std::vector<Var> z_b;
  std::vector<Mat> mask_b, coeff_b;
  for (int t = 0; t < in.T; ++t) {
    z_b.push_back(rows(fwd.z_samples[static_cast<std::size_t>(t)], pids));
    Mat m(static_cast<Eigen::Index>(pids.size()), 1);
    Mat c(static_cast<Eigen::Index>(pids.size()), fwd.z_samples[0].cols());
    for (std::size_t k = 0; k < pids.size(); ++k) {
      m(static_cast<Eigen::Index>(k), 0) = in.mask_n1[static_cast<std::size_t>(t)](pids[k], 0);
      c.row(static_cast<Eigen::Index>(k)) = in.reg_coeff[static_cast<std::size_t>(t)].row(pids[k]);
    }
    mask_b.push_back(std::move(m));
    coeff_b.push_back(std::move(c));
  }
  out.smo = losses::smoothness(z_b, mask_b);
  out.bpr = losses::bpr(fwd.e_p, fwd.e_q, batch);

  const bool senior_on = cfg_.ablation != Ablation::kWithoutSenior && weights.beta > 0.0;
  if (senior_on) {
    out.reg = losses::monotonic(z_b, coeff_b);
    std::vector<int> idx_p, idx_q;
    for (const Triplet& t : batch) {
      idx_p.push_back((t.t_seek - 1) * in.n + t.seeker);
      idx_q.push_back((t.t_help - 1) * in.n + t.pos);
    }
    out.cons = losses::seniority_constraint(rows(fwd.z_stack, idx_p), rows(fwd.z_stack, idx_q),
                                            cfg_.cons_mode);
  } else {
    out.reg = ctx.constant(Mat::Zero(1, 1));
    out.cons = ctx.constant(Mat::Zero(1, 1));
  }

  Var total = scale(out.dis, weights.alpha);
  total = add(total, scale(out.smo, weights.gamma));
  total = add(total, scale(out.bpr, weights.lambda));
  if (senior_on) {
    total = add(total, scale(add(out.reg, out.cons), weights.beta));
  }
  out.total = total;
  return out;
}

}  // namespace mint
