#include "mint/evaluator.hpp"

#include <algorithm>
#include <cmath>

namespace mint {

EvalForward eval_forward(const MintModel& model, ParamStore& params, const ModelInputs& in) {
  ForwardCtx ctx(&params);
  const NoiseBundle noise = zero_noise(in.n, in.T, model.config().dims);
  const PopulationForward fwd = model.population_forward(ctx, in, noise);
  EvalForward ef;
  ef.e_p = fwd.e_p.value();
  ef.e_q = fwd.e_q.value();
  for (const auto& g : fwd.z_post) ef.z_mu.push_back(g.mu.value());
  ef.x_mu = fwd.x_for_prop.value();  // equals mu_x at zero noise
  return ef;
}

EvalForward eval_forward_checkpoint(const Checkpoint& ckpt, const Dataset& ds,
                                    const ModelInputs& in) {
  if (ckpt.config_at("model") == "bpr_mf") {
    EvalForward ef;
    ef.e_p = ckpt.params.at("bpr.seeker");
    ef.e_q = ckpt.params.at("bpr.helper");
    return ef;
  }
  MintModel model = model_from_checkpoint(ckpt, ds);
  ParamStore params = ckpt.params;
  return eval_forward(model, params, in);
}

Vec score_helpers(const Mat& e_p, const Mat& e_q, int seeker_view) {
  if (seeker_view < 0 || seeker_view >= e_p.rows()) {
    throw MintError("score_helpers: seeker view out of range");
  }
  return e_q * e_p.row(seeker_view).transpose();
}

int rank_of(const Vec& scores, int true_idx) {
  if (true_idx < 0 || true_idx >= scores.size()) throw MintError("rank_of: index out of range");
  const double s = scores[true_idx];
  if (!std::isfinite(s)) throw MintError("rank_of: non-finite score");
  int rank = 1;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw MintError("rank_of: non-finite score");
    if (scores[i] > s || (scores[i] == s && i < true_idx)) ++rank;
  }
  return rank;
}

std::vector<std::pair<int, double>> top_k(const Vec& scores, int k) {
  std::vector<std::pair<int, double>> all;
  all.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) all.emplace_back(static_cast<int>(i), scores[i]);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (k < static_cast<int>(all.size())) all.resize(static_cast<std::size_t>(k));
  return all;
}

double mrr(const std::vector<RankingResult>& results) {
  if (results.empty()) throw MintError("mrr: empty result set");
  double s = 0.0;
  for (const auto& r : results) s += 1.0 / r.rank;
  return s / static_cast<double>(results.size());
}

double ndcg_at_k(const std::vector<RankingResult>& results, int K) {
  if (results.empty()) throw MintError("ndcg_at_k: empty result set");
  if (K < 1) throw MintError("ndcg_at_k: K must be >= 1");
  double s = 0.0;
  for (const auto& r : results) {
    if (r.rank <= K) s += 1.0 / std::log2(static_cast<double>(r.rank) + 1.0);
  }
  return s / static_cast<double>(results.size());
}

double hit_at_k(const std::vector<RankingResult>& results, int K) {
  if (results.empty()) throw MintError("hit_at_k: empty result set");
  if (K < 1) throw MintError("hit_at_k: K must be >= 1");
  double s = 0.0;
  for (const auto& r : results) {
    if (r.rank <= K) s += 1.0;
  }
  return s / static_cast<double>(results.size());
}

std::vector<Query> make_queries(const Dataset& ds, const ModelInputs& in, std::size_t lo,
                                std::size_t hi, std::size_t* skipped) {
  std::vector<Query> out;
  std::size_t skip = 0;
  hi = std::min(hi, ds.graph.pairs.size());
  for (std::size_t k = lo; k < hi; ++k) {
    const PairRecord& pr = ds.graph.pairs[k];
    if (!in.train_seeker[static_cast<std::size_t>(pr.seeker)]) {
      ++skip;  // cold-start seeker, out of scope
      continue;
    }
    Query q;
    q.seeker = pr.seeker;
    q.helper = pr.helper;
    q.seeker_view = in.seeker_row[static_cast<std::size_t>(pr.seeker)];
    q.helper_view = in.helper_row[static_cast<std::size_t>(pr.helper)];
    q.t_seek = pr.seeker_step;
    q.t_help = pr.helper_step;
    out.push_back(q);
  }
  if (skipped) *skipped = skip;
  return out;
}

std::uint64_t query_set_hash(const std::vector<Query>& queries) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const Query& q : queries) {
    mix(static_cast<std::uint64_t>(q.seeker));
    mix(static_cast<std::uint64_t>(q.helper));
    mix(static_cast<std::uint64_t>(q.t_seek));
  }
  return h;
}

RankingResult rank_helpers(const EvalForward& fwd, const Query& query) {
  const Vec scores = score_helpers(fwd.e_p, fwd.e_q, query.seeker_view);
  RankingResult r;
  r.query = query;
  r.rank = rank_of(scores, query.helper_view);
  r.ranked = top_k(scores, static_cast<int>(scores.size()));
  return r;
}

std::vector<RankingResult> rank_queries(const Mat& e_p, const Mat& e_q,
                                        const std::vector<Query>& queries) {
  std::vector<RankingResult> out;
  out.reserve(queries.size());
  for (const Query& q : queries) {
    const Vec scores = score_helpers(e_p, e_q, q.seeker_view);
    RankingResult r;
    r.query = q;
    r.rank = rank_of(scores, q.helper_view);
    out.push_back(r);
  }
  return out;
}

double permutation_null_hit(std::size_t n_queries, int n_candidates, int K, int reps, Rng& rng) {
  if (n_queries == 0 || n_candidates < 1 || reps < 1) return 0.0;
  std::uint64_t hits = 0, total = 0;
  for (int r = 0; r < reps; ++r) {
    for (std::size_t q = 0; q < n_queries; ++q) {
      const int rank = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_candidates)));
      if (rank <= K) ++hits;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

SeniorityDiagnostics seniority_diagnostics(const EvalForward& fwd, const Dataset& ds,
                                           const ModelInputs& in,
                                           const std::vector<Query>& queries) {
  SeniorityDiagnostics diag;
  if (fwd.z_mu.empty()) throw MintError("seniority_diagnostics: model has no latent trajectory");

  // (i) mean hinge violation over true pairs at their interaction steps
  if (!queries.empty()) {
    double sum = 0.0;
    for (const Query& q : queries) {
      const Mat zp = fwd.z_mu[static_cast<std::size_t>(q.t_seek - 1)].row(q.seeker);
      const Mat zq = fwd.z_mu[static_cast<std::size_t>(q.t_help - 1)].row(q.helper);
      sum += (zp - zq).cwiseMax(0.0).sum();
    }
    diag.mean_hinge_violation = sum / static_cast<double>(queries.size());
  }

  // (ii) top-1 recommendation seniority: helper's current seniority against
  // the seeker's at the query step
  if (!queries.empty()) {
    std::size_t senior = 0;
    for (const Query& q : queries) {
      const Vec scores = score_helpers(fwd.e_p, fwd.e_q, q.seeker_view);
      const auto top = top_k(scores, 1);
      const PatientId h = in.helpers[static_cast<std::size_t>(top[0].first)];
      const PatientTimeline& htl = ds.timelines[static_cast<std::size_t>(h)];
      const PatientTimeline& stl = ds.timelines[static_cast<std::size_t>(q.seeker)];
      const double o = htl.seniority[static_cast<std::size_t>(std::max(1, htl.n_real) - 1)];
      const double s = stl.seniority[static_cast<std::size_t>(q.t_seek - 1)];
      if (o > s) ++senior;
    }
    diag.top1_senior_rate = static_cast<double>(senior) / static_cast<double>(queries.size());
  }

  // (iii) per-patient fraction of latent dims non-decreasing where seniority
  // increased
  double frac_sum = 0.0;
  int counted = 0;
  const int dz = static_cast<int>(fwd.z_mu[0].cols());
  for (int p = 0; p < ds.n_patients; ++p) {
    const PatientTimeline& tl = ds.timelines[static_cast<std::size_t>(p)];
    int rising = 0, nondec = 0;
    for (int t = 1; t < tl.n_real; ++t) {
      if (tl.seniority[static_cast<std::size_t>(t)] <= tl.seniority[static_cast<std::size_t>(t) - 1]) continue;
      for (int i = 0; i < dz; ++i) {
        ++rising;
        if (fwd.z_mu[static_cast<std::size_t>(t)](p, i) >=
            fwd.z_mu[static_cast<std::size_t>(t) - 1](p, i)) {
          ++nondec;
        }
      }
    }
    if (rising > 0) {
      frac_sum += static_cast<double>(nondec) / static_cast<double>(rising);
      ++counted;
    }
  }
  diag.monotone_fraction = counted > 0 ? frac_sum / counted : 0.0;
  return diag;
}

MetricReport compute_metrics(const std::vector<RankingResult>& results, const std::vector<int>& ks,
                             std::size_t skipped) {
  MetricReport rep;
  rep.ks = ks;
  rep.n_queries = results.size();
  rep.skipped = skipped;
  rep.mrr_value = mrr(results);
  for (int k : ks) {
    rep.ndcg.push_back(ndcg_at_k(results, k));
    rep.hit.push_back(hit_at_k(results, k));
  }
  return rep;
}

TrainResult train_baseline(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                           WarningList* warnings) {
  return train_bpr_mf(ds, mcfg, tcfg, warnings);
}

}  // namespace mint
