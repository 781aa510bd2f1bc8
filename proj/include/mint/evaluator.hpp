#pragma once

#include "mint/dataset.hpp"
#include "mint/model.hpp"
#include "mint/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mint {

// One held-out interaction turned into a ranking query.
struct Query {
  PatientId seeker = 0;
  PatientId helper = 0;  // ground truth
  int seeker_view = 0;
  int helper_view = 0;
  int t_seek = 1;
  int t_help = 1;
};

struct RankingResult {
  Query query;
  int rank = 0;  // 1-based rank of the true helper, ties broken by ascending id
  // full candidate list (helper view, score), score-descending; filled by
  // rank_helpers, left empty by the bulk ranking path
  std::vector<std::pair<int, double>> ranked;
};

// Deterministic evaluation-time forward pass (posterior means, zero noise).
struct EvalForward {
  Mat e_p;
  Mat e_q;
  std::vector<Mat> z_mu;  // per step, n x d_z
  Mat x_mu;               // n x d_x
};

EvalForward eval_forward(const MintModel& model, ParamStore& params, const ModelInputs& in);

// 1-based rank of `true_idx` under descending score with ascending-index
// tie-break.
int rank_of(const Vec& scores, int true_idx);

// top-k (index, score) pairs under the same ordering.
std::vector<std::pair<int, double>> top_k(const Vec& scores, int k);

Vec score_helpers(const Mat& e_p, const Mat& e_q, int seeker_view);

double mrr(const std::vector<RankingResult>& results);
double ndcg_at_k(const std::vector<RankingResult>& results, int K);
double hit_at_k(const std::vector<RankingResult>& results, int K);

// Queries from the pair range [lo, hi); seekers unseen in training are
// skipped and counted (cold start is out of scope).
std::vector<Query> make_queries(const Dataset& ds, const ModelInputs& in, std::size_t lo,
                                std::size_t hi, std::size_t* skipped = nullptr);

std::uint64_t query_set_hash(const std::vector<Query>& queries);

std::vector<RankingResult> rank_queries(const Mat& e_p, const Mat& e_q,
                                        const std::vector<Query>& queries);

// Single-query ranking over the full helper candidate set, including the
// ordered candidate list.
RankingResult rank_helpers(const EvalForward& fwd, const Query& query);

// Expected HIT@K of a uniformly random ranking over the same queries,
// estimated by sampling ranks (the permutation null).
double permutation_null_hit(std::size_t n_queries, int n_candidates, int K, int reps, Rng& rng);

struct SeniorityDiagnostics {
  double mean_hinge_violation = 0.0;  // sum_i ReLU(z_p_i - z_q_i) over true pairs
  double top1_senior_rate = 0.0;      // top-1 helper senior over the query seeker
  double monotone_fraction = 0.0;     // latent dims non-decreasing where seniority rose
};

SeniorityDiagnostics seniority_diagnostics(const EvalForward& fwd, const Dataset& ds,
                                           const ModelInputs& in,
                                           const std::vector<Query>& queries);

struct MetricReport {
  std::vector<int> ks;
  std::vector<double> ndcg;
  std::vector<double> hit;
  double mrr_value = 0.0;
  std::size_t n_queries = 0;
  std::size_t skipped = 0;
};

MetricReport compute_metrics(const std::vector<RankingResult>& results, const std::vector<int>& ks,
                             std::size_t skipped);

// BPR-MF trained through the shared loop; reported through the identical
// protocol.
TrainResult train_baseline(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                           WarningList* warnings = nullptr);

// Ranking views for a trained checkpoint of either model family.
EvalForward eval_forward_checkpoint(const Checkpoint& ckpt, const Dataset& ds,
                                    const ModelInputs& in);

}  // namespace mint
