#pragma once

#include "mint/autodiff.hpp"
#include "mint/dataset.hpp"
#include "mint/graph.hpp"
#include "mint/nets.hpp"
#include "mint/objectives.hpp"
#include "mint/vae.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mint {

enum class Ablation { kFull, kWithVae, kWithoutSenior };

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct ModelConfig {
  VaeDims dims;
  int layers = 3;
  graph::LayerAverage layer_avg = graph::LayerAverage::kUniform;
  bool decoder_graph_cond = false;
  ConsMode cons_mode = ConsMode::kHinge;
  Ablation ablation = Ablation::kFull;
  int baseline_dim = 16;  // BPR-MF embedding size
};

// Constants derived from one dataset + train split, shared by every forward
// pass: feature ids per step, masks, regularizer coefficients, the
// normalized train adjacency and role views.
struct ModelInputs {
  int n = 0;  // patients
  int T = 0;
  std::vector<std::vector<int>> thread_ids;  // per step: n ids
  std::vector<std::vector<int>> stage_ids;
  std::vector<std::vector<char>> mask;   // per step: n flags
  std::vector<Mat> mask_n1;              // per step: n x 1
  std::vector<Mat> mask_hidden;          // per step: n x hidden
  std::vector<Mat> reg_coeff;            // per step: n x d_z, (s_t - s_{t-1}) * mask_t
  std::shared_ptr<SpMat> a_hat;          // 2n x 2n normalized train adjacency
  std::vector<std::shared_ptr<SpMat>> a_hat_patient;  // per step: n x n (decoder conditioning)
  std::vector<PatientId> seekers;        // full-dataset roles, sorted
  std::vector<PatientId> helpers;
  std::vector<int> seeker_row;           // patient -> row of e_p, -1 if none
  std::vector<int> helper_row;           // patient -> row of e_q, -1 if none
  std::vector<char> train_seeker;        // seeker role within the train split
  std::vector<char> train_helper;
  std::vector<Triplet> train_positives;  // neg fields unset
  std::vector<std::vector<int>> linked_helpers;  // per seeker view row: sorted helper view rows (train)
  double pair_order_violation_rate = 0.0;  // train pairs with s_t >= o_t
};

ModelInputs build_model_inputs(const Dataset& ds, std::size_t train_pair_count,
                               const ModelConfig& cfg);

struct NoiseBundle {
  std::vector<Mat> z;  // per step: n x d_z
  Mat x;               // n x d_x
};

NoiseBundle make_noise(int n, int T, const VaeDims& dims, Rng& rng);
NoiseBundle zero_noise(int n, int T, const VaeDims& dims);

struct PopulationForward {
  std::vector<AdGaussian> z_post;
  std::vector<ad::Var> z_samples;
  std::vector<AdGaussian> z_prior;
  AdGaussian x_post;        // unset under the w_vae ablation
  ad::Var x_for_prop;       // n x d_x (sample, static table under w_vae)
  ad::Var e;                // averaged propagated embeddings, 2n x d_x
  ad::Var e_p;              // seeker view
  ad::Var e_q;              // helper view
  ad::Var elbo_per_patient; // n x 1
  ad::Var z_stack;          // (T n) x d_z, step-major
};

struct BatchLossVars {
  ad::Var dis, smo, bpr, reg, cons;
  ad::Var total;
};

class MintModel {
 public:
  MintModel(ModelConfig cfg, int n_threads, int n_stages, int n_patients)
      : cfg_(cfg), nets_(cfg.dims), n_threads_(n_threads), n_stages_(n_stages), n_(n_patients) {}

  const ModelConfig& config() const { return cfg_; }
  const VaeNets& nets() const { return nets_; }

  void init_params(ParamStore& ps, Rng& rng) const;

  PopulationForward population_forward(ForwardCtx& ctx, const ModelInputs& in,
                                       const NoiseBundle& noise) const;

  BatchLossVars batch_losses(ForwardCtx& ctx, const PopulationForward& fwd,
                             const ModelInputs& in, const TripletBatch& batch,
                             const LossWeights& weights) const;

 private:
  ModelConfig cfg_;
  VaeNets nets_;
  int n_threads_, n_stages_, n_;
};

// Plain matrix-factorization baseline trained with the BPR loss only,
// evaluated through the identical ranking protocol.
class BprMfModel {
 public:
  BprMfModel(int n_seekers, int n_helpers, int dim)
      : a_(n_seekers), b_(n_helpers), dim_(dim) {}

  void init_params(ParamStore& ps, Rng& rng) const {
    normal_init(ps.create("bpr.seeker", a_, dim_), rng, 0.1);
    normal_init(ps.create("bpr.helper", b_, dim_), rng, 0.1);
  }

  struct Forward {
    ad::Var e_p, e_q;
  };
  Forward forward(ForwardCtx& ctx) const { return Forward{ctx.P("bpr.seeker"), ctx.P("bpr.helper")}; }

 private:
  int a_, b_, dim_;
};

}  // namespace mint
