// Acceptance suite: runs every headline requirement end to end and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include "mint/evaluator.hpp"
#include "mint/graph.hpp"
#include "mint/model.hpp"
#include "mint/objectives.hpp"
#include "mint/synthgen.hpp"
#include "mint/trainer.hpp"
#include "mint/vae.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

#include <unistd.h>

using namespace mint;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_outcomes;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_outcomes.push_back(Outcome{id, name, pass, detail});
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Mat m(r, c);
  normal_init(m, rng, scale);
  return m;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// criterion 1: full-model gradient check, every loss term
// ---------------------------------------------------------------------------

void criterion_gradients() {
  const auto start = Clock::now();
  const fs::path dir = fs::temp_directory_path() / ("mint_acc_grad_" + std::to_string(::getpid()));
  GeneratorConfig gc;
  gc.n_patients = 10;
  gc.n_threads = 12;
  gc.n_stages = 4;
  gc.n_interactions = 40;
  gc.T = 4;
  gc.seniority_gap = 0.05;
  gc.noise_rate = 0.1;
  gc.seed = 5;
  generate(gc, dir.string(), nullptr);
  DataConfig dc;
  dc.T = gc.T;
  Dataset ds = ingest_dataset((dir / "interactions.csv").string(),
                              (dir / "activities.csv").string(), dc, nullptr);
  fs::remove_all(dir);

  ModelConfig mc;
  mc.dims.d_thread = 3;
  mc.dims.d_stage = 3;
  mc.dims.d_x = 3;
  mc.dims.d_z = 3;
  mc.dims.hidden = 4;
  mc.layers = 2;
  const ModelInputs inputs = build_model_inputs(ds, ds.graph.pairs.size(), mc);
  MintModel model(mc, ds.n_threads, ds.n_stages, ds.n_patients);

  // fixed batch of triplets over the whole pair set
  TripletBatch batch;
  {
    Rng rng(77);
    NegativeSampler sampler(static_cast<int>(inputs.helpers.size()), inputs.linked_helpers);
    for (std::size_t i = 0; i < inputs.train_positives.size() && batch.size() < 16; i += 2) {
      Triplet t = inputs.train_positives[i];
      auto negs = sampler.sample(t.a_view, 1, rng, nullptr);
      if (negs.empty()) continue;
      t.neg_view = negs[0];
      t.neg = inputs.helpers[static_cast<std::size_t>(negs[0])];
      batch.push_back(t);
    }
  }

  const LossWeights weights;  // defaults; every term active
  const char* term_names[5] = {"dis", "smo", "bpr", "reg", "cons"};
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  bool ok = true;

  for (int point = 0; point < 10 && ok; ++point) {
    ParamStore params;
    Rng init_rng(1000 + static_cast<std::uint64_t>(point));
    model.init_params(params, init_rng);
    Rng noise_rng(2000 + static_cast<std::uint64_t>(point));
    const NoiseBundle noise = make_noise(inputs.n, inputs.T, mc.dims, noise_rng);

    auto eval_terms = [&](ParamStore& ps, std::map<std::string, Mat> grads[5]) {
      ForwardCtx ctx(&ps);
      auto fwd = model.population_forward(ctx, inputs, noise);
      auto lv = model.batch_losses(ctx, fwd, inputs, batch, weights);
      const ad::Var terms[5] = {lv.dis, lv.smo, lv.bpr, lv.reg, lv.cons};
      std::array<double, 5> values{};
      for (int k = 0; k < 5; ++k) {
        values[static_cast<std::size_t>(k)] = terms[k].scalar();
        if (grads) {
          ctx.tape().backward(terms[k]);
          grads[k] = ctx.param_grads();
        }
      }
      return values;
    };

    std::map<std::string, Mat> analytic[5];
    eval_terms(params, analytic);

    for (auto& [name, value] : params.values()) {
      for (Eigen::Index i = 0; i < value.rows() && ok; ++i) {
        for (Eigen::Index j = 0; j < value.cols() && ok; ++j) {
          const double saved = value(i, j);
          const double h = 1e-6 * std::max(1.0, std::abs(saved));
          value(i, j) = saved + h;
          const auto up = eval_terms(params, nullptr);
          value(i, j) = saved - h;
          const auto down = eval_terms(params, nullptr);
          value(i, j) = saved;
          for (int k = 0; k < 5; ++k) {
            const double numeric = (up[static_cast<std::size_t>(k)] - down[static_cast<std::size_t>(k)]) / (2.0 * h);
            const double a = analytic[k].at(name)(i, j);
            // The central-difference noise floor here is eps*|f|/h ~ 1e-9,
            // so coordinates whose true gradient sits below 1e-3 are compared
            // absolutely against that floor; everything larger is held to the
            // full relative tolerance.
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
            const double rel = std::abs(a - numeric) / denom;
            max_rel_err = std::max(max_rel_err, rel);
            ++checked;
            if (rel >= 1e-4) {
              ok = false;
              std::ostringstream os;
              os << "term " << term_names[k] << " param " << name << "(" << i << "," << j
                 << "): analytic " << a << " vs numeric " << numeric;
              std::cerr << "  gradient mismatch: " << os.str() << "\n";
            }
          }
        }
      }
    }
  }

  const double secs = seconds_since(start);
  std::ostringstream os;
  os << checked << " coordinate/term pairs over 10 points, max rel err " << max_rel_err << ", "
     << secs << "s";
  report(1, "gradient correctness (L_dis, L_smo, L_bpr, L_reg, L_cons)", ok && secs < 120.0,
         os.str());
}

// ---------------------------------------------------------------------------
// criterion 2: propagation and metric oracles
// ---------------------------------------------------------------------------

bool connected(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> stack{0};
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w = 0; w < n; ++w) {
      if (A(v, w) != 0.0 && !seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

void criterion_oracles() {
  Rng rng(31);
  bool ok = true;
  int graphs_checked = 0;
  double max_err = 0.0;
  for (int n = 1; n <= 5 && ok; ++n) {
    const int edges = n * (n - 1) / 2;
    for (int bits = 0; bits < (1 << edges) && ok; ++bits) {
      Mat A = Mat::Zero(n, n);
      int b = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          if (bits & (1 << b)) A(i, j) = A(j, i) = 1.0;
          ++b;
        }
      }
      if (!connected(A)) continue;
      ++graphs_checked;
      Mat x = random_mat(rng, n, 3);
      SpMat sp(n, n);
      std::vector<Eigen::Triplet<double>> trips;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (A(i, j) != 0.0) trips.emplace_back(i, j, 1.0);
        }
      }
      sp.setFromTriplets(trips.begin(), trips.end());
      SpMat ahat = graph::normalize_adjacency<double>(sp);
      for (int L = 0; L <= 3; ++L) {
        auto out = graph::propagate<double>(x, ahat, L);
        // dense matrix-power reference
        Vec deg = A.rowwise().sum();
        Mat dinv = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) {
          if (deg[i] > 0) dinv(i, i) = 1.0 / std::sqrt(deg[i]);
        }
        const Mat dense_ahat = dinv * A * dinv;
        Mat acc = x, cur = x;
        for (int l = 1; l <= L; ++l) {
          cur = dense_ahat * cur;
          acc += cur;
        }
        const Mat ref = acc / static_cast<double>(L + 1);
        const double err = (out.averaged - ref).cwiseAbs().maxCoeff();
        max_err = std::max(max_err, err);
        if (err >= 1e-12) ok = false;
      }
    }
  }

  // ranking metrics against a brute-force reference
  int metric_trials = 0;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(30));
    std::vector<RankingResult> results;
    for (int i = 0; i < n; ++i) {
      RankingResult r;
      r.rank = 1 + static_cast<int>(rng.below(50));
      results.push_back(r);
    }
    const int K = 1 + static_cast<int>(rng.below(12));
    double ref_mrr = 0.0, ref_ndcg = 0.0, ref_hit = 0.0;
    for (const auto& r : results) {
      ref_mrr += 1.0 / r.rank;
      if (r.rank <= K) {
        ref_ndcg += 1.0 / std::log2(r.rank + 1.0);
        ref_hit += 1.0;
      }
    }
    ref_mrr /= n;
    ref_ndcg /= n;
    ref_hit /= n;
    if (mrr(results) != ref_mrr) ok = false;
    if (hit_at_k(results, K) != ref_hit) ok = false;
    if (std::abs(ndcg_at_k(results, K) - ref_ndcg) >= 1e-12) ok = false;
    ++metric_trials;
  }

  std::ostringstream os;
  os << graphs_checked << " connected graphs x L in 0..3, max err " << max_err << "; "
     << metric_trials << " metric instances";
  report(2, "oracle equivalence (propagation, MRR/NDCG/HIT)", ok, os.str());
}

// ---------------------------------------------------------------------------
// criterion 3: KL closed form vs Monte Carlo
// ---------------------------------------------------------------------------

void criterion_kl() {
  Rng rng(47);
  bool ok = true;
  double worst = 0.0;
  int pairs = 0;
  while (pairs < 20) {
    const int d = 4;
    GaussianParams q{random_mat(rng, 1, d, 0.0), random_mat(rng, 1, d, 0.0)};
    GaussianParams p{random_mat(rng, 1, d, 0.0), random_mat(rng, 1, d, 0.0)};
    for (int i = 0; i < d; ++i) {
      q.mu(0, i) = rng.uniform(-1.5, 1.5);
      p.mu(0, i) = rng.uniform(-1.5, 1.5);
      q.log_sigma(0, i) = rng.uniform(-0.3, 0.3);
      p.log_sigma(0, i) = rng.uniform(-0.3, 0.3);
    }
    const double closed = kl_diag_gaussians(q, p);
    if (closed < 0.5) continue;  // too small for a 1% Monte-Carlo resolution
    ++pairs;
    const int n = 1000000;
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
      double delta = 0.0;
      for (int i = 0; i < d; ++i) {
        const double sq = std::exp(q.log_sigma(0, i));
        const double sp = std::exp(p.log_sigma(0, i));
        const double x = q.mu(0, i) + sq * rng.normal();
        delta += -q.log_sigma(0, i) - 0.5 * std::pow((x - q.mu(0, i)) / sq, 2);
        delta -= -p.log_sigma(0, i) - 0.5 * std::pow((x - p.mu(0, i)) / sp, 2);
      }
      acc += delta;
    }
    const double mc = acc / n;
    const double rel = std::abs(closed - mc) / std::abs(closed);
    worst = std::max(worst, rel);
    if (rel >= 0.01) ok = false;
  }
  std::ostringstream os;
  os << "20 pairs x 1e6 samples, worst rel err " << worst;
  report(3, "KL correctness vs Monte Carlo", ok, os.str());
}

// ---------------------------------------------------------------------------
// criterion 4: monotonicity invariant, exhaustive sign patterns
// ---------------------------------------------------------------------------

void criterion_monotonic() {
  const std::vector<double> s{0.1, 0.4, 0.8};  // strictly increasing
  std::vector<char> mask(3, 1);
  const double deltas[] = {1.0, 0.0, -1.0};
  bool ok = true;
  int patterns = 0;
  for (int d00 = 0; d00 < 3; ++d00) {
    for (int d01 = 0; d01 < 3; ++d01) {
      for (int d10 = 0; d10 < 3; ++d10) {
        for (int d11 = 0; d11 < 3; ++d11) {
          Mat z(3, 2);
          z.row(0) << 0.0, 0.0;
          z(1, 0) = deltas[d00];
          z(1, 1) = deltas[d01];
          z(2, 0) = z(1, 0) + deltas[d10];
          z(2, 1) = z(1, 1) + deltas[d11];
          const double loss = monotonic_regularizer(z, s, mask);
          const bool has_decrease = d00 == 2 || d01 == 2 || d10 == 2 || d11 == 2;
          if (has_decrease && !(loss > 0.0)) ok = false;
          if (!has_decrease && loss != 0.0) ok = false;
          ++patterns;
        }
      }
    }
  }
  report(4, "monotonicity invariant (exhaustive, 2 dims x 3 steps)", ok,
         std::to_string(patterns) + " sign patterns");
}

// ---------------------------------------------------------------------------
// criteria 5, 6, 8: end-to-end learning on the planted bundle
// ---------------------------------------------------------------------------

struct EndToEnd {
  Dataset ds;
  ModelInputs inputs;
  std::vector<Query> test_queries;
  std::size_t skipped = 0;
  std::vector<double> mint_hit10, mint_ndcg10, mf_ndcg10;
  std::vector<double> initial_loss, final_loss;
  std::vector<double> init_violation, full_violation, wo_senior_violation;
  double null_hit10 = 0.0;
  double criterion5_sec = 0.0;  // full-model + baseline training and scoring
  double runtime_sec = 0.0;     // whole block including criteria 6 and 8 work
  MetricReport full_report, w_vae_report, wo_senior_report;
  bool w_vae_ran = false;
};

EndToEnd run_end_to_end(int epochs) {
  const auto start = Clock::now();
  EndToEnd e2e;

  const fs::path dir = fs::temp_directory_path() / ("mint_acc_e2e_" + std::to_string(::getpid()));
  GeneratorConfig gc;
  gc.n_patients = 500;
  gc.n_threads = 60;
  gc.n_stages = 6;
  gc.n_interactions = 5000;
  gc.T = 10;
  gc.seniority_gap = 0.05;
  gc.noise_rate = 0.05;
  gc.seed = 2024;
  generate(gc, dir.string(), nullptr);
  DataConfig dc;
  dc.T = gc.T;
  e2e.ds = ingest_dataset((dir / "interactions.csv").string(), (dir / "activities.csv").string(),
                          dc, nullptr);
  fs::remove_all(dir);

  ModelConfig mc;  // paper defaults: dims 8/8, hidden 16, 3 layers
  TrainConfig tc;  // paper defaults: batch 256, lr 0.001, lambda 1, gamma 0.1,
                   // alpha 0.01, beta 0.001
  tc.epochs = epochs;

  const SplitBounds bounds = chronological_split(e2e.ds, tc.train_frac, tc.val_frac);
  e2e.inputs = build_model_inputs(e2e.ds, bounds.train_end, mc);
  e2e.test_queries =
      make_queries(e2e.ds, e2e.inputs, bounds.val_end, e2e.ds.graph.pairs.size(), &e2e.skipped);

  Rng null_rng(99);
  e2e.null_hit10 = permutation_null_hit(e2e.test_queries.size(),
                                        static_cast<int>(e2e.inputs.helpers.size()), 10, 50,
                                        null_rng);

  MintModel model(mc, e2e.ds.n_threads, e2e.ds.n_stages, e2e.ds.n_patients);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    // violation of the untrained model, same init as the trained run
    {
      ParamStore init;
      Rng init_rng(seed ^ 0x243f6a8885a308d3ull);
      model.init_params(init, init_rng);
      const EvalForward ef = eval_forward(model, init, e2e.inputs);
      e2e.init_violation.push_back(
          seniority_diagnostics(ef, e2e.ds, e2e.inputs, e2e.test_queries).mean_hinge_violation);
    }

    TrainConfig run_tc = tc;
    run_tc.seed = seed;
    const auto c5_start = Clock::now();
    TrainResult full = train_mint(e2e.ds, mc, run_tc, nullptr);
    e2e.initial_loss.push_back(full.initial_loss);
    e2e.final_loss.push_back(full.final_loss);
    ParamStore params = full.checkpoint.params;
    const EvalForward ef = eval_forward(model, params, e2e.inputs);
    const auto results = rank_queries(ef.e_p, ef.e_q, e2e.test_queries);
    e2e.mint_hit10.push_back(hit_at_k(results, 10));
    e2e.mint_ndcg10.push_back(ndcg_at_k(results, 10));
    e2e.full_violation.push_back(
        seniority_diagnostics(ef, e2e.ds, e2e.inputs, e2e.test_queries).mean_hinge_violation);
    if (seed == 1) e2e.full_report = compute_metrics(results, {3, 5, 10}, e2e.skipped);

    TrainResult mf = train_bpr_mf(e2e.ds, mc, run_tc, nullptr);
    EvalForward mf_ef;
    mf_ef.e_p = mf.checkpoint.params.at("bpr.seeker");
    mf_ef.e_q = mf.checkpoint.params.at("bpr.helper");
    const auto mf_results = rank_queries(mf_ef.e_p, mf_ef.e_q, e2e.test_queries);
    e2e.mf_ndcg10.push_back(ndcg_at_k(mf_results, 10));
    e2e.criterion5_sec += seconds_since(c5_start);

    TrainConfig wo_tc = run_tc;
    wo_tc.ablation = Ablation::kWithoutSenior;
    ModelConfig wo_mc = mc;
    wo_mc.ablation = Ablation::kWithoutSenior;
    TrainResult wo = train_mint(e2e.ds, wo_mc, wo_tc, nullptr);
    ParamStore wo_params = wo.checkpoint.params;
    MintModel wo_model(wo_mc, e2e.ds.n_threads, e2e.ds.n_stages, e2e.ds.n_patients);
    const EvalForward wo_ef = eval_forward(wo_model, wo_params, e2e.inputs);
    e2e.wo_senior_violation.push_back(
        seniority_diagnostics(wo_ef, e2e.ds, e2e.inputs, e2e.test_queries).mean_hinge_violation);
    if (seed == 1) {
      const auto wo_results = rank_queries(wo_ef.e_p, wo_ef.e_q, e2e.test_queries);
      e2e.wo_senior_report = compute_metrics(wo_results, {3, 5, 10}, e2e.skipped);
    }
  }

  // w_vae ablation once for the schema check
  {
    TrainConfig ab_tc = tc;
    ab_tc.seed = 1;
    ab_tc.ablation = Ablation::kWithVae;
    ModelConfig ab_mc = mc;
    ab_mc.ablation = Ablation::kWithVae;
    TrainResult ab = train_mint(e2e.ds, ab_mc, ab_tc, nullptr);
    MintModel ab_model(ab_mc, e2e.ds.n_threads, e2e.ds.n_stages, e2e.ds.n_patients);
    ParamStore ab_params = ab.checkpoint.params;
    const EvalForward ab_ef = eval_forward(ab_model, ab_params, e2e.inputs);
    const auto ab_results = rank_queries(ab_ef.e_p, ab_ef.e_q, e2e.test_queries);
    e2e.w_vae_report = compute_metrics(ab_results, {3, 5, 10}, e2e.skipped);
    e2e.w_vae_ran = true;
  }

  e2e.runtime_sec = seconds_since(start);
  return e2e;
}

void criterion_learning(const EndToEnd& e2e) {
  const double hit = mean_of(e2e.mint_hit10);
  const double ndcg = mean_of(e2e.mint_ndcg10);
  const double mf = mean_of(e2e.mf_ndcg10);
  const double init = mean_of(e2e.initial_loss);
  const double fin = mean_of(e2e.final_loss);
  const bool a = hit >= 2.0 * e2e.null_hit10;
  const bool b = ndcg >= mf;
  const bool c = fin < init;
  const bool time_ok = e2e.criterion5_sec < 600.0;
  std::ostringstream os;
  os.precision(4);
  os << "HIT@10 " << hit << " vs 2x null " << 2.0 * e2e.null_hit10 << "; NDCG@10 " << ndcg
     << " vs BPR-MF " << mf << "; loss " << init << " -> " << fin << "; " << e2e.criterion5_sec
     << "s";
  report(5, "end-to-end learning signal (5 seeds, paper defaults)", a && b && c && time_ok,
         os.str());
}

void criterion_seniority(const EndToEnd& e2e) {
  const double init = mean_of(e2e.init_violation);
  const double full = mean_of(e2e.full_violation);
  const double wo = mean_of(e2e.wo_senior_violation);
  const bool halved = full <= 0.5 * init;
  const bool ablation_direction = wo > full;
  std::ostringstream os;
  os.precision(4);
  os << "hinge violation init " << init << " -> full " << full << " (<= 50%: " << (halved ? "yes" : "no")
     << "); wo_senior " << wo << " > full: " << (ablation_direction ? "yes" : "no") << " [per seed full:";
  for (double v : e2e.full_violation) os << ' ' << v;
  os << " | wo:";
  for (double v : e2e.wo_senior_violation) os << ' ' << v;
  os << "]";
  report(6, "seniority behavior (violation halves; ablation direction)", halved && ablation_direction,
         os.str());
}

void criterion_ablation_schema(const EndToEnd& e2e) {
  auto schema = [](const MetricReport& r) {
    std::ostringstream os;
    for (int k : r.ks) os << "ndcg@" << k << ";";
    for (int k : r.ks) os << "hit@" << k << ";";
    os << "mrr";
    return os.str();
  };
  const bool ok = e2e.w_vae_ran && schema(e2e.full_report) == schema(e2e.w_vae_report) &&
                  schema(e2e.full_report) == schema(e2e.wo_senior_report);
  report(8, "ablation harness (w_vae, wo_senior run end-to-end, same schema)", ok,
         schema(e2e.full_report));
}

// ---------------------------------------------------------------------------
// criterion 7: determinism and persistence
// ---------------------------------------------------------------------------

void criterion_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("mint_acc_det_" + std::to_string(::getpid()));
  GeneratorConfig gc;
  gc.n_patients = 80;
  gc.n_threads = 16;
  gc.n_stages = 5;
  gc.n_interactions = 700;
  gc.T = 10;
  gc.seniority_gap = 0.05;
  gc.noise_rate = 0.0;
  gc.seed = 11;
  generate(gc, dir.string(), nullptr);
  DataConfig dc;
  dc.T = gc.T;
  Dataset ds = ingest_dataset((dir / "interactions.csv").string(),
                              (dir / "activities.csv").string(), dc, nullptr);

  ModelConfig mc;
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 128;
  tc.seed = 7;

  TrainResult a = train_mint(ds, mc, tc, nullptr);
  TrainResult b = train_mint(ds, mc, tc, nullptr);
  bool traces_equal = a.trace.size() == b.trace.size();
  for (std::size_t i = 0; traces_equal && i < a.trace.size(); ++i) {
    traces_equal = a.trace[i].epoch == b.trace[i].epoch &&
                   a.trace[i].component == b.trace[i].component &&
                   a.trace[i].value == b.trace[i].value;
  }

  const SplitBounds bounds = chronological_split(ds, tc.train_frac, tc.val_frac);
  const ModelInputs inputs = build_model_inputs(ds, bounds.train_end, mc);
  MintModel model(mc, ds.n_threads, ds.n_stages, ds.n_patients);
  ParamStore before = a.checkpoint.params;
  const EvalForward ef_before = eval_forward(model, before, inputs);

  const fs::path ckpt_path = dir / "model.ckpt";
  save_checkpoint(a.checkpoint, ckpt_path.string());
  Checkpoint loaded = load_checkpoint(ckpt_path.string());
  ParamStore after = loaded.params;
  const EvalForward ef_after = eval_forward(model, after, inputs);
  bool forward_identical = ef_before.e_p == ef_after.e_p && ef_before.e_q == ef_after.e_q;
  for (std::size_t t = 0; forward_identical && t < ef_before.z_mu.size(); ++t) {
    forward_identical = ef_before.z_mu[t] == ef_after.z_mu[t];
  }
  fs::remove_all(dir);

  std::ostringstream os;
  os << "trace rows " << a.trace.size() << " bitwise equal: " << (traces_equal ? "yes" : "no")
     << "; round-trip forward bit-identical: " << (forward_identical ? "yes" : "no");
  report(7, "determinism and checkpoint persistence", traces_equal && forward_identical, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  int epochs = 30;
  if (argc > 1) epochs = std::atoi(argv[1]);
  std::printf("acceptance suite (end-to-end epochs: %d)\n", epochs);

  try {
    criterion_gradients();
  } catch (const std::exception& e) {
    report(1, "gradient correctness", false, std::string("exception: ") + e.what());
  }
  try {
    criterion_oracles();
  } catch (const std::exception& e) {
    report(2, "oracle equivalence", false, std::string("exception: ") + e.what());
  }
  try {
    criterion_kl();
  } catch (const std::exception& e) {
    report(3, "KL correctness", false, std::string("exception: ") + e.what());
  }
  try {
    criterion_monotonic();
  } catch (const std::exception& e) {
    report(4, "monotonicity invariant", false, std::string("exception: ") + e.what());
  }
  try {
    const EndToEnd e2e = run_end_to_end(epochs);
    criterion_learning(e2e);
    criterion_seniority(e2e);
    criterion_determinism();
    criterion_ablation_schema(e2e);
  } catch (const std::exception& e) {
    report(5, "end-to-end learning signal", false, std::string("exception: ") + e.what());
    report(6, "seniority behavior", false, "skipped after exception");
    try {
      criterion_determinism();
    } catch (const std::exception& e7) {
      report(7, "determinism and persistence", false, std::string("exception: ") + e7.what());
    }
    report(8, "ablation harness", false, "skipped after exception");
  }

  std::sort(g_outcomes.begin(), g_outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int failed = 0;
  std::printf("\nsummary:\n");
  for (const auto& o : g_outcomes) {
    std::printf("  criterion %d: %s\n", o.id, o.pass ? "PASS" : "FAIL");
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
