#include "mint/evaluator.hpp"
#include "mint/runconfig.hpp"
#include "mint/synthgen.hpp"
#include "mint/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

// Registers one CLI flag per config key; values land in the RunConfig after
// parsing so flags override the file.
class ConfigBinder {
 public:
  ConfigBinder(CLI::App* cmd, const std::vector<std::pair<std::string, std::string>>& keys) {
    for (const auto& [key, help] : keys) {
      storage_.push_back({});
      auto* opt = cmd->add_option("--" + key, storage_.back(), help);
      opts_.emplace_back(key, opt);
    }
  }

  void apply(mint::RunConfig& cfg) const {
    for (std::size_t i = 0; i < opts_.size(); ++i) {
      if (opts_[i].second->count() > 0) cfg.set(opts_[i].first, storage_[i]);
    }
  }

 private:
  std::vector<std::pair<std::string, CLI::Option*>> opts_;
  std::deque<std::string> storage_;
};

void write_echo(const mint::RunConfig& cfg, const std::string& out_dir) {
  std::ofstream out(fs::path(out_dir) / "config_echo.txt");
  out << cfg.echo();
}

void print_warnings(const mint::WarningList& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

mint::Dataset load_data(const std::string& dir, const mint::DataConfig& dc,
                        mint::WarningList* warnings) {
  return mint::ingest_dataset((fs::path(dir) / "interactions.csv").string(),
                              (fs::path(dir) / "activities.csv").string(), dc, warnings);
}

void write_metrics_csv(std::ostream& out, const std::string& model, const mint::MetricReport& rep) {
  out.precision(17);
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    out << model << ",ndcg," << rep.ks[i] << ',' << rep.ndcg[i] << '\n';
  }
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    out << model << ",hit," << rep.ks[i] << ',' << rep.hit[i] << '\n';
  }
  out << model << ",mrr,," << rep.mrr_value << '\n';
}

ordered_json metrics_json(const mint::MetricReport& rep) {
  ordered_json j;
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    j["ndcg@" + std::to_string(rep.ks[i])] = rep.ndcg[i];
  }
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    j["hit@" + std::to_string(rep.ks[i])] = rep.hit[i];
  }
  j["mrr"] = rep.mrr_value;
  j["queries"] = rep.n_queries;
  j["skipped_cold_start"] = rep.skipped;
  return j;
}

int cmd_generate(const mint::RunConfig& cfg, const std::string& out, bool force) {
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    std::cerr << "error: output directory " << out << " is not empty (use --force)\n";
    return kExitUsage;
  }
  mint::WarningList warnings;
  const mint::GroundTruth gt = mint::generate(cfg.generator_config(), out, &warnings);
  print_warnings(warnings);
  write_echo(cfg, out);
  std::cout << "bundle written to " << out << "\n"
            << "  patients:          " << gt.config.n_patients << "\n"
            << "  interactions:      " << gt.n_interactions << "\n"
            << "  satisfaction rate: " << gt.satisfaction_rate << "\n"
            << "  overlap rate:      " << gt.overlap_rate << "\n";
  return kExitOk;
}

int cmd_train(const mint::RunConfig& cfg, const std::string& data, const std::string& out,
              bool baseline) {
  fs::create_directories(out);
  mint::WarningList warnings;
  const mint::Dataset ds = load_data(data, cfg.data_config(), &warnings);
  const mint::ModelConfig mcfg = cfg.model_config();
  const mint::TrainConfig tcfg = cfg.train_config();
  const mint::TrainResult res = baseline ? mint::train_bpr_mf(ds, mcfg, tcfg, &warnings)
                                         : mint::train_mint(ds, mcfg, tcfg, &warnings);
  print_warnings(warnings);
  mint::save_checkpoint(res.checkpoint, (fs::path(out) / "checkpoint.bin").string());
  mint::write_trace_csv(res.trace, (fs::path(out) / "loss_trace.csv").string());
  write_echo(cfg, out);
  std::cout << "trained " << res.epochs_run << " epoch(s); initial loss " << res.initial_loss
            << ", final loss " << res.final_loss << "\n"
            << "checkpoint: " << (fs::path(out) / "checkpoint.bin").string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const mint::RunConfig& cfg, const std::string& data, const std::string& ckpt_path,
                 const std::string& out, bool baseline, bool plot_data, const std::string& split) {
  if (!fs::exists(ckpt_path)) {
    std::cerr << "error: checkpoint " << ckpt_path << " does not exist\n";
    return kExitUsage;
  }
  fs::create_directories(out);
  const mint::Checkpoint ckpt = mint::load_checkpoint(ckpt_path);
  mint::DataConfig dc;
  dc.T = std::stoi(ckpt.config_at("T"));
  dc.senior_w_threads = std::stod(ckpt.config_at("senior_w_threads"));
  dc.senior_w_stages = std::stod(ckpt.config_at("senior_w_stages"));
  dc.senior_w_tenure = std::stod(ckpt.config_at("senior_w_tenure"));
  mint::WarningList warnings;
  const mint::Dataset ds = load_data(data, dc, &warnings);

  const mint::ModelConfig mcfg = mint::model_config_from_checkpoint(ckpt);
  const double train_frac = std::stod(ckpt.config_at("train_frac"));
  const double val_frac = std::stod(ckpt.config_at("val_frac"));
  const mint::SplitBounds bounds = mint::chronological_split(ds, train_frac, val_frac);
  const mint::ModelInputs inputs = mint::build_model_inputs(ds, bounds.train_end, mcfg);

  std::size_t lo = bounds.val_end, hi = ds.graph.pairs.size();
  if (split == "validation") {
    lo = bounds.train_end;
    hi = bounds.val_end;
  } else if (split != "test") {
    std::cerr << "error: --split must be test or validation\n";
    return kExitUsage;
  }
  std::size_t skipped = 0;
  const auto queries = mint::make_queries(ds, inputs, lo, hi, &skipped);
  if (queries.empty()) {
    std::cerr << "error: no evaluable queries in the " << split << " split\n";
    return kExitUsage;
  }

  const auto ks = cfg.eval_ks();
  const mint::EvalForward ef = mint::eval_forward_checkpoint(ckpt, ds, inputs);
  const auto results = mint::rank_queries(ef.e_p, ef.e_q, queries);
  const mint::MetricReport rep = mint::compute_metrics(results, ks, skipped);
  const std::string model_name = ckpt.config_at("model");

  std::ofstream mcsv(fs::path(out) / "metrics.csv");
  mcsv << "model,metric,K,value\n";
  write_metrics_csv(mcsv, model_name, rep);

  ordered_json summary;
  summary["model"] = model_name;
  summary["split"] = split;
  summary["query_set_hash"] = mint::query_set_hash(queries);
  summary["metrics"] = metrics_json(rep);
  if (model_name == "mint") {
    const auto diag = mint::seniority_diagnostics(ef, ds, inputs, queries);
    summary["seniority"] = {{"mean_hinge_violation", diag.mean_hinge_violation},
                            {"top1_senior_rate", diag.top1_senior_rate},
                            {"monotone_fraction", diag.monotone_fraction}};
  }

  if (baseline) {
    mint::TrainConfig btc;
    btc.batch_size = std::stoi(ckpt.config_at("batch_size"));
    btc.learning_rate = std::stod(ckpt.config_at("learning_rate"));
    btc.epochs = std::stoi(ckpt.config_at("epochs"));
    btc.seed = std::stoull(ckpt.config_at("seed"));
    btc.train_frac = train_frac;
    btc.val_frac = val_frac;
    const mint::TrainResult bres = mint::train_baseline(ds, mcfg, btc, &warnings);
    const mint::ModelInputs binputs = mint::build_model_inputs(
        ds, bounds.train_end, mint::model_config_from_checkpoint(bres.checkpoint));
    std::size_t bskipped = 0;
    const auto bqueries = mint::make_queries(ds, binputs, lo, hi, &bskipped);
    if (mint::query_set_hash(bqueries) != mint::query_set_hash(queries)) {
      throw mint::MintError("baseline query set diverged from the model query set");
    }
    const mint::EvalForward bef = mint::eval_forward_checkpoint(bres.checkpoint, ds, binputs);
    const auto bresults = mint::rank_queries(bef.e_p, bef.e_q, bqueries);
    const mint::MetricReport brep = mint::compute_metrics(bresults, ks, bskipped);
    write_metrics_csv(mcsv, "bpr_mf", brep);
    summary["baseline"] = metrics_json(brep);
  }

  std::ofstream sj(fs::path(out) / "summary.json");
  sj << summary.dump(2) << '\n';

  if (plot_data) {
    std::ofstream pk(fs::path(out) / "plot_metrics_by_k.csv");
    pk << "model,metric,K,value\n";
    pk.precision(17);
    const int kmax = *std::max_element(ks.begin(), ks.end());
    for (int k = 1; k <= kmax; ++k) {
      pk << model_name << ",ndcg," << k << ',' << mint::ndcg_at_k(results, k) << '\n';
      pk << model_name << ",hit," << k << ',' << mint::hit_at_k(results, k) << '\n';
    }
    const fs::path trace_src = fs::path(ckpt_path).parent_path() / "loss_trace.csv";
    if (fs::exists(trace_src)) {
      fs::copy_file(trace_src, fs::path(out) / "plot_loss_trace.csv",
                    fs::copy_options::overwrite_existing);
    }
  }

  write_echo(cfg, out);
  print_warnings(warnings);
  std::cout << "metrics written to " << (fs::path(out) / "metrics.csv").string() << "\n";
  for (std::size_t i = 0; i < ks.size(); ++i) {
    std::cout << "  ndcg@" << ks[i] << " = " << rep.ndcg[i] << "  hit@" << ks[i] << " = "
              << rep.hit[i] << "\n";
  }
  std::cout << "  mrr = " << rep.mrr_value << "  (" << rep.n_queries << " queries, " << skipped
            << " skipped)\n";
  return kExitOk;
}

int cmd_recommend(const mint::RunConfig& cfg, const std::string& data, const std::string& ckpt_path,
                  int seeker, int k, const std::string& out) {
  if (!fs::exists(ckpt_path)) {
    std::cerr << "error: checkpoint " << ckpt_path << " does not exist\n";
    return kExitUsage;
  }
  const mint::Checkpoint ckpt = mint::load_checkpoint(ckpt_path);
  mint::DataConfig dc;
  dc.T = std::stoi(ckpt.config_at("T"));
  mint::WarningList warnings;
  const mint::Dataset ds = load_data(data, dc, &warnings);
  const double train_frac = std::stod(ckpt.config_at("train_frac"));
  const double val_frac = std::stod(ckpt.config_at("val_frac"));
  const mint::SplitBounds bounds = mint::chronological_split(ds, train_frac, val_frac);
  const mint::ModelInputs inputs =
      mint::build_model_inputs(ds, bounds.train_end, mint::model_config_from_checkpoint(ckpt));

  if (seeker < 0 || seeker >= ds.n_patients ||
      inputs.seeker_row[static_cast<std::size_t>(seeker)] < 0 ||
      !inputs.train_seeker[static_cast<std::size_t>(seeker)]) {
    std::cerr << "error: patient " << seeker << " is not a seeker seen in training\n";
    return kExitUsage;
  }
  const int n_helpers = static_cast<int>(inputs.helpers.size());
  if (k > n_helpers) {
    std::cerr << "warning: only " << n_helpers << " helpers exist; returning all of them\n";
    k = n_helpers;
  }

  const mint::EvalForward ef = mint::eval_forward_checkpoint(ckpt, ds, inputs);
  const mint::Vec scores =
      mint::score_helpers(ef.e_p, ef.e_q, inputs.seeker_row[static_cast<std::size_t>(seeker)]);
  const auto top = mint::top_k(scores, k);

  const mint::PatientTimeline& stl = ds.timelines[static_cast<std::size_t>(seeker)];
  const double s = stl.seniority[static_cast<std::size_t>(std::max(1, stl.n_real) - 1)];
  std::cout << "seeker " << seeker << " (seniority " << s << ")\n";
  std::cout << "rank,helper,score,helper_seniority,seeker_seniority,senior_flag\n";
  std::ostringstream rows;
  rows.precision(17);
  int rank = 1;
  for (const auto& [view, score] : top) {
    const mint::PatientId h = inputs.helpers[static_cast<std::size_t>(view)];
    const mint::PatientTimeline& htl = ds.timelines[static_cast<std::size_t>(h)];
    const double o = htl.seniority[static_cast<std::size_t>(std::max(1, htl.n_real) - 1)];
    rows << rank << ',' << h << ',' << score << ',' << o << ',' << s << ','
         << (o > s ? 1 : 0) << '\n';
    ++rank;
  }
  std::cout << rows.str();
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream f(fs::path(out) / "recommendations.csv");
    f << "rank,helper,score,helper_seniority,seeker_seniority,senior_flag\n" << rows.str();
    write_echo(cfg, out);
  }
  return kExitOk;
}

int cmd_export_embeddings(const mint::RunConfig& cfg, const std::string& data,
                          const std::string& ckpt_path, const std::string& out) {
  if (!fs::exists(ckpt_path)) {
    std::cerr << "error: checkpoint " << ckpt_path << " does not exist\n";
    return kExitUsage;
  }
  const mint::Checkpoint ckpt = mint::load_checkpoint(ckpt_path);
  if (ckpt.config_at("model") != "mint") {
    std::cerr << "error: embeddings export requires a mint checkpoint\n";
    return kExitUsage;
  }
  mint::DataConfig dc;
  dc.T = std::stoi(ckpt.config_at("T"));
  mint::WarningList warnings;
  const mint::Dataset ds = load_data(data, dc, &warnings);
  const double train_frac = std::stod(ckpt.config_at("train_frac"));
  const double val_frac = std::stod(ckpt.config_at("val_frac"));
  const mint::SplitBounds bounds = mint::chronological_split(ds, train_frac, val_frac);
  const mint::ModelInputs inputs =
      mint::build_model_inputs(ds, bounds.train_end, mint::model_config_from_checkpoint(ckpt));
  const mint::EvalForward ef = mint::eval_forward_checkpoint(ckpt, ds, inputs);

  fs::create_directories(out);
  std::ofstream f(fs::path(out) / "embeddings.csv");
  f.precision(17);
  f << "patient,role";
  for (Eigen::Index i = 0; i < ef.x_mu.cols(); ++i) f << ",x_" << i;
  for (Eigen::Index i = 0; i < ef.z_mu.back().cols(); ++i) f << ",z_" << i;
  f << '\n';
  auto write_row = [&](int p, const char* role) {
    f << p << ',' << role;
    for (Eigen::Index i = 0; i < ef.x_mu.cols(); ++i) f << ',' << ef.x_mu(p, i);
    for (Eigen::Index i = 0; i < ef.z_mu.back().cols(); ++i) f << ',' << ef.z_mu.back()(p, i);
    f << '\n';
  };
  for (int p = 0; p < ds.n_patients; ++p) {
    if (ds.graph.is_seeker[static_cast<std::size_t>(p)]) write_row(p, "seeker");
    if (ds.graph.is_helper[static_cast<std::size_t>(p)]) write_row(p, "helper");
  }
  write_echo(cfg, out);
  std::cout << "embeddings written to " << (fs::path(out) / "embeddings.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MINT: seeker-helper recommendation for online health communities"};
  app.require_subcommand(1);

  std::string config_path, out, data, ckpt_path, split = "test";
  bool force = false, baseline = false, plot_data = false;
  int seeker = -1, k = 3;

  const std::vector<std::pair<std::string, std::string>> gen_keys = {
      {"patients", "number of patients"},
      {"threads", "number of threads"},
      {"stages", "number of health stages"},
      {"interactions", "number of interactions"},
      {"seekers", "target seeker-role count (0 = everyone)"},
      {"helpers", "target helper-role count (0 = everyone)"},
      {"span_days", "time span of the community in days"},
      {"gap", "planted seniority gap"},
      {"noise", "planted violation rate"},
      {"T", "timeline length"},
      {"seed", "random seed"},
  };
  const std::vector<std::pair<std::string, std::string>> train_keys = {
      {"T", "timeline length"},
      {"batch", "batch size"},
      {"lr", "learning rate"},
      {"epochs", "training epochs"},
      {"alpha", "weight of the VAE loss"},
      {"beta", "weight of the seniority regularizers"},
      {"gamma", "weight of the smoothness loss"},
      {"lambda", "weight of the BPR loss"},
      {"seed", "random seed"},
      {"ablation", "full|w_vae|wo_senior"},
      {"patience", "early stopping patience (0 = off)"},
      {"clip", "gradient clip norm"},
      {"layers", "graph propagation layers"},
      {"layer_avg", "uniform|paper"},
      {"decoder_graph_cond", "condition the decoder on the snapshot graph (0|1)"},
      {"cons_mode", "hinge|raw seniority constraint"},
      {"hidden", "recurrent hidden width"},
      {"d_thread", "thread embedding dim"},
      {"d_stage", "stage embedding dim"},
      {"d_x", "time-invariant latent dim"},
      {"d_z", "time-varying latent dim"},
      {"train_frac", "train fraction"},
      {"val_frac", "validation fraction"},
      {"baseline_dim", "baseline embedding dim"},
  };
  const std::vector<std::pair<std::string, std::string>> eval_keys = {
      {"ks", "comma-separated metric cutoffs"},
  };

  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset bundle");
  gen->add_option("--config", config_path, "flat key=value config file");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_flag("--force", force, "overwrite a non-empty output directory");
  ConfigBinder gen_binder(gen, gen_keys);

  auto* train = app.add_subcommand("train", "train MINT on a dataset bundle");
  train->add_option("--config", config_path, "flat key=value config file");
  train->add_option("--data", data, "dataset bundle directory")->required();
  train->add_option("--out", out, "output directory")->required();
  train->add_flag("--bpr-mf", baseline, "train the BPR-MF baseline instead");
  ConfigBinder train_binder(train, train_keys);

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint");
  eval->add_option("--config", config_path, "flat key=value config file");
  eval->add_option("--data", data, "dataset bundle directory")->required();
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--out", out, "output directory")->required();
  eval->add_option("--split", split, "test|validation");
  eval->add_flag("--baseline", baseline, "also train and report BPR-MF side by side");
  eval->add_flag("--plot-data", plot_data, "emit per-K and per-epoch series for plotting");
  ConfigBinder eval_binder(eval, eval_keys);

  auto* rec = app.add_subcommand("recommend", "top-K helpers for one seeker");
  rec->add_option("--config", config_path, "flat key=value config file");
  rec->add_option("--data", data, "dataset bundle directory")->required();
  rec->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  rec->add_option("--seeker", seeker, "seeker patient id")->required();
  rec->add_option("--k", k, "number of helpers");
  rec->add_option("--out", out, "optional output directory");

  auto* exp = app.add_subcommand("export-embeddings", "export per-patient latent embeddings");
  exp->add_option("--config", config_path, "flat key=value config file");
  exp->add_option("--data", data, "dataset bundle directory")->required();
  exp->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  exp->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    mint::RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    if (gen->parsed()) {
      gen_binder.apply(cfg);
      return cmd_generate(cfg, out, force);
    }
    if (train->parsed()) {
      train_binder.apply(cfg);
      return cmd_train(cfg, data, out, baseline);
    }
    if (eval->parsed()) {
      eval_binder.apply(cfg);
      return cmd_evaluate(cfg, data, ckpt_path, out, baseline, plot_data, split);
    }
    if (rec->parsed()) {
      return cmd_recommend(cfg, data, ckpt_path, seeker, k, out);
    }
    if (exp->parsed()) {
      return cmd_export_embeddings(cfg, data, ckpt_path, out);
    }
  } catch (const mint::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const mint::MintError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
