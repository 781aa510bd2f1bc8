#include "mint/trainer.hpp"

#include "mint/evaluator.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace mint {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'N', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string path;
  std::ifstream in;
  explicit Reader(const std::string& p) : path(p), in(p, std::ios::binary) {
    if (!in) throw DataError("cannot open checkpoint " + p);
  }
  void need(std::streamsize n, const char* what) {
    if (!in || in.peek() == EOF) fail(what);
    (void)n;
  }
  [[noreturn]] void fail(const char* what) {
    throw DataError("corrupt checkpoint " + path + ": unexpected end of file at offset " +
                    std::to_string(static_cast<long long>(in.tellg())) + " while reading " + what);
  }
  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail(what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) fail(what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    const std::uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::uint64_t len, const char* what) {
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), static_cast<std::streamsize>(len))) fail(what);
    return s;
  }
};

std::string serialize_config(const std::map<std::string, std::string>& config) {
  std::ostringstream os;
  for (const auto& [k, v] : config) os << k << '=' << v << '\n';
  return os.str();
}

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, 8);
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, ckpt.epoch);
  const std::string cfg = serialize_config(ckpt.config);
  put_u64(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  put_u64(out, ckpt.rng_state.size());
  out.write(ckpt.rng_state.data(), static_cast<std::streamsize>(ckpt.rng_state.size()));
  const auto& values = ckpt.params.values();
  put_u32(out, static_cast<std::uint32_t>(values.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, m] : values) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    put_u64(out, offset);
    offset += static_cast<std::uint64_t>(m.size()) * 8;
  }
  for (const auto& [name, m] : values) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
    }
  }
  if (!out) throw DataError("short write to checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  if (!r.in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(path + ": not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != Checkpoint::kVersion) {
    throw DataError(path + ": checkpoint version " + std::to_string(version) +
                    " unsupported (expected " + std::to_string(Checkpoint::kVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.epoch = r.u32("epoch");
  const std::uint64_t cfg_len = r.u64("config length");
  ckpt.config = parse_config(r.str(cfg_len, "config block"));
  const std::uint64_t rng_len = r.u64("rng state length");
  ckpt.rng_state = r.str(rng_len, "rng state");
  const std::uint32_t count = r.u32("entry count");
  struct Entry {
    std::string name;
    std::uint32_t rows, cols;
    std::uint64_t offset;
  };
  std::vector<Entry> manifest;
  std::uint64_t expect_offset = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const std::uint64_t name_len = r.u64("manifest name length");
    e.name = r.str(name_len, "manifest name");
    e.rows = r.u32("manifest rows");
    e.cols = r.u32("manifest cols");
    e.offset = r.u64("manifest offset");
    if (e.offset != expect_offset) {
      throw DataError(path + ": manifest offset mismatch for '" + e.name + "'");
    }
    expect_offset += static_cast<std::uint64_t>(e.rows) * e.cols * 8;
    manifest.push_back(std::move(e));
  }
  for (const Entry& e : manifest) {
    Mat& m = ckpt.params.create(e.name, e.rows, e.cols);
    for (std::uint32_t i = 0; i < e.rows; ++i) {
      for (std::uint32_t j = 0; j < e.cols; ++j) m(i, j) = r.f64(e.name.c_str());
    }
  }
  return ckpt;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace " + path);
  out << "epoch,component,value\n";
  std::ostringstream os;
  os.precision(17);
  for (const TraceRow& row : trace) {
    os.str("");
    os << row.value;
    out << row.epoch << ',' << row.component << ',' << os.str() << '\n';
  }
}

namespace {

// Shared epoch loop driving either the MINT model or the BPR-MF baseline.
struct TrainDriver {
  const Dataset& ds;
  const ModelConfig& mcfg;
  const TrainConfig& tcfg;
  WarningList* warnings;
  ModelInputs inputs;
  bool baseline = false;

  TrainResult run() {
    tcfg.validate();
    const SplitBounds bounds = chronological_split(ds, tcfg.train_frac, tcfg.val_frac);
    if (bounds.train_end == 0) throw DataError("train: empty training split");
    ModelConfig mc = mcfg;
    mc.ablation = tcfg.ablation;
    inputs = build_model_inputs(ds, bounds.train_end, mc);
    if (inputs.train_positives.empty()) throw DataError("train: no training triplets");

    MintModel model(mc, ds.n_threads, ds.n_stages, ds.n_patients);
    BprMfModel mf(static_cast<int>(inputs.seekers.size()), static_cast<int>(inputs.helpers.size()),
                  mc.baseline_dim);
    ParamStore params;
    Rng init_rng(tcfg.seed ^ 0x243f6a8885a308d3ull);
    if (baseline) {
      mf.init_params(params, init_rng);
    } else {
      model.init_params(params, init_rng);
    }

    Rng shuffle_rng(tcfg.seed ^ 0x13198a2e03707344ull);
    Rng noise_rng(tcfg.seed ^ 0xa4093822299f31d0ull);
    Rng neg_rng(tcfg.seed ^ 0x082efa98ec4e6c89ull);
    AdamOptimizer adam(tcfg.learning_rate, tcfg.clip_norm);
    NegativeSampler sampler(static_cast<int>(inputs.helpers.size()), inputs.linked_helpers);

    std::vector<Query> val_queries;
    std::size_t val_skipped = 0;
    const bool track_val = tcfg.patience > 0 && bounds.val_end > bounds.train_end;
    if (track_val) {
      val_queries = make_queries(ds, inputs, bounds.train_end, bounds.val_end, &val_skipped);
    }

    TrainResult result;
    result.trace.push_back(TraceRow{0, "data_pair_violation_rate", inputs.pair_order_violation_rate});
    bool have_initial = false;
    double best_val = -1.0;
    int best_epoch = -1;
    ParamStore best_params;

    std::vector<std::size_t> order(inputs.train_positives.size());
    std::iota(order.begin(), order.end(), 0);

    const char* names[] = {"dis", "smo", "bpr", "reg", "cons", "total"};
    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
      shuffle_rng.shuffle(order);
      double sums[6] = {0, 0, 0, 0, 0, 0};
      int batches = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
        TripletBatch batch;
        for (std::size_t k = start; k < stop; ++k) {
          Triplet t = inputs.train_positives[order[k]];
          auto negs = sampler.sample(t.a_view, 1, neg_rng, warnings);
          if (negs.empty()) continue;
          t.neg_view = negs[0];
          t.neg = inputs.helpers[static_cast<std::size_t>(negs[0])];
          batch.push_back(t);
        }
        if (batch.empty()) continue;

        ForwardCtx ctx(&params);
        double comps[6];
        ad::Var total;
        if (baseline) {
          auto fwd = mf.forward(ctx);
          ad::Var bpr = losses::bpr(fwd.e_p, fwd.e_q, batch);
          comps[0] = comps[1] = comps[3] = comps[4] = 0.0;
          comps[2] = bpr.scalar();
          total = ad::scale(bpr, tcfg.weights.lambda);
          comps[5] = total.scalar();
        } else {
          NoiseBundle noise = make_noise(inputs.n, inputs.T, mc.dims, noise_rng);
          auto fwd = model.population_forward(ctx, inputs, noise);
          auto lv = model.batch_losses(ctx, fwd, inputs, batch, tcfg.weights);
          comps[0] = lv.dis.scalar();
          comps[1] = lv.smo.scalar();
          comps[2] = lv.bpr.scalar();
          comps[3] = lv.reg.scalar();
          comps[4] = lv.cons.scalar();
          comps[5] = lv.total.scalar();
          total = lv.total;
        }
        for (int i = 0; i < 6; ++i) {
          if (!std::isfinite(comps[i])) {
            throw DivergenceError(names[i], std::string("training diverged: component '") +
                                                names[i] + "' is non-finite at epoch " +
                                                std::to_string(epoch));
          }
        }
        if (!have_initial) {
          result.initial_loss = comps[5];
          have_initial = true;
        }
        ctx.tape().backward(total);
        adam.step(params, ctx.param_grads());
        for (int i = 0; i < 6; ++i) sums[i] += comps[i];
        ++batches;
      }
      if (batches == 0) throw DataError("train: epoch produced no usable batches");
      for (int i = 0; i < 6; ++i) {
        result.trace.push_back(TraceRow{epoch, names[i], sums[i] / batches});
      }
      result.final_loss = sums[5] / batches;
      result.epochs_run = epoch;

      if (track_val) {
        const EvalForward ef = baseline ? eval_forward_baseline(params)
                                        : eval_forward(model, params, inputs);
        const auto results = rank_queries(ef.e_p, ef.e_q, val_queries);
        const double v = results.empty() ? 0.0 : ndcg_at_k(results, 10);
        result.trace.push_back(TraceRow{epoch, "val_ndcg10", v});
        if (v > best_val) {
          best_val = v;
          best_epoch = epoch;
          best_params = params;
        } else if (epoch - best_epoch >= tcfg.patience) {
          params = best_params;
          break;
        }
      }
    }

    Checkpoint& ckpt = result.checkpoint;
    ckpt.params = params;
    ckpt.epoch = static_cast<std::uint32_t>(result.epochs_run);
    ckpt.rng_state = noise_rng.serialize();
    ckpt.config["model"] = baseline ? "bpr_mf" : "mint";
    ckpt.config["ablation"] = ablation_name(tcfg.ablation);
    ckpt.config["batch_size"] = std::to_string(tcfg.batch_size);
    ckpt.config["learning_rate"] = std::to_string(tcfg.learning_rate);
    ckpt.config["epochs"] = std::to_string(tcfg.epochs);
    ckpt.config["alpha"] = std::to_string(tcfg.weights.alpha);
    ckpt.config["gamma"] = std::to_string(tcfg.weights.gamma);
    ckpt.config["lambda"] = std::to_string(tcfg.weights.lambda);
    ckpt.config["beta"] = std::to_string(tcfg.weights.beta);
    ckpt.config["seed"] = std::to_string(tcfg.seed);
    ckpt.config["patience"] = std::to_string(tcfg.patience);
    ckpt.config["clip_norm"] = std::to_string(tcfg.clip_norm);
    ckpt.config["train_frac"] = std::to_string(tcfg.train_frac);
    ckpt.config["val_frac"] = std::to_string(tcfg.val_frac);
    ckpt.config["d_thread"] = std::to_string(mc.dims.d_thread);
    ckpt.config["d_stage"] = std::to_string(mc.dims.d_stage);
    ckpt.config["d_x"] = std::to_string(mc.dims.d_x);
    ckpt.config["d_z"] = std::to_string(mc.dims.d_z);
    ckpt.config["hidden"] = std::to_string(mc.dims.hidden);
    ckpt.config["layers"] = std::to_string(mc.layers);
    ckpt.config["layer_avg"] =
        mc.layer_avg == graph::LayerAverage::kUniform ? "uniform" : "paper";
    ckpt.config["decoder_graph_cond"] = mc.decoder_graph_cond ? "1" : "0";
    ckpt.config["cons_mode"] = mc.cons_mode == ConsMode::kHinge ? "hinge" : "raw";
    ckpt.config["baseline_dim"] = std::to_string(mc.baseline_dim);
    ckpt.config["T"] = std::to_string(ds.config.T);
    ckpt.config["senior_w_threads"] = std::to_string(ds.config.senior_w_threads);
    ckpt.config["senior_w_stages"] = std::to_string(ds.config.senior_w_stages);
    ckpt.config["senior_w_tenure"] = std::to_string(ds.config.senior_w_tenure);
    ckpt.config["pair_order_violation_rate"] = std::to_string(inputs.pair_order_violation_rate);
    return result;
  }

  static EvalForward eval_forward_baseline(ParamStore& params) {
    EvalForward ef;
    ef.e_p = params.at("bpr.seeker");
    ef.e_q = params.at("bpr.helper");
    return ef;
  }
};

}  // namespace

TrainResult train_mint(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                       WarningList* warnings) {
  TrainDriver d{ds, mcfg, tcfg, warnings, {}, false};
  d.baseline = false;
  return d.run();
}

TrainResult train_bpr_mf(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                         WarningList* warnings) {
  TrainDriver d{ds, mcfg, tcfg, warnings, {}, false};
  d.baseline = true;
  return d.run();
}

ModelConfig model_config_from_checkpoint(const Checkpoint& ckpt) {
  ModelConfig mc;
  mc.dims.d_thread = std::stoi(ckpt.config_at("d_thread"));
  mc.dims.d_stage = std::stoi(ckpt.config_at("d_stage"));
  mc.dims.d_x = std::stoi(ckpt.config_at("d_x"));
  mc.dims.d_z = std::stoi(ckpt.config_at("d_z"));
  mc.dims.hidden = std::stoi(ckpt.config_at("hidden"));
  mc.layers = std::stoi(ckpt.config_at("layers"));
  mc.layer_avg = ckpt.config_at("layer_avg") == "paper" ? graph::LayerAverage::kPaperLiteral
                                                        : graph::LayerAverage::kUniform;
  mc.decoder_graph_cond = ckpt.config_at("decoder_graph_cond") == "1";
  mc.cons_mode = ckpt.config_at("cons_mode") == "raw" ? ConsMode::kRaw : ConsMode::kHinge;
  mc.ablation = ablation_from_name(ckpt.config_at("ablation"));
  mc.baseline_dim = std::stoi(ckpt.config_at("baseline_dim"));
  return mc;
}

MintModel model_from_checkpoint(const Checkpoint& ckpt, const Dataset& ds) {
  if (ckpt.config_at("model") != "mint") {
    throw DataError("checkpoint holds a '" + ckpt.config_at("model") + "' model, not mint");
  }
  const ModelConfig mc = model_config_from_checkpoint(ckpt);
  MintModel model(mc, ds.n_threads, ds.n_stages, ds.n_patients);
  // Verify the stored parameter set matches this architecture exactly.
  ParamStore expected;
  Rng probe(0);
  model.init_params(expected, probe);
  const auto want = expected.names();
  const auto have = ckpt.params.names();
  if (want != have) {
    throw DataError("checkpoint parameter set is incompatible with ablation '" +
                    ckpt.config_at("ablation") + "' of this model (got " +
                    std::to_string(have.size()) + " arrays, expected " +
                    std::to_string(want.size()) + ")");
  }
  for (const auto& name : want) {
    const Mat& a = expected.at(name);
    const Mat& b = ckpt.params.at(name);
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw DataError("checkpoint parameter '" + name + "' has shape " + std::to_string(b.rows()) +
                      "x" + std::to_string(b.cols()) + ", expected " + std::to_string(a.rows()) +
                      "x" + std::to_string(a.cols()));
    }
  }
  return model;
}

}  // namespace mint
