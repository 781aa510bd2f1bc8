#pragma once

#include "mint/dataset.hpp"
#include "mint/model.hpp"
#include "mint/nets.hpp"
#include "mint/objectives.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mint {

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 0.001;
  int epochs = 30;
  LossWeights weights;  // lambda=1, gamma=0.1, alpha=0.01, beta=0.001
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
  // 0 runs all epochs; > 0 stops after `patience` epochs without a new best
  // validation NDCG@10 and restores the best parameters.
  int patience = 0;
  double clip_norm = 5.0;
  double train_frac = 0.8;
  double val_frac = 0.1;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
    weights.validate();
  }
};

// Versioned container of all parameter arrays plus the run configuration.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::map<std::string, std::string> config;  // flat key=value echo
  std::uint32_t epoch = 0;
  std::string rng_state;
  ParamStore params;

  std::string config_at(const std::string& key) const {
    auto it = config.find(key);
    if (it == config.end()) throw MintError("checkpoint config missing key: " + key);
    return it->second;
  }
};

// Binary layout: magic "MINTCKPT", u32 version, u32 epoch,
// length-prefixed config block (key=value lines), length-prefixed rng state,
// u32 entry count, manifest of (name, rows, cols, data offset), then raw
// little-endian f64 arrays in row-major order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

struct TraceRow {
  int epoch = 0;
  std::string component;
  double value = 0.0;
};

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TraceRow> trace;
  double initial_loss = 0.0;  // total of the first batch before any update
  double final_loss = 0.0;    // epoch-average total of the last epoch run
  int epochs_run = 0;
};

TrainResult train_mint(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                       WarningList* warnings = nullptr);

TrainResult train_bpr_mf(const Dataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                         WarningList* warnings = nullptr);

// Rebuilds the model description stored in a checkpoint and verifies that the
// parameter set matches the architecture (an ablation checkpoint loaded into
// a different configuration fails with an explicit error).
ModelConfig model_config_from_checkpoint(const Checkpoint& ckpt);
MintModel model_from_checkpoint(const Checkpoint& ckpt, const Dataset& ds);

}  // namespace mint
