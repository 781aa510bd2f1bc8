#pragma once

#include "mint/common.hpp"
#include "mint/dataset.hpp"
#include "mint/model.hpp"
#include "mint/synthgen.hpp"
#include "mint/trainer.hpp"

#include <string>
#include <vector>

namespace mint {

// Flat `key = value` run configuration. Every key has a default; unknown
// keys are rejected. CLI flags override file values.
struct RunConfig {
  // generator
  int patients = 500;
  int threads = 60;
  int stages = 6;
  int interactions = 5000;
  int seekers = 0;
  int helpers = 0;
  int span_days = 1825;
  double gap = 0.05;
  double noise = 0.0;
  // data
  int T = 10;
  double senior_w_threads = 1.0 / 3.0;
  double senior_w_stages = 1.0 / 3.0;
  double senior_w_tenure = 1.0 / 3.0;
  // model
  int d_thread = 8;
  int d_stage = 8;
  int d_x = 8;
  int d_z = 8;
  int hidden = 16;
  int layers = 3;
  std::string layer_avg = "uniform";  // uniform | paper
  int decoder_graph_cond = 0;
  std::string cons_mode = "hinge";  // hinge | raw
  int baseline_dim = 16;
  // training
  int batch = 256;
  double lr = 0.001;
  int epochs = 30;
  double alpha = 0.01;
  double beta = 0.001;
  double gamma = 0.1;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  std::string ablation = "full";  // full | w_vae | wo_senior
  int patience = 0;
  double clip = 5.0;
  double train_frac = 0.8;
  double val_frac = 0.1;
  // evaluation
  std::string ks = "3,5,10";

  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  std::string echo() const;  // all keys, `key = value` lines

  GeneratorConfig generator_config() const;
  DataConfig data_config() const;
  ModelConfig model_config() const;
  TrainConfig train_config() const;
  std::vector<int> eval_ks() const;
};

}  // namespace mint
