#pragma once

#include "mint/common.hpp"
#include "mint/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mint {

struct GeneratorConfig {
  int n_patients = 500;
  int n_threads = 60;
  int n_stages = 6;
  int n_interactions = 5000;
  int T = 10;
  double seniority_gap = 0.05;  // in (0, 1]
  double noise_rate = 0.0;      // in [0, 1)
  std::uint64_t seed = 0;
  // Optional role planting: exact number of patients eligible as
  // seeker/helper (0 = everyone holds both roles). When set, every eligible
  // patient is guaranteed at least one interaction in that role, so the
  // ingested seeker/helper counts match the targets exactly.
  int n_seekers = 0;
  int n_helpers = 0;
  int span_days = 1825;

  void validate() const;
};

struct GroundTruth {
  GeneratorConfig config;
  std::vector<double> expertise;    // one scalar per patient
  std::vector<char> satisfied;      // per interaction, chronological order
  std::vector<char> overlap;        // per interaction
  double satisfaction_rate = 0.0;   // fraction with helper >= seeker + gap
  double overlap_rate = 0.0;        // fraction where the helper had visited
                                    // the seeker's current thread
  std::size_t n_interactions = 0;
};

// Generates a dataset bundle (interactions.csv, activities.csv, meta.json)
// plus a ground_truth.json sidecar into `dir`. Deterministic in the config.
GroundTruth generate(const GeneratorConfig& config, const std::string& dir,
                     WarningList* warnings = nullptr);

// Reads the sidecar back. Throws DataError for bundles without one.
GroundTruth ground_truth_report(const std::string& dir);

}  // namespace mint
