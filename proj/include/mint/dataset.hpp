#pragma once

#include "mint/common.hpp"

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace mint {

// Dense 0-based ids, stable within one ingested dataset.
using PatientId = int;
using ThreadId = int;
using StageId = int;

struct Interaction {
  PatientId seeker = 0;
  PatientId helper = 0;
  ThreadId thread = 0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

struct ActivityEvent {
  PatientId patient = 0;
  std::int64_t timestamp = 0;
  ThreadId thread = 0;
  StageId stage = 0;

  bool operator==(const ActivityEvent&) const = default;
};

// Dataset-wide normalization constants for the seniority score.
struct SeniorityScale {
  double max_threads = 0.0;
  double max_stages = 0.0;
  double max_tenure_days = 0.0;
  double w_threads = 1.0 / 3.0;
  double w_stages = 1.0 / 3.0;
  double w_tenure = 1.0 / 3.0;
};

struct DataConfig {
  int T = 10;
  double senior_w_threads = 1.0 / 3.0;
  double senior_w_stages = 1.0 / 3.0;
  double senior_w_tenure = 1.0 / 3.0;
};

// Per-patient aligned sequences over the most recent T events.
// Steps are 1-based in the public API; vectors are 0-indexed internally.
struct PatientTimeline {
  PatientId patient = 0;
  std::vector<ThreadId> v;          // thread per step
  std::vector<StageId> h;           // stage per step
  std::vector<double> seniority;    // non-decreasing on real steps
  std::vector<char> mask;           // 1 = real step, 0 = padding
  std::vector<std::int64_t> times;  // event timestamp per real step
  int n_real = 0;

  int T() const { return static_cast<int>(v.size()); }
  // Latest real step (1-based) whose event time is <= ts; 0 if none.
  int step_at_or_before(std::int64_t ts) const {
    int best = 0;
    for (int t = 0; t < n_real; ++t) {
      if (times[static_cast<std::size_t>(t)] <= ts) best = t + 1;
    }
    return best;
  }
};

// One element of the seeker-helper pair set S.
struct PairRecord {
  PatientId seeker = 0;
  PatientId helper = 0;
  ThreadId thread = 0;
  std::int64_t timestamp = 0;
  int global_step = 1;  // snapshot index the edge first appears in
  int seeker_step = 1;  // step in the seeker's timeline
  int helper_step = 1;  // step in the helper's timeline (fallback rule applied)
};

struct DynamicSupportGraph {
  int m = 0;  // patient count
  int T = 0;
  std::vector<PairRecord> pairs;  // S, chronological
  // Distinct (seeker, helper, first_step) edges, sorted by (seeker, helper).
  std::vector<std::tuple<PatientId, PatientId, int>> edges;
  std::vector<char> is_seeker;
  std::vector<char> is_helper;
  std::vector<PatientId> seekers;  // sorted patients holding the seeker role
  std::vector<PatientId> helpers;  // sorted patients holding the helper role

  // Cumulative snapshot E_t: all distinct edges first seen at step <= t.
  std::vector<std::pair<PatientId, PatientId>> edges_at(int t) const;
};

// Block adjacency over 2m nodes: seeker copies 0..m-1, helper copies m..2m-1.
struct BipartiteAdjacency {
  int m = 0;
  SpMat R;        // m x m, R(i,j) = 1 iff (seeker i, helper j) interacted
  Vec degrees;    // length 2m, row sums of A
  SpMat to_sparse() const;  // A = [[0, R], [R^T, 0]]
  Mat to_dense() const;
};

struct Dataset {
  DataConfig config;
  int n_patients = 0;
  int n_threads = 0;
  int n_stages = 0;
  SeniorityScale scale;
  std::vector<Interaction> interactions;  // chronological, exact duplicates removed
  std::vector<std::vector<ActivityEvent>> events_by_patient;  // full history
  std::vector<PatientTimeline> timelines;
  DynamicSupportGraph graph;
};

// Weighted average of the three normalized experience factors.
// A zero maximum makes the corresponding term contribute 0.
double compute_seniority(int n_distinct_threads, int n_distinct_stages,
                         double tenure_days, const SeniorityScale& scale);

// Seniority from a prefix of a patient's full event history.
double compute_seniority(const std::vector<ActivityEvent>& events, std::size_t prefix_len,
                         const SeniorityScale& scale);

// Dataset-wide maxima of the three factors over full per-patient histories.
SeniorityScale compute_scale(const std::vector<std::vector<ActivityEvent>>& events_by_patient,
                             double w_threads = 1.0 / 3.0, double w_stages = 1.0 / 3.0,
                             double w_tenure = 1.0 / 3.0);

// Keep the most recent T events; older ones are dropped, short histories are
// right-padded and masked. `events` must be sorted by timestamp.
PatientTimeline discretize_time(PatientId patient, const std::vector<ActivityEvent>& events,
                                int T, const SeniorityScale& scale,
                                WarningList* warnings = nullptr);

Dataset ingest_dataset(const std::string& interactions_path, const std::string& activities_path,
                       const DataConfig& config, WarningList* warnings = nullptr);

BipartiteAdjacency build_adjacency(const DynamicSupportGraph& graph, int at_step);

// Writes interactions.csv, activities.csv and meta.json into `dir`.
void write_bundle(const Dataset& ds, const std::string& dir);

// Chronological interaction split; returns pair-index boundaries
// [0, train_end) / [train_end, val_end) / [val_end, n).
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
};
SplitBounds chronological_split(const Dataset& ds, double train_frac = 0.8,
                                double val_frac = 0.1);

}  // namespace mint
