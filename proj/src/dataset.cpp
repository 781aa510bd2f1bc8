#include "mint/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

namespace mint {

namespace {

constexpr double kSecondsPerDay = 86400.0;

std::int64_t parse_int_field(const std::string& field, const std::string& path, std::size_t line_no,
                             const char* column) {
  std::int64_t out = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) {
    throw DataError(path + ":" + std::to_string(line_no) + ": malformed value '" + field +
                    "' in column " + column);
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Reads a 4-column integer CSV with a mandatory exact header.
std::vector<std::array<std::int64_t, 4>> read_csv4(const std::string& path,
                                                   const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw DataError(path + ":1: expected header '" + expected_header + "', got '" + line + "'");
  }
  const auto columns = split_csv_line(expected_header);
  std::vector<std::array<std::int64_t, 4>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                      std::to_string(fields.size()));
    }
    std::array<std::int64_t, 4> row{};
    for (int i = 0; i < 4; ++i) {
      row[static_cast<std::size_t>(i)] =
          parse_int_field(fields[static_cast<std::size_t>(i)], path, line_no, columns[static_cast<std::size_t>(i)].c_str());
      if (row[static_cast<std::size_t>(i)] < 0) {
        throw DataError(path + ":" + std::to_string(line_no) + ": negative value in column " +
                        columns[static_cast<std::size_t>(i)]);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<std::pair<PatientId, PatientId>> DynamicSupportGraph::edges_at(int t) const {
  std::vector<std::pair<PatientId, PatientId>> out;
  for (const auto& [s, h, first] : edges) {
    if (first <= t) out.emplace_back(s, h);
  }
  return out;
}

SpMat BipartiteAdjacency::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(R.nonZeros()) * 2);
  for (int k = 0; k < R.outerSize(); ++k) {
    for (SpMat::InnerIterator it(R, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      trips.emplace_back(i, m + j, it.value());
      trips.emplace_back(m + j, i, it.value());
    }
  }
  SpMat A(2 * m, 2 * m);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

Mat BipartiteAdjacency::to_dense() const {
  return Mat(to_sparse());
}

double compute_seniority(int n_distinct_threads, int n_distinct_stages, double tenure_days,
                         const SeniorityScale& scale) {
  double s = 0.0;
  if (scale.max_threads > 0.0) s += scale.w_threads * (n_distinct_threads / scale.max_threads);
  if (scale.max_stages > 0.0) s += scale.w_stages * (n_distinct_stages / scale.max_stages);
  if (scale.max_tenure_days > 0.0) s += scale.w_tenure * (tenure_days / scale.max_tenure_days);
  return s;
}

double compute_seniority(const std::vector<ActivityEvent>& events, std::size_t prefix_len,
                         const SeniorityScale& scale) {
  if (prefix_len == 0 || prefix_len > events.size()) {
    throw DataError("compute_seniority: empty or out-of-range prefix");
  }
  std::set<ThreadId> threads;
  std::set<StageId> stages;
  for (std::size_t i = 0; i < prefix_len; ++i) {
    threads.insert(events[i].thread);
    stages.insert(events[i].stage);
  }
  const double tenure_days =
      static_cast<double>(events[prefix_len - 1].timestamp - events[0].timestamp) / kSecondsPerDay;
  return compute_seniority(static_cast<int>(threads.size()), static_cast<int>(stages.size()),
                           tenure_days, scale);
}

SeniorityScale compute_scale(const std::vector<std::vector<ActivityEvent>>& events_by_patient,
                             double w_threads, double w_stages, double w_tenure) {
  SeniorityScale scale;
  scale.w_threads = w_threads;
  scale.w_stages = w_stages;
  scale.w_tenure = w_tenure;
  for (const auto& evs : events_by_patient) {
    if (evs.empty()) continue;
    std::set<ThreadId> threads;
    std::set<StageId> stages;
    for (const auto& e : evs) {
      threads.insert(e.thread);
      stages.insert(e.stage);
    }
    scale.max_threads = std::max(scale.max_threads, static_cast<double>(threads.size()));
    scale.max_stages = std::max(scale.max_stages, static_cast<double>(stages.size()));
    scale.max_tenure_days =
        std::max(scale.max_tenure_days,
                 static_cast<double>(evs.back().timestamp - evs.front().timestamp) / kSecondsPerDay);
  }
  return scale;
}

PatientTimeline discretize_time(PatientId patient, const std::vector<ActivityEvent>& events,
                                int T, const SeniorityScale& scale, WarningList* warnings) {
  if (T < 1) throw DataError("discretize_time: T must be >= 1");
  PatientTimeline tl;
  tl.patient = patient;
  tl.v.assign(static_cast<std::size_t>(T), 0);
  tl.h.assign(static_cast<std::size_t>(T), 0);
  tl.seniority.assign(static_cast<std::size_t>(T), 0.0);
  tl.mask.assign(static_cast<std::size_t>(T), 0);
  tl.times.assign(static_cast<std::size_t>(T), 0);
  if (events.empty()) {
    warn(warnings, "patient " + std::to_string(patient) + " has no activity events; timeline fully masked");
    return tl;
  }
  const std::size_t n = events.size();
  const std::size_t keep = std::min<std::size_t>(n, static_cast<std::size_t>(T));
  const std::size_t start = n - keep;  // drop oldest
  tl.n_real = static_cast<int>(keep);
  for (std::size_t k = 0; k < keep; ++k) {
    const std::size_t src = start + k;
    tl.v[k] = events[src].thread;
    tl.h[k] = events[src].stage;
    tl.times[k] = events[src].timestamp;
    tl.mask[k] = 1;
    // seniority uses the full history up to this event, not the kept window
    tl.seniority[k] = compute_seniority(events, src + 1, scale);
  }
  // padded tail repeats the last real seniority so the sequence stays monotone
  for (std::size_t k = keep; k < static_cast<std::size_t>(T); ++k) {
    tl.v[k] = tl.v[keep - 1];
    tl.h[k] = tl.h[keep - 1];
    tl.seniority[k] = tl.seniority[keep - 1];
    tl.times[k] = tl.times[keep - 1];
  }
  return tl;
}

Dataset ingest_dataset(const std::string& interactions_path, const std::string& activities_path,
                       const DataConfig& config, WarningList* warnings) {
  auto iraw = read_csv4(interactions_path, "seeker_id,helper_id,thread_id,timestamp");
  auto araw = read_csv4(activities_path, "patient_id,timestamp,thread_id,stage_id");
  if (iraw.empty()) throw DataError(interactions_path + ": no interaction rows");
  if (araw.empty()) throw DataError(activities_path + ": no activity rows");

  // Dense id remapping, keyed by sorted raw id.
  std::map<std::int64_t, PatientId> patient_map;
  std::map<std::int64_t, ThreadId> thread_map;
  std::map<std::int64_t, StageId> stage_map;
  for (const auto& r : araw) {
    patient_map.emplace(r[0], 0);
    thread_map.emplace(r[2], 0);
    stage_map.emplace(r[3], 0);
  }
  for (const auto& r : iraw) thread_map.emplace(r[2], 0);
  int next = 0;
  for (auto& [raw, dense] : patient_map) dense = next++;
  next = 0;
  for (auto& [raw, dense] : thread_map) dense = next++;
  next = 0;
  for (auto& [raw, dense] : stage_map) dense = next++;

  Dataset ds;
  ds.config = config;
  ds.n_patients = static_cast<int>(patient_map.size());
  ds.n_threads = static_cast<int>(thread_map.size());
  ds.n_stages = static_cast<int>(stage_map.size());

  // Activities: remap, sort per patient, drop exact duplicates.
  std::vector<ActivityEvent> activities;
  activities.reserve(araw.size());
  for (const auto& r : araw) {
    activities.push_back(ActivityEvent{patient_map.at(r[0]), r[1], thread_map.at(r[2]),
                                       stage_map.at(r[3])});
  }
  std::stable_sort(activities.begin(), activities.end(), [](const ActivityEvent& a, const ActivityEvent& b) {
    return std::tie(a.patient, a.timestamp, a.thread, a.stage) <
           std::tie(b.patient, b.timestamp, b.thread, b.stage);
  });
  activities.erase(std::unique(activities.begin(), activities.end()), activities.end());

  ds.events_by_patient.assign(static_cast<std::size_t>(ds.n_patients), {});
  for (const auto& e : activities) ds.events_by_patient[static_cast<std::size_t>(e.patient)].push_back(e);

  // Stage regressions are kept; real forum data is noisy.
  int regressions = 0;
  for (const auto& evs : ds.events_by_patient) {
    for (std::size_t i = 1; i < evs.size(); ++i) {
      if (evs[i].stage < evs[i - 1].stage) ++regressions;
    }
  }
  if (regressions > 0) {
    warn(warnings, std::to_string(regressions) + " stage regression(s) found; rows kept");
  }

  // Interactions: validate patients, remap, sort, dedup.
  std::vector<Interaction> interactions;
  interactions.reserve(iraw.size());
  std::size_t line_no = 1;
  for (const auto& r : iraw) {
    ++line_no;
    auto sit = patient_map.find(r[0]);
    if (sit == patient_map.end()) {
      throw DataError(interactions_path + ":" + std::to_string(line_no) +
                      ": seeker id " + std::to_string(r[0]) + " not present in activities");
    }
    auto hit = patient_map.find(r[1]);
    if (hit == patient_map.end()) {
      throw DataError(interactions_path + ":" + std::to_string(line_no) +
                      ": helper id " + std::to_string(r[1]) + " not present in activities");
    }
    if (sit->second == hit->second) {
      throw DataError(interactions_path + ":" + std::to_string(line_no) +
                      ": seeker and helper are the same patient (" + std::to_string(r[0]) + ")");
    }
    interactions.push_back(Interaction{sit->second, hit->second, thread_map.at(r[2]), r[3]});
  }
  std::stable_sort(interactions.begin(), interactions.end(), [](const Interaction& a, const Interaction& b) {
    return std::tie(a.timestamp, a.seeker, a.helper, a.thread) <
           std::tie(b.timestamp, b.seeker, b.helper, b.thread);
  });
  interactions.erase(std::unique(interactions.begin(), interactions.end()), interactions.end());
  ds.interactions = interactions;

  ds.scale = compute_scale(ds.events_by_patient, config.senior_w_threads,
                           config.senior_w_stages, config.senior_w_tenure);

  ds.timelines.reserve(static_cast<std::size_t>(ds.n_patients));
  for (PatientId p = 0; p < ds.n_patients; ++p) {
    ds.timelines.push_back(
        discretize_time(p, ds.events_by_patient[static_cast<std::size_t>(p)], config.T, ds.scale, warnings));
  }

  // Dynamic support graph. Snapshot steps are balanced count quantiles of the
  // chronological interaction order; per-patient timeline steps are resolved
  // by timestamp with the helper fallback rule.
  DynamicSupportGraph& g = ds.graph;
  g.m = ds.n_patients;
  g.T = config.T;
  g.is_seeker.assign(static_cast<std::size_t>(g.m), 0);
  g.is_helper.assign(static_cast<std::size_t>(g.m), 0);
  const std::size_t n = interactions.size();
  int clamped_steps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Interaction& x = interactions[i];
    PairRecord pr;
    pr.seeker = x.seeker;
    pr.helper = x.helper;
    pr.thread = x.thread;
    pr.timestamp = x.timestamp;
    pr.global_step = static_cast<int>((i * static_cast<std::size_t>(config.T)) / n) + 1;
    const PatientTimeline& stl = ds.timelines[static_cast<std::size_t>(x.seeker)];
    const PatientTimeline& htl = ds.timelines[static_cast<std::size_t>(x.helper)];
    int t = stl.step_at_or_before(x.timestamp);
    if (t == 0) {
      t = 1;
      ++clamped_steps;
    }
    pr.seeker_step = t;
    pr.helper_step = (t <= htl.n_real) ? t : std::max(1, htl.n_real);
    g.pairs.push_back(pr);
    g.is_seeker[static_cast<std::size_t>(x.seeker)] = 1;
    g.is_helper[static_cast<std::size_t>(x.helper)] = 1;
  }
  if (clamped_steps > 0) {
    warn(warnings, std::to_string(clamped_steps) +
                       " interaction(s) predate the seeker's kept event window; step clamped to 1");
  }
  std::map<std::pair<PatientId, PatientId>, int> first_step;
  for (const PairRecord& pr : g.pairs) {
    auto key = std::make_pair(pr.seeker, pr.helper);
    auto it = first_step.find(key);
    if (it == first_step.end()) {
      first_step.emplace(key, pr.global_step);
    } else if (pr.global_step < it->second) {
      it->second = pr.global_step;
    }
  }
  for (const auto& [key, step] : first_step) g.edges.emplace_back(key.first, key.second, step);
  for (PatientId p = 0; p < g.m; ++p) {
    if (g.is_seeker[static_cast<std::size_t>(p)]) g.seekers.push_back(p);
    if (g.is_helper[static_cast<std::size_t>(p)]) g.helpers.push_back(p);
  }
  return ds;
}

BipartiteAdjacency build_adjacency(const DynamicSupportGraph& graph, int at_step) {
  if (at_step < 1 || at_step > graph.T) throw DataError("build_adjacency: step out of range");
  BipartiteAdjacency adj;
  adj.m = graph.m;
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& [s, h, first] : graph.edges) {
    if (first <= at_step) trips.emplace_back(s, h, 1.0);
  }
  adj.R.resize(graph.m, graph.m);
  adj.R.setFromTriplets(trips.begin(), trips.end());
  adj.degrees = Vec::Zero(2 * graph.m);
  for (int k = 0; k < adj.R.outerSize(); ++k) {
    for (SpMat::InnerIterator it(adj.R, k); it; ++it) {
      adj.degrees[it.row()] += it.value();
      adj.degrees[graph.m + it.col()] += it.value();
    }
  }
  return adj;
}

void write_bundle(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "interactions.csv");
    out << "seeker_id,helper_id,thread_id,timestamp\n";
    for (const auto& x : ds.interactions) {
      out << x.seeker << ',' << x.helper << ',' << x.thread << ',' << x.timestamp << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "activities.csv");
    out << "patient_id,timestamp,thread_id,stage_id\n";
    for (const auto& evs : ds.events_by_patient) {
      for (const auto& e : evs) {
        out << e.patient << ',' << e.timestamp << ',' << e.thread << ',' << e.stage << '\n';
      }
    }
  }
  {
    nlohmann::ordered_json meta;
    meta["patients"] = ds.n_patients;
    meta["threads"] = ds.n_threads;
    meta["stages"] = ds.n_stages;
    meta["interactions"] = ds.interactions.size();
    meta["T"] = ds.config.T;
    meta["seekers"] = ds.graph.seekers.size();
    meta["helpers"] = ds.graph.helpers.size();
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << '\n';
  }
}

SplitBounds chronological_split(const Dataset& ds, double train_frac, double val_frac) {
  const std::size_t n = ds.graph.pairs.size();
  SplitBounds b;
  b.train_end = static_cast<std::size_t>(static_cast<double>(n) * train_frac);
  b.val_end = static_cast<std::size_t>(static_cast<double>(n) * (train_frac + val_frac));
  b.train_end = std::min(b.train_end, n);
  b.val_end = std::min(std::max(b.val_end, b.train_end), n);
  return b;
}

}  // namespace mint
