#include "mint/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace mint {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

void GeneratorConfigValidateImpl(const GeneratorConfig& c) {
  if (c.n_patients < 2) throw ConfigError("generator: need at least 2 patients");
  if (c.n_interactions < 1) throw ConfigError("generator: need at least 1 interaction");
  if (c.n_threads < 1 || c.n_stages < 1) throw ConfigError("generator: need >= 1 thread and stage");
  if (c.T < 1) throw ConfigError("generator: T must be >= 1");
  if (!(c.seniority_gap > 0.0 && c.seniority_gap <= 1.0)) {
    throw ConfigError("generator: seniority_gap must be in (0, 1]");
  }
  if (!(c.noise_rate >= 0.0 && c.noise_rate < 1.0)) {
    throw ConfigError("generator: noise_rate must be in [0, 1)");
  }
  if (c.n_seekers < 0 || c.n_helpers < 0 || c.n_seekers > c.n_patients ||
      c.n_helpers > c.n_patients) {
    throw ConfigError("generator: role targets out of range");
  }
  if ((c.n_seekers > 0) != (c.n_helpers > 0)) {
    throw ConfigError("generator: set both role targets or neither");
  }
  if (c.n_seekers > 0) {
    if (c.n_seekers + c.n_helpers < c.n_patients) {
      throw ConfigError("generator: role targets must cover every patient (n_seekers + n_helpers >= n_patients)");
    }
    if (c.n_interactions < c.n_seekers + c.n_helpers) {
      throw ConfigError("generator: n_interactions too small to cover the role targets");
    }
  }
  if (c.span_days < 2) throw ConfigError("generator: span_days must be >= 2");
}

// Per-patient state derived from the fixed activity skeleton.
struct PatientTrack {
  std::vector<ActivityEvent> events;           // sorted by timestamp
  std::vector<double> seniority_at_event;      // full-history prefix seniority
  std::map<ThreadId, std::int64_t> first_visit;  // thread -> first event time
  std::int64_t first_time = 0;

  // index of latest event with timestamp <= tau, or -1
  int event_at_or_before(std::int64_t tau) const {
    int lo = 0, hi = static_cast<int>(events.size()) - 1, best = -1;
    while (lo <= hi) {
      const int mid = (lo + hi) / 2;
      if (events[static_cast<std::size_t>(mid)].timestamp <= tau) {
        best = mid;
        lo = mid + 1;
      } else {
        hi = mid - 1;
      }
    }
    return best;
  }
  bool active_at(std::int64_t tau) const { return !events.empty() && events.front().timestamp <= tau; }
  double seniority_at(std::int64_t tau) const {
    const int k = event_at_or_before(tau);
    return k < 0 ? 0.0 : seniority_at_event[static_cast<std::size_t>(k)];
  }
  ThreadId current_thread(std::int64_t tau) const {
    const int k = event_at_or_before(tau);
    return k < 0 ? 0 : events[static_cast<std::size_t>(k)].thread;
  }
  bool visited(ThreadId th, std::int64_t tau) const {
    auto it = first_visit.find(th);
    return it != first_visit.end() && it->second <= tau;
  }
};

struct Planned {
  std::int64_t tau;
  PatientId seeker;
  PatientId helper;
  ThreadId thread;
  bool satisfied;
  bool overlap;
};

}  // namespace

void GeneratorConfig::validate() const { GeneratorConfigValidateImpl(*this); }

GroundTruth generate(const GeneratorConfig& config, const std::string& dir, WarningList* warnings) {
  config.validate();
  namespace fs = std::filesystem;
  Rng rng(config.seed);
  const int m = config.n_patients;
  const std::int64_t span = static_cast<std::int64_t>(config.span_days) * kSecondsPerDay;

  // --- expertise and role eligibility ------------------------------------
  std::vector<double> expertise(static_cast<std::size_t>(m));
  for (double& x : expertise) x = rng.unit();

  std::vector<char> seeker_ok(static_cast<std::size_t>(m), 1);
  std::vector<char> helper_ok(static_cast<std::size_t>(m), 1);
  if (config.n_seekers > 0) {
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return expertise[static_cast<std::size_t>(a)] > expertise[static_cast<std::size_t>(b)];
    });
    std::fill(seeker_ok.begin(), seeker_ok.end(), 0);
    std::fill(helper_ok.begin(), helper_ok.end(), 0);
    for (int k = 0; k < config.n_helpers; ++k) helper_ok[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
    for (int k = 0; k < config.n_seekers; ++k) {
      seeker_ok[static_cast<std::size_t>(order[static_cast<std::size_t>(m - 1 - k)])] = 1;
    }
  }

  // --- phase 1: activity skeletons ----------------------------------------
  // Higher expertise joins earlier, visits more threads and progresses
  // through more stages, so the seniority factors all track the planted
  // scalar.
  const int ev_max = std::max(8, 2 * config.T);
  const int pool_extra = std::min(config.n_threads - 1, 10);
  std::vector<PatientTrack> tracks(static_cast<std::size_t>(m));
  std::vector<std::vector<ActivityEvent>> events_by_patient(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double xi = expertise[static_cast<std::size_t>(i)];
    const int n_events = 3 + static_cast<int>(std::floor(xi * (ev_max - 3))) +
                         static_cast<int>(rng.below(3));
    const auto first = static_cast<std::int64_t>((1.0 - xi) * 0.7 * static_cast<double>(span) *
                                                 rng.uniform(0.6, 1.0));
    std::set<std::int64_t> times;
    times.insert(first);
    while (static_cast<int>(times.size()) < n_events) {
      times.insert(first + 1 +
                   static_cast<std::int64_t>(rng.unit() * static_cast<double>(span - first - 1)));
    }
    // thread pool: popularity-weighted distinct subset, size grows with expertise
    const int pool_size = std::min(config.n_threads, 2 + static_cast<int>(std::floor(xi * pool_extra)));
    std::vector<int> pool;
    std::vector<double> popularity(static_cast<std::size_t>(config.n_threads));
    for (int j = 0; j < config.n_threads; ++j) popularity[static_cast<std::size_t>(j)] = 1.0 / (1.0 + j);
    while (static_cast<int>(pool.size()) < pool_size) {
      const int cand = static_cast<int>(rng.weighted(popularity));
      popularity[static_cast<std::size_t>(cand)] = 0.0;
      pool.push_back(cand);
    }
    const int target_stages = 1 + static_cast<int>(std::floor(xi * (config.n_stages - 1)));
    int k = 0;
    auto& evs = events_by_patient[static_cast<std::size_t>(i)];
    for (std::int64_t t : times) {
      ActivityEvent e;
      e.patient = i;
      e.timestamp = t;
      e.thread = pool[rng.below(pool.size())];
      e.stage = std::min(target_stages - 1,
                         static_cast<int>(std::floor(static_cast<double>(k) /
                                                     static_cast<double>(n_events) * target_stages)));
      evs.push_back(e);
      ++k;
    }
  }

  const SeniorityScale scale = compute_scale(events_by_patient);
  for (int i = 0; i < m; ++i) {
    PatientTrack& tr = tracks[static_cast<std::size_t>(i)];
    tr.events = events_by_patient[static_cast<std::size_t>(i)];
    tr.first_time = tr.events.front().timestamp;
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
      tr.seniority_at_event.push_back(compute_seniority(tr.events, k + 1, scale));
      auto it = tr.first_visit.find(tr.events[k].thread);
      if (it == tr.first_visit.end()) tr.first_visit.emplace(tr.events[k].thread, tr.events[k].timestamp);
    }
  }

  // --- phase 2: interactions -----------------------------------------------
  // A pair is "satisfied" when the helper's seniority at interaction time
  // exceeds the seeker's by at least the gap; noise interactions are planted
  // as deliberate violations so the measured satisfaction rate concentrates
  // on 1 - noise_rate.
  std::vector<int> seeker_pool_all, helper_pool_all;
  for (int i = 0; i < m; ++i) {
    if (seeker_ok[static_cast<std::size_t>(i)]) seeker_pool_all.push_back(i);
    if (helper_ok[static_cast<std::size_t>(i)]) helper_pool_all.push_back(i);
  }

  std::set<std::tuple<PatientId, PatientId, ThreadId, std::int64_t>> used_keys;
  std::vector<Planned> planned;
  planned.reserve(static_cast<std::size_t>(config.n_interactions));
  int fallback_flips = 0;

  auto draw_tau = [&](std::int64_t lo) {
    return lo + static_cast<std::int64_t>(rng.unit() * static_cast<double>(span - lo));
  };

  // choose a helper for (seeker, tau); returns -1 when no candidate matches
  auto pick_helper = [&](int seeker, std::int64_t tau, double s, ThreadId theta, bool violate) {
    std::vector<int> pool;
    std::vector<double> w;
    for (int h : helper_pool_all) {
      if (h == seeker) continue;
      const PatientTrack& tr = tracks[static_cast<std::size_t>(h)];
      if (!tr.active_at(tau)) continue;
      const double o = tr.seniority_at(tau);
      const bool sat = o >= s + config.seniority_gap;
      if (sat == violate) continue;
      pool.push_back(h);
      const double boost = tr.visited(theta, tau) ? 5.0 : 1.0;
      w.push_back((0.05 + expertise[static_cast<std::size_t>(h)]) * boost);
    }
    if (pool.empty()) return -1;
    return pool[rng.weighted(w)];
  };

  auto pick_seeker = [&](std::int64_t tau, int exclude) {
    std::vector<int> pool;
    std::vector<double> w;
    for (int p : seeker_pool_all) {
      if (p == exclude) continue;
      if (!tracks[static_cast<std::size_t>(p)].active_at(tau)) continue;
      pool.push_back(p);
      w.push_back(1.05 - expertise[static_cast<std::size_t>(p)]);
    }
    if (pool.empty()) return -1;
    return pool[rng.weighted(w)];
  };

  auto record = [&](int seeker, int helper, std::int64_t tau) {
    const PatientTrack& st = tracks[static_cast<std::size_t>(seeker)];
    const PatientTrack& ht = tracks[static_cast<std::size_t>(helper)];
    const ThreadId theta = st.current_thread(tau);
    auto key = std::make_tuple(seeker, helper, theta, tau);
    if (used_keys.count(key)) return false;
    used_keys.insert(key);
    Planned pl;
    pl.tau = tau;
    pl.seeker = seeker;
    pl.helper = helper;
    pl.thread = theta;
    pl.satisfied = ht.seniority_at(tau) >= st.seniority_at(tau) + config.seniority_gap;
    pl.overlap = ht.visited(theta, tau);
    planned.push_back(pl);
    return true;
  };

  // coverage sweep: one guaranteed interaction per eligible seeker / helper
  if (config.n_seekers > 0) {
    for (int p : seeker_pool_all) {
      const std::int64_t first = tracks[static_cast<std::size_t>(p)].first_time;
      bool done = false;
      for (int attempt = 0; attempt < 400 && !done; ++attempt) {
        const std::int64_t lo = first + (span - first) / 2;
        const std::int64_t tau = draw_tau(lo);
        const bool violate = attempt < 200 && rng.unit() < config.noise_rate;
        const double s = tracks[static_cast<std::size_t>(p)].seniority_at(tau);
        const ThreadId theta = tracks[static_cast<std::size_t>(p)].current_thread(tau);
        int h = pick_helper(p, tau, s, theta, violate);
        if (h < 0 && attempt >= 200) {
          h = pick_helper(p, tau, s, theta, !violate);
          if (h >= 0) ++fallback_flips;
        }
        if (h >= 0) done = record(p, h, tau);
      }
      if (!done) throw ConfigError("generator: infeasible config, cannot cover seeker " + std::to_string(p));
    }
    std::vector<char> covered(static_cast<std::size_t>(m), 0);
    for (const Planned& pl : planned) covered[static_cast<std::size_t>(pl.helper)] = 1;
    for (int h : helper_pool_all) {
      if (covered[static_cast<std::size_t>(h)]) continue;
      const std::int64_t first = tracks[static_cast<std::size_t>(h)].first_time;
      bool done = false;
      for (int attempt = 0; attempt < 400 && !done; ++attempt) {
        const std::int64_t lo = first + (span - first) / 2;
        const std::int64_t tau = draw_tau(lo);
        const bool violate = attempt < 200 && rng.unit() < config.noise_rate;
        const double o = tracks[static_cast<std::size_t>(h)].seniority_at(tau);
        // scan eligible seekers matching the satisfy/violate target
        std::vector<int> pool;
        std::vector<double> w;
        for (int p : seeker_pool_all) {
          if (p == h) continue;
          const PatientTrack& st = tracks[static_cast<std::size_t>(p)];
          if (!st.active_at(tau)) continue;
          const bool sat = o >= st.seniority_at(tau) + config.seniority_gap;
          if (sat == violate && attempt < 200) continue;
          pool.push_back(p);
          w.push_back(1.05 - expertise[static_cast<std::size_t>(p)]);
        }
        if (pool.empty()) continue;
        const int p = pool[rng.weighted(w)];
        done = record(p, h, tau);
      }
      if (!done) throw ConfigError("generator: infeasible config, cannot cover helper " + std::to_string(h));
    }
  }

  // main sampling loop
  const std::int64_t tau_floor = span / 4;
  while (static_cast<int>(planned.size()) < config.n_interactions) {
    bool done = false;
    for (int attempt = 0; attempt < 400 && !done; ++attempt) {
      const std::int64_t tau = draw_tau(tau_floor);
      const bool violate = attempt < 200 && rng.unit() < config.noise_rate;
      const int p = pick_seeker(tau, -1);
      if (p < 0) continue;
      const double s = tracks[static_cast<std::size_t>(p)].seniority_at(tau);
      const ThreadId theta = tracks[static_cast<std::size_t>(p)].current_thread(tau);
      int h = pick_helper(p, tau, s, theta, violate);
      if (h < 0 && attempt >= 200) {
        h = pick_helper(p, tau, s, theta, !violate);
        if (h >= 0) ++fallback_flips;
      }
      if (h >= 0) done = record(p, h, tau);
    }
    if (!done) throw ConfigError("generator: infeasible config, cannot place interaction");
  }
  if (fallback_flips > 0) {
    warn(warnings, std::to_string(fallback_flips) +
                       " interaction(s) could not honor their noise draw; opposite class used");
  }

  std::stable_sort(planned.begin(), planned.end(), [](const Planned& a, const Planned& b) {
    return std::tie(a.tau, a.seeker, a.helper, a.thread) <
           std::tie(b.tau, b.seeker, b.helper, b.thread);
  });

  // --- write bundle ---------------------------------------------------------
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / "interactions.csv");
    out << "seeker_id,helper_id,thread_id,timestamp\n";
    for (const Planned& pl : planned) {
      out << pl.seeker << ',' << pl.helper << ',' << pl.thread << ',' << pl.tau << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "activities.csv");
    out << "patient_id,timestamp,thread_id,stage_id\n";
    for (const auto& evs : events_by_patient) {
      for (const auto& e : evs) {
        out << e.patient << ',' << e.timestamp << ',' << e.thread << ',' << e.stage << '\n';
      }
    }
  }
  // normalize + meta via the regular ingestion path
  DataConfig dc;
  dc.T = config.T;
  Dataset ds = ingest_dataset((fs::path(dir) / "interactions.csv").string(),
                              (fs::path(dir) / "activities.csv").string(), dc, warnings);
  write_bundle(ds, dir);

  GroundTruth gt;
  gt.config = config;
  gt.expertise = expertise;
  gt.n_interactions = planned.size();
  std::size_t n_sat = 0, n_ov = 0;
  for (const Planned& pl : planned) {
    gt.satisfied.push_back(pl.satisfied ? 1 : 0);
    gt.overlap.push_back(pl.overlap ? 1 : 0);
    n_sat += pl.satisfied ? 1 : 0;
    n_ov += pl.overlap ? 1 : 0;
  }
  gt.satisfaction_rate = static_cast<double>(n_sat) / static_cast<double>(planned.size());
  gt.overlap_rate = static_cast<double>(n_ov) / static_cast<double>(planned.size());

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config"] = {{"n_patients", config.n_patients},
                 {"n_threads", config.n_threads},
                 {"n_stages", config.n_stages},
                 {"n_interactions", config.n_interactions},
                 {"T", config.T},
                 {"seniority_gap", config.seniority_gap},
                 {"noise_rate", config.noise_rate},
                 {"seed", config.seed},
                 {"n_seekers", config.n_seekers},
                 {"n_helpers", config.n_helpers},
                 {"span_days", config.span_days}};
  j["expertise"] = gt.expertise;
  j["satisfied"] = gt.satisfied;
  j["overlap"] = gt.overlap;
  j["satisfaction_rate"] = gt.satisfaction_rate;
  j["overlap_rate"] = gt.overlap_rate;
  std::ofstream out(fs::path(dir) / "ground_truth.json");
  out << j.dump(2) << '\n';
  return gt;
}

GroundTruth ground_truth_report(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path p = fs::path(dir) / "ground_truth.json";
  std::ifstream in(p);
  if (!in) throw DataError("no ground-truth sidecar at " + p.string() + " (foreign bundle?)");
  nlohmann::json j;
  in >> j;
  GroundTruth gt;
  const auto& c = j.at("config");
  gt.config.n_patients = c.at("n_patients").get<int>();
  gt.config.n_threads = c.at("n_threads").get<int>();
  gt.config.n_stages = c.at("n_stages").get<int>();
  gt.config.n_interactions = c.at("n_interactions").get<int>();
  gt.config.T = c.at("T").get<int>();
  gt.config.seniority_gap = c.at("seniority_gap").get<double>();
  gt.config.noise_rate = c.at("noise_rate").get<double>();
  gt.config.seed = c.at("seed").get<std::uint64_t>();
  gt.config.n_seekers = c.at("n_seekers").get<int>();
  gt.config.n_helpers = c.at("n_helpers").get<int>();
  gt.config.span_days = c.at("span_days").get<int>();
  gt.expertise = j.at("expertise").get<std::vector<double>>();
  for (int v : j.at("satisfied").get<std::vector<int>>()) gt.satisfied.push_back(static_cast<char>(v));
  for (int v : j.at("overlap").get<std::vector<int>>()) gt.overlap.push_back(static_cast<char>(v));
  gt.satisfaction_rate = j.at("satisfaction_rate").get<double>();
  gt.overlap_rate = j.at("overlap_rate").get<double>();
  gt.n_interactions = gt.satisfied.size();
  return gt;
}

}  // namespace mint
