#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mint/dataset.hpp"
#include "test_util.hpp"

#include <set>
#include <sstream>

using namespace mint;
using testutil::TmpDir;
using testutil::write_file;

namespace {

std::vector<ActivityEvent> make_events(PatientId p, int n, std::int64_t start = 0,
                                       std::int64_t step = 86400) {
  std::vector<ActivityEvent> evs;
  for (int i = 0; i < n; ++i) {
    evs.push_back(ActivityEvent{p, start + i * step, i % 5, std::min(i / 3, 3)});
  }
  return evs;
}

}  // namespace

TEST_CASE("minimal dataset: one interaction, two patients") {
  TmpDir dir("ingest_min");
  auto [ipath, apath] = testutil::write_tiny_dataset(dir);
  WarningList warnings;
  DataConfig dc;
  dc.T = 10;
  Dataset ds = ingest_dataset(ipath, apath, dc, &warnings);
  CHECK(ds.n_patients == 2);
  CHECK(ds.graph.m == 2);
  CHECK(ds.graph.pairs.size() == 1);
  CHECK(ds.timelines.size() == 2);
  CHECK(ds.timelines[0].T() == 10);
  CHECK(ds.timelines[0].n_real == 1);
  CHECK(ds.timelines[1].n_real == 2);
  CHECK(ds.graph.is_seeker[0]);
  CHECK(ds.graph.is_helper[1]);
  CHECK_FALSE(ds.graph.is_helper[0]);
}

TEST_CASE("malformed row errors name the line") {
  TmpDir dir("ingest_bad");
  write_file(dir.file("interactions.csv"),
             "seeker_id,helper_id,thread_id,timestamp\n"
             "0,1,0,notanumber\n");
  write_file(dir.file("activities.csv"),
             "patient_id,timestamp,thread_id,stage_id\n"
             "0,1,0,0\n1,1,0,0\n");
  DataConfig dc;
  try {
    ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
    CHECK(std::string(e.what()).find("notanumber") != std::string::npos);
  }
}

TEST_CASE("unknown patient in interactions names the id") {
  TmpDir dir("ingest_unknown");
  write_file(dir.file("interactions.csv"),
             "seeker_id,helper_id,thread_id,timestamp\n"
             "0,77,0,1000\n");
  write_file(dir.file("activities.csv"),
             "patient_id,timestamp,thread_id,stage_id\n"
             "0,1,0,0\n1,2,0,0\n");
  DataConfig dc;
  try {
    ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("77") != std::string::npos);
  }
}

TEST_CASE("empty dataset is rejected") {
  TmpDir dir("ingest_empty");
  write_file(dir.file("interactions.csv"), "seeker_id,helper_id,thread_id,timestamp\n");
  write_file(dir.file("activities.csv"),
             "patient_id,timestamp,thread_id,stage_id\n0,1,0,0\n");
  DataConfig dc;
  CHECK_THROWS_AS(
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr),
      DataError);
}

TEST_CASE("discretize keeps the most recent T events in order") {
  SeniorityScale scale{5.0, 4.0, 100.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  auto evs = make_events(0, 12);
  PatientTimeline tl = discretize_time(0, evs, 10, scale, nullptr);
  CHECK(tl.n_real == 10);
  // steps hold events 2..11
  for (int t = 0; t < 10; ++t) {
    CHECK(tl.v[static_cast<std::size_t>(t)] == (t + 2) % 5);
    CHECK(tl.mask[static_cast<std::size_t>(t)] == 1);
  }
}

TEST_CASE("discretize right-pads short histories") {
  SeniorityScale scale{5.0, 4.0, 100.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  auto evs = make_events(0, 3);
  PatientTimeline tl = discretize_time(0, evs, 10, scale, nullptr);
  CHECK(tl.n_real == 3);
  for (int t = 0; t < 3; ++t) CHECK(tl.mask[static_cast<std::size_t>(t)] == 1);
  for (int t = 3; t < 10; ++t) {
    CHECK(tl.mask[static_cast<std::size_t>(t)] == 0);
    CHECK(tl.v[static_cast<std::size_t>(t)] == tl.v[2]);  // forwarded ids
    CHECK(tl.seniority[static_cast<std::size_t>(t)] == tl.seniority[2]);
  }
}

TEST_CASE("discretize warns on a patient with zero events") {
  SeniorityScale scale;
  WarningList warnings;
  PatientTimeline tl = discretize_time(7, {}, 10, scale, &warnings);
  CHECK(tl.n_real == 0);
  for (int t = 0; t < 10; ++t) CHECK(tl.mask[static_cast<std::size_t>(t)] == 0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("7") != std::string::npos);
}

TEST_CASE("seniority normalization bounds") {
  SeniorityScale scale{100.0, 10.0, 1000.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  // all maxima reached -> 1.0
  CHECK(compute_seniority(100, 10, 1000.0, scale) == doctest::Approx(1.0));
  // first event, first stage, day zero with maxima (100, 10, 1000)
  CHECK(compute_seniority(1, 1, 0.0, scale) == doctest::Approx(0.0366666666666667));
  // zero maxima contribute nothing
  SeniorityScale degenerate{0.0, 0.0, 0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(compute_seniority(5, 5, 5.0, degenerate) == 0.0);
}

TEST_CASE("seniority grows only via tenure when nothing new is visited") {
  SeniorityScale scale{10.0, 5.0, 100.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<ActivityEvent> evs{
      ActivityEvent{0, 0, 3, 1},
      ActivityEvent{0, 86400, 3, 1},
      ActivityEvent{0, 2 * 86400, 3, 1},
  };
  const double s1 = compute_seniority(evs, 1, scale);
  const double s2 = compute_seniority(evs, 2, scale);
  const double s3 = compute_seniority(evs, 3, scale);
  CHECK(s2 - s1 == doctest::Approx((1.0 / 100.0) / 3.0));
  CHECK(s3 - s2 == doctest::Approx((1.0 / 100.0) / 3.0));
}

TEST_CASE("seniority is non-decreasing along random histories") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ActivityEvent> evs;
    std::int64_t t = 0;
    for (int i = 0; i < 30; ++i) {
      t += static_cast<std::int64_t>(rng.below(86400 * 3));
      evs.push_back(ActivityEvent{0, t, static_cast<int>(rng.below(8)),
                                  static_cast<int>(rng.below(4))});
    }
    SeniorityScale scale{8.0, 4.0, 90.0, 1.0 / 3, 1.0 / 3, 1.0 / 3};
    double prev = -1.0;
    for (std::size_t k = 1; k <= evs.size(); ++k) {
      const double s = compute_seniority(evs, k, scale);
      CHECK(s >= prev);
      prev = s;
    }
  }
}

TEST_CASE("adjacency of a single interaction") {
  TmpDir dir("adj_single");
  auto [ipath, apath] = testutil::write_tiny_dataset(dir);
  DataConfig dc;
  Dataset ds = ingest_dataset(ipath, apath, dc, nullptr);
  BipartiteAdjacency adj = build_adjacency(ds.graph, ds.graph.T);
  CHECK(adj.m == 2);
  Mat R(adj.R);
  CHECK(R(0, 1) == 1.0);
  CHECK(R.sum() == 1.0);
  Mat A = adj.to_dense();
  CHECK(A.rows() == 4);
  CHECK(A.sum() == 2.0);  // two symmetric entries
  CHECK(A(0, 3) == 1.0);  // seeker 0 -> helper copy of 1
  CHECK(A(3, 0) == 1.0);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three-patient fan-out degrees") {
  TmpDir dir("adj_fan");
  write_file(dir.file("interactions.csv"),
             "seeker_id,helper_id,thread_id,timestamp\n"
             "0,1,0,1000\n"
             "0,2,0,2000\n");
  write_file(dir.file("activities.csv"),
             "patient_id,timestamp,thread_id,stage_id\n"
             "0,1,0,0\n1,2,0,0\n2,3,0,0\n");
  DataConfig dc;
  Dataset ds =
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr);
  BipartiteAdjacency adj = build_adjacency(ds.graph, ds.graph.T);
  Mat R(adj.R);
  CHECK(R.row(0).sum() == 2.0);
  CHECK(adj.degrees[0] == 2.0);  // seeker node 0
  CHECK(adj.degrees[adj.m + 1] == 1.0);
  CHECK(adj.degrees[adj.m + 2] == 1.0);
}

TEST_CASE("empty edge set yields the zero matrix") {
  DynamicSupportGraph g;
  g.m = 3;
  g.T = 5;
  BipartiteAdjacency adj = build_adjacency(g, 2);
  CHECK(adj.to_dense().cwiseAbs().sum() == 0.0);
}

TEST_CASE("snapshots are cumulative and S maps onto R") {
  TmpDir dir("snapshots");
  std::ostringstream ints, acts;
  ints << "seeker_id,helper_id,thread_id,timestamp\n";
  acts << "patient_id,timestamp,thread_id,stage_id\n";
  Rng rng(5);
  const int m = 12;
  for (int p = 0; p < m; ++p) {
    for (int e = 0; e < 4; ++e) {
      acts << p << ',' << 1000 * p + 100 * e << ',' << rng.below(6) << ',' << rng.below(3) << '\n';
    }
  }
  for (int i = 0; i < 40; ++i) {
    const int s = static_cast<int>(rng.below(m));
    int h = static_cast<int>(rng.below(m));
    if (h == s) h = (h + 1) % m;
    ints << s << ',' << h << ',' << rng.below(6) << ',' << 500 + i * 37 << '\n';
  }
  write_file(dir.file("interactions.csv"), ints.str());
  write_file(dir.file("activities.csv"), acts.str());
  DataConfig dc;
  dc.T = 6;
  Dataset ds =
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr);

  for (int t = 1; t < ds.graph.T; ++t) {
    auto now = ds.graph.edges_at(t);
    auto next = ds.graph.edges_at(t + 1);
    std::set<std::pair<PatientId, PatientId>> next_set(next.begin(), next.end());
    for (const auto& e : now) CHECK(next_set.count(e) == 1);
  }
  // every pair in S appears as a 1-entry of R_T
  BipartiteAdjacency adj = build_adjacency(ds.graph, ds.graph.T);
  Mat R(adj.R);
  for (const auto& pr : ds.graph.pairs) {
    CHECK(R(pr.seeker, pr.helper) == 1.0);
  }
  Mat A = adj.to_dense();
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("round-trip: ingest, serialize, ingest again") {
  TmpDir dir("roundtrip");
  std::ostringstream ints, acts;
  ints << "seeker_id,helper_id,thread_id,timestamp\n";
  acts << "patient_id,timestamp,thread_id,stage_id\n";
  Rng rng(17);
  for (int p = 0; p < 8; ++p) {
    for (int e = 0; e < 5; ++e) {
      acts << p << ',' << 10000 * p + 777 * e << ',' << rng.below(5) << ',' << rng.below(3) << '\n';
    }
  }
  for (int i = 0; i < 25; ++i) {
    const int s = static_cast<int>(rng.below(8));
    int h = static_cast<int>(rng.below(8));
    if (h == s) h = (h + 1) % 8;
    ints << s << ',' << h << ',' << rng.below(5) << ',' << 100 + i * 311 << '\n';
  }
  write_file(dir.file("interactions.csv"), ints.str());
  write_file(dir.file("activities.csv"), acts.str());
  DataConfig dc;
  dc.T = 4;
  Dataset a =
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr);

  TmpDir dir2("roundtrip2");
  write_bundle(a, dir2.str());
  Dataset b =
      ingest_dataset(dir2.file("interactions.csv"), dir2.file("activities.csv"), dc, nullptr);

  CHECK(a.n_patients == b.n_patients);
  CHECK(a.interactions.size() == b.interactions.size());
  for (std::size_t i = 0; i < a.interactions.size(); ++i) {
    CHECK(a.interactions[i] == b.interactions[i]);
  }
  REQUIRE(a.timelines.size() == b.timelines.size());
  for (std::size_t p = 0; p < a.timelines.size(); ++p) {
    CHECK(a.timelines[p].v == b.timelines[p].v);
    CHECK(a.timelines[p].h == b.timelines[p].h);
    CHECK(a.timelines[p].mask == b.timelines[p].mask);
    CHECK(a.timelines[p].seniority == b.timelines[p].seniority);
  }
  CHECK(a.graph.edges == b.graph.edges);
  REQUIRE(a.graph.pairs.size() == b.graph.pairs.size());
  for (std::size_t i = 0; i < a.graph.pairs.size(); ++i) {
    CHECK(a.graph.pairs[i].seeker == b.graph.pairs[i].seeker);
    CHECK(a.graph.pairs[i].helper == b.graph.pairs[i].helper);
    CHECK(a.graph.pairs[i].seeker_step == b.graph.pairs[i].seeker_step);
    CHECK(a.graph.pairs[i].helper_step == b.graph.pairs[i].helper_step);
    CHECK(a.graph.pairs[i].global_step == b.graph.pairs[i].global_step);
  }
}

TEST_CASE("stage regressions are kept with a warning") {
  TmpDir dir("regress");
  write_file(dir.file("interactions.csv"),
             "seeker_id,helper_id,thread_id,timestamp\n0,1,0,5000\n");
  write_file(dir.file("activities.csv"),
             "patient_id,timestamp,thread_id,stage_id\n"
             "0,1000,0,2\n"
             "0,2000,1,1\n"  // stage went backwards
             "1,1500,0,0\n");
  DataConfig dc;
  WarningList warnings;
  Dataset ds =
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, &warnings);
  CHECK(ds.events_by_patient[0].size() == 2);
  bool found = false;
  for (const auto& w : warnings) {
    if (w.find("regression") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("self-interactions are rejected") {
  TmpDir dir("selfint");
  write_file(dir.file("interactions.csv"),
             "seeker_id,helper_id,thread_id,timestamp\n0,0,0,5000\n");
  write_file(dir.file("activities.csv"),
             "patient_id,timestamp,thread_id,stage_id\n0,1000,0,0\n1,1500,0,0\n");
  DataConfig dc;
  CHECK_THROWS_AS(
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr),
      DataError);
}

TEST_CASE("chronological split boundaries") {
  TmpDir dir("split");
  std::ostringstream ints, acts;
  ints << "seeker_id,helper_id,thread_id,timestamp\n";
  acts << "patient_id,timestamp,thread_id,stage_id\n";
  for (int p = 0; p < 4; ++p) acts << p << ',' << 100 * (p + 1) << ",0,0\n";
  for (int i = 0; i < 10; ++i) ints << (i % 3) << ',' << 3 << ",0," << 1000 + i << '\n';
  write_file(dir.file("interactions.csv"), ints.str());
  write_file(dir.file("activities.csv"), acts.str());
  DataConfig dc;
  Dataset ds =
      ingest_dataset(dir.file("interactions.csv"), dir.file("activities.csv"), dc, nullptr);
  SplitBounds b = chronological_split(ds, 0.8, 0.1);
  CHECK(b.train_end == 8);
  CHECK(b.val_end == 9);
  for (std::size_t i = 0; i < b.train_end; ++i) {
    CHECK(ds.graph.pairs[i].timestamp <= ds.graph.pairs[b.train_end].timestamp);
  }
}
