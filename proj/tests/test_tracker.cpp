#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "ipdsc/tracker.hpp"
#include "oracles.hpp"

using namespace ipdsc;

namespace {

constexpr focal_set A = 1, B = 2, C = 4;

Report rep(std::uint64_t id, focal_set f, double s) { return make_report(Frame(3), id, f, s); }

EngineConfig config(int k, std::size_t stm, std::size_t ltm, std::uint64_t seed = 1) {
  EngineConfig c;
  c.clusters = k;
  c.memory = {stm, ltm};
  c.solver.rng_seed = seed;
  return c;
}

int track_of(const TrackView& v, std::uint64_t id) {
  for (std::size_t a = 0; a < v.tracks.size(); ++a) {
    const auto& t = v.tracks[a];
    if (std::count(t.permanent.begin(), t.permanent.end(), id) ||
        std::count(t.tentative.begin(), t.tentative.end(), id))
      return static_cast<int>(a);
  }
  return -1;
}

// Never converges; exercises the fallback path.
struct FailingSolver {
  AnnealResult operator()(const CouplingMatrix&, const TrackCoupling&, int clusters,
                          std::span<const int>, const SolverConfig&) const {
    AnnealResult r;
    r.partition.clusters = clusters;
    throw non_convergence("forced", r);
  }
};

}  // namespace

TEST(EngineConfig, Validation) {
  EXPECT_THROW(Engine(config(1, 2, 0)), std::invalid_argument);
  auto c = config(2, 2, 0);
  c.track_prototypes = {rep(1, A, 0.5)};
  EXPECT_THROW(Engine{c}, std::invalid_argument);
  c.memory.stm_capacity = 0;
  c.track_prototypes.clear();
  EXPECT_THROW(Engine{c}, std::invalid_argument);
}

TEST(Tracker, FirstReportIsTentativeInTrackZero) {
  Engine e(config(2, 3, 2));
  const auto v = e.process_report(rep(1, A, 0.7));
  EXPECT_EQ(v.step, 1u);
  EXPECT_EQ(v.tracks[0].tentative, (std::vector<std::uint64_t>{1}));
  EXPECT_TRUE(v.tracks[1].tentative.empty());
  EXPECT_EQ(e.solves(), 0u);
}

TEST(Tracker, ConflictingSecondReportOpensOtherTrack) {
  // Brute force: the only zero-weight 2-partition separates them.
  const std::vector<Report> r = {rep(1, A, 0.9), rep(2, B, 0.9)};
  const auto bf = oracle::min_weight(r, {}, 2);
  ASSERT_NE(bf.argmin[0], bf.argmin[1]);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Engine e(config(2, 3, 2, seed));
    e.process_report(r[0]);
    const auto v = e.process_report(r[1]);
    EXPECT_NE(track_of(v, 1), track_of(v, 2));
  }
}

TEST(Tracker, ReclusteringMovesShortTermReportButNotLongTerm) {
  // K=2, stm=2. After r2 the pair {A}.5/{B}.5 is split. When {C}.99 arrives
  // r1 is clamped; enumeration says r2 must join r1 (cost 0.288) rather than
  // share a track with r3 (cost 0.683).
  const std::vector<Report> r = {rep(1, A, 0.5), rep(2, B, 0.5), rep(3, C, 0.99)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Engine e(config(2, 2, 5, seed));
    e.process_report(r[0]);
    const auto v2 = e.process_report(r[1]);
    const int t1 = track_of(v2, 1);
    const int t2 = track_of(v2, 2);
    ASSERT_NE(t1, t2);

    const std::vector<int> clamps = {t1};
    const auto bf = oracle::min_weight(r, clamps, 2);
    ASSERT_EQ(bf.optimal_count, 1u);
    ASSERT_EQ(bf.argmin[1], t1);  // r2 moves to r1's track
    ASSERT_EQ(bf.argmin[2], t2);

    const auto v3 = e.process_report(r[2]);
    EXPECT_EQ(track_of(v3, 1), t1);
    EXPECT_EQ(track_of(v3, 2), bf.argmin[1]);
    EXPECT_EQ(track_of(v3, 3), bf.argmin[2]);
    EXPECT_EQ(v3.tracks[t1].permanent, (std::vector<std::uint64_t>{1}));
  }
}

TEST(Tracker, PermanentView) {
  Engine e(config(2, 2, 1));
  auto p = e.permanent_view();
  ASSERT_EQ(p.tracks.size(), 2u);
  EXPECT_TRUE(p.tracks[0].permanent.empty() && p.tracks[1].permanent.empty());

  e.process_report(rep(1, A, 0.9));
  e.process_report(rep(2, B, 0.9));
  p = e.permanent_view();
  EXPECT_TRUE(p.tracks[0].permanent.empty() && p.tracks[1].permanent.empty());

  e.process_report(rep(3, A, 0.9));  // r1 promoted
  p = e.permanent_view();
  std::set<std::uint64_t> seen;
  for (const auto& t : p.tracks) {
    EXPECT_TRUE(t.tentative.empty());
    seen.insert(t.permanent.begin(), t.permanent.end());
  }
  EXPECT_EQ(seen, (std::set<std::uint64_t>{1}));
}

TEST(Tracker, FallbackOnSolverFailure) {
  basic_engine<FailingSolver> e(config(2, 3, 0));
  e.process_report(rep(1, A, 0.9));
  const auto v = e.process_report(rep(2, B, 0.9));
  ASSERT_TRUE(v.error.has_value());
  EXPECT_NE(v.error->find("did not converge"), std::string::npos);
  EXPECT_EQ(e.failures(), 1u);
  // r1 keeps track 0; r2 goes where it adds no weight.
  EXPECT_EQ(track_of(v, 1), 0);
  EXPECT_EQ(track_of(v, 2), 1);

  const auto v3 = e.process_report(rep(3, A | B, 0.9));
  EXPECT_EQ(track_of(v3, 1), 0);
  EXPECT_EQ(track_of(v3, 2), 1);
  EXPECT_EQ(track_of(v3, 3), 0);  // compatible with both; lowest index wins the tie
}

TEST(Tracker, TrackPrototypesReachTheSolver) {
  auto c = config(2, 4, 0);
  c.track_prototypes = {rep(0, A, 0.9), rep(0, B, 0.9)};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    c.solver.rng_seed = seed;
    Engine e(c);
    e.process_report(rep(1, B, 0.9));
    const auto v = e.process_report(rep(2, A, 0.9));
    // {B} conflicts with prototype 0 ({A}); {A} with prototype 1 ({B}).
    EXPECT_EQ(track_of(v, 1), 1);
    EXPECT_EQ(track_of(v, 2), 0);
  }
}

TEST(Tracker, RejectsMixedFrames) {
  Engine e(config(2, 3, 0));
  e.process_report(rep(1, A, 0.5));
  EXPECT_THROW(e.process_report(make_report(Frame(4), 2, A, 0.5)), std::invalid_argument);
}

TEST(Tracker, DeterministicViewsAndMonotonePermanence) {
  auto rng = make_rng({41});
  const Frame frame(4);
  std::vector<Report> stream;
  for (std::uint64_t id = 1; id <= 120; ++id)
    stream.push_back(make_report(frame, id, static_cast<focal_set>(1 + uniform_below(rng, 15)),
                                 uniform_open01(rng)));

  EngineConfig c;
  c.clusters = 3;
  c.memory = {6, 10};
  c.solver.rng_seed = 5;
  Engine e1(c), e2(c);
  std::map<std::uint64_t, int> permanent;
  TrackView prev;
  for (const auto& r : stream) {
    const auto v1 = e1.process_report(r);
    const auto v2 = e2.process_report(r);
    EXPECT_EQ(v1, v2);
    EXPECT_FALSE(v1.error.has_value());

    // Every report in exactly one track.
    std::multiset<std::uint64_t> all;
    for (const auto& t : v1.tracks) {
      all.insert(t.permanent.begin(), t.permanent.end());
      all.insert(t.tentative.begin(), t.tentative.end());
    }
    EXPECT_EQ(all.size(), r.id);
    EXPECT_EQ(std::set<std::uint64_t>(all.begin(), all.end()).size(), r.id);

    // Permanent pairs persist, and only stm reports change track.
    const auto p = e1.permanent_view();
    for (std::size_t a = 0; a < p.tracks.size(); ++a)
      for (auto id : p.tracks[a].permanent) {
        auto [it, fresh] = permanent.emplace(id, static_cast<int>(a));
        EXPECT_EQ(it->second, static_cast<int>(a));
        EXPECT_EQ(track_of(v1, id), static_cast<int>(a));
      }
    std::size_t count = 0;
    for (const auto& t : p.tracks) count += t.permanent.size();
    EXPECT_EQ(count, permanent.size());
    if (!prev.tracks.empty()) {
      for (std::size_t a = 0; a < prev.tracks.size(); ++a)
        for (auto id : prev.tracks[a].permanent) EXPECT_EQ(track_of(v1, id), static_cast<int>(a));
    }
    prev = v1;
  }
}
