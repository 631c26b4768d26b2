#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ipdsc/annealer.hpp"
#include "ipdsc/evidence.hpp"
#include "ipdsc/memory.hpp"
#include "ipdsc/random.hpp"

namespace ipdsc {

struct EngineConfig {
  int clusters = 2;
  MemoryConfig memory;
  SolverConfig solver;
  // Optional virtual report per track; when present there must be exactly
  // `clusters` of them and they feed the annealer's track-coupling term.
  std::vector<Report> track_prototypes;

  void validate() const {
    if (clusters < 2) throw std::invalid_argument("need at least two tracks");
    if (!track_prototypes.empty() && track_prototypes.size() != static_cast<std::size_t>(clusters))
      throw std::invalid_argument("need exactly one prototype per track");
    if (memory.stm_capacity < 1) throw std::invalid_argument("short-term capacity must be >= 1");
    solver.validate();
  }
};

struct TrackMembers {
  std::vector<std::uint64_t> permanent;  // history + long-term
  std::vector<std::uint64_t> tentative;  // short-term

  friend bool operator==(const TrackMembers&, const TrackMembers&) = default;
};

struct TrackView {
  std::size_t step = 0;
  std::vector<TrackMembers> tracks;
  // Short-term reports not yet clustered (only between ingest and recluster).
  std::vector<std::uint64_t> unassigned;
  std::optional<std::string> error;

  friend bool operator==(const TrackView&, const TrackView&) = default;
};

// Default clustering back end: the mean-field Potts annealer.
struct MeanFieldSolver {
  AnnealResult operator()(const CouplingMatrix& j, const TrackCoupling& tc, int clusters,
                          std::span<const int> clamps, const SolverConfig& cfg) const {
    return anneal(j, tc, clusters, clamps, cfg);
  }
};

struct SolveOutcome {
  bool solved = false;     // the solver ran
  bool converged = true;   // false when the fallback assignment was used
  double seconds = 0.0;    // wall-clock inside the solver call
  std::optional<std::string> error;
};

// One report stream. Each arrival is ingested into short-term memory and the
// short-term reports are re-clustered against the clamped long-term reports.
template <typename Solver = MeanFieldSolver>
class basic_engine {
 public:
  explicit basic_engine(EngineConfig cfg, Solver solver = {})
      : cfg_(std::move(cfg)), solver_(std::move(solver)), memory_((cfg_.validate(), cfg_.memory)) {}

  const EngineConfig& config() const noexcept { return cfg_; }
  const MemoryState& memory() const noexcept { return memory_; }
  std::size_t step() const noexcept { return step_; }
  std::size_t solves() const noexcept { return solves_; }
  std::size_t failures() const noexcept { return failures_; }

  // Adds a report without clustering. Promotion of an unassigned report
  // fails inside MemoryState.
  Promotion ingest(const Report& report) {
    if (report.frame_size != frame_size_ && frame_size_ != 0)
      throw std::invalid_argument("report belongs to a different frame");
    for (const auto& p : cfg_.track_prototypes)
      if (p.frame_size != report.frame_size)
        throw std::invalid_argument("report and track prototypes use different frames");
    auto promoted = memory_.ingest(report);
    frame_size_ = report.frame_size;
    ++step_;
    last_error_.reset();
    return promoted;
  }

  // Re-clusters short-term memory with long-term rows clamped.
  SolveOutcome recluster() {
    SolveOutcome out;
    const auto view = memory_.clustering_view();
    if (view.free_rows() == 0) return out;

    if (view.reports.size() < 2) {
      // A lone report has nothing to conflict with.
      const int only = memory_.stm().front().cluster;
      const int lone[] = {only == unassigned ? 0 : only};
      memory_.apply_assignments(std::span<const int>(lone));
      return out;
    }

    const auto j = build_coupling_matrix(view.reports);
    const auto tc = cfg_.track_prototypes.empty()
                        ? TrackCoupling{}
                        : TrackCoupling::from_prototypes(view.reports, cfg_.track_prototypes);
    SolverConfig solver_cfg = cfg_.solver;
    solver_cfg.rng_seed = make_rng({cfg_.solver.rng_seed, solves_})();
    ++solves_;
    out.solved = true;

    const auto start = std::chrono::steady_clock::now();
    try {
      auto result = solver_(j, tc, cfg_.clusters, std::span<const int>(view.clamps), solver_cfg);
      out.seconds = elapsed(start);
      memory_.apply_assignments(std::span<const int>(result.partition.assignment));
    } catch (const non_convergence& e) {
      out.seconds = elapsed(start);
      out.converged = false;
      out.error = std::string("solver did not converge: ") + e.what();
      ++failures_;
      fallback_assign(view, j);
      last_error_ = out.error;
    }
    return out;
  }

  TrackView process_report(const Report& report) {
    ingest(report);
    recluster();
    return current_tracks();
  }

  TrackView current_tracks() const { return make_view(true); }
  TrackView permanent_view() const { return make_view(false); }

 private:
  static double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  // Keeps prior short-term assignments and places each unassigned report in
  // the track where it adds the least pairwise weight.
  void fallback_assign(const ClusteringView& view, const CouplingMatrix& j) {
    std::vector<int> rows(view.clamps.begin(), view.clamps.end());
    for (const auto& s : memory_.stm()) rows.push_back(s.cluster);
    for (std::size_t i = view.clamped(); i < rows.size(); ++i) {
      if (rows[i] != unassigned) continue;
      int best = 0;
      double best_weight = std::numeric_limits<double>::infinity();
      for (int a = 0; a < cfg_.clusters; ++a) {
        double w = 0.0;
        for (std::size_t m = 0; m < rows.size(); ++m)
          if (m != i && rows[m] == a) w += j(i, m);
        if (w < best_weight) {
          best_weight = w;
          best = a;
        }
      }
      rows[i] = best;
    }
    memory_.apply_assignments(
        std::span<const int>(rows).subspan(view.clamped()));
  }

  TrackView make_view(bool include_stm) const {
    TrackView v;
    v.step = step_;
    v.tracks.resize(static_cast<std::size_t>(cfg_.clusters));
    for (const auto& s : memory_.history()) v.tracks[s.cluster].permanent.push_back(s.report.id);
    for (const auto& s : memory_.ltm()) v.tracks[s.cluster].permanent.push_back(s.report.id);
    if (include_stm) {
      for (const auto& s : memory_.stm()) {
        if (s.cluster == unassigned)
          v.unassigned.push_back(s.report.id);
        else
          v.tracks[s.cluster].tentative.push_back(s.report.id);
      }
      v.error = last_error_;
    }
    return v;
  }

  EngineConfig cfg_;
  Solver solver_;
  MemoryState memory_;
  int frame_size_ = 0;
  std::size_t step_ = 0;
  std::size_t solves_ = 0;
  std::size_t failures_ = 0;
  std::optional<std::string> last_error_;
};

using Engine = basic_engine<>;

}  // namespace ipdsc
