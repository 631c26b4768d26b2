#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ipdsc/error.hpp"
#include "ipdsc/evidence.hpp"

namespace ipdsc {

inline constexpr int unassigned = -1;

struct MemoryConfig {
  std::size_t stm_capacity = 1;
  std::size_t ltm_capacity = 0;
};

struct StoredReport {
  Report report;
  int cluster = unassigned;

  friend bool operator==(const StoredReport&, const StoredReport&) = default;
};

// What moved during one ingest. With no long-term capacity a report can
// leave short-term memory and enter history in the same step.
struct Promotion {
  std::optional<StoredReport> left_stm;
  std::optional<StoredReport> entered_history;
};

// Ordered reports handed to the clusterer: long-term rows first (clamped),
// then short-term rows.
struct ClusteringView {
  std::vector<Report> reports;
  std::vector<int> clamps;  // cluster of each leading long-term row

  std::size_t clamped() const noexcept { return clamps.size(); }
  std::size_t free_rows() const noexcept { return reports.size() - clamps.size(); }
};

struct IdAssignment {
  std::uint64_t id = 0;
  int cluster = unassigned;
};

// Three-tier report store. Short-term reports may be re-clustered; long-term
// and history reports keep the cluster they had when they left short-term
// memory.
class MemoryState {
 public:
  MemoryState() = default;
  explicit MemoryState(MemoryConfig cfg) : cfg_(cfg) {
    if (cfg.stm_capacity < 1) throw std::invalid_argument("short-term capacity must be >= 1");
  }

  const MemoryConfig& config() const noexcept { return cfg_; }
  const std::deque<StoredReport>& stm() const noexcept { return stm_; }
  const std::deque<StoredReport>& ltm() const noexcept { return ltm_; }
  const std::vector<StoredReport>& history() const noexcept { return history_; }
  std::size_t total() const noexcept { return stm_.size() + ltm_.size() + history_.size(); }

  Promotion ingest(const Report& report) {
    if (any_ && report.id <= last_id_)
      throw std::invalid_argument("report ids must increase: got " + std::to_string(report.id) +
                                  " after " + std::to_string(last_id_));
    if (stm_.size() >= cfg_.stm_capacity && stm_.front().cluster == unassigned)
      throw error("cannot promote unassigned report " + std::to_string(stm_.front().report.id) +
                  " out of short-term memory; cluster before it overflows");

    Promotion p;
    stm_.push_back({report, unassigned});
    any_ = true;
    last_id_ = report.id;
    if (stm_.size() > cfg_.stm_capacity) {
      p.left_stm = stm_.front();
      ltm_.push_back(stm_.front());
      stm_.pop_front();
    }
    if (ltm_.size() > cfg_.ltm_capacity) {
      p.entered_history = ltm_.front();
      history_.push_back(ltm_.front());
      ltm_.pop_front();
    }
    return p;
  }

  ClusteringView clustering_view() const {
    ClusteringView v;
    v.reports.reserve(ltm_.size() + stm_.size());
    v.clamps.reserve(ltm_.size());
    for (const auto& s : ltm_) {
      v.reports.push_back(s.report);
      v.clamps.push_back(s.cluster);
    }
    for (const auto& s : stm_) v.reports.push_back(s.report);
    return v;
  }

  // Positional form: clusters[i] belongs to the i-th short-term report.
  void apply_assignments(std::span<const int> clusters) {
    if (clusters.size() != stm_.size())
      throw std::invalid_argument("assignment must cover every short-term report");
    for (int c : clusters)
      if (c < 0) throw std::invalid_argument("cluster index must be non-negative");
    for (std::size_t i = 0; i < stm_.size(); ++i) stm_[i].cluster = clusters[i];
  }

  // Keyed form: exactly the short-term ids, in any order.
  void apply_assignments(std::span<const IdAssignment> assignments) {
    if (assignments.size() != stm_.size())
      throw std::invalid_argument("assignment must cover every short-term report");
    std::vector<int> clusters(stm_.size(), unassigned);
    for (const auto& a : assignments) {
      auto it = std::find_if(stm_.begin(), stm_.end(),
                             [&](const StoredReport& s) { return s.report.id == a.id; });
      if (it == stm_.end())
        throw std::invalid_argument("report " + std::to_string(a.id) +
                                    " is not in short-term memory");
      auto& slot = clusters[static_cast<std::size_t>(it - stm_.begin())];
      if (slot != unassigned)
        throw std::invalid_argument("report " + std::to_string(a.id) + " assigned twice");
      if (a.cluster < 0) throw std::invalid_argument("cluster index must be non-negative");
      slot = a.cluster;
    }
    apply_assignments(std::span<const int>(clusters));
  }

  // Rebuilds a state from a snapshot. Tiers must respect capacities and
  // global arrival order; frozen tiers must be assigned.
  static MemoryState restore(MemoryConfig cfg, std::vector<StoredReport> history,
                             std::vector<StoredReport> ltm, std::vector<StoredReport> stm) {
    MemoryState m(cfg);
    if (ltm.size() > cfg.ltm_capacity || stm.size() > cfg.stm_capacity)
      throw std::invalid_argument("snapshot exceeds memory capacity");
    std::optional<std::uint64_t> prev;
    auto check = [&](const std::vector<StoredReport>& tier, bool frozen) {
      for (const auto& s : tier) {
        if (prev && s.report.id <= *prev)
          throw std::invalid_argument("snapshot ids are not in arrival order");
        if (frozen && s.cluster == unassigned)
          throw std::invalid_argument("frozen report " + std::to_string(s.report.id) +
                                      " has no cluster");
        prev = s.report.id;
      }
    };
    check(history, true);
    check(ltm, true);
    check(stm, false);
    m.history_ = std::move(history);
    m.ltm_.assign(ltm.begin(), ltm.end());
    m.stm_.assign(stm.begin(), stm.end());
    if (prev) {
      m.any_ = true;
      m.last_id_ = *prev;
    }
    return m;
  }

 private:
  MemoryConfig cfg_;
  std::deque<StoredReport> stm_;
  std::deque<StoredReport> ltm_;
  std::vector<StoredReport> history_;
  bool any_ = false;
  std::uint64_t last_id_ = 0;
};

}  // namespace ipdsc
