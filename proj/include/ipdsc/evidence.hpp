#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ipdsc {

// Bitmask over the targets of a frame; bit t set means target t is in the set.
using focal_set = std::uint32_t;

inline constexpr int max_frame_size = 30;

// The frame of discernment: a fixed, ordered set of singleton targets.
class Frame {
 public:
  Frame() : Frame(7) {}

  explicit Frame(int target_count) : labels_(check_size(target_count)) {
    for (int t = 0; t < target_count; ++t) labels_[t] = default_label(t);
  }

  explicit Frame(std::vector<std::string> labels)
      : labels_(std::move(labels)) {
    check_size(static_cast<int>(labels_.size()));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty())
        throw std::invalid_argument("frame label must not be empty");
      if (labels_[i].find_first_of("|,\n") != std::string::npos)
        throw std::invalid_argument("frame label contains a separator: " + labels_[i]);
      for (std::size_t j = 0; j < i; ++j)
        if (labels_[i] == labels_[j])
          throw std::invalid_argument("duplicate frame label: " + labels_[i]);
    }
  }

  int size() const noexcept { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(int t) const { return labels_.at(t); }

  focal_set full() const noexcept { return (focal_set{1} << size()) - 1; }

  bool contains(focal_set s) const noexcept { return s != 0 && (s & ~full()) == 0; }

  int index_of(const std::string& label) const {
    for (int t = 0; t < size(); ++t)
      if (labels_[t] == label) return t;
    return -1;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  static std::size_t check_size(int n) {
    if (n < 1 || n > max_frame_size)
      throw std::invalid_argument("frame size must be in [1, 30], got " + std::to_string(n));
    return static_cast<std::size_t>(n);
  }

  // A..Z, then T26, T27, ...
  static std::string default_label(int t) {
    if (t < 26) return std::string(1, static_cast<char>('A' + t));
    return "T" + std::to_string(t);
  }

  std::vector<std::string> labels_;
};

// A simple support function: mass `bpn` on `focal`, the remainder on the frame.
struct Report {
  std::uint64_t id = 0;
  focal_set focal = 0;
  double bpn = 0.0;
  int frame_size = 0;

  friend bool operator==(const Report&, const Report&) = default;
};

inline Report make_report(const Frame& frame, std::uint64_t id, focal_set focal, double bpn) {
  if (focal == 0) throw std::invalid_argument("report focal set must be nonempty");
  if (!frame.contains(focal))
    throw std::invalid_argument("report focal set has targets outside the frame");
  if (!(bpn > 0.0 && bpn < 1.0))
    throw std::invalid_argument("basic probability number must lie in (0, 1), got " +
                                std::to_string(bpn));
  return Report{id, focal, bpn, frame.size()};
}

// Cluster index per report, positionally aligned with the report list it
// was computed for.
struct Partition {
  int clusters = 0;
  std::vector<int> assignment;

  std::size_t size() const noexcept { return assignment.size(); }
  int operator[](std::size_t i) const { return assignment[i]; }

  friend bool operator==(const Partition&, const Partition&) = default;
};

namespace detail {

inline void check_same_frame(const Report& a, const Report& b) {
  if (a.frame_size != b.frame_size)
    throw std::invalid_argument("reports belong to different frames");
}

inline void check_partition(std::span<const Report> reports, const Partition& p) {
  if (p.assignment.size() != reports.size())
    throw std::invalid_argument("partition does not cover every report");
  for (int c : p.assignment)
    if (c < 0 || c >= p.clusters)
      throw std::invalid_argument("partition cluster index out of range");
}

}  // namespace detail

// Dempster's-rule conflict between two simple support functions.
inline double pairwise_conflict(const Report& a, const Report& b) {
  detail::check_same_frame(a, b);
  return (a.focal & b.focal) == 0 ? a.bpn * b.bpn : 0.0;
}

// -ln(1 - c). Additive over independent conflicts.
inline double weight_of_conflict(double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("conflict must be non-negative");
  if (c >= 1.0) throw std::invalid_argument("conflict of 1 has infinite weight");
  return -std::log1p(-c);
}

// Potts coupling J_ij: the weight of conflict when the focal sets are
// disjoint, zero otherwise.
inline double coupling(const Report& a, const Report& b) {
  return weight_of_conflict(pairwise_conflict(a, b));
}

// Dense symmetric N x N matrix of couplings with zero diagonal.
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  // Sets (i, j) and (j, i) together.
  void set(std::size_t i, std::size_t j, double w) {
    data_[i * n_ + j] = w;
    data_[j * n_ + i] = w;
  }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * n_, n_);
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

inline CouplingMatrix build_coupling_matrix(std::span<const Report> reports) {
  if (reports.empty()) throw std::invalid_argument("coupling matrix needs at least one report");
  CouplingMatrix j(reports.size());
  for (std::size_t a = 0; a < reports.size(); ++a)
    for (std::size_t b = a + 1; b < reports.size(); ++b)
      j.set(a, b, coupling(reports[a], reports[b]));
  return j;
}

// Mass on the empty set after unnormalized conjunctive combination of every
// report in the list. Exact: focal elements are tracked as bitmasks.
inline double subset_conflict(std::span<const Report> reports) {
  if (reports.size() <= 1) return 0.0;
  for (const auto& r : reports) detail::check_same_frame(reports.front(), r);

  const focal_set theta = (focal_set{1} << reports.front().frame_size) - 1;
  std::unordered_map<focal_set, double> masses{{theta, 1.0}};
  std::unordered_map<focal_set, double> next;
  double empty = 0.0;
  for (const auto& r : reports) {
    next.clear();
    for (const auto& [set, m] : masses) {
      const focal_set meet = set & r.focal;
      if (meet == 0)
        empty += m * r.bpn;
      else
        next[meet] += m * r.bpn;
      next[set] += m * (1.0 - r.bpn);
    }
    std::swap(masses, next);
  }
  return empty;
}

// 1 - prod_k (1 - c_k) over the clusters of the partition.
inline double metaconflict(std::span<const Report> reports, const Partition& p) {
  detail::check_partition(reports, p);
  std::vector<std::vector<Report>> members(static_cast<std::size_t>(p.clusters));
  for (std::size_t i = 0; i < reports.size(); ++i) members[p[i]].push_back(reports[i]);
  double keep = 1.0;
  for (const auto& m : members) keep *= 1.0 - subset_conflict(m);
  return 1.0 - keep;
}

// Sum of couplings over unordered same-cluster pairs: the linearized
// objective minimized by the annealer.
inline double pairwise_weight_sum(std::span<const Report> reports, const Partition& p) {
  detail::check_partition(reports, p);
  double sum = 0.0;
  for (std::size_t a = 0; a < reports.size(); ++a)
    for (std::size_t b = a + 1; b < reports.size(); ++b)
      if (p[a] == p[b]) sum += coupling(reports[a], reports[b]);
  return sum;
}

inline double pairwise_weight_sum(const CouplingMatrix& j, std::span<const int> assignment) {
  double sum = 0.0;
  for (std::size_t a = 0; a < assignment.size(); ++a)
    for (std::size_t b = a + 1; b < assignment.size(); ++b)
      if (assignment[a] == assignment[b]) sum += j(a, b);
  return sum;
}

}  // namespace ipdsc
