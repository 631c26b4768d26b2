#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipdsc/error.hpp"
#include "ipdsc/evidence.hpp"
#include "ipdsc/linalg.hpp"
#include "ipdsc/random.hpp"

namespace ipdsc {

// Cluster-count dependent constant added to every coupling. Values are
// tabulated for K <= 11; larger K fall back to zero.
inline double default_alpha(int clusters) {
  switch (clusters) {
    case 8: return 1e-6;
    case 10: return 3e-7;
    case 11: return 3e-8;
    default: return 0.0;
  }
}

struct SolverConfig {
  double epsilon = 0.001;
  double tau = 0.9;
  double gamma = 0.5;
  // Overrides default_alpha(K) when non-negative.
  double alpha_override = -1.0;
  double sweep_tolerance = 0.01;
  double saturation_threshold = 0.99;
  int max_temperature_steps = 500;
  int max_sweeps_per_temperature = 1000;
  std::uint64_t rng_seed = 0;

  double alpha(int clusters) const {
    return alpha_override >= 0.0 ? alpha_override : default_alpha(clusters);
  }

  void validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
    if (!(sweep_tolerance > 0.0 && sweep_tolerance < 1.0))
      throw std::invalid_argument("sweep tolerance must lie in (0, 1)");
    if (!(saturation_threshold > 0.0 && saturation_threshold < 1.0))
      throw std::invalid_argument("saturation threshold must lie in (0, 1)");
    if (max_temperature_steps < 1 || max_sweeps_per_temperature < 1)
      throw std::invalid_argument("iteration bounds must be positive");
  }
};

// Mean-field Potts spins: an N x K field V with the first `clamped` rows
// frozen one-hot.
class SpinState {
 public:
  SpinState() = default;
  SpinState(std::size_t rows, int clusters, std::size_t clamped)
      : rows_(rows), clusters_(clusters), clamped_(clamped),
        v_(rows * static_cast<std::size_t>(clusters), 0.0) {
    if (clusters < 1) throw std::invalid_argument("need at least one cluster");
    if (clamped > rows) throw std::invalid_argument("more clamped rows than rows");
  }

  std::size_t rows() const noexcept { return rows_; }
  int clusters() const noexcept { return clusters_; }
  std::size_t clamped() const noexcept { return clamped_; }
  std::size_t free_rows() const noexcept { return rows_ - clamped_; }
  bool is_clamped(std::size_t i) const noexcept { return i < clamped_; }

  double& operator()(std::size_t i, int a) { return v_[i * clusters_ + a]; }
  double operator()(std::size_t i, int a) const { return v_[i * clusters_ + a]; }

  std::span<double> row(std::size_t i) {
    return std::span<double>(v_).subspan(i * clusters_, clusters_);
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(v_).subspan(i * clusters_, clusters_);
  }

  // Index of the largest entry; ties go to the lowest index.
  int argmax(std::size_t i) const {
    const auto r = row(i);
    return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  const std::vector<double>& values() const noexcept { return v_; }

  friend bool operator==(const SpinState&, const SpinState&) = default;

 private:
  std::size_t rows_ = 0;
  int clusters_ = 0;
  std::size_t clamped_ = 0;
  std::vector<double> v_;
};

// Coupling of each report to a per-track prototype, N x K. All zeros unless
// prototypes are configured.
class TrackCoupling {
 public:
  TrackCoupling() = default;
  TrackCoupling(std::size_t rows, int clusters)
      : rows_(rows), clusters_(clusters), w_(rows * static_cast<std::size_t>(clusters), 0.0) {}

  static TrackCoupling from_prototypes(std::span<const Report> reports,
                                       std::span<const Report> prototypes) {
    TrackCoupling tc(reports.size(), static_cast<int>(prototypes.size()));
    for (std::size_t i = 0; i < reports.size(); ++i)
      for (std::size_t a = 0; a < prototypes.size(); ++a)
        tc.set(i, static_cast<int>(a), coupling(reports[i], prototypes[a]));
    return tc;
  }

  bool empty() const noexcept { return w_.empty(); }
  std::size_t rows() const noexcept { return rows_; }
  int clusters() const noexcept { return clusters_; }

  double operator()(std::size_t i, int a) const {
    return w_.empty() ? 0.0 : w_[i * clusters_ + a];
  }

  void set(std::size_t i, int a, double w) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("track coupling must be finite and non-negative");
    w_[i * clusters_ + a] = w;
  }

 private:
  std::size_t rows_ = 0;
  int clusters_ = 0;
  std::vector<double> w_;
};

struct AnnealResult {
  // Cluster of each free row, in row order.
  Partition partition;
  SpinState state;
  double critical_temperature = 0.0;
  double final_temperature = 0.0;
  int temperature_steps = 0;
  long sweeps = 0;
  double saturation = 0.0;
};

// Thrown when the schedule runs out of temperature steps before the spins
// saturate. Carries the argmax assignment of the last state reached.
class non_convergence : public error {
 public:
  non_convergence(const std::string& what, AnnealResult best)
      : error(what), best_(std::move(best)) {}

  const AnnealResult& best() const noexcept { return best_; }

 private:
  AnnealResult best_;
};

// T_c = max(-lambda_min, lambda_max) / K for M = J + alpha - gamma I.
inline double critical_temperature(const CouplingMatrix& j, double alpha, double gamma,
                                   int clusters) {
  if (clusters < 1) throw std::invalid_argument("need at least one cluster");
  const std::size_t n = j.size();
  std::vector<double> m(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m[r * n + c] = j(r, c) + alpha - (r == c ? gamma : 0.0);
  const auto range = extreme_eigenvalues(m, n);
  return std::max(-range.min, range.max) / clusters;
}

inline SpinState initialize_spins(std::size_t rows, int clusters, std::span<const int> clamps,
                                  const SolverConfig& cfg, rng_type& rng) {
  SpinState s(rows, clusters, clamps.size());
  for (std::size_t i = 0; i < clamps.size(); ++i) {
    if (clamps[i] < 0 || clamps[i] >= clusters)
      throw std::invalid_argument("clamped cluster index out of range");
    s(i, clamps[i]) = 1.0;
  }
  const double base = 1.0 / clusters;
  for (std::size_t i = clamps.size(); i < rows; ++i)
    for (int a = 0; a < clusters; ++a) s(i, a) = base + cfg.epsilon * uniform01(rng);
  return s;
}

// (1/N) sum_{i,a} V_ia^2
inline double saturation(const SpinState& s) {
  if (s.rows() == 0) return 1.0;
  double sum = 0.0;
  for (double v : s.values()) sum += v * v;
  return sum / static_cast<double>(s.rows());
}

// One serial pass over the free rows at temperature T. Cluster loads G_a are
// taken from the state at the start of the sweep; row updates are visible
// to the rows after them. Returns (1/N) sum |V_new - V_old|.
inline double mean_field_sweep(SpinState& s, const CouplingMatrix& j, const TrackCoupling& tc,
                               double temperature, const SolverConfig& cfg, rng_type& rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const std::size_t n = s.rows();
  const int k = s.clusters();
  if (s.free_rows() == 0) return 0.0;
  if (j.size() != n) throw std::invalid_argument("coupling matrix does not match spin rows");

  const double alpha = cfg.alpha(k);
  constexpr double load_floor = 1e-12;

  std::vector<double> colsum(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a) colsum[a] += s(i, a);
  std::vector<double> load(k);
  for (int a = 0; a < k; ++a)
    load[a] = std::max(load_floor, static_cast<double>(k) / static_cast<double>(n) * colsum[a]);

  std::vector<double> field(k), h(k);
  double delta = 0.0;
  for (std::size_t i = s.clamped(); i < n; ++i) {
    std::fill(field.begin(), field.end(), 0.0);
    const auto ji = j.row(i);
    for (std::size_t other = 0; other < n; ++other) {
      const double w = ji[other];
      if (w == 0.0) continue;
      const auto vo = s.row(other);
      for (int a = 0; a < k; ++a) field[a] += w * vo[a];
    }
    auto vi = s.row(i);
    double hmin = std::numeric_limits<double>::infinity();
    for (int a = 0; a < k; ++a) {
      h[a] = (field[a] + alpha * colsum[a] + tc(i, a) + alpha - cfg.gamma * vi[a]) / load[a];
      hmin = std::min(hmin, h[a]);
    }
    double z = 0.0;
    for (int a = 0; a < k; ++a) {
      h[a] = std::exp(-(h[a] - hmin) / temperature);
      z += h[a];
    }
    for (int a = 0; a < k; ++a) {
      const double updated = h[a] / z + cfg.epsilon * uniform01(rng);
      delta += std::abs(updated - vi[a]);
      colsum[a] += updated - vi[a];
      vi[a] = updated;
    }
  }
  return delta / static_cast<double>(n);
}

// Full annealing schedule: start at T_c, relax with serial sweeps until the
// per-sweep change drops below tolerance, cool geometrically, and stop once
// the spins saturate. Clamped rows never move. Deterministic given
// cfg.rng_seed and the inputs.
inline AnnealResult anneal(const CouplingMatrix& j, const TrackCoupling& tc, int clusters,
                           std::span<const int> clamps, const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = j.size();
  if (clusters < 1) throw std::invalid_argument("need at least one cluster");
  if (clamps.size() > n) throw std::invalid_argument("more clamps than reports");
  if (!tc.empty() && (tc.rows() != n || tc.clusters() != clusters))
    throw std::invalid_argument("track coupling shape does not match the problem");

  rng_type rng = make_rng({cfg.rng_seed});
  AnnealResult result;
  result.state = initialize_spins(n, clusters, clamps, cfg, rng);
  result.partition.clusters = clusters;

  auto finish = [&](AnnealResult& r) {
    r.saturation = saturation(r.state);
    r.partition.assignment.clear();
    for (std::size_t i = r.state.clamped(); i < n; ++i)
      r.partition.assignment.push_back(r.state.argmax(i));
  };

  if (result.state.free_rows() == 0) {
    finish(result);
    return result;
  }

  const double tc0 = critical_temperature(j, cfg.alpha(clusters), cfg.gamma, clusters);
  if (!(tc0 > 0.0) || !std::isfinite(tc0))
    throw std::invalid_argument("critical temperature is not positive; set gamma > 0");
  result.critical_temperature = tc0;

  double temperature = tc0;
  for (;;) {
    for (int sweep = 0; sweep < cfg.max_sweeps_per_temperature; ++sweep) {
      ++result.sweeps;
      if (mean_field_sweep(result.state, j, tc, temperature, cfg, rng) <= cfg.sweep_tolerance)
        break;
    }
    temperature *= cfg.tau;
    ++result.temperature_steps;
    result.final_temperature = temperature;
    if (saturation(result.state) >= cfg.saturation_threshold) break;
    if (result.temperature_steps >= cfg.max_temperature_steps) {
      finish(result);
      throw non_convergence("spins did not saturate within " +
                                std::to_string(cfg.max_temperature_steps) + " temperature steps",
                            std::move(result));
    }
  }
  finish(result);
  return result;
}

// Debug dump: header `row,clamped,V_0..V_{K-1}`, one line per row.
inline void write_spin_state_csv(std::ostream& os, const SpinState& s) {
  os << "row,clamped";
  for (int a = 0; a < s.clusters(); ++a) os << ",V_" << a;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    os << i << ',' << (s.is_clamped(i) ? 1 : 0);
    for (int a = 0; a < s.clusters(); ++a) os << ',' << s(i, a);
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace ipdsc
