#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "ipdsc/annealer.hpp"
#include "ipdsc/evidence.hpp"
#include "ipdsc/memory.hpp"
#include "ipdsc/random.hpp"
#include "ipdsc/tracker.hpp"

namespace ipdsc {

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  std::uint64_t seed = 0;
  Frame frame;
  std::vector<Report> reports;
};

// n distinct nonempty focal sets in random order, each with a bpn drawn
// uniformly from (0, 1). Ids run 1..n.
inline Dataset generate_dataset(std::uint64_t seed, int targets = 7, std::size_t n = 125) {
  Frame frame(targets);
  const std::uint64_t candidates = frame.full();
  if (n > candidates)
    throw std::invalid_argument("cannot draw " + std::to_string(n) + " distinct reports from " +
                                std::to_string(candidates) + " focal sets");
  rng_type rng = make_rng({seed});
  std::vector<focal_set> sets;
  if (candidates <= (std::uint64_t{1} << 20)) {
    sets.resize(candidates);
    std::iota(sets.begin(), sets.end(), focal_set{1});
    shuffle(sets, rng);
  } else {
    // Large frames: rejection-sample distinct masks instead of shuffling all of them.
    std::unordered_set<focal_set> seen;
    while (sets.size() < n) {
      const auto s = static_cast<focal_set>(1 + uniform_below(rng, candidates));
      if (seen.insert(s).second) sets.push_back(s);
    }
  }

  Dataset d{seed, frame, {}};
  d.reports.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    d.reports.push_back(make_report(frame, i + 1, sets[i], uniform_open01(rng)));
  return d;
}

// ---------------------------------------------------------------------------
// Combinatorics of random report pairs over a K-target frame

namespace detail {

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

inline void check_targets(int k, int lo) {
  if (k < lo || k > max_frame_size)
    throw std::invalid_argument("target count out of range: " + std::to_string(k));
}

// sum_{j=1}^{K-1} C(K,j) sum_{i=1}^{K-j} C(K-j,i): ordered disjoint pairs.
inline std::uint64_t ordered_disjoint_pairs(int k) {
  std::uint64_t total = 0;
  for (int j = 1; j <= k - 1; ++j) {
    std::uint64_t inner = 0;
    for (int i = 1; i <= k - j; ++i) inner += binomial(k - j, i);
    total += binomial(k, j) * inner;
  }
  return total;
}

}  // namespace detail

// Unordered pairs of distinct nonempty subsets.
inline std::uint64_t pair_count(int k) {
  detail::check_targets(k, 1);
  const std::uint64_t m = (std::uint64_t{1} << k) - 1;
  return (m * m - m) / 2;
}

// Unordered pairs of distinct nonempty subsets with empty intersection.
inline std::uint64_t conflicting_pair_count(int k) {
  detail::check_targets(k, 1);
  return detail::ordered_disjoint_pairs(k) / 2;
}

inline double conflict_probability(int k) {
  detail::check_targets(k, 2);
  const std::uint64_t m = (std::uint64_t{1} << k) - 1;
  return static_cast<double>(detail::ordered_disjoint_pairs(k)) / static_cast<double>(m * m - m);
}

struct ErrorRateConstants {
  double expected_conflict = 0.0;       // E[s]^2 for two conflicting reports
  double expected_conflict_weight = 0.0;
  double expected_pair_weight = 0.0;    // for a random pair of reports
  double reports_per_cluster = 0.0;
  double pairs_per_cluster = 0.0;
  double weight_per_misclassification = 0.0;
};

// The constant chain that turns a window's conflict weight into an error
// rate. mean_bpn is E[s]; 0.5 for uniformly drawn bpn.
inline ErrorRateConstants error_rate_constants(int k, double window = 100.0,
                                               double mean_bpn = 0.5) {
  if (k < 2) throw std::invalid_argument("need at least two clusters");
  if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
  ErrorRateConstants c;
  c.expected_conflict = mean_bpn * mean_bpn;
  c.expected_conflict_weight = weight_of_conflict(c.expected_conflict);
  c.expected_pair_weight = c.expected_conflict_weight * conflict_probability(k);
  c.reports_per_cluster = window / k;
  c.pairs_per_cluster = 0.5 * c.reports_per_cluster * (c.reports_per_cluster - 1.0);
  c.weight_per_misclassification = c.expected_pair_weight * c.pairs_per_cluster;
  return c;
}

// Percentage of misclassified reports implied by a window's total weight.
inline double classification_error_rate(double total_weight, int k, double window = 100.0) {
  if (!(total_weight >= 0.0)) throw std::invalid_argument("weight must be non-negative");
  const auto c = error_rate_constants(k, window);
  const double per_cluster = total_weight / k;
  return 100.0 * (per_cluster / c.weight_per_misclassification) / c.reports_per_cluster;
}

// Sum of couplings over same-cluster pairs among the given reports.
inline double window_conflict_weight(std::span<const StoredReport> window) {
  double sum = 0.0;
  for (std::size_t a = 0; a < window.size(); ++a) {
    if (window[a].cluster == unassigned)
      throw std::invalid_argument("window report has no cluster");
    for (std::size_t b = a + 1; b < window.size(); ++b)
      if (window[a].cluster == window[b].cluster)
        sum += coupling(window[a].report, window[b].report);
  }
  return sum;
}

// The newest `size` reports across history, long-term and short-term memory.
inline std::vector<StoredReport> latest_window(const MemoryState& m, std::size_t size) {
  std::vector<StoredReport> all(m.history().begin(), m.history().end());
  all.insert(all.end(), m.ltm().begin(), m.ltm().end());
  all.insert(all.end(), m.stm().begin(), m.stm().end());
  if (all.size() > size) all.erase(all.begin(), all.end() - static_cast<std::ptrdiff_t>(size));
  return all;
}

// ---------------------------------------------------------------------------
// Experiment protocol

struct ProtocolConfig {
  int clusters = 7;
  std::size_t window = 100;    // reports consumed before measuring; also the metric window
  std::size_t measured = 25;   // reports fed one by one while measuring
  SolverConfig solver;
};

struct MemoryShape {
  std::size_t stm = 0;
  std::size_t ltm = 0;

  friend bool operator==(const MemoryShape&, const MemoryShape&) = default;
};

// All (stm, ltm) pairs with stm in {5, 10, ..., 100} and ltm in
// {0, 5, ..., 100 - stm}, ordered by stm then ltm.
inline std::vector<MemoryShape> sweep_configurations(std::size_t joint = 100, std::size_t step = 5) {
  std::vector<MemoryShape> out;
  for (std::size_t s = step; s <= joint; s += step)
    for (std::size_t l = 0; s + l <= joint; l += step) out.push_back({s, l});
  return out;
}

// Clustering calls spent building up memory for one (stm, dataset) run.
inline std::size_t build_up_invocations(std::size_t stm, std::size_t window = 100) {
  return 1 + (window - stm);
}

struct ConfigRun {
  MemoryShape shape;
  std::uint64_t dataset_seed = 0;
  std::size_t build_invocations = 0;
  std::size_t measure_invocations = 0;
  std::size_t failures = 0;
  std::vector<double> step_weights;  // window weight after each measured recluster
  std::vector<double> step_seconds;  // solver wall-clock of each measured recluster
  std::size_t reports_held = 0;
  std::size_t window_size = 0;

  double mean_weight() const {
    return step_weights.empty() ? 0.0
                                : std::accumulate(step_weights.begin(), step_weights.end(), 0.0) /
                                      static_cast<double>(step_weights.size());
  }
  double mean_seconds() const {
    return step_seconds.empty() ? 0.0
                                : std::accumulate(step_seconds.begin(), step_seconds.end(), 0.0) /
                                      static_cast<double>(step_seconds.size());
  }
};

// One memory configuration on one dataset: buffer `stm` reports and cluster
// them, feed reports one by one (reclustering each time) until `window`
// reports are consumed, then feed `measured` more and record the window
// conflict weight after each recluster.
template <typename Solver = MeanFieldSolver>
ConfigRun run_config(const Dataset& dataset, MemoryShape shape, const ProtocolConfig& protocol,
                     std::uint64_t config_index = 0, Solver solver = {}) {
  if (shape.stm < 1) throw std::invalid_argument("short-term memory must hold at least one report");
  if (shape.stm + shape.ltm > protocol.window)
    throw std::invalid_argument("joint memory size exceeds the evaluation window");
  if (dataset.reports.size() < protocol.window + protocol.measured)
    throw std::invalid_argument("dataset has too few reports for the protocol");

  EngineConfig ec;
  ec.clusters = protocol.clusters;
  ec.memory = {shape.stm, shape.ltm};
  ec.solver = protocol.solver;
  ec.solver.rng_seed = make_rng({protocol.solver.rng_seed, dataset.seed, config_index})();
  basic_engine<Solver> engine(ec, std::move(solver));

  ConfigRun run;
  run.shape = shape;
  run.dataset_seed = dataset.seed;
  const auto& reports = dataset.reports;
  std::size_t pos = 0;

  auto recluster = [&] {
    const auto out = engine.recluster();
    if (!out.converged) ++run.failures;
    return out;
  };

  while (pos < shape.stm) engine.ingest(reports[pos++]);
  recluster();
  ++run.build_invocations;
  while (pos < protocol.window) {
    engine.ingest(reports[pos++]);
    recluster();
    ++run.build_invocations;
  }
  for (std::size_t k = 0; k < protocol.measured; ++k) {
    engine.ingest(reports[pos++]);
    const auto out = recluster();
    ++run.measure_invocations;
    run.step_seconds.push_back(out.seconds);
    const auto window = latest_window(engine.memory(), protocol.window);
    run.window_size = window.size();
    run.step_weights.push_back(window_conflict_weight(window));
  }
  run.reports_held = engine.memory().total();
  return run;
}

struct SweepRecord {
  MemoryShape shape;
  double mean_error_rate = 0.0;           // percent, from the averaged weight
  double mean_stepwise_error_rate = 0.0;  // percent, averaged per-step rates
  double mean_runtime = 0.0;              // seconds per clustering call
  double mean_conflict_weight = 0.0;
  std::size_t datasets_used = 0;
  std::size_t build_invocations = 0;
  std::size_t measure_invocations = 0;
  std::size_t failures = 0;
  std::vector<ConfigRun> runs;  // per dataset, in dataset order

  std::size_t clustering_invocations() const { return build_invocations + measure_invocations; }
};

inline SweepRecord aggregate(MemoryShape shape, std::vector<ConfigRun> runs,
                             const ProtocolConfig& protocol) {
  SweepRecord r;
  r.shape = shape;
  r.datasets_used = runs.size();
  double weight = 0.0, seconds = 0.0, stepwise = 0.0;
  std::size_t steps = 0;
  const double window = static_cast<double>(protocol.window);
  for (const auto& run : runs) {
    weight += run.mean_weight();
    seconds += run.mean_seconds();
    for (double w : run.step_weights) {
      stepwise += classification_error_rate(w, protocol.clusters, window);
      ++steps;
    }
    r.build_invocations += run.build_invocations;
    r.measure_invocations += run.measure_invocations;
    r.failures += run.failures;
  }
  if (!runs.empty()) {
    r.mean_conflict_weight = weight / static_cast<double>(runs.size());
    r.mean_runtime = seconds / static_cast<double>(runs.size());
  }
  if (steps > 0) r.mean_stepwise_error_rate = stepwise / static_cast<double>(steps);
  r.mean_error_rate = classification_error_rate(r.mean_conflict_weight, protocol.clusters, window);
  r.runs = std::move(runs);
  return r;
}

struct SweepOptions {
  ProtocolConfig protocol;
  // Restrict to these shapes; empty means the full grid.
  std::vector<MemoryShape> only;
  unsigned threads = 0;  // 0: hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

// Runs every configuration on every dataset. Jobs may execute in parallel;
// results are keyed by (configuration, dataset) so output order is fixed.
template <typename Solver = MeanFieldSolver>
std::vector<SweepRecord> sweep(std::span<const Dataset> datasets, const SweepOptions& opts,
                               const Solver& solver = {}) {
  const auto grid = sweep_configurations(opts.protocol.window);
  std::vector<std::pair<std::size_t, MemoryShape>> configs;  // (global index, shape)
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!opts.only.empty() &&
        std::find(opts.only.begin(), opts.only.end(), grid[i]) == opts.only.end())
      continue;
    configs.emplace_back(i, grid[i]);
  }
  for (const auto& s : opts.only)
    if (std::find(grid.begin(), grid.end(), s) == grid.end())
      throw std::invalid_argument("memory shape (" + std::to_string(s.stm) + ", " +
                                  std::to_string(s.ltm) + ") is not on the sweep grid");

  const std::size_t total = configs.size() * datasets.size();
  std::vector<ConfigRun> runs(total);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      const auto& [index, shape] = configs[job / datasets.size()];
      try {
        runs[job] = run_config(datasets[job % datasets.size()], shape, opts.protocol, index, solver);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
        return;
      }
      const std::size_t finished = ++done;
      if (opts.progress) {
        std::lock_guard lock(progress_mutex);
        opts.progress(finished, total);
      }
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(total, 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRecord> out;
  out.reserve(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<ConfigRun> mine(std::make_move_iterator(runs.begin() + c * datasets.size()),
                                std::make_move_iterator(runs.begin() + (c + 1) * datasets.size()));
    out.push_back(aggregate(configs[c].second, std::move(mine), opts.protocol));
  }
  return out;
}

struct InvocationTotals {
  std::size_t configurations = 0;
  std::size_t build = 0;
  std::size_t measure = 0;
  std::size_t total() const { return build + measure; }
};

inline InvocationTotals invocation_totals(std::span<const SweepRecord> records) {
  InvocationTotals t;
  t.configurations = records.size();
  for (const auto& r : records) {
    t.build += r.build_invocations;
    t.measure += r.measure_invocations;
  }
  return t;
}

}  // namespace ipdsc
