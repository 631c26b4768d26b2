#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ipdsc/error.hpp"
#include "ipdsc/evidence.hpp"
#include "ipdsc/harness.hpp"
#include "ipdsc/memory.hpp"
#include "ipdsc/tracker.hpp"

namespace ipdsc {

// Shortest decimal form that round-trips.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = s.find(sep);
    out.push_back(trim(s.substr(0, p)));
    if (p == std::string_view::npos) return out;
    s.remove_prefix(p + 1);
  }
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, const char* what) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw parse_error(line, std::string("invalid ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

// `A|C|D` style label list, or a hex bitmask such as `0x0D`.
inline focal_set parse_focal(const Frame& frame, std::string_view text, std::size_t line = 0) {
  text = detail::trim(text);
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    focal_set mask = 0;
    const auto digits = text.substr(2);
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), mask, 16);
    if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size())
      throw parse_error(line, "invalid focal bitmask '" + std::string(text) + "'");
    if (!frame.contains(mask))
      throw parse_error(line, "focal bitmask '" + std::string(text) + "' is empty or outside the frame");
    return mask;
  }
  focal_set mask = 0;
  for (auto label : detail::split(text, '|')) {
    const int t = frame.index_of(std::string(label));
    if (t < 0) throw parse_error(line, "unknown target '" + std::string(label) + "'");
    mask |= focal_set{1} << t;
  }
  if (mask == 0) throw parse_error(line, "empty focal set");
  return mask;
}

inline std::string format_focal(const Frame& frame, focal_set mask) {
  std::string out;
  for (int t = 0; t < frame.size(); ++t) {
    if (!(mask >> t & 1u)) continue;
    if (!out.empty()) out += '|';
    out += frame.label(t);
  }
  return out;
}

// `id,focal,bpn`
inline std::string format_report(const Frame& frame, const Report& r) {
  return std::to_string(r.id) + ',' + format_focal(frame, r.focal) + ',' + format_double(r.bpn);
}

inline Report parse_report(const Frame& frame, std::string_view text, std::size_t line = 0) {
  const auto fields = detail::split(text, ',');
  if (fields.size() != 3)
    throw parse_error(line, "expected 'id,focal,bpn', got " + std::to_string(fields.size()) +
                                " fields");
  const auto id = detail::parse_number<std::uint64_t>(fields[0], line, "report id");
  const auto focal = parse_focal(frame, fields[1], line);
  const auto bpn = detail::parse_number<double>(fields[2], line, "basic probability number");
  if (!(bpn > 0.0 && bpn < 1.0))
    throw parse_error(line, "basic probability number " + std::string(fields[2]) +
                                " outside (0, 1)");
  return make_report(frame, id, focal, bpn);
}

inline bool skippable(std::string_view line) {
  line = detail::trim(line);
  return line.empty() || line.front() == '#';
}

// One report per line; blank lines and `#` comments are skipped. Ids must
// strictly increase.
inline std::vector<Report> read_reports(std::istream& in, const Frame& frame) {
  std::vector<Report> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (skippable(line)) continue;
    auto r = parse_report(frame, line, n);
    if (!out.empty() && r.id <= out.back().id)
      throw parse_error(n, "report id " + std::to_string(r.id) + " does not increase");
    out.push_back(r);
  }
  return out;
}

inline void write_reports(std::ostream& os, const Frame& frame, std::span<const Report> reports) {
  for (const auto& r : reports) os << format_report(frame, r) << '\n';
}

// ---------------------------------------------------------------------------
// Memory snapshot: `[stm]`, `[ltm]`, `[history]` sections, each with the
// header `id,focal,bpn,cluster`; cluster -1 marks an unassigned report.

inline void write_memory_snapshot(std::ostream& os, const Frame& frame, const MemoryState& m) {
  auto section = [&](const char* name, const auto& tier) {
    os << '[' << name << "]\nid,focal,bpn,cluster\n";
    for (const auto& s : tier) os << format_report(frame, s.report) << ',' << s.cluster << '\n';
  };
  section("stm", m.stm());
  section("ltm", m.ltm());
  section("history", m.history());
}

inline MemoryState read_memory_snapshot(std::istream& in, const Frame& frame, MemoryConfig cfg) {
  std::vector<StoredReport> tiers[3];
  int current = -1;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto t = detail::trim(line);
    if (skippable(t) || t == "id,focal,bpn,cluster") continue;
    if (t == "[stm]") { current = 0; continue; }
    if (t == "[ltm]") { current = 1; continue; }
    if (t == "[history]") { current = 2; continue; }
    if (current < 0) throw parse_error(n, "row outside of a section");
    const auto cut = t.rfind(',');
    if (cut == std::string_view::npos) throw parse_error(n, "missing cluster column");
    const auto report = parse_report(frame, t.substr(0, cut), n);
    const auto cluster = detail::parse_number<int>(detail::trim(t.substr(cut + 1)), n, "cluster");
    if (cluster < unassigned) throw parse_error(n, "cluster must be >= -1");
    tiers[current].push_back({report, cluster});
  }
  return MemoryState::restore(cfg, std::move(tiers[2]), std::move(tiers[1]), std::move(tiers[0]));
}

// ---------------------------------------------------------------------------
// Track views as one JSON object per line.

inline nlohmann::json to_json(const TrackView& v) {
  nlohmann::json tracks = nlohmann::json::array();
  for (std::size_t a = 0; a < v.tracks.size(); ++a)
    tracks.push_back({{"track", a},
                      {"permanent", v.tracks[a].permanent},
                      {"tentative", v.tracks[a].tentative}});
  nlohmann::json j{{"step", v.step}, {"tracks", std::move(tracks)}};
  if (!v.unassigned.empty()) j["unassigned"] = v.unassigned;
  if (v.error) j["error"] = *v.error;
  return j;
}

inline TrackView track_view_from_json(const nlohmann::json& j) {
  TrackView v;
  v.step = j.at("step").get<std::size_t>();
  for (const auto& t : j.at("tracks"))
    v.tracks.push_back({t.at("permanent").get<std::vector<std::uint64_t>>(),
                        t.at("tentative").get<std::vector<std::uint64_t>>()});
  if (j.contains("unassigned")) v.unassigned = j["unassigned"].get<std::vector<std::uint64_t>>();
  if (j.contains("error")) v.error = j["error"].get<std::string>();
  return v;
}

// ---------------------------------------------------------------------------
// Sweep results

inline constexpr std::string_view sweep_csv_header = "stm,ltm,error_pct,time_s,weight,invocations";

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRecord> records) {
  os << sweep_csv_header << '\n';
  for (const auto& r : records)
    os << r.shape.stm << ',' << r.shape.ltm << ',' << format_double(r.mean_error_rate) << ','
       << format_double(r.mean_runtime) << ',' << format_double(r.mean_conflict_weight) << ','
       << r.clustering_invocations() << '\n';
}

inline nlohmann::json to_json(const SweepRecord& r) {
  return {{"stm", r.shape.stm},
          {"ltm", r.shape.ltm},
          {"error_pct", r.mean_error_rate},
          {"stepwise_error_pct", r.mean_stepwise_error_rate},
          {"time_s", r.mean_runtime},
          {"weight", r.mean_conflict_weight},
          {"invocations", r.clustering_invocations()},
          {"build_invocations", r.build_invocations},
          {"measure_invocations", r.measure_invocations},
          {"datasets", r.datasets_used},
          {"failures", r.failures}};
}

inline void write_sweep_json_lines(std::ostream& os, std::span<const SweepRecord> records) {
  for (const auto& r : records) os << to_json(r).dump() << '\n';
}

// Per-step trace `config,dataset,step,weight`; config is the index on the
// sweep grid, step counts measured reclusterings from 1.
inline void write_trace_csv(std::ostream& os, std::span<const SweepRecord> records,
                            std::size_t joint = 100) {
  const auto grid = sweep_configurations(joint);
  os << "config,dataset,step,weight\n";
  for (const auto& r : records) {
    const auto index = static_cast<std::size_t>(
        std::find(grid.begin(), grid.end(), r.shape) - grid.begin());
    for (const auto& run : r.runs)
      for (std::size_t s = 0; s < run.step_weights.size(); ++s)
        os << index << ',' << run.dataset_seed << ',' << s + 1 << ','
           << format_double(run.step_weights[s]) << '\n';
  }
}

}  // namespace ipdsc
