// Command-line front end: dataset generation, streaming association, single
// configuration runs, the memory-size sweep and constant verification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipdsc/ipdsc.hpp"

namespace {

using namespace ipdsc;

struct Options {
  std::uint64_t seed = 1;
  int targets = 7;
  int clusters = 0;  // 0: same as targets
  std::size_t n = 125;
  std::size_t stm = 0;
  std::size_t ltm = 0;
  std::size_t seeds = 10;
  unsigned threads = 0;
  std::string in;
  std::string out;
  std::string trace;
  std::string format = "csv";
  bool progress = false;
};

// Output goes to --out when given, otherwise to stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (!file_) return;
    file_->close();
    if (!*file_) throw std::runtime_error("failed writing output file");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int clusters_of(const Options& o) { return o.clusters > 0 ? o.clusters : o.targets; }

std::vector<Dataset> make_datasets(const Options& o) {
  std::vector<Dataset> out;
  for (std::size_t i = 0; i < o.seeds; ++i) out.push_back(generate_dataset(o.seed + i, o.targets));
  return out;
}

void write_records(const Options& o, const std::vector<SweepRecord>& records) {
  Sink sink(o.out);
  if (o.format == "json-lines")
    write_sweep_json_lines(sink.stream(), records);
  else
    write_sweep_csv(sink.stream(), records);
  sink.close();
  if (!o.trace.empty()) {
    Sink trace(o.trace);
    write_trace_csv(trace.stream(), records);
    trace.close();
  }
}

int cmd_gen(const Options& o) {
  const auto d = generate_dataset(o.seed, o.targets, o.n);
  Sink sink(o.out);
  write_reports(sink.stream(), d.frame, d.reports);
  sink.close();
  return 0;
}

int cmd_stream(const Options& o) {
  const Frame frame(o.targets);
  EngineConfig ec;
  ec.clusters = o.clusters > 0 ? o.clusters : 2;
  ec.memory = {o.stm > 0 ? o.stm : 10, o.ltm};
  ec.solver.rng_seed = o.seed;
  Engine engine(ec);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (!o.in.empty() && o.in != "-") {
    file.open(o.in);
    if (!file) throw std::runtime_error("cannot open '" + o.in + "'");
    in = &file;
  }
  Sink sink(o.out);
  auto& os = sink.stream();
  std::string line;
  std::size_t processed = 0;
  for (std::size_t n = 1; std::getline(*in, line); ++n) {
    if (skippable(line)) continue;
    const auto report = parse_report(frame, line, n);
    try {
      os << to_json(engine.process_report(report)).dump() << '\n';
    } catch (const std::invalid_argument& e) {
      throw parse_error(n, e.what());
    }
    ++processed;
  }
  if (processed > 0) {
    auto summary = to_json(engine.permanent_view());
    summary["view"] = "permanent";
    os << summary.dump() << '\n';
  }
  sink.close();
  return 0;
}

int cmd_run(const Options& o) {
  if (o.stm == 0) throw std::invalid_argument("run needs --stm");
  SweepOptions so;
  so.protocol.clusters = clusters_of(o);
  so.protocol.solver.rng_seed = o.seed;
  so.only = {{o.stm, o.ltm}};
  so.threads = o.threads;
  const auto datasets = make_datasets(o);
  write_records(o, sweep(std::span<const Dataset>(datasets), so));
  return 0;
}

int cmd_sweep(const Options& o, bool stm_given, bool ltm_given) {
  SweepOptions so;
  so.protocol.clusters = clusters_of(o);
  so.protocol.solver.rng_seed = o.seed;
  so.threads = o.threads;
  for (const auto& shape : sweep_configurations())
    if ((!stm_given || shape.stm == o.stm) && (!ltm_given || shape.ltm == o.ltm))
      so.only.push_back(shape);
  if (so.only.empty()) throw std::invalid_argument("no sweep configuration matches --stm/--ltm");
  if (o.progress)
    so.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "\r" << done << "/" << total << std::flush;
      if (done == total) std::cerr << '\n';
    };
  const auto datasets = make_datasets(o);
  write_records(o, sweep(std::span<const Dataset>(datasets), so));
  return 0;
}

int cmd_verify() {
  struct Check {
    std::string name;
    double value;
    double expected;
    double tolerance;
  };
  const auto c = error_rate_constants(7, 100.0);
  const auto grid = sweep_configurations();
  std::size_t build = 0;
  for (const auto& s : grid) build += build_up_invocations(s.stm) * 10;
  const std::size_t measure = grid.size() * 25 * 10;

  const std::vector<Check> checks = {
      {"pair_count(7)", static_cast<double>(pair_count(7)), 8001, 0},
      {"conflicting_pair_count(7)", static_cast<double>(conflicting_pair_count(7)), 966, 0},
      {"conflict_probability(7) %", 100.0 * conflict_probability(7), 12.07, 0.05},
      {"weight_of_conflict(0.25)", weight_of_conflict(0.25), 0.2877, 0.0005},
      {"expected_pair_weight", c.expected_pair_weight, 0.0347, 0.0005},
      {"reports_per_cluster", c.reports_per_cluster, 14.29, 0.01},
      {"pairs_per_cluster", c.pairs_per_cluster, 94.9, 0.1},
      {"weight_per_misclassification", c.weight_per_misclassification, 3.30, 0.01},
      {"configurations", static_cast<double>(grid.size()), 210, 0},
      {"build_up_invocations", static_cast<double>(build), 135100, 0},
      {"measurement_invocations", static_cast<double>(measure), 52500, 0},
      {"total_invocations", static_cast<double>(build + measure), 187600, 0},
  };
  int failures = 0;
  for (const auto& ch : checks) {
    const bool ok = std::abs(ch.value - ch.expected) <= ch.tolerance;
    if (!ok) ++failures;
    std::cout << (ok ? "PASS " : "FAIL ") << std::left << std::setw(30) << ch.name << ' '
              << std::setprecision(6) << ch.value << " (expected " << ch.expected << ")\n";
  }
  if (failures) std::cout << failures << " constant(s) mismatched\n";
  return failures ? 1 : 0;
}

// key=value lines, '#' comments. Returned in file order.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw parse_error(n, "config line must be key=value");
    std::string key(detail::trim(std::string_view(line).substr(0, eq)));
    std::string value(detail::trim(std::string_view(line).substr(eq + 1)));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

// Inserts `--key value` pairs from the --config file right after the
// subcommand name, ahead of the user's flags so that the flags win. Keys the
// chosen subcommand does not know are ignored.
void splice_config(CLI::App& app, std::vector<std::string>& args) {
  const auto flag = std::find(args.begin(), args.end(), "--config");
  if (flag == args.end() || flag + 1 == args.end()) return;
  const auto entries = read_config_file(*(flag + 1));
  const auto sub_pos = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return app.get_subcommand_no_throw(a) != nullptr;
  });
  if (sub_pos == args.end()) return;
  auto* sub = app.get_subcommand(*sub_pos);
  std::vector<std::string> injected;
  for (const auto& [key, value] : entries) {
    auto* opt = sub->get_option_no_throw("--" + key);
    if (!opt) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "1" || value == "true" || value == "yes" || value == "on")
        injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    injected.push_back(value);
  }
  args.insert(sub_pos + 1, injected.begin(), injected.end());
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Incremental Dempster-Shafer report-to-track clustering"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key=value file pre-setting flags (flags win)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Base seed");
    sub->add_option("--targets", o.targets, "Frame size")->check(CLI::Range(1, max_frame_size));
    sub->add_option("--out", o.out, "Output path (default stdout)");
  };

  auto* gen = app.add_subcommand("gen", "Generate a dataset in the report line format");
  add_common(gen);
  gen->add_option("--n", o.n, "Number of reports");

  auto* stream = app.add_subcommand("stream", "Associate a report stream, one view per line");
  add_common(stream);
  stream->add_option("input,--in", o.in, "Report file (default stdin)");
  stream->add_option("--clusters", o.clusters, "Number of tracks (default 2)");
  stream->add_option("--stm", o.stm, "Short-term memory size (default 10)");
  stream->add_option("--ltm", o.ltm, "Long-term memory size");

  auto* run = app.add_subcommand("run", "Run one memory configuration over several datasets");
  auto* sw = app.add_subcommand("sweep", "Run the memory-size sweep");
  CLI::Option* sweep_stm = nullptr;
  CLI::Option* sweep_ltm = nullptr;
  for (auto* sub : {run, sw}) {
    add_common(sub);
    sub->add_option("--clusters", o.clusters, "Number of clusters (default: frame size)");
    sub->add_option("--seeds", o.seeds, "Number of datasets (seeds seed..seed+n-1)");
    auto* s = sub->add_option("--stm", o.stm, "Short-term memory size");
    auto* l = sub->add_option("--ltm", o.ltm, "Long-term memory size");
    sub->add_option("--threads", o.threads, "Worker threads (0: all cores)");
    sub->add_option("--format", o.format, "csv | json-lines")
        ->check(CLI::IsMember({"csv", "json-lines"}));
    sub->add_option("--trace", o.trace, "Per-step trace CSV path");
    if (sub == sw) {
      sweep_stm = s;
      sweep_ltm = l;
      sub->add_flag("--progress", o.progress, "Report progress on stderr");
    }
  }
  auto* verify = app.add_subcommand("verify", "Check the analytic constants");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    splice_config(app, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*stream) return cmd_stream(o);
    if (*run) return cmd_run(o);
    if (*sw) return cmd_sweep(o, sweep_stm->count() > 0, sweep_ltm->count() > 0);
    if (*verify) return cmd_verify();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
