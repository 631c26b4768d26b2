#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "ipdsc/io.hpp"

using namespace ipdsc;

TEST(ReportLine, ParseLabelsAndHex) {
  const Frame f;
  const auto r = parse_report(f, "17,A|C|D,0.8213");
  EXPECT_EQ(r.id, 17u);
  EXPECT_EQ(r.focal, 0x0Du);
  EXPECT_EQ(r.bpn, 0.8213);
  EXPECT_EQ(parse_report(f, "17,0x0D,0.8213"), r);
  EXPECT_EQ(parse_report(f, " 17 , D|A|C , 0.8213\r"), r);
  EXPECT_EQ(format_report(f, r), "17,A|C|D,0.8213");
}

TEST(ReportLine, Errors) {
  const Frame f;
  EXPECT_THROW(parse_report(f, "1,A,1.5", 3), parse_error);
  EXPECT_THROW(parse_report(f, "1,A,0"), parse_error);
  EXPECT_THROW(parse_report(f, "1,Z,0.5"), parse_error);
  EXPECT_THROW(parse_report(f, "1,,0.5"), parse_error);
  EXPECT_THROW(parse_report(f, "1,0x00,0.5"), parse_error);
  EXPECT_THROW(parse_report(f, "1,0x80,0.5"), parse_error);
  EXPECT_THROW(parse_report(f, "x,A,0.5"), parse_error);
  EXPECT_THROW(parse_report(f, "1,A"), parse_error);
  EXPECT_THROW(parse_report(f, "1,A,0.5,3"), parse_error);
  try {
    parse_report(f, "1,A,1.5", 3);
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(ReportLine, DatasetRoundTripIsExact) {
  const auto d = generate_dataset(5);
  std::ostringstream os;
  write_reports(os, d.frame, d.reports);
  std::istringstream is(os.str());
  EXPECT_EQ(read_reports(is, d.frame), d.reports);
}

TEST(ReportLine, ReadSkipsCommentsAndChecksOrder) {
  const Frame f(3);
  std::istringstream ok("# header\n\n1,A,0.5\n2,B|C,0.25\n");
  EXPECT_EQ(read_reports(ok, f).size(), 2u);
  std::istringstream bad("2,A,0.5\n1,B,0.5\n");
  EXPECT_THROW(read_reports(bad, f), parse_error);
}

TEST(MemorySnapshot, RoundTrip) {
  const Frame f(3);
  MemoryState m({2, 1});
  for (std::uint64_t id = 1; id <= 4; ++id) {
    m.ingest(make_report(f, id, static_cast<focal_set>(1 + id % 7), 0.1 * static_cast<double>(id)));
    std::vector<int> c(m.stm().size(), static_cast<int>(id % 2));
    if (id < 4) m.apply_assignments(std::span<const int>(c));
  }
  std::ostringstream os;
  write_memory_snapshot(os, f, m);
  const auto text = os.str();
  EXPECT_NE(text.find("[stm]\nid,focal,bpn,cluster\n"), std::string::npos);
  EXPECT_NE(text.find(",-1\n"), std::string::npos);  // r4 unassigned

  std::istringstream is(text);
  const auto back = read_memory_snapshot(is, f, m.config());
  EXPECT_EQ(back.stm(), m.stm());
  EXPECT_EQ(back.ltm(), m.ltm());
  EXPECT_EQ(back.history(), m.history());
}

TEST(MemorySnapshot, RejectsRowOutsideSection) {
  std::istringstream is("1,A,0.5,0\n");
  EXPECT_THROW(read_memory_snapshot(is, Frame(3), {2, 2}), parse_error);
}

TEST(TrackViewJson, Shape) {
  TrackView v;
  v.step = 3;
  v.tracks = {{{1}, {3}}, {{}, {2}}};
  const auto line = to_json(v).dump();
  EXPECT_EQ(line,
            R"({"step":3,"tracks":[{"permanent":[1],"tentative":[3],"track":0},)"
            R"({"permanent":[],"tentative":[2],"track":1}]})");
  EXPECT_EQ(track_view_from_json(nlohmann::json::parse(line)), v);
  v.error = "boom";
  EXPECT_EQ(track_view_from_json(to_json(v)), v);
}

TEST(SweepOutput, CsvHeaderAndJsonLines) {
  SweepRecord r;
  r.shape = {20, 80};
  r.mean_error_rate = 0.25;
  r.mean_runtime = 0.5;
  r.mean_conflict_weight = 1.5;
  r.build_invocations = 810;
  r.measure_invocations = 250;
  const std::vector<SweepRecord> records = {r};
  std::ostringstream csv;
  write_sweep_csv(csv, records);
  EXPECT_EQ(csv.str(), "stm,ltm,error_pct,time_s,weight,invocations\n20,80,0.25,0.5,1.5,1060\n");
  std::ostringstream jl;
  write_sweep_json_lines(jl, records);
  const auto j = nlohmann::json::parse(jl.str());
  EXPECT_EQ(j["stm"], 20);
  EXPECT_EQ(j["invocations"], 1060);
  EXPECT_EQ(j["error_pct"], 0.25);
}

TEST(SweepOutput, Trace) {
  SweepRecord r;
  r.shape = {5, 5};  // grid index 1
  ConfigRun run;
  run.dataset_seed = 9;
  run.step_weights = {0.5, 0.25};
  r.runs = {run};
  const std::vector<SweepRecord> records = {r};
  std::ostringstream os;
  write_trace_csv(os, records);
  EXPECT_EQ(os.str(), "config,dataset,step,weight\n1,9,1,0.5\n1,9,2,0.25\n");
}
