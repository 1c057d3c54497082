#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcdse/errors.hpp"
#include "mcdse/hsched.hpp"
#include "mcdse/io.hpp"
#include "mcdse/sched.hpp"
#include "support/gen.hpp"

using namespace mcdse;
namespace fs = std::filesystem;

namespace {

struct Artefacts {
  std::vector<NetworkSpec> nets;
  PlatformSpec platform;
  JointDesignPoint sigma;
  std::vector<TaskInstance> tasks;
  CyclicSchedule sched;
  SlowDownVector sl;
  HsConfigTable table;
};

Artefacts make_artefacts() {
  Artefacts a;
  a.platform = testgen::make_platform();
  a.nets = {testgen::make_net("one", {testgen::conv(1, 4, 3, 16, 16),
                                      testgen::nonlin(4, 14, 14)},
                              200.0),
            testgen::make_net("two", {testgen::conv(2, 4, 2, 12, 12),
                                      testgen::conv(4, 4, 3, 11, 11)})};
  EngineConfig e1;
  e1.partitioning.cut_points = {};
  e1.partitioning.input_folds = {1};
  e1.stages = {{LayerKind::Conv, 2, 3, 1}, {LayerKind::Nonlin, 1, 1, 1}};
  EngineConfig e2;
  e2.partitioning.cut_points = {1};
  e2.partitioning.input_folds = {2, 1};
  e2.stages = {{LayerKind::Conv, 4, 2, 2}, {LayerKind::Conv, 2, 3, 1}};
  a.sigma.points = {testgen::make_point(a.nets[0], e1, a.platform),
                    testgen::make_point(a.nets[1], e2, a.platform)};
  for (const auto& p : a.sigma.points) a.sigma.rsc += p.rsc;
  a.tasks = build_tasks(a.sigma, {2, 1});
  a.sl.sl.assign(a.tasks.size(), 1.0);
  a.sched = rcls(a.tasks, a.platform.b_mem_bytes_per_s);
  a.table = build_config_table(a.sched, a.tasks, a.platform);
  return a;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("mcdse_test_" + tag + "_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("read_file reports missing paths as parse errors") {
  CHECK_THROWS_WITH_AS(read_file("/no/such/mcdse_file.json"),
                       doctest::Contains("file not found"), ParseError);

  fs::path dir = fresh_dir("rw");
  write_file((dir / "x.txt").string(), "payload\n");
  CHECK(read_file((dir / "x.txt").string()) == "payload\n");
  fs::remove_all(dir);
}

TEST_CASE("design files round-trip byte for byte") {
  Artefacts a = make_artefacts();

  std::string text = dump_design(a.nets, a.platform, a.sigma);
  DesignBundle bundle = load_design(text);

  REQUIRE(bundle.nets.size() == 2);
  CHECK(bundle.nets[0].name == "one");
  CHECK(bundle.nets[1].name == "two");
  REQUIRE(bundle.nets[0].fps_target.has_value());
  CHECK(*bundle.nets[0].fps_target == 200.0);
  CHECK(!bundle.nets[1].fps_target.has_value());
  CHECK(bundle.platform.b_mem_bytes_per_s == a.platform.b_mem_bytes_per_s);
  CHECK(bundle.platform.burst_length == a.platform.burst_length);

  // Derived metrics are recomputed on load, so they agree exactly with the
  // original analysis.
  REQUIRE(bundle.sigma.points.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(bundle.sigma.points[i].latency_s ==
          doctest::Approx(a.sigma.points[i].latency_s).epsilon(1e-12));
    CHECK(bundle.sigma.points[i].engine.partitioning.cut_points ==
          a.sigma.points[i].engine.partitioning.cut_points);
    CHECK(bundle.sigma.points[i].engine.partitioning.input_folds ==
          a.sigma.points[i].engine.partitioning.input_folds);
  }

  CHECK(dump_design(bundle.nets, bundle.platform, bundle.sigma) == text);
}

TEST_CASE("schedule files round-trip byte for byte") {
  Artefacts a = make_artefacts();

  std::string text = dump_schedule(a.sched, a.tasks, a.sl);
  ScheduleBundle bundle = load_schedule(text);

  CHECK(bundle.sched.cycle_time_s == a.sched.cycle_time_s);
  REQUIRE(bundle.sched.start.size() == a.sched.start.size());
  for (std::size_t i = 0; i < a.sched.start.size(); ++i)
    CHECK(bundle.sched.start[i] == a.sched.start[i]);
  REQUIRE(bundle.tasks.size() == a.tasks.size());
  for (std::size_t i = 0; i < a.tasks.size(); ++i) {
    CHECK(bundle.tasks[i].cnn == a.tasks[i].cnn);
    CHECK(bundle.tasks[i].subgraph == a.tasks[i].subgraph);
    CHECK(bundle.tasks[i].latency_s == a.tasks[i].latency_s);
    CHECK(bundle.tasks[i].bandwidth == a.tasks[i].bandwidth);
  }
  CHECK(bundle.sl.sl == a.sl.sl);

  CHECK(dump_schedule(bundle.sched, bundle.tasks, bundle.sl) == text);
}

TEST_CASE("arbiter tables round-trip byte for byte") {
  Artefacts a = make_artefacts();

  std::string text = dump_config_table(a.table);
  HsConfigTable t = load_config_table(text);

  CHECK(t.burst_length == a.table.burst_length);
  CHECK(t.cycle_time_s == a.table.cycle_time_s);
  CHECK(t.group_slots_total == a.table.group_slots_total);
  REQUIRE(t.entries.size() == a.table.entries.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    CHECK(t.entries[i].cnn == a.table.entries[i].cnn);
    CHECK(t.entries[i].subgraph == a.table.entries[i].subgraph);
    CHECK(t.entries[i].data_elements == a.table.entries[i].data_elements);
    CHECK(t.entries[i].slots == a.table.entries[i].slots);
    CHECK(t.entries[i].base_address == a.table.entries[i].base_address);
    CHECK(t.entries[i].executions == a.table.entries[i].executions);
    CHECK(t.entries[i].group == a.table.entries[i].group);
  }

  CHECK(dump_config_table(t) == text);
}

TEST_CASE("front and simulation dumps are well-formed JSON") {
  Artefacts a = make_artefacts();

  std::vector<DesignPoint> front = {a.sigma.points[0]};
  nlohmann::json f = nlohmann::json::parse(dump_front(a.nets[0], front));
  CHECK(f.contains("network"));
  CHECK(f.contains("points"));
  CHECK(f["points"].size() == 1);

  SimConfig cfg;
  cfg.duration_frames = 2;
  SimResult res = simulate(a.sigma, a.platform, cfg, &a.table, {2, 1});
  nlohmann::json s = nlohmann::json::parse(dump_sim_result(res));
  CHECK(s.contains("fps"));
  CHECK(s["fps"].size() == 2);
}

TEST_CASE("command line pipeline runs end to end") {
  const char* bin = std::getenv("MCDSE_BIN");
  const char* data = std::getenv("MCDSE_DATA");
  if (!bin || !data) {
    MESSAGE("MCDSE_BIN / MCDSE_DATA not set; run through ctest to exercise the CLI");
    return;
  }

  fs::path dir = fresh_dir("cli");
  auto run = [&](const std::string& args) {
    std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" +
                      (dir / "last_stdout.txt").string() + "\" 2>&1";
    int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
  };
  auto slurp = [&](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
  };

  const std::string digits = (fs::path(data) / "networks" / "digits.json").string();
  const std::string platform = (fs::path(data) / "platforms" / "small.json").string();

  SUBCASE("dse writes the design artefacts deterministically") {
    std::string base = "dse --networks \"" + digits + "\" --platform \"" + platform +
                       "\" --front-cap 3 --joint-cap 20";
    CHECK(run(base + " --out \"" + (dir / "a").string() + "\"") == 0);
    for (const char* f : {"design.json", "schedule.json", "table.json"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / "a" / f));
      CHECK(fs::file_size(dir / "a" / f) > 0);
    }

    CHECK(run(base + " --out \"" + (dir / "b").string() + "\"") == 0);
    CHECK(slurp(dir / "a" / "design.json") == slurp(dir / "b" / "design.json"));
    CHECK(slurp(dir / "a" / "schedule.json") == slurp(dir / "b" / "schedule.json"));
    CHECK(slurp(dir / "a" / "table.json") == slurp(dir / "b" / "table.json"));

    SUBCASE("schedule, simulate and report consume the saved files") {
      std::string design = (dir / "a" / "design.json").string();
      CHECK(run("schedule --design \"" + design + "\" --out \"" + (dir / "c").string() + "\"") ==
            0);
      std::string schedule = (dir / "c" / "schedule.json").string();
      std::string table = (dir / "c" / "table.json").string();
      CHECK(fs::exists(schedule));
      CHECK(fs::exists(table));

      std::string sim_out = (dir / "sim.json").string();
      CHECK(run("simulate --design \"" + design + "\" --schedule \"" + schedule +
                "\" --table \"" + table + "\" --policy both --frames 2 --out \"" + sim_out +
                "\"") == 0);
      std::string sim_text = slurp(sim_out);
      CHECK(sim_text.find("\"aware\"") != std::string::npos);
      CHECK(sim_text.find("\"unaware\"") != std::string::npos);

      CHECK(run("simulate --design \"" + design + "\" --schedule \"" + schedule +
                "\" --policy unaware --frames 2 --out \"" + (dir / "sim_u.json").string() +
                "\"") == 0);

      std::string report = (dir / "report.txt").string();
      CHECK(run("report --design \"" + design + "\" --schedule \"" + schedule + "\" --sim \"" +
                sim_out + "\" --out \"" + report + "\"") == 0);
      std::string report_text = slurp(report);
      CHECK(report_text.find("period") != std::string::npos);
      CHECK(report_text.find("digits") != std::string::npos);
    }
  }

  SUBCASE("bad invocations exit with the config code") {
    CHECK(run("dse --networks \"" + digits + "\" --platform /no/such/platform.json") == 2);
    CHECK(run("dse --bogus-flag") == 2);
    CHECK(run("simulate --design x --schedule y --policy sideways") == 2);
  }

  SUBCASE("an impossible platform exits with the infeasible code") {
    fs::path tiny = dir / "tiny_platform.json";
    write_file(tiny.string(), R"({
  "lut": 10,
  "ff": 10,
  "dsp": 1,
  "bram": 1,
  "b_mem_bytes_per_s": 1.2e9,
  "clock_hz": 1.5e8,
  "port_width_bits": 64,
  "wordlength_bits": 16,
  "burst_length": 1024,
  "stage_latency_cycles": 16,
  "cost_model": {
    "dsp_per_mult": 1,
    "lut_per_pe": 120,
    "ff_per_pe": 96,
    "lut_base": 300,
    "ff_base": 200,
    "bram_bytes": 2048
  }
}
)");
    CHECK(run("dse --networks \"" + digits + "\" --platform \"" + tiny.string() + "\"") == 1);
  }

  fs::remove_all(dir);
}
