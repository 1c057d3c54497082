#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcdse/errors.hpp"
#include "mcdse/hsched.hpp"
#include "mcdse/io.hpp"
#include "mcdse/model.hpp"
#include "mcdse/optimizer.hpp"
#include "mcdse/pareto.hpp"
#include "mcdse/sched.hpp"
#include "mcdse/sim.hpp"

namespace {

using mcdse::ConfigError;
using json = nlohmann::ordered_json;

std::vector<int> parse_int_csv(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not an integer");
    }
  }
  return out;
}

std::vector<double> parse_double_csv(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<mcdse::NetworkSpec> load_networks(const std::vector<std::string>& paths,
                                              const std::vector<std::string>& target_overrides) {
  if (paths.empty()) throw ConfigError("at least one --networks file is required");
  std::vector<mcdse::NetworkSpec> nets;
  for (const auto& p : paths) nets.push_back(mcdse::parse_network(mcdse::read_file(p)));

  for (const auto& ov : target_overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--fps-target expects NAME=VALUE, got '" + ov + "'");
    std::string name = ov.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(ov.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--fps-target " + name + ": '" + ov.substr(eq + 1) +
                        "' is not a number");
    }
    bool found = false;
    for (auto& net : nets)
      if (net.name == name) {
        net.fps_target = value;
        found = true;
      }
    if (!found) throw ConfigError("--fps-target: no network named '" + name + "'");
  }
  return nets;
}

std::vector<int> resolve_reps(const std::string& rep_arg,
                              const std::vector<mcdse::NetworkSpec>& nets) {
  if (rep_arg.empty()) return std::vector<int>(nets.size(), 1);
  if (rep_arg == "auto") return mcdse::derive_reps(nets, true);
  std::vector<int> reps = parse_int_csv(rep_arg, "--rep");
  if (reps.size() != nets.size())
    throw ConfigError("--rep: expected " + std::to_string(nets.size()) + " values");
  for (int r : reps)
    if (r < 1) throw ConfigError("--rep: repetitions must be >= 1");
  return reps;
}

mcdse::ObjectiveKind parse_objective(const std::string& name) {
  if (name == "fps") return mcdse::ObjectiveKind::FpsTarget;
  if (name == "maxthrpt") return mcdse::ObjectiveKind::MaxThroughput;
  throw ConfigError("--objective must be 'fps' or 'maxthrpt', got '" + name + "'");
}

mcdse::SolverKind parse_solver(const std::string& name) {
  if (name == "rcls") return mcdse::SolverKind::Rcls;
  if (name == "exact") return mcdse::SolverKind::Exact;
  throw ConfigError("--solver must be 'rcls' or 'exact', got '" + name + "'");
}

// Repetitions per network implied by an unrolled task list.
std::vector<int> reps_from_tasks(const std::vector<mcdse::TaskInstance>& tasks,
                                 const mcdse::JointDesignPoint& sigma) {
  std::vector<int> count(sigma.points.size(), 0);
  for (const auto& t : tasks) {
    if (t.cnn < 0 || t.cnn >= int(count.size()))
      throw ConfigError("schedule refers to network " + std::to_string(t.cnn) +
                        " which the design does not have");
    ++count[t.cnn];
  }
  std::vector<int> reps(sigma.points.size(), 1);
  for (std::size_t i = 0; i < count.size(); ++i) {
    int subgraphs = sigma.points[i].engine.partitioning.subgraph_count();
    if (count[i] == 0 || count[i] % subgraphs != 0)
      throw ConfigError("schedule task count for network " + std::to_string(i) +
                        " is not a multiple of its subgraph count");
    reps[i] = count[i] / subgraphs;
  }
  return reps;
}

struct DseArgs {
  std::vector<std::string> networks;
  std::string platform;
  std::string objective = "fps";
  std::vector<std::string> fps_targets;
  int max_subgraphs = 8;
  int front_cap = 0;
  int joint_cap = 0;
  std::string rep;
  std::string solver = "rcls";
  double quantum = 0.0;
  double search_step = 0.5;
  int search_iters = 200;
  std::string out = "out";
  bool write_fronts = false;
};

int run_dse(const DseArgs& a) {
  std::vector<mcdse::NetworkSpec> nets = load_networks(a.networks, a.fps_targets);
  mcdse::PlatformSpec platform = mcdse::parse_platform(mcdse::read_file(a.platform));

  mcdse::LatticeLimits limits;
  limits.max_subgraphs = a.max_subgraphs;

  std::vector<std::vector<mcdse::DesignPoint>> fronts;
  for (const auto& net : nets) {
    auto points = mcdse::enumerate_points(net, platform, limits);
    fronts.push_back(mcdse::pareto_front(points));
    std::cout << net.name << ": " << points.size() << " design points, front "
              << fronts.back().size() << "\n";
    if (a.write_fronts)
      mcdse::write_file((std::filesystem::path(a.out) / ("front_" + net.name + ".json")).string(),
                        mcdse::dump_front(net, fronts.back()));
  }

  auto refs = mcdse::derive_references(fronts, nets);
  mcdse::Objective obj = mcdse::make_objective(parse_objective(a.objective), nets, refs);
  std::vector<int> reps = resolve_reps(a.rep, nets);

  std::vector<mcdse::JointDesignPoint> joints =
      mcdse::enumerate_joint(fronts, platform.rsc_avail, a.front_cap);
  if (a.joint_cap > 0 && int(joints.size()) > a.joint_cap)
    joints.resize(std::size_t(a.joint_cap));
  std::cout << "joint points: " << joints.size() << "\n";

  mcdse::PatternSearchParams params;
  params.initial_step = a.search_step;
  params.max_iterations = a.search_iters;

  mcdse::DseResult result =
      mcdse::memory_aware_dse(joints, obj, platform.b_mem_bytes_per_s, reps, params,
                              parse_solver(a.solver), a.quantum);
  mcdse::check_schedule(result.schedule, result.tasks, platform.b_mem_bytes_per_s);
  mcdse::HsConfigTable table =
      mcdse::build_config_table(result.schedule, result.tasks, platform);

  std::filesystem::path out(a.out);
  mcdse::write_file((out / "design.json").string(),
                    mcdse::dump_design(nets, platform, result.sigma));
  mcdse::write_file((out / "schedule.json").string(),
                    mcdse::dump_schedule(result.schedule, result.tasks, result.sl));
  mcdse::write_file((out / "table.json").string(), mcdse::dump_config_table(table));

  std::cout << "chosen joint " << result.joint_index << ", objective "
            << result.objective_value << ", period " << result.schedule.cycle_time_s << " s\n";
  for (std::size_t i = 0; i < nets.size(); ++i) {
    double gops = double(nets[i].total_ops()) * result.fps[i] / 1e9;
    std::cout << "  " << nets[i].name << ": " << result.fps[i] << " fps (target "
              << obj.fps_target[i] << "), " << gops << " GOp/s\n";
  }
  std::cout << "wrote " << (out / "design.json").string() << " "
            << (out / "schedule.json").string() << " " << (out / "table.json").string() << "\n";
  return 0;
}

struct ScheduleArgs {
  std::string design;
  std::string rep;
  std::string slowdowns;
  std::string solver = "rcls";
  double quantum = 0.0;
  std::string out = "out";
};

int run_schedule(const ScheduleArgs& a) {
  mcdse::DesignBundle bundle = mcdse::load_design(mcdse::read_file(a.design));
  std::vector<int> reps = resolve_reps(a.rep, bundle.nets);
  std::vector<mcdse::TaskInstance> base = mcdse::build_tasks(bundle.sigma, reps);
  double b_mem = bundle.platform.b_mem_bytes_per_s;

  mcdse::SlowDownVector sl;
  if (!a.slowdowns.empty()) {
    sl.sl = parse_double_csv(a.slowdowns, "--slowdowns");
    if (sl.sl.size() != base.size())
      throw ConfigError("--slowdowns: expected " + std::to_string(base.size()) + " values");
  } else {
    mcdse::CyclicSchedule unconstrained = mcdse::rcls(base, b_mem, false);
    mcdse::ViolationReport report = mcdse::violations(unconstrained, base, b_mem);
    sl = mcdse::remove_violations(base, report);
  }

  std::vector<mcdse::TaskInstance> tasks = mcdse::apply_slowdowns(base, sl);
  mcdse::CyclicSchedule sched =
      parse_solver(a.solver) == mcdse::SolverKind::Rcls
          ? mcdse::rcls(tasks, b_mem, true)
          : mcdse::exact_schedule(tasks, b_mem, a.quantum > 0 ? a.quantum : 1e-5);
  mcdse::check_schedule(sched, tasks, b_mem);
  mcdse::HsConfigTable table = mcdse::build_config_table(sched, tasks, bundle.platform);

  std::filesystem::path out(a.out);
  mcdse::write_file((out / "schedule.json").string(), mcdse::dump_schedule(sched, tasks, sl));
  mcdse::write_file((out / "table.json").string(), mcdse::dump_config_table(table));

  std::cout << "period " << sched.cycle_time_s << " s, " << tasks.size() << " tasks\n";
  for (std::size_t i = 0; i < bundle.nets.size(); ++i)
    std::cout << "  " << bundle.nets[i].name << ": " << double(reps[i]) / sched.cycle_time_s
              << " fps\n";
  std::cout << "wrote " << (out / "schedule.json").string() << " "
            << (out / "table.json").string() << "\n";
  return 0;
}

struct SimArgs {
  std::string design;
  std::string schedule;
  std::string table;
  std::string policy = "aware";
  int frames = 4;
  std::uint64_t seed = 1;
  std::uint64_t fifo = 0;
  bool trace = false;
  std::string out = "out/sim.json";
};

int run_simulate(const SimArgs& a) {
  mcdse::DesignBundle bundle = mcdse::load_design(mcdse::read_file(a.design));
  mcdse::ScheduleBundle sched = mcdse::load_schedule(mcdse::read_file(a.schedule));
  std::vector<int> reps = reps_from_tasks(sched.tasks, bundle.sigma);

  mcdse::SimConfig cfg;
  cfg.duration_frames = a.frames;
  cfg.seed = a.seed;
  cfg.fifo_elements = a.fifo;
  cfg.trace = a.trace;

  const bool needs_table = a.policy == "aware" || a.policy == "both";
  mcdse::HsConfigTable table;
  if (needs_table) {
    if (a.table.empty()) throw ConfigError("--table is required for the memory-aware policy");
    table = mcdse::load_config_table(mcdse::read_file(a.table));
  }

  if (a.policy == "aware" || a.policy == "unaware") {
    cfg.policy = a.policy == "aware" ? mcdse::ArbiterPolicy::MemoryAware
                                     : mcdse::ArbiterPolicy::ContentionUnaware;
    mcdse::SimResult result = mcdse::simulate(bundle.sigma, bundle.platform, cfg,
                                              needs_table ? &table : nullptr, reps);
    mcdse::write_file(a.out, mcdse::dump_sim_result(result));
    for (std::size_t i = 0; i < result.fps.size(); ++i)
      std::cout << "  " << bundle.nets[i].name << ": " << result.fps[i] << " fps, "
                << result.stall_cycles[i] << " stall cycles\n";
    std::cout << "wrote " << a.out << "\n";
    return 0;
  }

  if (a.policy != "both")
    throw ConfigError("--policy must be 'aware', 'unaware' or 'both', got '" + a.policy + "'");

  // Targets for scoring: the deployment's own where present, otherwise what
  // the schedule promises.
  std::vector<mcdse::Reference> refs(bundle.nets.size());
  mcdse::Objective obj;
  obj.kind = mcdse::ObjectiveKind::FpsTarget;
  obj.refs = refs;
  for (std::size_t i = 0; i < bundle.nets.size(); ++i)
    obj.fps_target.push_back(
        bundle.nets[i].fps_target.value_or(double(reps[i]) / sched.sched.cycle_time_s));

  mcdse::PolicyComparison cmp =
      mcdse::compare_policies(bundle.sigma, bundle.platform, obj, reps, table, cfg);

  json doc;
  auto block = [](double objective, const std::vector<double>& fps) {
    json b;
    b["objective"] = objective;
    b["fps"] = fps;
    return b;
  };
  doc["predicted"] = block(cmp.predicted_obj, cmp.predicted_fps);
  doc["unaware"] = block(cmp.unaware_obj, cmp.unaware_fps);
  doc["aware"] = block(cmp.aware_obj, cmp.aware_fps);
  mcdse::write_file(a.out, doc.dump(2) + "\n");

  for (std::size_t i = 0; i < bundle.nets.size(); ++i)
    std::cout << "  " << bundle.nets[i].name << ": predicted " << cmp.predicted_fps[i]
              << ", unaware " << cmp.unaware_fps[i] << ", aware " << cmp.aware_fps[i]
              << " fps\n";
  std::cout << "objective: unaware " << cmp.unaware_obj << ", aware " << cmp.aware_obj << "\n";
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct ReportArgs {
  std::string design;
  std::string schedule;
  std::string sim;
  std::string out;
};

int run_report(const ReportArgs& a) {
  mcdse::DesignBundle bundle = mcdse::load_design(mcdse::read_file(a.design));
  std::ostringstream rep;

  rep << "networks: " << bundle.nets.size() << "\n";
  for (std::size_t i = 0; i < bundle.nets.size(); ++i) {
    const auto& net = bundle.nets[i];
    const auto& point = bundle.sigma.points[i];
    rep << "  " << net.name << ": " << net.layers.size() << " layers, "
        << double(net.total_ops()) / 1e9 << " GOp/frame, "
        << point.engine.partitioning.subgraph_count() << " subgraphs";
    if (net.fps_target) rep << ", target " << *net.fps_target << " fps";
    rep << "\n";
  }
  rep << "resources: lut " << bundle.sigma.rsc.lut << ", ff " << bundle.sigma.rsc.ff
      << ", dsp " << bundle.sigma.rsc.dsp << ", bram " << bundle.sigma.rsc.bram << "\n";

  if (!a.schedule.empty()) {
    mcdse::ScheduleBundle sched = mcdse::load_schedule(mcdse::read_file(a.schedule));
    std::vector<int> reps = reps_from_tasks(sched.tasks, bundle.sigma);
    rep << "period: " << sched.sched.cycle_time_s << " s\n";
    for (std::size_t i = 0; i < bundle.nets.size(); ++i) {
      double fps = double(reps[i]) / sched.sched.cycle_time_s;
      rep << "  " << bundle.nets[i].name << ": " << fps << " fps, "
          << double(bundle.nets[i].total_ops()) * fps / 1e9 << " GOp/s\n";
    }
  }

  if (!a.sim.empty()) {
    json doc = json::parse(mcdse::read_file(a.sim));
    if (doc.contains("aware") && doc.contains("unaware")) {
      std::vector<double> aware = doc["aware"]["fps"].get<std::vector<double>>();
      std::vector<double> unaware = doc["unaware"]["fps"].get<std::vector<double>>();
      double log_sum = 0.0;
      for (std::size_t i = 0; i < aware.size() && i < unaware.size(); ++i)
        log_sum += std::log(aware[i] / unaware[i]);
      double geo = std::exp(log_sum / double(aware.size()));
      double obj_aware = doc["aware"]["objective"].get<double>();
      double obj_unaware = doc["unaware"]["objective"].get<double>();
      rep << "arbitration: geo-mean speed-up " << geo << "x";
      if (obj_unaware > 0)
        rep << ", objective gain " << (obj_unaware - obj_aware) / obj_unaware * 100.0 << "%";
      rep << "\n";
    } else if (doc.contains("fps")) {
      std::vector<double> fps = doc["fps"].get<std::vector<double>>();
      for (std::size_t i = 0; i < fps.size() && i < bundle.nets.size(); ++i)
        rep << "  simulated " << bundle.nets[i].name << ": " << fps[i] << " fps\n";
    }
  }

  std::cout << rep.str();
  if (!a.out.empty()) mcdse::write_file(a.out, rep.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-network FPGA mapping: design-space exploration, cyclic "
               "scheduling and memory-contention simulation"};
  app.require_subcommand(1);

  DseArgs dse;
  CLI::App* dse_cmd = app.add_subcommand("dse", "Explore designs and pick the joint mapping");
  dse_cmd->add_option("--networks", dse.networks, "Network description files")->required();
  dse_cmd->add_option("--platform", dse.platform, "Platform description file")->required();
  dse_cmd->add_option("--objective", dse.objective, "fps | maxthrpt");
  dse_cmd->add_option("--fps-target", dse.fps_targets, "Override a target, NAME=VALUE");
  dse_cmd->add_option("--max-subgraphs", dse.max_subgraphs, "Partitioning depth limit");
  dse_cmd->add_option("--front-cap", dse.front_cap, "Keep only the fastest N front points");
  dse_cmd->add_option("--joint-cap", dse.joint_cap, "Evaluate at most N joint points");
  dse_cmd->add_option("--rep", dse.rep, "Frame repetitions per period: CSV or 'auto'");
  dse_cmd->add_option("--solver", dse.solver, "rcls | exact");
  dse_cmd->add_option("--quantum", dse.quantum, "Exact solver time quantum (s)");
  dse_cmd->add_option("--search-step", dse.search_step, "Initial pattern-search step");
  dse_cmd->add_option("--search-iters", dse.search_iters, "Pattern-search iteration cap");
  dse_cmd->add_option("--out", dse.out, "Output directory");
  dse_cmd->add_flag("--fronts", dse.write_fronts, "Also write per-network front files");

  ScheduleArgs sch;
  CLI::App* sch_cmd = app.add_subcommand("schedule", "Schedule a saved design");
  sch_cmd->add_option("--design", sch.design, "Design file from dse")->required();
  sch_cmd->add_option("--rep", sch.rep, "Frame repetitions per period: CSV or 'auto'");
  sch_cmd->add_option("--slowdowns", sch.slowdowns, "Per-task slow-down factors, CSV");
  sch_cmd->add_option("--solver", sch.solver, "rcls | exact");
  sch_cmd->add_option("--quantum", sch.quantum, "Exact solver time quantum (s)");
  sch_cmd->add_option("--out", sch.out, "Output directory");

  SimArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Replay a schedule against the memory port");
  sim_cmd->add_option("--design", sim.design, "Design file from dse")->required();
  sim_cmd->add_option("--schedule", sim.schedule, "Schedule file")->required();
  sim_cmd->add_option("--table", sim.table, "Arbiter table file");
  sim_cmd->add_option("--policy", sim.policy, "aware | unaware | both");
  sim_cmd->add_option("--frames", sim.frames, "Periods to simulate");
  sim_cmd->add_option("--seed", sim.seed, "Seed for the contention-unaware interleaving");
  sim_cmd->add_option("--fifo", sim.fifo, "Prefetch FIFO capacity in elements (0 = default)");
  sim_cmd->add_flag("--trace", sim.trace, "Record an event trace in the result");
  sim_cmd->add_option("--out", sim.out, "Output file");

  ReportArgs rpt;
  CLI::App* rpt_cmd = app.add_subcommand("report", "Summarise saved artefacts");
  rpt_cmd->add_option("--design", rpt.design, "Design file from dse")->required();
  rpt_cmd->add_option("--schedule", rpt.schedule, "Schedule file");
  rpt_cmd->add_option("--sim", rpt.sim, "Simulation result file");
  rpt_cmd->add_option("--out", rpt.out, "Also write the report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (dse_cmd->parsed()) return run_dse(dse);
    if (sch_cmd->parsed()) return run_schedule(sch);
    if (sim_cmd->parsed()) return run_simulate(sim);
    return run_report(rpt);
  } catch (const mcdse::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mcdse::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mcdse::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mcdse::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 1;
  } catch (const mcdse::ScheduleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 1;
  } catch (const mcdse::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
