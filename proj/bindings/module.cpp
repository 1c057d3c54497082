#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcdse/errors.hpp"
#include "mcdse/hsched.hpp"
#include "mcdse/io.hpp"
#include "mcdse/model.hpp"
#include "mcdse/optimizer.hpp"
#include "mcdse/pareto.hpp"
#include "mcdse/sched.hpp"
#include "mcdse/sim.hpp"

namespace py = pybind11;
using namespace mcdse;

namespace {

ObjectiveKind objective_kind(const std::string& name) {
  if (name == "fps") return ObjectiveKind::FpsTarget;
  if (name == "maxthrpt") return ObjectiveKind::MaxThroughput;
  throw ConfigError("objective must be 'fps' or 'maxthrpt', got '" + name + "'");
}

struct PlanResult {
  DseResult dse;
  HsConfigTable table;
  std::vector<NetworkSpec> nets;
  PlatformSpec platform;
};

// One-call pipeline: fronts, joint enumeration, memory-aware exploration,
// arbiter table.
PlanResult plan(const std::vector<std::string>& network_texts, const std::string& platform_text,
                const std::string& objective, const std::vector<int>& rep, int max_subgraphs,
                int front_cap, int joint_cap) {
  PlanResult out;
  for (const auto& text : network_texts) out.nets.push_back(parse_network(text));
  out.platform = parse_platform(platform_text);

  LatticeLimits limits;
  limits.max_subgraphs = max_subgraphs;
  std::vector<std::vector<DesignPoint>> fronts;
  for (const auto& net : out.nets)
    fronts.push_back(pareto_front(enumerate_points(net, out.platform, limits)));

  Objective obj =
      make_objective(objective_kind(objective), out.nets, derive_references(fronts, out.nets));
  std::vector<int> reps = rep.empty() ? std::vector<int>(out.nets.size(), 1) : rep;

  std::vector<JointDesignPoint> joints =
      enumerate_joint(fronts, out.platform.rsc_avail, front_cap);
  if (joint_cap > 0 && int(joints.size()) > joint_cap) joints.resize(std::size_t(joint_cap));

  out.dse = memory_aware_dse(joints, obj, out.platform.b_mem_bytes_per_s, reps);
  out.table = build_config_table(out.dse.schedule, out.dse.tasks, out.platform);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-network FPGA mapping: exploration, scheduling, simulation";

  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<InfeasibleError>(m, "InfeasibleError");
  py::register_exception<ScheduleError>(m, "ScheduleError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ModelError>(m, "ModelError");

  m.attr("SLOWDOWN_FLOOR") = kSlowDownFloor;

  py::class_<NetworkSpec>(m, "Network")
      .def_readonly("name", &NetworkSpec::name)
      .def_property_readonly("fps_target",
                             [](const NetworkSpec& n) { return n.fps_target; })
      .def_property_readonly("layer_count",
                             [](const NetworkSpec& n) { return n.layers.size(); })
      .def("total_ops", &NetworkSpec::total_ops);

  py::class_<PlatformSpec>(m, "Platform")
      .def_readonly("b_mem_bytes_per_s", &PlatformSpec::b_mem_bytes_per_s)
      .def_readonly("clock_hz", &PlatformSpec::clock_hz)
      .def_readonly("burst_length", &PlatformSpec::burst_length);

  py::class_<ResourceVector>(m, "Resources")
      .def_readonly("lut", &ResourceVector::lut)
      .def_readonly("ff", &ResourceVector::ff)
      .def_readonly("dsp", &ResourceVector::dsp)
      .def_readonly("bram", &ResourceVector::bram);

  py::class_<DesignPoint>(m, "DesignPoint")
      .def_readonly("latency_s", &DesignPoint::latency_s)
      .def_readonly("rsc", &DesignPoint::rsc)
      .def_property_readonly("subgraphs", [](const DesignPoint& p) {
        return p.engine.partitioning.subgraph_count();
      });

  py::class_<JointDesignPoint>(m, "JointDesignPoint")
      .def_readonly("points", &JointDesignPoint::points)
      .def_readonly("rsc", &JointDesignPoint::rsc);

  py::class_<TaskInstance>(m, "Task")
      .def_readonly("cnn", &TaskInstance::cnn)
      .def_readonly("subgraph", &TaskInstance::subgraph)
      .def_readonly("latency_s", &TaskInstance::latency_s)
      .def_readonly("bandwidth", &TaskInstance::bandwidth);

  py::class_<CyclicSchedule>(m, "Schedule")
      .def_readonly("start", &CyclicSchedule::start)
      .def_readonly("cycle_time_s", &CyclicSchedule::cycle_time_s);

  py::class_<HsEntry>(m, "TableEntry")
      .def_readonly("cnn", &HsEntry::cnn)
      .def_readonly("subgraph", &HsEntry::subgraph)
      .def_readonly("data_elements", &HsEntry::data_elements)
      .def_readonly("slots", &HsEntry::slots)
      .def_readonly("executions", &HsEntry::executions)
      .def_readonly("group", &HsEntry::group);

  py::class_<HsConfigTable>(m, "ConfigTable")
      .def_readonly("entries", &HsConfigTable::entries)
      .def_readonly("group_slots_total", &HsConfigTable::group_slots_total)
      .def_readonly("cycle_time_s", &HsConfigTable::cycle_time_s)
      .def("dump", [](const HsConfigTable& t) { return dump_config_table(t); });

  py::class_<SimResult>(m, "SimResult")
      .def_readonly("fps", &SimResult::fps)
      .def_readonly("stall_cycles", &SimResult::stall_cycles)
      .def_readonly("delivered_bytes", &SimResult::delivered_bytes)
      .def_readonly("frame_times_s", &SimResult::frame_times_s)
      .def_readonly("sim_time_s", &SimResult::sim_time_s);

  py::class_<PlanResult>(m, "PlanResult")
      .def_property_readonly("joint_index",
                             [](const PlanResult& r) { return r.dse.joint_index; })
      .def_property_readonly("objective_value",
                             [](const PlanResult& r) { return r.dse.objective_value; })
      .def_property_readonly("fps", [](const PlanResult& r) { return r.dse.fps; })
      .def_property_readonly("slow_downs", [](const PlanResult& r) { return r.dse.sl.sl; })
      .def_property_readonly("cycle_time_s",
                             [](const PlanResult& r) { return r.dse.schedule.cycle_time_s; })
      .def_property_readonly("table", [](const PlanResult& r) { return r.table; })
      .def("design_json",
           [](const PlanResult& r) { return dump_design(r.nets, r.platform, r.dse.sigma); })
      .def("schedule_json",
           [](const PlanResult& r) {
             return dump_schedule(r.dse.schedule, r.dse.tasks, r.dse.sl);
           })
      .def("table_json", [](const PlanResult& r) { return dump_config_table(r.table); });

  m.def("parse_network", &parse_network, py::arg("text"));
  m.def("parse_platform", &parse_platform, py::arg("text"));

  m.def(
      "enumerate_points",
      [](const NetworkSpec& net, const PlatformSpec& platform, int max_subgraphs) {
        LatticeLimits limits;
        limits.max_subgraphs = max_subgraphs;
        return enumerate_points(net, platform, limits);
      },
      py::arg("network"), py::arg("platform"), py::arg("max_subgraphs") = 8);
  m.def("pareto_front", &pareto_front, py::arg("points"));
  m.def("enumerate_joint", &enumerate_joint, py::arg("fronts"), py::arg("rsc_avail"),
        py::arg("front_cap") = 0);

  m.def(
      "compute_slots",
      [](const std::vector<double>& demands, double b_mem, int max_total) {
        SlotAllocation a = compute_slots(demands, b_mem, max_total);
        return py::make_tuple(a.slots, a.slots_total, a.max_error);
      },
      py::arg("demands"), py::arg("b_mem"), py::arg("max_slots_total") = 64);

  m.def("plan", &plan, py::arg("networks"), py::arg("platform"), py::arg("objective") = "fps",
        py::arg("rep") = std::vector<int>{}, py::arg("max_subgraphs") = 8,
        py::arg("front_cap") = 0, py::arg("joint_cap") = 0);

  m.def(
      "simulate",
      [](const PlanResult& r, const std::string& policy, int frames, std::uint64_t seed) {
        SimConfig cfg;
        cfg.duration_frames = frames;
        cfg.seed = seed;
        if (policy == "aware") {
          cfg.policy = ArbiterPolicy::MemoryAware;
          return simulate(r.dse.sigma, r.platform, cfg, &r.table, r.dse.rep);
        }
        if (policy == "unaware") {
          cfg.policy = ArbiterPolicy::ContentionUnaware;
          return simulate(r.dse.sigma, r.platform, cfg, nullptr, r.dse.rep);
        }
        throw ConfigError("policy must be 'aware' or 'unaware', got '" + policy + "'");
      },
      py::arg("plan"), py::arg("policy") = "aware", py::arg("frames") = 4, py::arg("seed") = 1);
}
