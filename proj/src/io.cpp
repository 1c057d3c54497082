#include "mcdse/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcdse/errors.hpp"

namespace mcdse {

using json = nlohmann::ordered_json;

namespace {

json engine_to_json(const EngineConfig& engine) {
  json e;
  e["cut_points"] = engine.partitioning.cut_points;
  e["input_folds"] = engine.partitioning.input_folds;
  json stages = json::array();
  for (const auto& s : engine.stages) {
    json js;
    js["kind"] = layer_kind_name(s.kind);
    js["n_pe"] = s.n_pe;
    js["n_op"] = s.n_op;
    js["f_in"] = s.f_in;
    stages.push_back(js);
  }
  e["stages"] = stages;
  return e;
}

json rsc_to_json(const ResourceVector& r) {
  json j;
  j["lut"] = r.lut;
  j["ff"] = r.ff;
  j["dsp"] = r.dsp;
  j["bram"] = r.bram;
  return j;
}

json metrics_to_json(const SubgraphMetrics& m) {
  json j;
  j["latency_s"] = m.latency_s;
  j["weights_time_s"] = m.weights_time_s;
  j["bandwidth_bytes_per_s"] = m.bandwidth_bytes_per_s;
  j["ops"] = m.ops;
  j["weight_bytes"] = m.weight_bytes;
  j["io_bytes"] = m.io_bytes;
  j["depth_cycles"] = m.depth_cycles;
  j["ii_max_cycles"] = m.ii_max_cycles;
  j["tile_reps"] = m.tile_reps;
  return j;
}

json point_to_json(const DesignPoint& p) {
  json j;
  j["engine"] = engine_to_json(p.engine);
  j["latency_s"] = p.latency_s;
  j["rsc"] = rsc_to_json(p.rsc);
  json ms = json::array();
  for (const auto& m : p.metrics) ms.push_back(metrics_to_json(m));
  j["metrics"] = ms;
  return j;
}

json parse_document(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": malformed document: " + e.what());
  }
}

const json& need(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(std::string(where) + ": missing key '" + key + "'");
  return *it;
}

LayerKind stage_kind(const std::string& s, const char* where) {
  if (s == "Conv") return LayerKind::Conv;
  if (s == "Pool") return LayerKind::Pool;
  if (s == "Nonlin") return LayerKind::Nonlin;
  throw ParseError(std::string(where) + ": unknown stage kind '" + s + "'");
}

EngineConfig engine_from_json(const json& e, const char* where) {
  EngineConfig engine;
  for (const auto& c : need(e, "cut_points", where))
    engine.partitioning.cut_points.push_back(c.get<int>());
  for (const auto& f : need(e, "input_folds", where))
    engine.partitioning.input_folds.push_back(f.get<int>());
  for (const auto& js : need(e, "stages", where)) {
    StageConfig s;
    s.kind = stage_kind(need(js, "kind", where).get<std::string>(), where);
    s.n_pe = need(js, "n_pe", where).get<int>();
    s.n_op = need(js, "n_op", where).get<int>();
    s.f_in = need(js, "f_in", where).get<int>();
    engine.stages.push_back(s);
  }
  return engine;
}

}  // namespace

std::string dump_front(const NetworkSpec& net, const std::vector<DesignPoint>& front) {
  json doc;
  doc["network"] = net.name;
  json points = json::array();
  for (const auto& p : front) points.push_back(point_to_json(p));
  doc["points"] = points;
  return doc.dump(2) + "\n";
}

std::string dump_design(const std::vector<NetworkSpec>& nets, const PlatformSpec& platform,
                        const JointDesignPoint& sigma) {
  json doc;
  json jnets = json::array();
  for (const auto& net : nets) jnets.push_back(json::parse(serialize_network(net)));
  doc["networks"] = jnets;
  doc["platform"] = json::parse(serialize_platform(platform));
  json design;
  json points = json::array();
  for (const auto& p : sigma.points) points.push_back(point_to_json(p));
  design["points"] = points;
  design["rsc"] = rsc_to_json(sigma.rsc);
  doc["design"] = design;
  return doc.dump(2) + "\n";
}

DesignBundle load_design(const std::string& text) {
  json doc = parse_document(text, "design");
  DesignBundle bundle;
  for (const auto& jn : need(doc, "networks", "design"))
    bundle.nets.push_back(parse_network(jn.dump()));
  bundle.platform = parse_platform(need(doc, "platform", "design").dump());

  const json& design = need(doc, "design", "design");
  const json& points = need(design, "points", "design");
  if (points.size() != bundle.nets.size())
    throw ParseError("design: point count differs from network count");

  // Engines are authoritative; metrics and resources are re-derived so a
  // hand-edited file cannot smuggle stale numbers into later stages.
  for (std::size_t i = 0; i < bundle.nets.size(); ++i) {
    DesignPoint p;
    p.engine = engine_from_json(need(points[i], "engine", "design point"), "design point");
    validate_engine_config(bundle.nets[i], p.engine);
    int subgraphs = p.engine.partitioning.subgraph_count();
    for (int s = 0; s < subgraphs; ++s) {
      SubgraphMetrics m = analyse_subgraph(bundle.nets[i], p.engine, s, bundle.platform);
      p.latency_s += m.latency_s + m.weights_time_s;
      p.metrics.push_back(m);
    }
    p.rsc = resource_usage(bundle.nets[i], p.engine, bundle.platform.cost_model);
    bundle.sigma.rsc += p.rsc;
    bundle.sigma.points.push_back(p);
  }
  return bundle;
}

std::string dump_schedule(const CyclicSchedule& sched, const std::vector<TaskInstance>& tasks,
                          const SlowDownVector& sl) {
  json doc;
  doc["cycle_time_s"] = sched.cycle_time_s;
  json jt = json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    json t;
    t["cnn"] = tasks[i].cnn;
    t["subgraph"] = tasks[i].subgraph;
    t["start_s"] = sched.start[i];
    t["latency_s"] = tasks[i].latency_s;
    t["bandwidth"] = tasks[i].bandwidth;
    t["slow_down"] = i < sl.sl.size() ? sl.sl[i] : 1.0;
    jt.push_back(t);
  }
  doc["tasks"] = jt;
  return doc.dump(2) + "\n";
}

ScheduleBundle load_schedule(const std::string& text) {
  json doc = parse_document(text, "schedule");
  ScheduleBundle bundle;
  bundle.sched.cycle_time_s = need(doc, "cycle_time_s", "schedule").get<double>();
  for (const auto& jt : need(doc, "tasks", "schedule")) {
    TaskInstance t;
    t.cnn = need(jt, "cnn", "schedule task").get<int>();
    t.subgraph = need(jt, "subgraph", "schedule task").get<int>();
    t.latency_s = need(jt, "latency_s", "schedule task").get<double>();
    t.bandwidth = need(jt, "bandwidth", "schedule task").get<double>();
    bundle.sched.start.push_back(need(jt, "start_s", "schedule task").get<double>());
    bundle.sl.sl.push_back(need(jt, "slow_down", "schedule task").get<double>());
    bundle.tasks.push_back(t);
  }
  return bundle;
}

std::string dump_config_table(const HsConfigTable& table) {
  json doc;
  doc["burst_length"] = table.burst_length;
  doc["cycle_time_s"] = table.cycle_time_s;
  doc["group_slots_total"] = table.group_slots_total;
  json entries = json::array();
  for (const auto& e : table.entries) {
    json je;
    je["cnn"] = e.cnn;
    je["subgraph"] = e.subgraph;
    je["data_elements"] = e.data_elements;
    je["slots"] = e.slots;
    je["base_address"] = e.base_address;
    je["executions"] = e.executions;
    je["start_s"] = e.start_s;
    je["duration_s"] = e.duration_s;
    je["bandwidth"] = e.bandwidth;
    je["group"] = e.group;
    entries.push_back(je);
  }
  doc["entries"] = entries;
  return doc.dump(2) + "\n";
}

HsConfigTable load_config_table(const std::string& text) {
  json doc = parse_document(text, "config table");
  HsConfigTable table;
  table.burst_length = need(doc, "burst_length", "config table").get<int>();
  table.cycle_time_s = need(doc, "cycle_time_s", "config table").get<double>();
  for (const auto& g : need(doc, "group_slots_total", "config table"))
    table.group_slots_total.push_back(g.get<int>());
  for (const auto& je : need(doc, "entries", "config table")) {
    HsEntry e;
    e.cnn = need(je, "cnn", "table entry").get<int>();
    e.subgraph = need(je, "subgraph", "table entry").get<int>();
    e.data_elements = need(je, "data_elements", "table entry").get<std::uint64_t>();
    e.slots = need(je, "slots", "table entry").get<int>();
    e.base_address = need(je, "base_address", "table entry").get<std::uint64_t>();
    e.executions = need(je, "executions", "table entry").get<std::uint64_t>();
    e.start_s = need(je, "start_s", "table entry").get<double>();
    e.duration_s = need(je, "duration_s", "table entry").get<double>();
    e.bandwidth = need(je, "bandwidth", "table entry").get<double>();
    e.group = need(je, "group", "table entry").get<int>();
    table.entries.push_back(e);
  }
  return table;
}

std::string dump_sim_result(const SimResult& result) {
  json doc;
  doc["fps"] = result.fps;
  doc["frame_times_s"] = result.frame_times_s;
  doc["instance_times_s"] = result.instance_times_s;
  doc["stall_cycles"] = result.stall_cycles;
  doc["delivered_bytes"] = result.delivered_bytes;
  json util = json::array();
  for (const auto& u : result.utilization) {
    json ju;
    ju["t0_s"] = u.t0_s;
    ju["t1_s"] = u.t1_s;
    ju["utilization"] = u.utilization;
    util.push_back(ju);
  }
  doc["utilization"] = util;
  doc["sim_time_s"] = result.sim_time_s;
  if (!result.trace_text.empty()) doc["trace"] = result.trace_text;
  return doc.dump(2) + "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("file not found: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

}  // namespace mcdse
