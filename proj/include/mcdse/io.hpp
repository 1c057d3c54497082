#pragma once

#include <string>
#include <vector>

#include "mcdse/hsched.hpp"
#include "mcdse/optimizer.hpp"
#include "mcdse/pareto.hpp"
#include "mcdse/sim.hpp"

namespace mcdse {

// Serialisers for the artefact files the tools exchange. All of them are
// JSON with a fixed key order so repeated runs are byte-identical; the field
// layout is documented in docs/formats.md.

std::string dump_front(const NetworkSpec& net, const std::vector<DesignPoint>& front);
std::string dump_design(const std::vector<NetworkSpec>& nets, const PlatformSpec& platform,
                        const JointDesignPoint& sigma);
std::string dump_schedule(const CyclicSchedule& sched, const std::vector<TaskInstance>& tasks,
                          const SlowDownVector& sl);
std::string dump_config_table(const HsConfigTable& table);
std::string dump_sim_result(const SimResult& result);

struct DesignBundle {
  std::vector<NetworkSpec> nets;
  PlatformSpec platform;
  JointDesignPoint sigma;
};

DesignBundle load_design(const std::string& text);

struct ScheduleBundle {
  CyclicSchedule sched;
  std::vector<TaskInstance> tasks;
  SlowDownVector sl;
};

ScheduleBundle load_schedule(const std::string& text);
HsConfigTable load_config_table(const std::string& text);

std::string read_file(const std::string& path);       // ParseError on missing file
void write_file(const std::string& path, const std::string& content);

}  // namespace mcdse
