#pragma once

#include <cstdint>
#include <vector>

#include "mcdse/model.hpp"
#include "mcdse/sched.hpp"

namespace mcdse {

// One arbiter table row: the slot share and transfer geometry of a scheduled
// subgraph execution.
struct HsEntry {
  int cnn = 0;
  int subgraph = 0;             // unrolled execution index, matches the task list
  std::uint64_t data_elements = 0;  // total elements moved for this execution
  int slots = 1;                // consecutive burst slots per arbitration round
  std::uint64_t base_address = 0;   // abstract element offset, sequential per network
  std::uint64_t executions = 0;     // arbitration rounds needed to move data_elements
  double start_s = 0.0;         // schedule window, carried for the simulator
  double duration_s = 0.0;
  double bandwidth = 0.0;       // granted bytes/s the slots approximate
  int group = 0;                // concurrency group sharing one slots_total
};

struct HsConfigTable {
  std::vector<HsEntry> entries;          // task-list order
  std::vector<int> group_slots_total;    // indexed by HsEntry::group
  int burst_length = 0;
  double cycle_time_s = 0.0;
};

struct SlotAllocation {
  std::vector<int> slots;
  int slots_total = 0;
  double max_error = 0.0;  // worst |slots/slots_total - demand/budget|
};

// Integer slot counts approximating the demanded bandwidth fractions.
// Exhaustive over slots_total up to max_slots_total, each candidate filled by
// largest-deficit apportionment; smallest total wins ties. Demands above the
// budget in aggregate are treated proportionally.
SlotAllocation compute_slots(const std::vector<double>& required_bw, double b_mem,
                             int max_slots_total = 64);

// Arbiter configuration for a schedule: entries grouped by overlap in
// schedule time, one slot allocation per group, addresses assigned
// sequentially per network.
HsConfigTable build_config_table(const CyclicSchedule& sched,
                                 const std::vector<TaskInstance>& tasks,
                                 const PlatformSpec& platform);

}  // namespace mcdse
