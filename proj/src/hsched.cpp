#include "mcdse/hsched.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "mcdse/errors.hpp"

namespace mcdse {

SlotAllocation compute_slots(const std::vector<double>& required_bw, double b_mem,
                             int max_slots_total) {
  if (required_bw.empty()) throw ConfigError("compute_slots: no bandwidth demands");
  if (b_mem <= 0) throw ConfigError("compute_slots: bandwidth budget must be > 0");
  for (double bw : required_bw)
    if (bw < 0) throw ConfigError("compute_slots: demands must be non-negative");
  int n = static_cast<int>(required_bw.size());
  if (max_slots_total < n)
    throw ConfigError("compute_slots: max_slots_total smaller than the entry count");

  // Target fractions of the budget. Groups whose aggregate exceeds the budget
  // (possible when members never all overlap) fall back to proportional shares.
  double total = std::accumulate(required_bw.begin(), required_bw.end(), 0.0);
  double denom = std::max(total, b_mem);
  std::vector<double> target(n);
  for (int i = 0; i < n; ++i) target[i] = required_bw[i] / denom;

  SlotAllocation best;
  best.max_error = std::numeric_limits<double>::infinity();

  for (int slots_total = n; slots_total <= max_slots_total; ++slots_total) {
    // Largest-deficit apportionment with a floor of one slot per entry.
    std::vector<int> slots(n, 1);
    int left = slots_total - n;
    while (left > 0) {
      int pick = 0;
      double worst = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        double deficit = target[i] - double(slots[i]) / slots_total;
        if (deficit > worst + 1e-15) {
          worst = deficit;
          pick = i;
        }
      }
      ++slots[pick];
      --left;
    }

    double err = 0.0;
    for (int i = 0; i < n; ++i)
      err = std::max(err, std::abs(double(slots[i]) / slots_total - target[i]));
    if (err < best.max_error - 1e-15) {
      best.slots = slots;
      best.slots_total = slots_total;
      best.max_error = err;
    }
  }
  return best;
}

namespace {

// Connected components of the schedule-interval overlap graph.
std::vector<int> overlap_groups(const CyclicSchedule& sched,
                                const std::vector<TaskInstance>& tasks) {
  std::size_t n = tasks.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double a0 = sched.start[a], a1 = a0 + tasks[a].latency_s;
      double b0 = sched.start[b], b1 = b0 + tasks[b].latency_s;
      if (a0 < b1 && b0 < a1) unite(int(a), int(b));
    }

  std::vector<int> group(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int root = find(int(i));
    if (group[root] < 0) group[root] = next++;
    group[i] = group[root];
  }
  return group;
}

}  // namespace

HsConfigTable build_config_table(const CyclicSchedule& sched,
                                 const std::vector<TaskInstance>& tasks,
                                 const PlatformSpec& platform) {
  if (sched.start.size() != tasks.size())
    throw ConfigError("build_config_table: schedule and task list sizes differ");
  if (tasks.empty()) throw ConfigError("build_config_table: no tasks");
  validate_platform(platform);

  // The scheduler's contract: tasks running at the same instant fit the budget.
  ViolationReport rep = violations(sched, tasks, platform.b_mem_bytes_per_s);
  if (rep.any())
    throw ConfigError("build_config_table: schedule violates the bandwidth budget (worst ratio " +
                      std::to_string(rep.worst_ratio) + ")");

  std::vector<int> group = overlap_groups(sched, tasks);
  int n_groups = 1 + *std::max_element(group.begin(), group.end());

  HsConfigTable table;
  table.burst_length = platform.burst_length;
  table.cycle_time_s = sched.cycle_time_s;
  table.group_slots_total.assign(n_groups, 0);
  table.entries.resize(tasks.size());

  for (int g = 0; g < n_groups; ++g) {
    std::vector<std::size_t> members;
    std::vector<double> demands;
    for (std::size_t t = 0; t < tasks.size(); ++t)
      if (group[t] == g) {
        members.push_back(t);
        demands.push_back(tasks[t].bandwidth);
      }

    SlotAllocation alloc = compute_slots(demands, platform.b_mem_bytes_per_s);
    table.group_slots_total[g] = alloc.slots_total;
    for (std::size_t m = 0; m < members.size(); ++m) {
      HsEntry& e = table.entries[members[m]];
      e.slots = alloc.slots[m];
      e.group = g;
    }
  }

  // Transfer geometry and per-network sequential addresses.
  int pack = platform.pack_factor();
  std::map<int, std::uint64_t> next_address;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    HsEntry& e = table.entries[t];
    const TaskInstance& task = tasks[t];
    e.cnn = task.cnn;
    e.subgraph = task.subgraph;
    e.start_s = sched.start[t];
    e.duration_s = task.latency_s;
    e.bandwidth = task.bandwidth;
    e.data_elements = std::uint64_t(
        std::llround(task.bandwidth * task.latency_s / platform.word_bytes()));
    std::uint64_t per_round = std::uint64_t(e.slots) * platform.burst_length * pack;
    e.executions = (e.data_elements + per_round - 1) / per_round;
    e.base_address = next_address[task.cnn];
    next_address[task.cnn] += e.data_elements;
  }
  return table;
}

}  // namespace mcdse
