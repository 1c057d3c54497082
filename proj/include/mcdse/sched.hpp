#pragma once

#include <cstdint>
#include <vector>

#include "mcdse/pareto.hpp"

namespace mcdse {

// Slow-down floor: factors live in (kSlowDownFloor, 1].
inline constexpr double kSlowDownFloor = 1e-3;
// Relative tolerance for bandwidth capacity comparisons.
inline constexpr double kBandwidthTol = 1e-9;

// One schedulable subgraph execution. latency_s and bandwidth carry any
// slow-down already applied: stretching a task by sl divides its duration
// and multiplies its bandwidth so the byte volume is conserved.
struct TaskInstance {
  int cnn = 0;       // network index
  int subgraph = 0;  // execution index within the cycle (repetitions unrolled)
  double latency_s = 0.0;
  double bandwidth = 0.0;  // bytes/s required while running
};

struct SlowDownVector {
  std::vector<double> sl;  // one factor per task, same order as the task list
};

// Start times of every task within one repeating period of length
// cycle_time_s. Task order matches the task list handed to the scheduler.
struct CyclicSchedule {
  std::vector<double> start;
  double cycle_time_s = 0.0;
};

struct ViolationReport {
  std::vector<double> overshoot;  // per task: max aggregate demand / budget while it runs
  double worst_ratio = 0.0;
  double worst_begin_s = 0.0;
  double worst_end_s = 0.0;
  double b_mem = 0.0;

  bool any(double tol = kBandwidthTol) const;
};

// Chain-order base tasks for a joint design point: rep[i] unrolled frame
// executions per network, each frame running its subgraphs in order. The
// schedulable duration of a subgraph covers compute plus its weight load.
std::vector<TaskInstance> build_tasks(const JointDesignPoint& sigma, const std::vector<int>& rep);

// Stretch base tasks by per-task slow-downs (duration / sl, bandwidth * sl).
std::vector<TaskInstance> apply_slowdowns(const std::vector<TaskInstance>& base,
                                          const SlowDownVector& sl);

// List scheduling at completion events: among precedence-ready tasks pick the
// one with the longest remaining chain time that fits the residual bandwidth
// (when enforce_bandwidth), ties broken by (cnn, subgraph). Tasks of a network
// form one precedence chain in list order.
CyclicSchedule rcls(const std::vector<TaskInstance>& tasks, double b_mem,
                    bool enforce_bandwidth = true);

// Minimum-makespan schedule, exact up to the duration discretisation at
// time_quantum_s. Branch-and-bound over precedence-feasible insertion orders
// with chain-remainder and bandwidth-area bounds. Guarded to small instances.
CyclicSchedule exact_schedule(const std::vector<TaskInstance>& tasks, double b_mem,
                              double time_quantum_s, int max_tasks = 24);

// Sweep every interval between schedule events and record, per task, the
// worst aggregate-demand-to-budget ratio while it runs.
ViolationReport violations(const CyclicSchedule& sched, const std::vector<TaskInstance>& tasks,
                           double b_mem);

// Greedy slow-down proposal: start from min(1, 1/overshoot) per task and
// repeat against the re-derived unconstrained schedule until it is clean,
// capped at ten rounds. Factors are clamped to (kSlowDownFloor, 1].
SlowDownVector remove_violations(const std::vector<TaskInstance>& base_tasks,
                                 const ViolationReport& report);

// Validation helper shared by tests and the pipeline: start times within
// [0, K), chain precedence respected, aggregate bandwidth within budget.
void check_schedule(const CyclicSchedule& sched, const std::vector<TaskInstance>& tasks,
                    double b_mem);

}  // namespace mcdse
