#include "mcdse/sched.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "mcdse/errors.hpp"

namespace mcdse {

namespace {

// Chain id and position for every task; tasks of one network form a chain in
// list order.
struct ChainIndex {
  std::vector<int> chain_of;                // task -> chain
  std::vector<int> pred_of;                 // task -> predecessor task or -1
  std::vector<std::vector<int>> members;    // chain -> tasks in order
};

ChainIndex index_chains(const std::vector<TaskInstance>& tasks) {
  ChainIndex ci;
  ci.chain_of.resize(tasks.size());
  ci.pred_of.assign(tasks.size(), -1);
  std::map<int, int> chain_id;
  std::map<int, int> last_in_chain;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto [it, fresh] = chain_id.try_emplace(tasks[t].cnn, int(chain_id.size()));
    int c = it->second;
    if (fresh) ci.members.emplace_back();
    ci.chain_of[t] = c;
    if (auto l = last_in_chain.find(tasks[t].cnn); l != last_in_chain.end())
      ci.pred_of[t] = l->second;
    last_in_chain[tasks[t].cnn] = int(t);
    ci.members[c].push_back(int(t));
  }
  return ci;
}

void validate_tasks(const std::vector<TaskInstance>& tasks, double b_mem) {
  if (tasks.empty()) throw ScheduleError("scheduler: no tasks");
  if (b_mem <= 0) throw ScheduleError("scheduler: bandwidth budget must be > 0");
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].latency_s <= 0)
      throw ScheduleError("scheduler: task " + std::to_string(t) + " has non-positive latency");
    if (tasks[t].bandwidth < 0)
      throw ScheduleError("scheduler: task " + std::to_string(t) + " has negative bandwidth");
  }
}

// Remaining chain time from each task onwards (itself included).
std::vector<double> chain_remainders(const std::vector<TaskInstance>& tasks,
                                     const ChainIndex& ci) {
  std::vector<double> rem(tasks.size(), 0.0);
  for (const auto& chain : ci.members) {
    double acc = 0.0;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      acc += tasks[*it].latency_s;
      rem[*it] = acc;
    }
  }
  return rem;
}

bool fits_budget(double used, double demand, double b_mem) {
  return used + demand <= b_mem * (1.0 + kBandwidthTol);
}

}  // namespace

bool ViolationReport::any(double tol) const {
  return worst_ratio > 1.0 + tol;
}

std::vector<TaskInstance> build_tasks(const JointDesignPoint& sigma, const std::vector<int>& rep) {
  if (!rep.empty() && rep.size() != sigma.points.size())
    throw ScheduleError("build_tasks: rep size differs from the number of networks");
  std::vector<TaskInstance> tasks;
  for (std::size_t i = 0; i < sigma.points.size(); ++i) {
    const DesignPoint& p = sigma.points[i];
    int reps = rep.empty() ? 1 : rep[i];
    if (reps < 1) throw ScheduleError("build_tasks: rep must be >= 1");
    int n_sub = static_cast<int>(p.metrics.size());
    for (int r = 0; r < reps; ++r) {
      for (int j = 0; j < n_sub; ++j) {
        const SubgraphMetrics& m = p.metrics[j];
        TaskInstance t;
        t.cnn = static_cast<int>(i);
        t.subgraph = r * n_sub + j;
        // The schedulable window covers compute plus the weight load, so the
        // task's byte volume (in + out + weights) transfers inside it.
        t.latency_s = m.latency_s + m.weights_time_s;
        t.bandwidth = double(m.io_bytes + m.weight_bytes) / t.latency_s;
        tasks.push_back(t);
      }
    }
  }
  return tasks;
}

std::vector<TaskInstance> apply_slowdowns(const std::vector<TaskInstance>& base,
                                          const SlowDownVector& sl) {
  if (sl.sl.size() != base.size())
    throw ScheduleError("apply_slowdowns: factor count differs from task count");
  std::vector<TaskInstance> out = base;
  for (std::size_t t = 0; t < base.size(); ++t) {
    double f = sl.sl[t];
    if (!(f > kSlowDownFloor) || f > 1.0)
      throw ScheduleError("apply_slowdowns: factor " + std::to_string(f) + " for task " +
                          std::to_string(t) + " outside (" + std::to_string(kSlowDownFloor) +
                          ", 1]");
    out[t].latency_s = base[t].latency_s / f;
    out[t].bandwidth = base[t].bandwidth * f;
  }
  return out;
}

CyclicSchedule rcls(const std::vector<TaskInstance>& tasks, double b_mem,
                    bool enforce_bandwidth) {
  validate_tasks(tasks, b_mem);
  ChainIndex ci = index_chains(tasks);
  std::vector<double> priority = chain_remainders(tasks, ci);

  std::size_t n = tasks.size();
  std::vector<double> start(n, -1.0), end(n, 0.0);
  std::vector<bool> started(n, false), done(n, false);
  std::size_t remaining = n;
  double t = 0.0;
  double used = 0.0;

  auto ready = [&](std::size_t i) {
    if (started[i]) return false;
    int pred = ci.pred_of[i];
    return pred < 0 || (done[pred] && end[pred] <= t + 1e-15 * std::max(1.0, end[pred]));
  };

  while (remaining > 0) {
    // Start every ready task that fits, highest priority first.
    while (true) {
      int best = -1;
      for (std::size_t i = 0; i < n; ++i) {
        if (!ready(i)) continue;
        if (enforce_bandwidth && !fits_budget(used, tasks[i].bandwidth, b_mem)) continue;
        if (best < 0 || priority[i] > priority[best] ||
            (priority[i] == priority[best] &&
             std::pair(tasks[i].cnn, tasks[i].subgraph) <
                 std::pair(tasks[best].cnn, tasks[best].subgraph)))
          best = static_cast<int>(i);
      }
      if (best < 0) break;
      started[best] = true;
      start[best] = t;
      end[best] = t + tasks[best].latency_s;
      used += tasks[best].bandwidth;
    }

    // Advance to the next completion.
    double next = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (started[i] && !done[i] && (next < 0 || end[i] < next)) next = end[i];
    if (next < 0) {
      if (remaining > 0)
        throw ScheduleError("rcls: no runnable task; a task's bandwidth exceeds the budget");
      break;
    }
    t = next;
    for (std::size_t i = 0; i < n; ++i)
      if (started[i] && !done[i] && end[i] <= t) {
        done[i] = true;
        used -= tasks[i].bandwidth;
        --remaining;
      }
  }

  CyclicSchedule sched;
  sched.start = start;
  sched.cycle_time_s = *std::max_element(end.begin(), end.end());
  return sched;
}

namespace {

// Branch-and-bound state for the exact solver, in integer quanta.
struct ExactState {
  std::vector<std::int64_t> dur;
  std::vector<double> bw;
  double b_mem = 0.0;
  const ChainIndex* ci = nullptr;
  std::vector<std::int64_t> chain_tail;  // remaining chain quanta from each task on

  std::vector<std::int64_t> start, end;
  std::vector<bool> scheduled;
  // Capacity deltas at event times of the partial schedule.
  std::map<std::int64_t, double> deltas;

  std::int64_t best_makespan = 0;
  std::vector<std::int64_t> best_start;
  double area = 0.0;  // total bandwidth-time product, for the area bound

  bool fits_throughout(int task, std::int64_t t) const {
    double level = 0.0;
    for (const auto& [at, d] : deltas) {
      if (at <= t) level += d;
    }
    if (!fits_budget(level, bw[task], b_mem)) return false;
    std::int64_t horizon = t + dur[task];
    for (const auto& [at, d] : deltas) {
      if (at <= t || at >= horizon) continue;
      level += d;
      if (!fits_budget(level, bw[task], b_mem)) return false;
    }
    return true;
  }

  std::int64_t earliest_feasible(int task, std::int64_t est) const {
    // Candidate starts: the precedence release point and every later event.
    if (fits_throughout(task, est)) return est;
    for (const auto& [at, d] : deltas)
      if (at > est && fits_throughout(task, at)) return at;
    // Past the last event nothing runs, so the final event always admits the
    // task; reaching here means the deltas map was empty.
    return est;
  }

  std::int64_t lower_bound(std::int64_t current_max_end) const {
    std::int64_t lb = current_max_end;
    for (const auto& chain : ci->members) {
      std::int64_t chain_end = 0;
      for (int t : chain)
        if (scheduled[t]) chain_end = end[t];
      for (std::size_t k = 0; k < chain.size(); ++k)
        if (!scheduled[chain[k]]) {
          lb = std::max(lb, chain_end + chain_tail[chain[k]]);
          break;
        }
    }
    lb = std::max(lb, std::int64_t(std::ceil(area / b_mem - 1e-9)));
    return lb;
  }

  void dfs(int placed, std::int64_t current_max_end) {
    if (placed == static_cast<int>(dur.size())) {
      if (current_max_end < best_makespan) {
        best_makespan = current_max_end;
        best_start = start;
      }
      return;
    }
    if (lower_bound(current_max_end) >= best_makespan) return;

    for (const auto& chain : ci->members) {
      int task = -1;
      std::int64_t est = 0;
      for (std::size_t k = 0; k < chain.size(); ++k)
        if (!scheduled[chain[k]]) {
          task = chain[k];
          est = k > 0 ? end[chain[k - 1]] : 0;
          break;
        }
      if (task < 0) continue;

      std::int64_t s = earliest_feasible(task, est);
      std::int64_t e = s + dur[task];
      scheduled[task] = true;
      start[task] = s;
      end[task] = e;
      deltas[s] += bw[task];
      deltas[e] -= bw[task];
      dfs(placed + 1, std::max(current_max_end, e));
      if (std::abs(deltas[s] -= bw[task]) < 1e-12) deltas.erase(s);
      if (std::abs(deltas[e] += bw[task]) < 1e-12) deltas.erase(e);
      scheduled[task] = false;
    }
  }
};

}  // namespace

CyclicSchedule exact_schedule(const std::vector<TaskInstance>& tasks, double b_mem,
                              double time_quantum_s, int max_tasks) {
  validate_tasks(tasks, b_mem);
  if (time_quantum_s <= 0) throw ScheduleError("exact_schedule: time quantum must be > 0");
  if (static_cast<int>(tasks.size()) > max_tasks)
    throw ScheduleError("exact_schedule: " + std::to_string(tasks.size()) +
                        " tasks exceed the exact-solver guard of " + std::to_string(max_tasks));

  ExactState st;
  st.b_mem = b_mem;
  for (const auto& t : tasks) {
    if (t.bandwidth > b_mem * (1.0 + kBandwidthTol))
      throw ScheduleError("exact_schedule: a task's bandwidth exceeds the budget");
    std::int64_t d = std::int64_t(std::ceil(t.latency_s / time_quantum_s - 1e-9));
    st.dur.push_back(std::max<std::int64_t>(d, 1));
    st.bw.push_back(t.bandwidth);
  }
  ChainIndex ci = index_chains(tasks);
  st.ci = &ci;

  st.chain_tail.assign(tasks.size(), 0);
  for (const auto& chain : ci.members) {
    std::int64_t acc = 0;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      acc += st.dur[*it];
      st.chain_tail[*it] = acc;
    }
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) st.area += double(st.dur[t]) * st.bw[t];

  // Serialised schedule as the opening incumbent.
  st.best_makespan = std::accumulate(st.dur.begin(), st.dur.end(), std::int64_t(0)) + 1;
  st.start.assign(tasks.size(), 0);
  st.end.assign(tasks.size(), 0);
  st.scheduled.assign(tasks.size(), false);
  st.best_start.assign(tasks.size(), 0);
  st.dfs(0, 0);

  if (st.best_makespan > std::accumulate(st.dur.begin(), st.dur.end(), std::int64_t(0)))
    throw ScheduleError("exact_schedule: search failed to place all tasks");

  CyclicSchedule sched;
  for (std::int64_t s : st.best_start) sched.start.push_back(double(s) * time_quantum_s);
  std::int64_t makespan = 0;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    makespan = std::max(makespan, st.best_start[t] + st.dur[t]);
  sched.cycle_time_s = double(makespan) * time_quantum_s;
  return sched;
}

ViolationReport violations(const CyclicSchedule& sched, const std::vector<TaskInstance>& tasks,
                           double b_mem) {
  if (sched.start.size() != tasks.size())
    throw ScheduleError("violations: schedule and task list sizes differ");
  validate_tasks(tasks, b_mem);

  ViolationReport rep;
  rep.b_mem = b_mem;
  rep.overshoot.assign(tasks.size(), 0.0);

  std::vector<double> events;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    events.push_back(sched.start[t]);
    events.push_back(sched.start[t] + tasks[t].latency_s);
  }
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  // Rounding can split one logical event into two values a few ulp apart,
  // creating sliver intervals where an ending and a starting task both count.
  // Such intervals carry no data volume, so they are not violations.
  double sliver = 1e-12 * (events.empty() ? 0.0 : events.back() - events.front());

  for (std::size_t e = 0; e + 1 < events.size(); ++e) {
    double t0 = events[e], t1 = events[e + 1];
    if (t1 - t0 <= sliver) continue;
    double mid = 0.5 * (t0 + t1);
    double aggregate = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t)
      if (sched.start[t] <= mid && mid < sched.start[t] + tasks[t].latency_s)
        aggregate += tasks[t].bandwidth;
    double ratio = aggregate / b_mem;
    for (std::size_t t = 0; t < tasks.size(); ++t)
      if (sched.start[t] <= mid && mid < sched.start[t] + tasks[t].latency_s)
        rep.overshoot[t] = std::max(rep.overshoot[t], ratio);
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_begin_s = t0;
      rep.worst_end_s = t1;
    }
  }
  return rep;
}

SlowDownVector remove_violations(const std::vector<TaskInstance>& base_tasks,
                                 const ViolationReport& report) {
  if (report.overshoot.size() != base_tasks.size())
    throw ScheduleError("remove_violations: report and task list sizes differ");

  SlowDownVector sl;
  sl.sl.assign(base_tasks.size(), 1.0);
  const ViolationReport* current = &report;
  ViolationReport next;

  for (int round = 0; round < 10; ++round) {
    bool changed = false;
    for (std::size_t t = 0; t < base_tasks.size(); ++t) {
      double over = current->overshoot[t];
      if (over > 1.0 + kBandwidthTol) {
        double proposed = sl.sl[t] / over;
        proposed = std::max(proposed, kSlowDownFloor * (1.0 + 1e-6));
        if (proposed < sl.sl[t]) {
          sl.sl[t] = proposed;
          changed = true;
        }
      }
    }
    if (!changed) break;

    // Re-derive the unconstrained schedule under the new factors and check.
    std::vector<TaskInstance> slowed = apply_slowdowns(base_tasks, sl);
    CyclicSchedule sched = rcls(slowed, report.b_mem, /*enforce_bandwidth=*/false);
    next = violations(sched, slowed, report.b_mem);
    if (!next.any()) break;
    current = &next;
  }
  return sl;
}

void check_schedule(const CyclicSchedule& sched, const std::vector<TaskInstance>& tasks,
                    double b_mem) {
  if (sched.start.size() != tasks.size())
    throw ScheduleError("check_schedule: schedule and task list sizes differ");
  double k = sched.cycle_time_s;
  ChainIndex ci = index_chains(tasks);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    double tol = 1e-9 * std::max(1.0, k);
    if (sched.start[t] < -tol || sched.start[t] >= k)
      throw ScheduleError("check_schedule: task " + std::to_string(t) +
                          " starts outside [0, K)");
    if (sched.start[t] + tasks[t].latency_s > k + tol)
      throw ScheduleError("check_schedule: task " + std::to_string(t) + " ends after K");
    int pred = ci.pred_of[t];
    if (pred >= 0 &&
        sched.start[pred] + tasks[pred].latency_s > sched.start[t] + tol)
      throw ScheduleError("check_schedule: task " + std::to_string(t) +
                          " starts before its predecessor finishes");
  }
  ViolationReport rep = violations(sched, tasks, b_mem);
  if (rep.any())
    throw ScheduleError("check_schedule: aggregate bandwidth exceeds the budget (ratio " +
                        std::to_string(rep.worst_ratio) + ")");
}

}  // namespace mcdse
