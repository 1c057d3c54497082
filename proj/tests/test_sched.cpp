#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "mcdse/errors.hpp"
#include "mcdse/sched.hpp"
#include "support/gen.hpp"

using namespace mcdse;
using testgen::task;

namespace {

// Independent minimum-makespan search in continuous time: all precedence-
// feasible insertion orders, each task placed at the earliest candidate point
// (its release or any event of the partial schedule) where the budget holds
// for its whole duration. Mirrors the solver's semantics with none of its
// machinery; only usable for a handful of tasks.
struct OracleSearch {
  const std::vector<TaskInstance>& tasks;
  double b_mem;
  std::vector<std::vector<int>> chains;
  std::vector<double> start, end;
  std::vector<bool> placed;
  double best = std::numeric_limits<double>::infinity();

  explicit OracleSearch(const std::vector<TaskInstance>& t, double b)
      : tasks(t), b_mem(b), start(t.size()), end(t.size()), placed(t.size(), false) {
    std::map<int, std::vector<int>> by_cnn;
    for (std::size_t i = 0; i < t.size(); ++i) by_cnn[t[i].cnn].push_back(int(i));
    for (auto& [cnn, members] : by_cnn) chains.push_back(members);
  }

  double level_at(double t) const {
    double level = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (placed[i] && start[i] <= t && t < end[i]) level += tasks[i].bandwidth;
    return level;
  }

  bool fits(int x, double at) const {
    std::vector<double> probes{at};
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (placed[i] && start[i] > at && start[i] < at + tasks[x].latency_s)
        probes.push_back(start[i]);
    for (double p : probes)
      if (level_at(p) + tasks[x].bandwidth > b_mem * (1.0 + kBandwidthTol)) return false;
    return true;
  }

  double earliest(int x, double est) const {
    if (fits(x, est)) return est;
    std::vector<double> events;
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (placed[i]) {
        events.push_back(start[i]);
        events.push_back(end[i]);
      }
    std::sort(events.begin(), events.end());
    for (double e : events)
      if (e > est && fits(x, e)) return e;
    return est;
  }

  void dfs(int n_placed, double makespan) {
    if (makespan >= best) return;
    if (n_placed == static_cast<int>(tasks.size())) {
      best = makespan;
      return;
    }
    for (const auto& chain : chains) {
      int x = -1;
      double est = 0.0;
      for (std::size_t k = 0; k < chain.size(); ++k)
        if (!placed[chain[k]]) {
          x = chain[k];
          est = k > 0 ? end[chain[k - 1]] : 0.0;
          break;
        }
      if (x < 0) continue;
      double s = earliest(x, est);
      placed[x] = true;
      start[x] = s;
      end[x] = s + tasks[x].latency_s;
      dfs(n_placed + 1, std::max(makespan, end[x]));
      placed[x] = false;
    }
  }

  double run() {
    dfs(0, 0.0);
    return best;
  }
};

}  // namespace

TEST_CASE("build_tasks unrolls repetitions into per-network chains") {
  NetworkSpec net = testgen::make_net(
      "digits", {testgen::conv(1, 4, 3, 16, 16), testgen::pool(4, 2, 8, 8),
                 testgen::conv(4, 8, 3, 6, 6), testgen::nonlin(8, 6, 6)});
  PlatformSpec platform = testgen::make_platform();
  EngineConfig cfg;
  cfg.partitioning.cut_points = {2};
  cfg.partitioning.input_folds = {1, 4};
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    StageConfig s;
    s.kind = net.layers[i].kind;
    s.n_pe = 1;
    s.n_op = 1;
    s.f_in = net.layers[i].kind == LayerKind::Conv ? cfg.partitioning.input_folds[i / 2] : 1;
    cfg.stages.push_back(s);
  }

  JointDesignPoint sigma;
  sigma.points = {testgen::make_point(net, cfg, platform)};

  std::vector<TaskInstance> tasks = build_tasks(sigma, {2});
  REQUIRE(tasks.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(tasks[i].cnn == 0);
    CHECK(tasks[i].subgraph == i);
  }

  // The task window covers compute plus the weight load, and the byte volume
  // transfers exactly inside it.
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < 2; ++j) {
      const SubgraphMetrics& m = sigma.points[0].metrics[j];
      const TaskInstance& t = tasks[r * 2 + j];
      CHECK(t.latency_s == doctest::Approx(m.latency_s + m.weights_time_s));
      CHECK(t.bandwidth * t.latency_s == doctest::Approx(double(m.io_bytes + m.weight_bytes)));
    }

  CHECK_THROWS_AS(build_tasks(sigma, {1, 1}), ScheduleError);
  CHECK_THROWS_AS(build_tasks(sigma, {0}), ScheduleError);
}

TEST_CASE("apply_slowdowns stretches duration and squeezes bandwidth") {
  std::vector<TaskInstance> base = {task(0, 0, 2.0, 100.0), task(1, 0, 1.0, 300.0)};
  SlowDownVector sl;
  sl.sl = {0.5, 1.0};
  std::vector<TaskInstance> slowed = apply_slowdowns(base, sl);
  CHECK(slowed[0].latency_s == doctest::Approx(4.0));
  CHECK(slowed[0].bandwidth == doctest::Approx(50.0));
  CHECK(slowed[1].latency_s == doctest::Approx(1.0));
  CHECK(slowed[1].bandwidth == doctest::Approx(300.0));

  SlowDownVector bad;
  bad.sl = {1.5, 1.0};
  CHECK_THROWS_AS(apply_slowdowns(base, bad), ScheduleError);
  bad.sl = {kSlowDownFloor, 1.0};  // floor itself is excluded
  CHECK_THROWS_AS(apply_slowdowns(base, bad), ScheduleError);
  bad.sl = {0.5};
  CHECK_THROWS_AS(apply_slowdowns(base, bad), ScheduleError);
}

TEST_CASE("rcls serialises what the budget cannot host concurrently") {
  double b_mem = 1000.0;

  // 0.7 budget each: must serialise, longer chain first.
  std::vector<TaskInstance> heavy = {task(0, 0, 1.0, 700.0), task(1, 0, 2.0, 700.0)};
  CyclicSchedule s = rcls(heavy, b_mem);
  CHECK(s.start[1] == doctest::Approx(0.0));
  CHECK(s.start[0] == doctest::Approx(2.0));
  CHECK(s.cycle_time_s == doctest::Approx(3.0));
  check_schedule(s, heavy, b_mem);

  // Halve the demand: both run from time zero.
  std::vector<TaskInstance> light = {task(0, 0, 1.0, 500.0), task(1, 0, 2.0, 500.0)};
  s = rcls(light, b_mem);
  CHECK(s.start[0] == doctest::Approx(0.0));
  CHECK(s.start[1] == doctest::Approx(0.0));
  CHECK(s.cycle_time_s == doctest::Approx(2.0));

  // Equal priorities: the lower (cnn, subgraph) pair wins the single seat.
  std::vector<TaskInstance> tie = {task(1, 0, 1.0, 600.0), task(0, 0, 1.0, 600.0)};
  s = rcls(tie, b_mem);
  CHECK(s.start[1] == doctest::Approx(0.0));  // cnn 0
  CHECK(s.start[0] == doctest::Approx(1.0));
  CHECK(s.cycle_time_s == doctest::Approx(2.0));

  // A chain is sequential even without bandwidth pressure.
  std::vector<TaskInstance> chain = {task(0, 0, 1.0, 10.0), task(0, 1, 2.0, 10.0)};
  s = rcls(chain, b_mem, /*enforce_bandwidth=*/false);
  CHECK(s.start[0] == doctest::Approx(0.0));
  CHECK(s.start[1] == doctest::Approx(1.0));
  CHECK(s.cycle_time_s == doctest::Approx(3.0));

  // One task alone over budget can never run.
  std::vector<TaskInstance> fat = {task(0, 0, 1.0, 1200.0)};
  CHECK_THROWS_AS(rcls(fat, b_mem), ScheduleError);
  CHECK_THROWS_AS(rcls({task(0, 0, -1.0, 10.0)}, b_mem), ScheduleError);
  CHECK_THROWS_AS(rcls({task(0, 0, 1.0, -10.0)}, b_mem), ScheduleError);
}

TEST_CASE("exact solver matches the independent oracle and never loses to rcls") {
  const double b_mem = 1000.0;
  const double q = 1e-5;
  std::mt19937_64 rng(99);

  for (int round = 0; round < 40; ++round) {
    std::vector<TaskInstance> tasks = testgen::random_chains(rng, 2, 1, 3, b_mem, q);
    if (tasks.size() > 7) continue;

    CyclicSchedule greedy = rcls(tasks, b_mem);
    CyclicSchedule exact = exact_schedule(tasks, b_mem, q);
    check_schedule(exact, tasks, b_mem);
    check_schedule(greedy, tasks, b_mem);

    double oracle = OracleSearch(tasks, b_mem).run();
    CHECK(exact.cycle_time_s == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(exact.cycle_time_s <= greedy.cycle_time_s + 1e-12);
  }
}

TEST_CASE("exact solver guard rails") {
  std::vector<TaskInstance> tasks = {task(0, 0, 1.0, 1.0)};
  CHECK_THROWS_AS(exact_schedule(tasks, 10.0, 0.0), ScheduleError);

  std::vector<TaskInstance> many;
  for (int i = 0; i < 25; ++i) many.push_back(task(i, 0, 1.0, 1.0));
  CHECK_THROWS_AS(exact_schedule(many, 1000.0, 0.01), ScheduleError);

  // Durations round up to whole quanta.
  std::vector<TaskInstance> chain = {task(0, 0, 0.25, 1.0), task(0, 1, 0.30, 1.0)};
  CyclicSchedule s = exact_schedule(chain, 10.0, 0.2);
  CHECK(s.cycle_time_s == doctest::Approx(0.2 * (2 + 2)));
}

TEST_CASE("violations sweeps every interval and pins the worst window") {
  double b_mem = 1000.0;
  std::vector<TaskInstance> tasks = {task(0, 0, 1.0, 750.0), task(1, 0, 1.0, 750.0),
                                     task(2, 0, 1.0, 300.0)};
  CyclicSchedule s;
  s.start = {0.0, 0.5, 2.0};
  s.cycle_time_s = 3.0;

  ViolationReport rep = violations(s, tasks, b_mem);
  CHECK(rep.any());
  CHECK(rep.worst_ratio == doctest::Approx(1.5));
  CHECK(rep.worst_begin_s == doctest::Approx(0.5));
  CHECK(rep.worst_end_s == doctest::Approx(1.0));
  CHECK(rep.overshoot[0] == doctest::Approx(1.5));
  CHECK(rep.overshoot[1] == doctest::Approx(1.5));
  CHECK(rep.overshoot[2] == doctest::Approx(0.3));
  CHECK(rep.b_mem == doctest::Approx(b_mem));

  // Disjoint placement of the same tasks is clean.
  s.start = {0.0, 1.0, 2.0};
  rep = violations(s, tasks, b_mem);
  CHECK_FALSE(rep.any());
  CHECK(rep.worst_ratio == doctest::Approx(0.75));
}

TEST_CASE("remove_violations: uniform overshoot yields the reciprocal factor") {
  // Three concurrent single-task networks, each at 1.25/3 of the budget:
  // aggregate demand is 1.25x, so every factor lands at 0.8.
  double b_mem = 9.0e8;
  double each = 1.25 * b_mem / 3.0;
  std::vector<TaskInstance> base = {task(0, 0, 1e-3, each), task(1, 0, 1e-3, each),
                                    task(2, 0, 1e-3, each)};

  CyclicSchedule unconstrained = rcls(base, b_mem, /*enforce_bandwidth=*/false);
  ViolationReport rep = violations(unconstrained, base, b_mem);
  CHECK(rep.worst_ratio == doctest::Approx(1.25).epsilon(1e-12));

  SlowDownVector sl = remove_violations(base, rep);
  REQUIRE(sl.sl.size() == 3);
  for (double f : sl.sl) CHECK(f == doctest::Approx(0.8).epsilon(1e-9));

  // The proposal is violation-free under its own unconstrained reschedule.
  std::vector<TaskInstance> slowed = apply_slowdowns(base, sl);
  CyclicSchedule after = rcls(slowed, b_mem, /*enforce_bandwidth=*/false);
  CHECK_FALSE(violations(after, slowed, b_mem).any());
}

TEST_CASE("remove_violations converges on random oversubscribed instances") {
  std::mt19937_64 rng(321);
  for (int round = 0; round < 30; ++round) {
    double b_mem = 1000.0;
    std::vector<TaskInstance> base = testgen::random_chains(rng, 3, 1, 3, b_mem, 1e-4);

    CyclicSchedule sched = rcls(base, b_mem, /*enforce_bandwidth=*/false);
    SlowDownVector sl = remove_violations(base, violations(sched, base, b_mem));

    for (double f : sl.sl) {
      CHECK(f > kSlowDownFloor);
      CHECK(f <= 1.0);
    }
    std::vector<TaskInstance> slowed = apply_slowdowns(base, sl);
    CyclicSchedule after = rcls(slowed, b_mem, /*enforce_bandwidth=*/false);
    CHECK_FALSE(violations(after, slowed, b_mem).any());
  }
}

TEST_CASE("remove_violations leaves clean schedules untouched") {
  double b_mem = 1000.0;
  std::vector<TaskInstance> base = {task(0, 0, 1.0, 400.0), task(1, 0, 1.0, 400.0)};
  CyclicSchedule sched = rcls(base, b_mem, /*enforce_bandwidth=*/false);
  SlowDownVector sl = remove_violations(base, violations(sched, base, b_mem));
  CHECK(sl.sl == std::vector<double>{1.0, 1.0});
}

TEST_CASE("check_schedule rejects tampered schedules") {
  double b_mem = 1000.0;
  std::vector<TaskInstance> tasks = {task(0, 0, 1.0, 400.0), task(0, 1, 1.0, 400.0),
                                     task(1, 0, 1.0, 400.0)};
  CyclicSchedule good = rcls(tasks, b_mem);
  check_schedule(good, tasks, b_mem);

  CyclicSchedule bad = good;
  bad.start[0] = -0.5;
  CHECK_THROWS_AS(check_schedule(bad, tasks, b_mem), ScheduleError);

  bad = good;
  bad.start[2] = bad.cycle_time_s + 1.0;
  CHECK_THROWS_AS(check_schedule(bad, tasks, b_mem), ScheduleError);

  // Start the chain's second task before the first completes.
  bad = good;
  bad.start[1] = bad.start[0];
  CHECK_THROWS_AS(check_schedule(bad, tasks, b_mem), ScheduleError);

  // Aggregate over budget: everything at once.
  bad = good;
  bad.start = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(check_schedule(bad, tasks, b_mem), ScheduleError);

  bad = good;
  bad.start.pop_back();
  CHECK_THROWS_AS(check_schedule(bad, tasks, b_mem), ScheduleError);
}

TEST_CASE("rcls output always passes the sweep checker") {
  std::mt19937_64 rng(777);
  for (int round = 0; round < 50; ++round) {
    double b_mem = 1000.0;
    std::vector<TaskInstance> tasks = testgen::random_chains(rng, 3, 1, 4, b_mem, 1e-5);
    CyclicSchedule s = rcls(tasks, b_mem);
    check_schedule(s, tasks, b_mem);
    CHECK_FALSE(violations(s, tasks, b_mem).any());
  }
}
