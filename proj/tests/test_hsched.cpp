#include <doctest.h>

#include <random>
#include <vector>

#include "mcdse/errors.hpp"
#include "mcdse/hsched.hpp"
#include "support/gen.hpp"

using namespace mcdse;
using testgen::task;

TEST_CASE("compute_slots: 1:2:4 demands fill seven slots exactly") {
  // Demands of 32/64/128 KiB/s against a budget equal to their sum.
  std::vector<double> bw = {32768.0, 65536.0, 131072.0};
  SlotAllocation alloc = compute_slots(bw, 229376.0);

  CHECK(alloc.slots == std::vector<int>{1, 2, 4});
  CHECK(alloc.slots_total == 7);
  CHECK(alloc.max_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(double(alloc.slots[0]) / alloc.slots_total == doctest::Approx(1.0 / 7));
  CHECK(double(alloc.slots[1]) / alloc.slots_total == doctest::Approx(2.0 / 7));
  CHECK(double(alloc.slots[2]) / alloc.slots_total == doctest::Approx(4.0 / 7));
}

TEST_CASE("compute_slots degenerate and proportional cases") {
  SlotAllocation even = compute_slots({5.0, 5.0}, 10.0);
  CHECK(even.slots == std::vector<int>{1, 1});
  CHECK(even.slots_total == 2);
  CHECK(even.max_error == doctest::Approx(0.0));

  SlotAllocation solo = compute_slots({7.0}, 7.0);
  CHECK(solo.slots == std::vector<int>{1});
  CHECK(solo.slots_total == 1);

  // Aggregate above the budget falls back to proportional shares.
  SlotAllocation prop = compute_slots({3.0, 1.0}, 2.0);
  CHECK(double(prop.slots[0]) / prop.slots_total == doctest::Approx(0.75));
  CHECK(double(prop.slots[1]) / prop.slots_total == doctest::Approx(0.25));

  CHECK_THROWS_AS(compute_slots({}, 10.0), ConfigError);
  CHECK_THROWS_AS(compute_slots({1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(compute_slots({-1.0}, 10.0), ConfigError);
  CHECK_THROWS_AS(compute_slots({1.0, 1.0, 1.0}, 10.0, 2), ConfigError);
}

TEST_CASE("compute_slots approximation error stays within one slot") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(0.05, 1.0);
  for (int round = 0; round < 100; ++round) {
    int n = testgen::pick_int(rng, 1, 6);
    std::vector<double> bw(n);
    double total = 0.0;
    for (double& x : bw) {
      x = d(rng);
      total += x;
    }
    SlotAllocation alloc = compute_slots(bw, total);
    REQUIRE(alloc.slots_total >= n);
    int sum = 0;
    for (int s : alloc.slots) {
      CHECK(s >= 1);
      sum += s;
    }
    CHECK(sum == alloc.slots_total);
    CHECK(alloc.max_error <= 1.0 / alloc.slots_total + 1e-9);
  }
}

TEST_CASE("config table: slots, executions and addresses for one group") {
  // Three concurrent single-task networks consuming 16384/16384/32768
  // elements over windows of 1.0/0.5/0.5 s; the budget equals the aggregate.
  PlatformSpec platform = testgen::make_platform(/*b_mem=*/229376.0, /*clock_hz=*/1.5e8);
  std::vector<TaskInstance> tasks = {task(0, 0, 1.0, 32768.0), task(1, 0, 0.5, 65536.0),
                                     task(2, 0, 0.5, 131072.0)};
  CyclicSchedule sched;
  sched.start = {0.0, 0.0, 0.0};
  sched.cycle_time_s = 1.0;

  HsConfigTable table = build_config_table(sched, tasks, platform);
  REQUIRE(table.entries.size() == 3);
  CHECK(table.burst_length == 1024);
  CHECK(table.cycle_time_s == doctest::Approx(1.0));
  REQUIRE(table.group_slots_total.size() == 1);
  CHECK(table.group_slots_total[0] == 7);

  const HsEntry& e0 = table.entries[0];
  const HsEntry& e1 = table.entries[1];
  const HsEntry& e2 = table.entries[2];
  CHECK(e0.slots == 1);
  CHECK(e1.slots == 2);
  CHECK(e2.slots == 4);
  CHECK(e0.data_elements == 16384);
  CHECK(e1.data_elements == 16384);
  CHECK(e2.data_elements == 32768);
  // One arbitration round moves slots * burst_length * pack_factor elements.
  CHECK(e0.executions == 4);  // 16384 / (1 * 1024 * 4)
  CHECK(e1.executions == 2);  // 16384 / (2 * 1024 * 4)
  CHECK(e2.executions == 2);  // 32768 / (4 * 1024 * 4)

  for (const HsEntry& e : table.entries) {
    CHECK(e.group == 0);
    CHECK(e.base_address == 0);  // one network each, first transfer
  }
  CHECK(e0.start_s == doctest::Approx(0.0));
  CHECK(e1.duration_s == doctest::Approx(0.5));
  CHECK(e2.bandwidth == doctest::Approx(131072.0));
}

TEST_CASE("config table: disjoint windows split into groups, addresses accumulate") {
  PlatformSpec platform = testgen::make_platform(/*b_mem=*/1.0e6, /*clock_hz=*/1.5e8);
  // One network, two sequential executions; a second network overlapping the
  // first execution only.
  std::vector<TaskInstance> tasks = {task(0, 0, 1.0, 4.0e5), task(0, 1, 1.0, 2.0e5),
                                     task(1, 0, 1.0, 6.0e5)};
  CyclicSchedule sched;
  sched.start = {0.0, 1.0, 0.0};
  sched.cycle_time_s = 2.0;

  HsConfigTable table = build_config_table(sched, tasks, platform);
  REQUIRE(table.group_slots_total.size() == 2);
  CHECK(table.entries[0].group == table.entries[2].group);
  CHECK(table.entries[0].group != table.entries[1].group);

  // Sequential per-network addressing in element units.
  CHECK(table.entries[0].base_address == 0);
  CHECK(table.entries[1].base_address == table.entries[0].data_elements);
  CHECK(table.entries[2].base_address == 0);

  // The lone second execution owns its whole group.
  int g1 = table.entries[1].group;
  CHECK(table.group_slots_total[g1] == table.entries[1].slots);

  // A schedule that breaks the budget is rejected outright.
  CyclicSchedule broken = sched;
  broken.start = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(build_config_table(broken, tasks, platform), ConfigError);

  CyclicSchedule short_sched;
  short_sched.start = {0.0};
  short_sched.cycle_time_s = 1.0;
  CHECK_THROWS_AS(build_config_table(short_sched, tasks, platform), ConfigError);
  CHECK_THROWS_AS(build_config_table(CyclicSchedule{}, {}, platform), ConfigError);
}
