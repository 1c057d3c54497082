#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcdse/hsched.hpp"
#include "mcdse/optimizer.hpp"
#include "mcdse/pareto.hpp"

namespace mcdse {

enum class ArbiterPolicy { MemoryAware, ContentionUnaware };

struct SimConfig {
  ArbiterPolicy policy = ArbiterPolicy::MemoryAware;
  int duration_frames = 4;          // frames per network to simulate
  std::uint64_t fifo_elements = 0;  // 0 = two burst deliveries per engine
  std::uint64_t seed = 1;           // contention-unaware interleaving only
  double contention_penalty = 0.15; // per extra concurrent requester
  double share_jitter = 0.10;       // seeded spread of asynchronous grants
  bool trace = false;
};

struct UtilSample {
  double t0_s = 0.0;
  double t1_s = 0.0;
  double utilization = 0.0;  // granted bandwidth over budget, <= 1 when arbitrated
};

struct SimResult {
  std::vector<double> fps;                            // per network
  std::vector<std::vector<double>> frame_times_s;     // per network, per frame
  std::vector<std::vector<double>> instance_times_s;  // per network, mean per subgraph execution
  std::vector<std::uint64_t> stall_cycles;            // per network
  std::vector<std::uint64_t> delivered_bytes;         // per network
  std::vector<UtilSample> utilization;
  double sim_time_s = 0.0;
  std::string trace_text;
};

// Cycle-driven run of the engines against the shared memory port. The
// memory-aware policy needs the arbiter table (slot shares, schedule windows,
// period); the contention-unaware policy ignores it and models asynchronous
// per-engine transfers whose aggregate efficiency drops with each extra
// concurrent requester.
SimResult simulate(const JointDesignPoint& sigma, const PlatformSpec& platform,
                   const SimConfig& cfg, const HsConfigTable* table = nullptr,
                   const std::vector<int>& rep = {});

struct PolicyComparison {
  double predicted_obj = 0.0;  // every engine granted the full budget
  double unaware_obj = 0.0;
  double aware_obj = 0.0;
  std::vector<double> predicted_fps;
  std::vector<double> unaware_fps;
  std::vector<double> aware_fps;
};

PolicyComparison compare_policies(const JointDesignPoint& sigma, const PlatformSpec& platform,
                                  const Objective& obj, const std::vector<int>& rep,
                                  const HsConfigTable& table, const SimConfig& cfg);

}  // namespace mcdse
