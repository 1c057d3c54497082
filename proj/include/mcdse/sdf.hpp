#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mcdse/model.hpp"
#include "mcdse/resources.hpp"

namespace mcdse {

// Parallelism of one hardware stage: n_pe processing elements, n_op window
// operators per element, f_in input maps held per tile (Conv only).
struct StageConfig {
  LayerKind kind = LayerKind::Conv;
  int n_pe = 1;
  int n_op = 1;
  int f_in = 1;
};

// A full per-network hardware choice: the chain split plus one StageConfig
// per layer, consistent with the partitioning's folds.
struct EngineConfig {
  Partitioning partitioning;
  std::vector<StageConfig> stages;  // one per layer, chain order
};

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(std::size_t(r) * c, 0.0) {}
  double& at(int r, int c) { return v[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return v[std::size_t(r) * cols + c]; }
};

// Arc-by-stage processing rates (elements/cycle). A stage's entry on its
// input arc is its consumption rate n_pe*n_op.
struct TopologyMatrix {
  Matrix gamma;
};

// Arc-by-stage element counts moved per tile pass.
struct WorkloadMatrix {
  Matrix w;
};

struct SubgraphMetrics {
  double latency_s = 0.0;         // one-frame traversal time, compute only
  double weights_time_s = 0.0;    // weight transfer at the caller's stream bandwidth
  double bandwidth_bytes_per_s = 0.0;  // steady-state demand b(s)
  std::uint64_t ops = 0;
  std::uint64_t weight_bytes = 0;
  std::uint64_t io_bytes = 0;     // input plus output feature map bytes
  double depth_cycles = 0.0;
  double ii_max_cycles = 0.0;     // slowest per-pass stage interval
  double tile_reps = 1.0;         // worst-case sequential tile passes per frame
};

// Rate and workload matrices for one subgraph of the configured engine.
// Matrices are (arcs x stages) with arcs = stages + 1 chain edges.
std::pair<TopologyMatrix, WorkloadMatrix> build_matrices(const NetworkSpec& net,
                                                         const EngineConfig& cfg,
                                                         int subgraph_index);

// Elementwise workload over rate; zero where the stage is not on the arc.
Matrix initiation_interval(const WorkloadMatrix& w, const TopologyMatrix& gamma);

// Batched execution time of one subgraph:
//   (depth_cycles + II_max * (batch - 1) * tile_reps) / clock_hz.
double subgraph_time(int batch, const TopologyMatrix& gamma, const WorkloadMatrix& w,
                     double depth_cycles, double clock_hz, double tile_reps = 1.0);

// Cycles for one frame to traverse the subgraph: per-stage service cycles
// summed, plus the fixed per-stage latency.
double subgraph_depth_cycles(const NetworkSpec& net, const EngineConfig& cfg, int subgraph_index,
                             int stage_latency_cycles);

// End-to-end time of a batch across all subgraphs, weight loads included.
// weights_bw_bytes_per_s <= 0 selects the platform's full budget.
double total_time(const NetworkSpec& net, const EngineConfig& cfg, int batch,
                  const PlatformSpec& platform, double weights_bw_bytes_per_s = 0.0);

// Steady-state average bandwidth demand of one subgraph:
//   (input fmap bytes + output fmap bytes + weight bytes) / latency.
double bandwidth_demand(const NetworkSpec& net, const EngineConfig& cfg, int subgraph_index,
                        const PlatformSpec& platform);

ResourceVector resource_usage(const NetworkSpec& net, const EngineConfig& cfg,
                              const ResourceCostModel& cm);

SubgraphMetrics analyse_subgraph(const NetworkSpec& net, const EngineConfig& cfg,
                                 int subgraph_index, const PlatformSpec& platform,
                                 double weights_bw_bytes_per_s = 0.0);

void validate_engine_config(const NetworkSpec& net, const EngineConfig& cfg);

// Input feature-map element count seen by subgraph j (the predecessor's
// output volume; stride-scaled output size for the chain head).
std::uint64_t subgraph_input_elements(const NetworkSpec& net, const EngineConfig& cfg,
                                      int subgraph_index);
std::uint64_t subgraph_output_elements(const NetworkSpec& net, const EngineConfig& cfg,
                                       int subgraph_index);

}  // namespace mcdse
