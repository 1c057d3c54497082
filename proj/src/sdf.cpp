#include "mcdse/sdf.hpp"

#include <algorithm>
#include <cmath>

#include "mcdse/errors.hpp"

namespace mcdse {

namespace {

// Elements a stage touches on its input arc during one tile pass.
double pass_workload(const LayerSpec& l, const StageConfig& s) {
  double window = double(l.k) * l.k * l.h_out * l.w_out;
  switch (l.kind) {
    case LayerKind::Conv: return double(s.f_in) * l.n_out * window;
    case LayerKind::Pool: return double(l.n_out) * window;
    default: return double(l.n_out) * l.h_out * l.w_out;
  }
}

double tile_passes(const LayerSpec& l, const StageConfig& s) {
  return l.kind == LayerKind::Conv ? double(l.n_in) / s.f_in : 1.0;
}

double stage_rate(const StageConfig& s) { return double(s.n_pe) * s.n_op; }

}  // namespace

void validate_engine_config(const NetworkSpec& net, const EngineConfig& cfg) {
  validate_partitioning(net, cfg.partitioning);
  if (cfg.stages.size() != net.layers.size())
    throw ValidationError("engine config: expected one stage per layer (" +
                          std::to_string(net.layers.size()) + ", got " +
                          std::to_string(cfg.stages.size()) + ")");

  std::size_t fold_idx = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const StageConfig& s = cfg.stages[i];
    std::string where = "engine config stage " + std::to_string(i + 1);
    if (s.kind != l.kind) throw ValidationError(where + ": stage kind differs from layer kind");
    if (s.n_pe < 1 || s.n_pe > l.n_out || l.n_out % s.n_pe != 0)
      throw ValidationError(where + ": n_pe must divide n_out");
    int window = l.k * l.k;
    if (s.n_op < 1 || s.n_op > window || window % s.n_op != 0)
      throw ValidationError(where + ": n_op must divide k^2");
    if (l.kind == LayerKind::Nonlin && s.n_op != 1)
      throw ValidationError(where + ": Nonlin stages use n_op = 1");
    if (l.kind == LayerKind::Conv) {
      int expected = cfg.partitioning.input_folds[fold_idx++];
      if (s.f_in != expected)
        throw ValidationError(where + ": f_in=" + std::to_string(s.f_in) +
                              " differs from the partitioning fold " + std::to_string(expected));
    } else if (s.f_in != 1) {
      throw ValidationError(where + ": only Conv stages may fold their input");
    }
  }
}

std::pair<TopologyMatrix, WorkloadMatrix> build_matrices(const NetworkSpec& net,
                                                         const EngineConfig& cfg,
                                                         int subgraph_index) {
  validate_engine_config(net, cfg);
  auto [first, last] = cfg.partitioning.subgraph_range(net, subgraph_index);
  int stages = last - first + 1;
  int arcs = stages + 1;

  TopologyMatrix gamma;
  WorkloadMatrix w;
  gamma.gamma = Matrix(arcs, stages);
  w.w = Matrix(arcs, stages);

  for (int v = 0; v < stages; ++v) {
    const LayerSpec& l = net.layers[first + v];
    const StageConfig& s = cfg.stages[first + v];
    double consumed = pass_workload(l, s);
    double service_cycles = consumed / stage_rate(s);

    // Input arc: the stage consumes at its operator rate.
    w.w.at(v, v) = consumed;
    gamma.gamma.at(v, v) = stage_rate(s);

    // Output arc: traffic equals what the next stage consumes per pass (the
    // subgraph boundary carries the raw output volume), produced over the
    // same service interval.
    double produced = v + 1 < stages
                          ? pass_workload(net.layers[first + v + 1], cfg.stages[first + v + 1])
                          : double(l.out_elements());
    w.w.at(v + 1, v) = produced;
    gamma.gamma.at(v + 1, v) = produced / service_cycles;
  }
  return {gamma, w};
}

Matrix initiation_interval(const WorkloadMatrix& w, const TopologyMatrix& gamma) {
  if (w.w.rows != gamma.gamma.rows || w.w.cols != gamma.gamma.cols)
    throw ModelError("initiation_interval: matrix shapes differ");
  Matrix ii(w.w.rows, w.w.cols);
  for (int r = 0; r < ii.rows; ++r)
    for (int c = 0; c < ii.cols; ++c) {
      double load = w.w.at(r, c);
      double rate = gamma.gamma.at(r, c);
      if (load == 0.0) continue;
      if (rate <= 0.0)
        throw ModelError("initiation_interval: nonzero workload over zero rate at arc " +
                         std::to_string(r) + ", stage " + std::to_string(c));
      ii.at(r, c) = load / rate;
    }
  return ii;
}

double subgraph_time(int batch, const TopologyMatrix& gamma, const WorkloadMatrix& w,
                     double depth_cycles, double clock_hz, double tile_reps) {
  if (batch < 1) throw ModelError("subgraph_time: batch must be >= 1");
  if (clock_hz <= 0) throw ModelError("subgraph_time: clock_hz must be > 0");
  if (tile_reps < 1) throw ModelError("subgraph_time: tile_reps must be >= 1");
  Matrix ii = initiation_interval(w, gamma);
  double ii_max = 0.0;
  for (double x : ii.v) ii_max = std::max(ii_max, x);
  return (depth_cycles + ii_max * double(batch - 1) * tile_reps) / clock_hz;
}

double subgraph_depth_cycles(const NetworkSpec& net, const EngineConfig& cfg, int subgraph_index,
                             int stage_latency_cycles) {
  auto [first, last] = cfg.partitioning.subgraph_range(net, subgraph_index);
  double cycles = 0.0;
  for (int i = first; i <= last; ++i) {
    const LayerSpec& l = net.layers[i];
    const StageConfig& s = cfg.stages[i];
    cycles += pass_workload(l, s) / stage_rate(s) * tile_passes(l, s) + stage_latency_cycles;
  }
  return cycles;
}

std::uint64_t subgraph_input_elements(const NetworkSpec& net, const EngineConfig& cfg,
                                      int subgraph_index) {
  auto [first, last] = cfg.partitioning.subgraph_range(net, subgraph_index);
  (void)last;
  if (first == 0) {
    const LayerSpec& l = net.layers[0];
    // The chain head's input size is reconstructed stride-scaled from its
    // output size; border handling is not modelled.
    return std::uint64_t(l.n_in) * (std::uint64_t(l.h_out) * l.stride) *
           (std::uint64_t(l.w_out) * l.stride);
  }
  return net.layers[first - 1].out_elements();
}

std::uint64_t subgraph_output_elements(const NetworkSpec& net, const EngineConfig& cfg,
                                       int subgraph_index) {
  auto [first, last] = cfg.partitioning.subgraph_range(net, subgraph_index);
  (void)first;
  return net.layers[last].out_elements();
}

SubgraphMetrics analyse_subgraph(const NetworkSpec& net, const EngineConfig& cfg,
                                 int subgraph_index, const PlatformSpec& platform,
                                 double weights_bw_bytes_per_s) {
  validate_engine_config(net, cfg);
  auto [first, last] = cfg.partitioning.subgraph_range(net, subgraph_index);
  double weights_bw =
      weights_bw_bytes_per_s > 0 ? weights_bw_bytes_per_s : platform.b_mem_bytes_per_s;

  SubgraphMetrics m;
  m.depth_cycles = subgraph_depth_cycles(net, cfg, subgraph_index, platform.stage_latency_cycles);
  m.latency_s = m.depth_cycles / platform.clock_hz;

  for (int i = first; i <= last; ++i) {
    const LayerSpec& l = net.layers[i];
    const StageConfig& s = cfg.stages[i];
    m.ops += l.work_ops();
    m.weight_bytes += std::uint64_t(std::llround(l.weight_count() * platform.word_bytes()));
    m.ii_max_cycles = std::max(m.ii_max_cycles, pass_workload(l, s) / stage_rate(s));
    m.tile_reps = std::max(m.tile_reps, tile_passes(l, s));
  }

  std::uint64_t io_elements = subgraph_input_elements(net, cfg, subgraph_index) +
                              subgraph_output_elements(net, cfg, subgraph_index);
  m.io_bytes = std::uint64_t(std::llround(io_elements * platform.word_bytes()));
  m.weights_time_s = m.weight_bytes / weights_bw;
  m.bandwidth_bytes_per_s = double(m.io_bytes + m.weight_bytes) / m.latency_s;
  return m;
}

double total_time(const NetworkSpec& net, const EngineConfig& cfg, int batch,
                  const PlatformSpec& platform, double weights_bw_bytes_per_s) {
  validate_engine_config(net, cfg);
  if (batch < 1) throw ModelError("total_time: batch must be >= 1");
  double total = 0.0;
  for (int sgi = 0; sgi < cfg.partitioning.subgraph_count(); ++sgi) {
    auto [gamma, w] = build_matrices(net, cfg, sgi);
    SubgraphMetrics m = analyse_subgraph(net, cfg, sgi, platform, weights_bw_bytes_per_s);
    total += subgraph_time(batch, gamma, w, m.depth_cycles, platform.clock_hz, m.tile_reps);
    total += m.weights_time_s;
  }
  return total;
}

double bandwidth_demand(const NetworkSpec& net, const EngineConfig& cfg, int subgraph_index,
                        const PlatformSpec& platform) {
  return analyse_subgraph(net, cfg, subgraph_index, platform).bandwidth_bytes_per_s;
}

ResourceVector resource_usage(const NetworkSpec& net, const EngineConfig& cfg,
                              const ResourceCostModel& cm) {
  validate_engine_config(net, cfg);
  double lut = 0.0, ff = 0.0, dsp = 0.0, bram = 0.0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const StageConfig& s = cfg.stages[i];
    lut += cm.lut_base + double(s.n_pe) * cm.lut_per_pe;
    ff += cm.ff_base + double(s.n_pe) * cm.ff_per_pe;
    if (l.kind == LayerKind::Conv) {
      dsp += double(s.n_pe) * s.n_op * cm.dsp_per_mult;
      // On-chip weight tile: f_in input maps' worth of coefficients.
      double tile_bytes = double(s.f_in) * l.n_out * l.k * l.k * cm.word_bytes;
      bram += std::ceil(tile_bytes / cm.bram_bytes);
    }
    if (l.kind != LayerKind::Nonlin && l.k > 1) {
      double line_bytes = double(l.k) * (double(l.w_out) * l.stride) * cm.word_bytes;
      bram += std::ceil(line_bytes / cm.bram_bytes);
    }
  }
  ResourceVector r;
  r.lut = std::int64_t(std::ceil(lut));
  r.ff = std::int64_t(std::ceil(ff));
  r.dsp = std::int64_t(std::ceil(dsp));
  r.bram = std::int64_t(std::ceil(bram));
  return r;
}

}  // namespace mcdse
