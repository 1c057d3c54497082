#pragma once

#include <cstdint>
#include <vector>

#include "mcdse/model.hpp"
#include "mcdse/sdf.hpp"

namespace mcdse {

// One evaluated hardware choice for a single network.
struct DesignPoint {
  EngineConfig engine;
  std::vector<SubgraphMetrics> metrics;  // one per subgraph
  ResourceVector rsc;
  double latency_s = 0.0;  // batch-1 frame time at full platform bandwidth
};

// One design point per network, sharing the device.
struct JointDesignPoint {
  std::vector<DesignPoint> points;
  ResourceVector rsc;
};

struct LatticeLimits {
  int max_subgraphs = 8;
  int max_npe = 0;  // 0 = unbounded; otherwise cap the per-layer divisor choice
  int max_nop = 0;
  int max_fin = 0;
  std::uint64_t max_points = 2000000;  // enumeration guard, errors beyond this
};

// Every feasible design point of one network on the platform, in
// deterministic enumeration order. Throws InfeasibleError when nothing fits.
std::vector<DesignPoint> enumerate_points(const NetworkSpec& net, const PlatformSpec& platform,
                                          const LatticeLimits& limits = {});

// Non-dominated subset under (latency_s, lut, ff, dsp, bram), all minimised.
// Survivors keep their input order.
std::vector<DesignPoint> pareto_front(const std::vector<DesignPoint>& points);

// Cartesian combinations of per-network fronts whose summed resources fit the
// budget, in lexicographic index order. front_cap > 0 keeps only the
// front_cap lowest-latency points of each front before combining.
std::vector<JointDesignPoint> enumerate_joint(const std::vector<std::vector<DesignPoint>>& fronts,
                                              const ResourceVector& rsc_avail, int front_cap = 0);

}  // namespace mcdse
