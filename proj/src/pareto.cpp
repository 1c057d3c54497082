#include "mcdse/pareto.hpp"

#include <algorithm>
#include <numeric>

#include "mcdse/errors.hpp"

namespace mcdse {

namespace {

std::vector<int> capped_divisors(int n, int cap) {
  std::vector<int> divs = divisors_of(n);
  if (cap > 0 && static_cast<int>(divs.size()) > cap) divs.resize(cap);
  return divs;
}

// Strict vector dominance on (latency, lut, ff, dsp, bram).
bool dominates(const DesignPoint& a, const DesignPoint& b) {
  if (a.latency_s > b.latency_s || a.rsc.lut > b.rsc.lut || a.rsc.ff > b.rsc.ff ||
      a.rsc.dsp > b.rsc.dsp || a.rsc.bram > b.rsc.bram)
    return false;
  return a.latency_s < b.latency_s || a.rsc.lut < b.rsc.lut || a.rsc.ff < b.rsc.ff ||
         a.rsc.dsp < b.rsc.dsp || a.rsc.bram < b.rsc.bram;
}

}  // namespace

std::vector<DesignPoint> enumerate_points(const NetworkSpec& net, const PlatformSpec& platform,
                                          const LatticeLimits& limits) {
  validate_network(net);
  validate_platform(platform);

  std::vector<Partitioning> parts = enumerate_partitionings(net, limits.max_subgraphs);

  // Per-layer parallelism choices, independent of the partitioning.
  std::vector<std::vector<int>> pe_choices, op_choices;
  for (const auto& l : net.layers) {
    pe_choices.push_back(capped_divisors(l.n_out, limits.max_npe));
    op_choices.push_back(l.kind == LayerKind::Nonlin
                             ? std::vector<int>{1}
                             : capped_divisors(l.k * l.k, limits.max_nop));
  }

  std::vector<DesignPoint> out;
  std::uint64_t visited = 0;
  for (auto& part : parts) {
    if (limits.max_fin > 0) {
      // Fold cap applies to the partition lattice: skip partitionings using
      // folds beyond the first max_fin divisors of any layer's n_in.
      bool ok = true;
      std::size_t fold_idx = 0;
      for (const auto& l : net.layers) {
        if (l.kind != LayerKind::Conv) continue;
        auto divs = capped_divisors(l.n_in, limits.max_fin);
        if (std::find(divs.begin(), divs.end(), part.input_folds[fold_idx]) == divs.end())
          ok = false;
        ++fold_idx;
      }
      if (!ok) continue;
    }

    int n_layers = static_cast<int>(net.layers.size());
    std::vector<std::size_t> pe_pick(n_layers, 0), op_pick(n_layers, 0);
    while (true) {
      if (++visited > limits.max_points)
        throw InfeasibleError("enumerate_points: design space for '" + net.name + "' exceeds " +
                              std::to_string(limits.max_points) +
                              " points; tighten the lattice limits");

      EngineConfig cfg;
      cfg.partitioning = part;
      std::size_t fold_idx = 0;
      for (int i = 0; i < n_layers; ++i) {
        StageConfig s;
        s.kind = net.layers[i].kind;
        s.n_pe = pe_choices[i][pe_pick[i]];
        s.n_op = op_choices[i][op_pick[i]];
        s.f_in = net.layers[i].kind == LayerKind::Conv ? part.input_folds[fold_idx++] : 1;
        cfg.stages.push_back(s);
      }

      ResourceVector rsc = resource_usage(net, cfg, platform.cost_model);
      if (rsc.fits_within(platform.rsc_avail)) {
        DesignPoint p;
        p.engine = std::move(cfg);
        p.rsc = rsc;
        p.latency_s = 0.0;
        for (int sgi = 0; sgi < part.subgraph_count(); ++sgi) {
          SubgraphMetrics m = analyse_subgraph(net, p.engine, sgi, platform);
          p.latency_s += m.latency_s + m.weights_time_s;
          p.metrics.push_back(m);
        }
        out.push_back(std::move(p));
      }

      // Odometer over (n_pe, n_op) per layer.
      int i = 0;
      for (; i < n_layers; ++i) {
        if (++op_pick[i] < op_choices[i].size()) break;
        op_pick[i] = 0;
        if (++pe_pick[i] < pe_choices[i].size()) break;
        pe_pick[i] = 0;
      }
      if (i == n_layers) break;
    }
  }

  if (out.empty())
    throw InfeasibleError("no feasible single-network design for '" + net.name +
                          "' on this platform");
  return out;
}

std::vector<DesignPoint> pareto_front(const std::vector<DesignPoint>& points) {
  std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Any dominator sorts lexicographically before its victim, so one forward
  // pass against the kept set suffices.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const DesignPoint& pa = points[a];
    const DesignPoint& pb = points[b];
    auto ka = std::tuple(pa.latency_s, pa.rsc.lut, pa.rsc.ff, pa.rsc.dsp, pa.rsc.bram);
    auto kb = std::tuple(pb.latency_s, pb.rsc.lut, pb.rsc.ff, pb.rsc.dsp, pb.rsc.bram);
    return ka < kb;
  });

  std::vector<std::size_t> kept;
  std::vector<bool> keep(n, false);
  for (std::size_t idx : order) {
    bool dominated = false;
    for (std::size_t k : kept)
      if (dominates(points[k], points[idx])) {
        dominated = true;
        break;
      }
    if (!dominated) {
      kept.push_back(idx);
      keep[idx] = true;
    }
  }

  std::vector<DesignPoint> front;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) front.push_back(points[i]);
  return front;
}

std::vector<JointDesignPoint> enumerate_joint(const std::vector<std::vector<DesignPoint>>& fronts,
                                              const ResourceVector& rsc_avail, int front_cap) {
  if (fronts.empty()) throw InfeasibleError("enumerate_joint: no fronts supplied");

  std::vector<std::vector<DesignPoint>> pool;
  for (const auto& front : fronts) {
    if (front.empty()) throw InfeasibleError("enumerate_joint: a front is empty");
    std::vector<DesignPoint> capped = front;
    if (front_cap > 0 && static_cast<int>(capped.size()) > front_cap) {
      std::stable_sort(capped.begin(), capped.end(),
                       [](const DesignPoint& a, const DesignPoint& b) {
                         return a.latency_s < b.latency_s;
                       });
      capped.resize(front_cap);
    }
    pool.push_back(std::move(capped));
  }

  std::vector<JointDesignPoint> joints;
  std::vector<std::size_t> pick(pool.size(), 0);
  while (true) {
    ResourceVector total;
    for (std::size_t i = 0; i < pool.size(); ++i) total += pool[i][pick[i]].rsc;
    if (total.fits_within(rsc_avail)) {
      JointDesignPoint j;
      for (std::size_t i = 0; i < pool.size(); ++i) j.points.push_back(pool[i][pick[i]]);
      j.rsc = total;
      joints.push_back(std::move(j));
    }

    // Lexicographic order: the last network's index varies fastest.
    std::size_t i = pool.size();
    while (i > 0) {
      --i;
      if (++pick[i] < pool[i].size()) break;
      pick[i] = 0;
      if (i == 0) {
        i = pool.size() + 1;
        break;
      }
    }
    if (i == pool.size() + 1) break;
  }

  if (joints.empty())
    throw InfeasibleError("no joint design fits the platform resource budget");
  return joints;
}

}  // namespace mcdse
