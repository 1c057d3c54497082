#include "mcdse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include "mcdse/errors.hpp"
#include "mcdse/sched.hpp"

namespace mcdse {

namespace {

constexpr std::size_t kTraceLineCap = 500;

struct InstanceState {
  // Static description of one scheduled execution.
  int cnn = 0;
  int subgraph = 0;
  int pred = -1;                 // previous link in the chain, -1 for the head
  std::uint64_t bytes_total = 0; // pool the execution drains
  std::uint64_t cycles_total = 0;
  std::uint64_t start_gate_cycles = 0;  // schedule offset within the period
  std::uint64_t fifo_cap_bytes = 0;
  int slots = 1;

  // Progress of the live execution.
  int period = 0;
  std::uint64_t delivered = 0;
  std::uint64_t compute_done = 0;
  std::uint64_t activation = 0;
  bool activated = false;
};

constexpr std::uint64_t kUnsetCycle = ~std::uint64_t(0);

std::uint64_t cycles_of(double seconds, double clock_hz) {
  return static_cast<std::uint64_t>(std::llround(seconds * clock_hz));
}

// Largest compute cycle the delivered bytes can feed: the pool drains
// uniformly across the execution window.
std::uint64_t byte_limited_cycles(const InstanceState& st) {
  if (st.bytes_total == 0) return st.cycles_total;
  unsigned __int128 lhs = static_cast<unsigned __int128>(st.delivered) * st.cycles_total;
  return static_cast<std::uint64_t>(lhs / st.bytes_total);
}

std::uint64_t bytes_consumed(const InstanceState& st) {
  if (st.cycles_total == 0) return st.bytes_total;
  unsigned __int128 lhs = static_cast<unsigned __int128>(st.compute_done) * st.bytes_total;
  return static_cast<std::uint64_t>(lhs / st.cycles_total);
}

struct Tracer {
  bool enabled = false;
  std::size_t lines = 0;
  std::ostringstream out;

  void line(std::uint64_t cycle, const std::string& text) {
    if (!enabled) return;
    if (lines == kTraceLineCap) {
      out << "... (trace truncated)\n";
      ++lines;
      return;
    }
    if (lines > kTraceLineCap) return;
    out << "[" << cycle << "] " << text << "\n";
    ++lines;
  }
};

std::vector<InstanceState> make_instances(const std::vector<TaskInstance>& base,
                                          const HsConfigTable* table, const PlatformSpec& platform,
                                          std::uint64_t fifo_elements) {
  std::vector<InstanceState> states;
  states.reserve(base.size());
  const std::uint64_t window_bytes =
      std::uint64_t(platform.burst_length) * std::uint64_t(platform.port_bytes_per_cycle());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const TaskInstance& t = base[i];
    InstanceState st;
    st.cnn = t.cnn;
    st.subgraph = t.subgraph;
    if (i > 0 && base[i - 1].cnn == t.cnn && base[i - 1].subgraph + 1 == t.subgraph)
      st.pred = static_cast<int>(i) - 1;
    st.cycles_total = std::max<std::uint64_t>(1, cycles_of(t.latency_s, platform.clock_hz));
    if (table) {
      const HsEntry& e = table->entries[i];
      if (e.cnn != t.cnn || e.subgraph != t.subgraph)
        throw ConfigError("simulate: arbiter table does not match the task list");
      st.bytes_total = e.data_elements * std::uint64_t(platform.word_bytes());
      st.start_gate_cycles = cycles_of(e.start_s, platform.clock_hz);
      st.slots = e.slots;
    } else {
      st.bytes_total =
          static_cast<std::uint64_t>(std::llround(t.bandwidth * t.latency_s));
    }
    st.fifo_cap_bytes = fifo_elements > 0
                            ? fifo_elements * std::uint64_t(platform.word_bytes())
                            : 2 * std::uint64_t(st.slots) * window_bytes;
    states.push_back(st);
  }
  return states;
}

struct Accounting {
  std::vector<std::vector<double>> frame_times;     // per net, per completed frame
  std::vector<std::vector<double>> instance_sums;   // per net, per subgraph
  std::vector<std::vector<std::uint64_t>> instance_counts;
  std::vector<std::uint64_t> stalls;
  std::vector<std::uint64_t> delivered;

  explicit Accounting(const JointDesignPoint& sigma) {
    const std::size_t n = sigma.points.size();
    frame_times.resize(n);
    instance_sums.resize(n);
    instance_counts.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t subgraphs = sigma.points[i].engine.partitioning.subgraph_count();
      instance_sums[i].assign(subgraphs, 0.0);
      instance_counts[i].assign(subgraphs, 0);
    }
    stalls.assign(n, 0);
    delivered.assign(n, 0);
  }

  void finish_instance(const InstanceState& st, double seconds) {
    instance_sums[st.cnn][st.subgraph % instance_sums[st.cnn].size()] += seconds;
    instance_counts[st.cnn][st.subgraph % instance_counts[st.cnn].size()] += 1;
  }

  void fill(SimResult& result, double clock_hz) const {
    result.frame_times_s = frame_times;
    result.stall_cycles = stalls;
    result.delivered_bytes = delivered;
    result.instance_times_s.resize(instance_sums.size());
    for (std::size_t i = 0; i < instance_sums.size(); ++i) {
      result.instance_times_s[i].resize(instance_sums[i].size(), 0.0);
      for (std::size_t s = 0; s < instance_sums[i].size(); ++s)
        if (instance_counts[i][s] > 0)
          result.instance_times_s[i][s] = instance_sums[i][s] / double(instance_counts[i][s]);
    }
    (void)clock_hz;
  }
};

SimResult run_memory_aware(const JointDesignPoint& sigma, const PlatformSpec& platform,
                           const SimConfig& cfg, const HsConfigTable& table,
                           const std::vector<int>& rep) {
  std::vector<TaskInstance> base = build_tasks(sigma, rep);
  if (base.size() != table.entries.size())
    throw ConfigError("simulate: arbiter table does not match the task list");

  const double clock = platform.clock_hz;
  const std::uint64_t window = std::max(1, platform.burst_length);
  const std::uint64_t period_cycles =
      std::max<std::uint64_t>(1, cycles_of(table.cycle_time_s, clock));
  const std::uint64_t grant_bytes = static_cast<std::uint64_t>(
      std::llround(platform.b_mem_bytes_per_s * double(window) / clock));
  const int frames = std::max(1, cfg.duration_frames);

  std::vector<InstanceState> inst = make_instances(base, &table, platform, cfg.fifo_elements);
  Accounting acc(sigma);
  Tracer trace;
  trace.enabled = cfg.trace;

  const std::size_t total_executions = inst.size() * std::size_t(frames);
  std::size_t completed = 0;

  // Per-network completion time of each period, for the steady-state rate.
  std::vector<std::vector<std::uint64_t>> period_finish(
      sigma.points.size(), std::vector<std::uint64_t>(frames, 0));
  std::vector<std::vector<std::uint64_t>> chain_start(inst.size(),
                                                      std::vector<std::uint64_t>(frames, 0));
  std::vector<std::vector<std::uint64_t>> task_finish(
      inst.size(), std::vector<std::uint64_t>(frames, kUnsetCycle));

  // Bandwidth bookkeeping per period.
  std::vector<std::uint64_t> period_bytes(frames + 8, 0);

  std::size_t rr_cursor = 0;
  int rr_bursts_left = 0;

  const std::uint64_t horizon = period_cycles * std::uint64_t(frames + 4) + (1u << 20);
  std::uint64_t win_start = 0;
  std::uint64_t last_finish_cycle = 0;

  while (completed < total_executions) {
    if (win_start > horizon)
      throw ConfigError("simulate: executions fell past the simulation horizon");
    const std::uint64_t win_end = win_start + window;

    // One burst window goes to one requester: weighted round-robin over the
    // entries that are inside their schedule window and still have data and
    // buffer space.
    auto needs_data = [&](const InstanceState& st) {
      if (st.period >= frames) return false;
      std::uint64_t gate = std::uint64_t(st.period) * period_cycles + st.start_gate_cycles;
      if (gate > win_start) return false;
      if (st.delivered >= st.bytes_total) return false;
      std::uint64_t in_flight = st.delivered - bytes_consumed(st);
      return in_flight < st.fifo_cap_bytes;
    };

    bool any_request = false;
    for (const auto& st : inst)
      if (needs_data(st)) {
        any_request = true;
        break;
      }

    if (any_request) {
      // Stay with the current requester for its slot allowance, then move on.
      std::size_t scanned = 0;
      while (scanned <= inst.size()) {
        InstanceState& st = inst[rr_cursor];
        if (rr_bursts_left > 0 && needs_data(st)) break;
        rr_cursor = (rr_cursor + 1) % inst.size();
        rr_bursts_left = inst[rr_cursor].slots;
        ++scanned;
      }
      InstanceState& st = inst[rr_cursor];
      if (needs_data(st)) {
        std::uint64_t space = st.fifo_cap_bytes - (st.delivered - bytes_consumed(st));
        std::uint64_t chunk =
            std::min({grant_bytes, st.bytes_total - st.delivered, space});
        st.delivered += chunk;
        acc.delivered[st.cnn] += chunk;
        std::size_t bucket = std::min<std::size_t>(win_start / period_cycles,
                                                   period_bytes.size() - 1);
        period_bytes[bucket] += chunk;
        --rr_bursts_left;
        trace.line(win_start, "grant cnn=" + std::to_string(st.cnn) +
                                  " exec=" + std::to_string(st.subgraph) +
                                  " bytes=" + std::to_string(chunk));
      }
    }

    // Everybody computes through the window, gated by delivered data.
    for (std::size_t i = 0; i < inst.size(); ++i) {
      InstanceState& st = inst[i];
      if (st.period >= frames) continue;

      if (!st.activated) {
        std::uint64_t gate = std::uint64_t(st.period) * period_cycles + st.start_gate_cycles;
        if (st.pred >= 0) {
          std::uint64_t pf = task_finish[std::size_t(st.pred)][st.period];
          if (pf == kUnsetCycle) continue;  // producer still owes this period
          gate = std::max(gate, pf);
        }
        if (st.period > 0) gate = std::max(gate, task_finish[i][st.period - 1]);
        if (gate >= win_end) continue;
        st.activation = gate;
        st.activated = true;
        if (st.pred < 0) chain_start[i][st.period] = gate;
        trace.line(gate, "start cnn=" + std::to_string(st.cnn) +
                             " exec=" + std::to_string(st.subgraph) +
                             " period=" + std::to_string(st.period));
      }

      std::uint64_t from = std::max(win_start, st.activation);
      if (from >= win_end) continue;
      std::uint64_t avail = win_end - from;
      std::uint64_t needed = st.cycles_total - st.compute_done;
      std::uint64_t limit = byte_limited_cycles(st);
      std::uint64_t runnable = limit > st.compute_done ? limit - st.compute_done : 0;
      std::uint64_t adv = std::min({avail, needed, runnable});
      acc.stalls[st.cnn] += std::min(avail, needed) - adv;
      st.compute_done += adv;

      if (st.compute_done == st.cycles_total) {
        std::uint64_t fin = from + adv;
        task_finish[i][st.period] = fin;
        last_finish_cycle = std::max(last_finish_cycle, fin);
        acc.finish_instance(st, double(fin - st.activation) / clock);
        trace.line(fin, "finish cnn=" + std::to_string(st.cnn) +
                            " exec=" + std::to_string(st.subgraph) +
                            " period=" + std::to_string(st.period));
        period_finish[st.cnn][st.period] =
            std::max(period_finish[st.cnn][st.period], fin);
        bool tail = i + 1 == inst.size() || inst[i + 1].pred != static_cast<int>(i);
        if (tail) {
          std::size_t head = i;
          while (inst[head].pred >= 0) head = std::size_t(inst[head].pred);
          acc.frame_times[st.cnn].push_back(
              double(fin - chain_start[head][st.period]) / clock);
        }
        ++completed;
        st.period += 1;
        st.delivered = 0;
        st.compute_done = 0;
        st.activated = false;
      }
    }

    win_start = win_end;
  }

  SimResult result;
  acc.fill(result, clock);
  result.sim_time_s = double(last_finish_cycle) / clock;
  result.fps.resize(sigma.points.size(), 0.0);
  std::vector<int> reps = rep.empty() ? std::vector<int>(sigma.points.size(), 1) : rep;
  for (std::size_t n = 0; n < sigma.points.size(); ++n) {
    if (frames >= 2) {
      double span = double(period_finish[n][frames - 1] - period_finish[n][0]) / clock;
      result.fps[n] = double(reps[n]) * double(frames - 1) / span;
    } else {
      result.fps[n] = double(reps[n]) * clock / double(period_finish[n][0]);
    }
  }

  const double period_s = double(period_cycles) / clock;
  for (int p = 0; p < frames; ++p) {
    UtilSample u;
    u.t0_s = p * period_s;
    u.t1_s = (p + 1) * period_s;
    u.utilization = double(period_bytes[p]) / (platform.b_mem_bytes_per_s * period_s);
    result.utilization.push_back(u);
  }
  result.trace_text = trace.out.str();
  return result;
}

SimResult run_contention_unaware(const JointDesignPoint& sigma, const PlatformSpec& platform,
                                 const SimConfig& cfg, const std::vector<int>& rep) {
  std::vector<int> reps = rep.empty() ? std::vector<int>(sigma.points.size(), 1) : rep;
  const double clock = platform.clock_hz;
  const std::uint64_t window = std::max(1, platform.burst_length);
  const int frames = std::max(1, cfg.duration_frames);

  // One engine per network, executions back to back; no slow-downs, no
  // schedule, transfers collide freely.
  std::vector<int> one(sigma.points.size(), 1);
  std::vector<TaskInstance> base = build_tasks(sigma, one);
  std::vector<InstanceState> proto = make_instances(base, nullptr, platform, cfg.fifo_elements);

  struct EngineState {
    std::vector<std::size_t> chain;  // indices into proto
    std::uint64_t quota = 0;         // executions of the whole chain
    std::uint64_t frames_done = 0;
    std::size_t pos = 0;             // current link
    std::uint64_t delivered = 0;
    std::uint64_t compute_done = 0;
    std::uint64_t act = 0;           // current link start cycle
    std::uint64_t frame_start = 0;
    std::uint64_t last_frame_finish = 0;
  };

  std::vector<EngineState> engines(sigma.points.size());
  for (std::size_t i = 0; i < proto.size(); ++i)
    engines[proto[i].cnn].chain.push_back(i);
  for (std::size_t n = 0; n < engines.size(); ++n)
    engines[n].quota = std::uint64_t(reps[n]) * std::uint64_t(frames);

  Accounting acc(sigma);
  Tracer trace;
  trace.enabled = cfg.trace;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(1.0 - cfg.share_jitter,
                                                1.0 + cfg.share_jitter);

  std::uint64_t total_cycles_budget = 0;
  for (const auto& e : engines) {
    std::uint64_t per_frame = 0;
    for (std::size_t idx : e.chain) per_frame += proto[idx].cycles_total;
    total_cycles_budget += per_frame * e.quota;
  }
  const std::uint64_t horizon =
      total_cycles_budget * 8 * std::max<std::uint64_t>(1, engines.size()) + (1u << 22);

  std::uint64_t win_start = 0;
  std::uint64_t last_finish = 0;
  std::uint64_t chunk_bytes = 0;
  std::uint64_t chunk_begin = 0;
  const std::uint64_t chunk_len = window * 256;
  std::vector<UtilSample> util;

  auto engines_left = [&]() {
    for (const auto& e : engines)
      if (e.frames_done < e.quota) return true;
    return false;
  };

  while (engines_left()) {
    if (win_start > horizon)
      throw ConfigError("simulate: executions fell past the simulation horizon");
    const std::uint64_t win_end = win_start + window;

    // Who is asking for data this epoch.
    std::vector<std::size_t> active;
    for (std::size_t n = 0; n < engines.size(); ++n) {
      EngineState& e = engines[n];
      if (e.frames_done >= e.quota) continue;
      if (e.act >= win_end) continue;
      active.push_back(n);
    }

    if (!active.empty()) {
      // Aggregate efficiency falls with each extra concurrent requester; the
      // split between them wobbles around even shares.
      std::vector<std::size_t> requesting;
      for (std::size_t n : active) {
        const EngineState& e = engines[n];
        const InstanceState& link = proto[e.chain[e.pos]];
        if (e.delivered < link.bytes_total) requesting.push_back(n);
      }
      if (!requesting.empty()) {
        double eff = 1.0 / (1.0 + cfg.contention_penalty * double(requesting.size() - 1));
        std::vector<double> draw(requesting.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < requesting.size(); ++k) {
          draw[k] = jitter(rng);
          sum += draw[k];
        }
        for (std::size_t k = 0; k < requesting.size(); ++k) {
          EngineState& e = engines[requesting[k]];
          const InstanceState& link = proto[e.chain[e.pos]];
          double share = platform.b_mem_bytes_per_s * eff * draw[k] / sum;
          std::uint64_t bytes = static_cast<std::uint64_t>(
              std::llround(share * double(window) / clock));
          bytes = std::min(bytes, link.bytes_total - e.delivered);
          e.delivered += bytes;
          acc.delivered[requesting[k]] += bytes;
          chunk_bytes += bytes;
        }
      }
    }

    for (std::size_t n : active) {
      EngineState& e = engines[n];
      InstanceState link = proto[e.chain[e.pos]];
      link.delivered = e.delivered;
      link.compute_done = e.compute_done;

      std::uint64_t from = std::max(win_start, e.act);
      if (from >= win_end) continue;
      std::uint64_t avail = win_end - from;
      std::uint64_t needed = link.cycles_total - e.compute_done;
      std::uint64_t limit = byte_limited_cycles(link);
      std::uint64_t runnable = limit > e.compute_done ? limit - e.compute_done : 0;
      std::uint64_t adv = std::min({avail, needed, runnable});
      acc.stalls[n] += std::min(avail, needed) - adv;
      e.compute_done += adv;

      if (e.compute_done == link.cycles_total) {
        std::uint64_t fin = from + adv;
        last_finish = std::max(last_finish, fin);
        acc.finish_instance(proto[e.chain[e.pos]], double(fin - e.act) / clock);
        e.pos += 1;
        e.delivered = 0;
        e.compute_done = 0;
        e.act = fin;
        if (e.pos == e.chain.size()) {
          acc.frame_times[n].push_back(double(fin - e.frame_start) / clock);
          e.frames_done += 1;
          e.pos = 0;
          e.frame_start = fin;
          e.last_frame_finish = fin;
          trace.line(fin, "frame cnn=" + std::to_string(n) +
                              " count=" + std::to_string(e.frames_done));
        }
      }
    }

    if (win_end - chunk_begin >= chunk_len) {
      UtilSample u;
      u.t0_s = double(chunk_begin) / clock;
      u.t1_s = double(win_end) / clock;
      u.utilization =
          double(chunk_bytes) / (platform.b_mem_bytes_per_s * (u.t1_s - u.t0_s));
      if (util.size() < 4096) util.push_back(u);
      chunk_bytes = 0;
      chunk_begin = win_end;
    }

    win_start = win_end;
  }

  if (win_start > chunk_begin) {
    UtilSample u;
    u.t0_s = double(chunk_begin) / clock;
    u.t1_s = double(win_start) / clock;
    u.utilization = double(chunk_bytes) / (platform.b_mem_bytes_per_s * (u.t1_s - u.t0_s));
    if (util.size() < 4096) util.push_back(u);
  }

  SimResult result;
  acc.fill(result, clock);
  result.sim_time_s = double(last_finish) / clock;
  result.utilization = util;
  result.fps.resize(engines.size(), 0.0);
  for (std::size_t n = 0; n < engines.size(); ++n)
    result.fps[n] = double(engines[n].quota) * clock / double(engines[n].last_frame_finish);
  result.trace_text = trace.out.str();
  return result;
}

}  // namespace

SimResult simulate(const JointDesignPoint& sigma, const PlatformSpec& platform,
                   const SimConfig& cfg, const HsConfigTable* table,
                   const std::vector<int>& rep) {
  if (sigma.points.empty()) throw ConfigError("simulate: empty design point");
  if (cfg.policy == ArbiterPolicy::MemoryAware) {
    if (!table) throw ConfigError("simulate: memory-aware policy needs an arbiter table");
    return run_memory_aware(sigma, platform, cfg, *table, rep);
  }
  return run_contention_unaware(sigma, platform, cfg, rep);
}

PolicyComparison compare_policies(const JointDesignPoint& sigma, const PlatformSpec& platform,
                                  const Objective& obj, const std::vector<int>& rep,
                                  const HsConfigTable& table, const SimConfig& cfg) {
  PolicyComparison cmp;
  std::vector<int> reps = rep.empty() ? std::vector<int>(sigma.points.size(), 1) : rep;

  for (std::size_t n = 0; n < sigma.points.size(); ++n)
    cmp.predicted_fps.push_back(double(reps[n]) / table.cycle_time_s);
  cmp.predicted_obj = objective_value(obj, cmp.predicted_fps);

  SimConfig aware_cfg = cfg;
  aware_cfg.policy = ArbiterPolicy::MemoryAware;
  SimResult aware = simulate(sigma, platform, aware_cfg, &table, reps);
  cmp.aware_fps = aware.fps;
  cmp.aware_obj = objective_value(obj, aware.fps);

  SimConfig unaware_cfg = cfg;
  unaware_cfg.policy = ArbiterPolicy::ContentionUnaware;
  SimResult unaware = simulate(sigma, platform, unaware_cfg, nullptr, reps);
  cmp.unaware_fps = unaware.fps;
  cmp.unaware_obj = objective_value(obj, unaware.fps);

  return cmp;
}

}  // namespace mcdse
