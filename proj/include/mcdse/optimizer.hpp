#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "mcdse/pareto.hpp"
#include "mcdse/sched.hpp"

namespace mcdse {

inline constexpr double kUnattainable = std::numeric_limits<double>::infinity();

enum class ObjectiveKind { FpsTarget, MaxThroughput };
enum class SolverKind { Rcls, Exact };

// Per-network reference figures taken from the best standalone design.
struct Reference {
  double fps_max = 0.0;  // frames/s of the lowest-latency front point
  double t_max = 0.0;    // ops/s at fps_max
  std::uint64_t ops = 0; // arithmetic ops per frame
};

struct Objective {
  ObjectiveKind kind = ObjectiveKind::FpsTarget;
  std::vector<double> fps_target;  // resolved: min(user target, attainable max)
  std::vector<Reference> refs;
};

struct PatternSearchParams {
  double initial_step = 0.5;    // log-space: one move multiplies by exp(step)
  double step_tolerance = 1e-3;
  int max_iterations = 200;
  double poll_scale = 2.0;
};

struct DseResult {
  int joint_index = -1;
  JointDesignPoint sigma;
  SlowDownVector sl;
  CyclicSchedule schedule;
  std::vector<TaskInstance> tasks;  // slowed tasks matching the schedule
  double objective_value = kUnattainable;
  std::vector<double> fps;
  std::vector<int> rep;
};

std::vector<Reference> derive_references(const std::vector<std::vector<DesignPoint>>& fronts,
                                         const std::vector<NetworkSpec>& nets);

// Resolves user targets against attainable maxima (absent targets fall back
// to the attainable maximum).
Objective make_objective(ObjectiveKind kind, const std::vector<NetworkSpec>& nets,
                         const std::vector<Reference>& refs);

// Sum of squared relative deviations from target frame rates.
double fps_objective_value(const std::vector<double>& fps, const std::vector<double>& fps_target);
// Sum of squared relative deviations from per-network peak throughput.
double maxthrpt_objective_value(const std::vector<double>& throughput,
                                const std::vector<double>& t_max);

double objective_value(const Objective& obj, const std::vector<double>& fps);

// Schedule sigma under the given slow-downs and score the resulting frame
// rates (rep[i]/K). Unattainable points score +infinity.
double evaluate(const JointDesignPoint& sigma, const SlowDownVector& sl, const Objective& obj,
                double b_mem, const std::vector<int>& rep, SolverKind solver = SolverKind::Rcls,
                double exact_quantum_s = 0.0);

// Coordinate pattern search over slow-downs in (floor, 1]. Moves are
// multiplicative (exp(+-step) per coordinate, first improvement wins), with a
// longer poll at exp(+-poll_scale*step) before the step is halved. Never
// returns a point worse than the start.
std::pair<SlowDownVector, double> pattern_search(const JointDesignPoint& sigma,
                                                 const SlowDownVector& start, const Objective& obj,
                                                 double b_mem, const std::vector<int>& rep,
                                                 const PatternSearchParams& params = {},
                                                 SolverKind solver = SolverKind::Rcls,
                                                 double exact_quantum_s = 0.0);

// Full memory-aware exploration: for every joint point, schedule without
// bandwidth limits, propose slow-downs from the violation report, refine with
// pattern search, and keep the best objective (ties to the lower index).
DseResult memory_aware_dse(const std::vector<JointDesignPoint>& joints, const Objective& obj,
                           double b_mem, const std::vector<int>& rep,
                           const PatternSearchParams& params = {},
                           SolverKind solver = SolverKind::Rcls, double exact_quantum_s = 0.0);

// Frame repetitions per period: all ones by default; when derived from
// targets, proportional to each network's target rate.
std::vector<int> derive_reps(const std::vector<NetworkSpec>& nets, bool from_targets);

}  // namespace mcdse
