#include "mcdse/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "mcdse/errors.hpp"

namespace mcdse {

std::vector<Reference> derive_references(const std::vector<std::vector<DesignPoint>>& fronts,
                                         const std::vector<NetworkSpec>& nets) {
  if (fronts.size() != nets.size())
    throw ValidationError("derive_references: front count differs from network count");
  std::vector<Reference> refs;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    if (fronts[i].empty())
      throw InfeasibleError("derive_references: empty front for '" + nets[i].name + "'");
    double best = fronts[i][0].latency_s;
    for (const auto& p : fronts[i]) best = std::min(best, p.latency_s);
    Reference r;
    r.fps_max = 1.0 / best;
    r.ops = nets[i].total_ops();
    r.t_max = double(r.ops) * r.fps_max;
    refs.push_back(r);
  }
  return refs;
}

Objective make_objective(ObjectiveKind kind, const std::vector<NetworkSpec>& nets,
                         const std::vector<Reference>& refs) {
  if (refs.size() != nets.size())
    throw ValidationError("make_objective: reference count differs from network count");
  Objective obj;
  obj.kind = kind;
  obj.refs = refs;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    double user = nets[i].fps_target.value_or(refs[i].fps_max);
    if (user <= 0)
      throw ValidationError("make_objective: fps target for '" + nets[i].name +
                            "' must be > 0");
    // Targets beyond the attainable maximum are clipped to it.
    obj.fps_target.push_back(std::min(user, refs[i].fps_max));
  }
  return obj;
}

double fps_objective_value(const std::vector<double>& fps,
                           const std::vector<double>& fps_target) {
  if (fps.size() != fps_target.size())
    throw ValidationError("fps_objective_value: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    double rel = (fps[i] - fps_target[i]) / fps_target[i];
    total += rel * rel;
  }
  return total;
}

double maxthrpt_objective_value(const std::vector<double>& throughput,
                                const std::vector<double>& t_max) {
  if (throughput.size() != t_max.size())
    throw ValidationError("maxthrpt_objective_value: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < throughput.size(); ++i) {
    double rel = (throughput[i] - t_max[i]) / t_max[i];
    total += rel * rel;
  }
  return total;
}

double objective_value(const Objective& obj, const std::vector<double>& fps) {
  if (obj.kind == ObjectiveKind::FpsTarget) return fps_objective_value(fps, obj.fps_target);
  std::vector<double> t, t_max;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    t.push_back(double(obj.refs[i].ops) * fps[i]);
    t_max.push_back(obj.refs[i].t_max);
  }
  return maxthrpt_objective_value(t, t_max);
}

namespace {

std::vector<int> effective_reps(const JointDesignPoint& sigma, const std::vector<int>& rep) {
  if (rep.empty()) return std::vector<int>(sigma.points.size(), 1);
  return rep;
}

double default_exact_quantum(const std::vector<TaskInstance>& tasks) {
  double shortest = tasks.front().latency_s;
  for (const auto& t : tasks) shortest = std::min(shortest, t.latency_s);
  return shortest / 64.0;
}

}  // namespace

double evaluate(const JointDesignPoint& sigma, const SlowDownVector& sl, const Objective& obj,
                double b_mem, const std::vector<int>& rep, SolverKind solver,
                double exact_quantum_s) {
  std::vector<int> reps = effective_reps(sigma, rep);
  try {
    std::vector<TaskInstance> tasks = apply_slowdowns(build_tasks(sigma, reps), sl);
    CyclicSchedule sched =
        solver == SolverKind::Rcls
            ? rcls(tasks, b_mem, /*enforce_bandwidth=*/true)
            : exact_schedule(tasks, b_mem,
                             exact_quantum_s > 0 ? exact_quantum_s : default_exact_quantum(tasks));
    std::vector<double> fps;
    for (std::size_t i = 0; i < sigma.points.size(); ++i)
      fps.push_back(double(reps[i]) / sched.cycle_time_s);
    return objective_value(obj, fps);
  } catch (const ScheduleError&) {
    return kUnattainable;
  }
}

std::pair<SlowDownVector, double> pattern_search(const JointDesignPoint& sigma,
                                                 const SlowDownVector& start, const Objective& obj,
                                                 double b_mem, const std::vector<int>& rep,
                                                 const PatternSearchParams& params,
                                                 SolverKind solver, double exact_quantum_s) {
  auto clamp = [](double v) { return std::min(1.0, std::max(kSlowDownFloor * (1.0 + 1e-6), v)); };
  auto score = [&](const SlowDownVector& sl) {
    return evaluate(sigma, sl, obj, b_mem, rep, solver, exact_quantum_s);
  };

  SlowDownVector current = start;
  for (double& v : current.sl) v = clamp(v);
  double best = score(current);
  double step = params.initial_step;
  int n = static_cast<int>(current.sl.size());

  // Moves are multiplicative: a slow-down is a rate factor, so the useful
  // neighbourhood of a small value is proportionally small.
  auto moved = [&](const SlowDownVector& from, int i, double log_delta) {
    SlowDownVector cand = from;
    cand.sl[i] = clamp(cand.sl[i] * std::exp(log_delta));
    return cand;
  };

  for (int iter = 0; iter < params.max_iterations && step >= params.step_tolerance; ++iter) {
    // Explore: one coordinate at a time, first improvement wins.
    bool improved = false;
    for (int i = 0; i < n && !improved; ++i) {
      for (double dir : {+1.0, -1.0}) {
        SlowDownVector cand = moved(current, i, dir * step);
        if (cand.sl[i] == current.sl[i]) continue;
        double v = score(cand);
        if (v < best) {
          current = cand;
          best = v;
          improved = true;
          break;
        }
      }
    }
    if (improved) continue;

    // Poll: longer moves before conceding the step size.
    for (int i = 0; i < n && !improved; ++i) {
      for (double dir : {+1.0, -1.0}) {
        SlowDownVector cand = moved(current, i, dir * params.poll_scale * step);
        if (cand.sl[i] == current.sl[i]) continue;
        double v = score(cand);
        if (v < best) {
          current = cand;
          best = v;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {current, best};
}

DseResult memory_aware_dse(const std::vector<JointDesignPoint>& joints, const Objective& obj,
                           double b_mem, const std::vector<int>& rep,
                           const PatternSearchParams& params, SolverKind solver,
                           double exact_quantum_s) {
  if (joints.empty()) throw InfeasibleError("memory_aware_dse: no joint design points");

  DseResult result;
  for (std::size_t idx = 0; idx < joints.size(); ++idx) {
    const JointDesignPoint& sigma = joints[idx];
    std::vector<int> reps = effective_reps(sigma, rep);
    std::vector<TaskInstance> base = build_tasks(sigma, reps);

    // Plan without the bandwidth constraint, observe the pressure, slow the
    // offenders down, then refine.
    CyclicSchedule init = rcls(base, b_mem, /*enforce_bandwidth=*/false);
    ViolationReport report = violations(init, base, b_mem);
    SlowDownVector sl0 = remove_violations(base, report);
    auto [sl, value] = pattern_search(sigma, sl0, obj, b_mem, reps, params, solver,
                                      exact_quantum_s);

    if (value < result.objective_value) {
      result.joint_index = static_cast<int>(idx);
      result.sigma = sigma;
      result.sl = sl;
      result.objective_value = value;
      result.rep = reps;
    }
  }

  if (!(result.objective_value < kUnattainable))
    throw InfeasibleError("memory_aware_dse: no joint point is schedulable");

  // Materialise the winning schedule.
  std::vector<TaskInstance> base = build_tasks(result.sigma, result.rep);
  result.tasks = apply_slowdowns(base, result.sl);
  result.schedule = result.tasks.empty()
                        ? CyclicSchedule{}
                        : (SolverKind::Rcls == solver
                               ? rcls(result.tasks, b_mem, true)
                               : exact_schedule(result.tasks, b_mem,
                                                exact_quantum_s > 0
                                                    ? exact_quantum_s
                                                    : default_exact_quantum(result.tasks)));
  for (std::size_t i = 0; i < result.sigma.points.size(); ++i)
    result.fps.push_back(double(result.rep[i]) / result.schedule.cycle_time_s);
  return result;
}

std::vector<int> derive_reps(const std::vector<NetworkSpec>& nets, bool from_targets) {
  std::vector<int> rep(nets.size(), 1);
  if (!from_targets) return rep;
  double lowest = 0.0;
  for (const auto& net : nets) {
    double t = net.fps_target.value_or(0.0);
    if (t > 0 && (lowest == 0.0 || t < lowest)) lowest = t;
  }
  if (lowest <= 0) return rep;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    double t = nets[i].fps_target.value_or(lowest);
    rep[i] = std::max(1, int(std::lround(t / lowest)));
  }
  return rep;
}

}  // namespace mcdse
