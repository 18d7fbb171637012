#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "impactset/classify.hpp"
#include "impactset/routh.hpp"
#include "impactset/strategy.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// One integrator sample. `force` is the velocity rate applied over the
/// following interval of length `ds`, so v_{i+1} = v_i + ds_i * force_i; the
/// terminal sample has ds = 0. `lambda` are the normal-rate weights
/// (nonnegative, summing to 1 while penetrating) and `friction` the
/// per-contact tangential multipliers u_c with |u_c| <= mu_c.
struct TrajectorySample {
  double s = 0.0;
  Vector v;
  Vector lambda;
  std::vector<Eigen::Vector2d> friction;
  Vector force;
  double ds = 0.0;
  bool penetrating = false;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  bool terminated = false;
  double s_final = 0.0;
  Vector v_plus;
  std::string diagnostic;
};

/// Heuristic integration horizon: ten times the largest single-contact
/// termination bound, scaled by the speed. Every non-degenerate impact
/// observed in testing resolves well before this.
inline double safeguard_horizon(const NormalizedProblem& problem,
                                const Vector& v0) {
  double worst = 0.0;
  for (const Contact& c : problem.contacts)
    worst = std::max(worst, termination_bound_single(c).bound);
  return 10.0 * worst * v0.norm();
}

namespace detail {

/// Shared Euler loop. `choose` fills lambda/friction/force for the current
/// state; `cap_step` enables the dissipation-safe step limit
/// ds <= -(v.f)/|f|^2, which makes |v| strictly decrease every step (the
/// quadratic Euler term can never outweigh the linear one).
template <typename Choose>
Trajectory euler_loop(const NormalizedProblem& problem, const Vector& v0,
                      double step, double s_max, double tol, bool cap_step,
                      const Choose& choose) {
  if (step <= 0.0) throw SchemaError("step", "must be positive");
  if (s_max < 0.0) throw SchemaError("s_max", "must be nonnegative");

  Trajectory traj;
  Vector v = v0;
  double s = 0.0;
  const std::size_t m = problem.contacts.size();
  const long step_budget =
      64 * static_cast<long>(s_max / step + 1.0) + 4096;
  long steps = 0;

  const auto record_terminal = [&](bool penetrating) {
    TrajectorySample sample;
    sample.s = s;
    sample.v = v;
    sample.lambda = Vector::Zero(static_cast<Eigen::Index>(m));
    sample.friction.assign(m, Eigen::Vector2d::Zero());
    sample.force = Vector::Zero(problem.dim);
    sample.ds = 0.0;
    sample.penetrating = penetrating;
    traj.samples.push_back(std::move(sample));
    traj.s_final = s;
    traj.v_plus = v;
  };

  while (true) {
    const Classification cls = classify(problem, v, tol);
    if (!cls.penetrating()) {
      record_terminal(false);
      traj.terminated = true;
      return traj;
    }
    if (s >= s_max) {
      record_terminal(true);
      traj.terminated = false;
      traj.diagnostic = "horizon reached while still penetrating";
      return traj;
    }
    if (++steps > step_budget) {
      record_terminal(true);
      traj.terminated = false;
      traj.diagnostic = "step budget exhausted";
      return traj;
    }

    TrajectorySample sample;
    sample.s = s;
    sample.v = v;
    sample.penetrating = true;
    choose(s, v, sample.lambda, sample.friction, sample.force);
    const Vector& f = sample.force;

    double ds = std::min(step, s_max - s);
    if (cap_step) {
      const double vf = v.dot(f);
      const double f2 = f.squaredNorm();
      if (vf < 0.0 && f2 > 0.0) ds = std::min(ds, -vf / f2);
    }
    // Land exactly on normal-rate crossings (linear interpolation is exact
    // within a step because the force is frozen).
    for (std::size_t c = 0; c < m; ++c) {
      const double a = problem.contacts[c].jn.dot(v);
      const double rate = problem.contacts[c].jn.dot(f);
      if ((a < -tol && rate > 0.0) || (a > tol && rate < 0.0)) {
        const double t = -a / rate;
        if (t < ds) ds = t;
      }
    }
    sample.ds = ds;
    traj.samples.push_back(sample);
    v += ds * f;
    s += ds;
  }
}

}  // namespace detail

/// Forward-Euler integration of the multi-contact impact under a built-in
/// selection strategy. Terminates when no contact approaches; returns
/// terminated=false (with a diagnostic) if s_max arrives first.
inline Trajectory integrate(const NormalizedProblem& problem, const Vector& v0,
                            const SelectionStrategy& strategy, double step,
                            double s_max, double tol = kDefaultTol) {
  strategy.validate(problem);
  StrategyState state = StrategyState::make(strategy);
  return detail::euler_loop(
      problem, v0, step, s_max, tol, /*cap_step=*/true,
      [&](double, const Vector& v, Vector& lambda,
          std::vector<Eigen::Vector2d>& friction, Vector& force) {
        Selection sel = select(problem, v, strategy, state, tol);
        lambda = std::move(sel.normal_weights);
        friction = std::move(sel.friction);
        force = std::move(sel.vdot);
      });
}

/// Expert-mode integration with caller-supplied weights. The selector sees
/// every contact in the closure of the approaching set (jn v <= tol) and may
/// distribute weight across all of them; weights are normalized to sum 1.
/// No dissipation-safe step cap is applied, so deliberately slow or
/// stationary selections integrate at the requested step.
inline Trajectory integrate(const NormalizedProblem& problem, const Vector& v0,
                            const WeightSelector& weights, StickingRule rule,
                            double step, double s_max,
                            double tol = kDefaultTol,
                            std::uint64_t sticking_seed = 0) {
  std::mt19937_64 stick_rng(sticking_seed);
  const Eigen::Index m = static_cast<Eigen::Index>(problem.contacts.size());
  return detail::euler_loop(
      problem, v0, step, s_max, tol, /*cap_step=*/false,
      [&](double s, const Vector& v, Vector& lambda,
          std::vector<Eigen::Vector2d>& friction, Vector& force) {
        std::vector<std::size_t> eligible;
        for (std::size_t c = 0; c < problem.contacts.size(); ++c)
          if (problem.contacts[c].jn.dot(v) <= tol) eligible.push_back(c);
        Vector w = weights(s, v, eligible);
        if (w.size() != m)
          throw SchemaError("weights", "selector returned wrong length");
        double total = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          if (w[i] < 0.0) {
            if (w[i] < -1e-12)
              throw SchemaError("weights", "selector returned negative weight");
            w[i] = 0.0;
          }
          if (w[i] > 0.0 &&
              problem.contacts[static_cast<std::size_t>(i)].jn.dot(v) > tol)
            throw SchemaError("weights",
                              "selector weighted a separating contact");
          total += w[i];
        }
        if (total <= 0.0)
          throw SchemaError("weights", "selector returned all-zero weights");
        lambda = w / total;
        force = detail::combine(problem, v, lambda, rule, stick_rng, friction);
      });
}

/// Euler integration of the descent field vdot in -U(v): unit rate straight
/// at the origin, stopping there (|v| within one step of 0 snaps to 0, the
/// only selection under which v stays a solution). Returns (t, v) samples
/// at every step up to t_end.
inline std::vector<std::pair<double, Vector>> integrate_unit_descent(
    const Vector& v0, double step, double t_end) {
  if (step <= 0.0) throw SchemaError("step", "must be positive");
  std::vector<std::pair<double, Vector>> samples;
  Vector v = v0;
  double t = 0.0;
  samples.emplace_back(t, v);
  while (t < t_end) {
    const double ds = std::min(step, t_end - t);
    const double speed = v.norm();
    if (speed <= step) {
      v = Vector::Zero(v.size());
    } else {
      v -= (ds / speed) * v;
    }
    t += ds;
    samples.emplace_back(t, v);
  }
  return samples;
}

}  // namespace impactset
