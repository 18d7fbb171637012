#pragma once

#include "impactset/classify.hpp"
#include "impactset/force_set.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// Set-valued unit map: {w / ||w||} away from the origin, the closed unit
/// ball at the origin. The branch condition is exact; tolerances belong to
/// classification, not here.
inline ForceSetDescriptor unit_set(const Vector& w) {
  ForceSetDescriptor out;
  out.dim = w.size();
  const double n = w.norm();
  if (n > 0.0) {
    out.push(PointGenerator{w / n});
  } else if (w.size() == 2) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> span =
        Eigen::Matrix2d::Identity();
    out.push(DiscGenerator{Vector::Zero(2), span, 1.0});
  } else {
    out.push(BallGenerator{Vector::Zero(w.size()), 1.0});
  }
  return out;
}

/// Force set of one contact at velocity v (normalized coordinates, unit
/// normal-impulse rate): jn^T - mu jt^T U(jt v). Frictionless contacts give
/// the singleton {jn^T}; sliding gives a singleton; sticking gives the disc
/// jn^T + mu jt^T * (unit disc).
inline ForceSetDescriptor force_single(const Contact& c, const Vector& v,
                                       int contact_index = 0) {
  ForceSetDescriptor out;
  out.dim = v.size();
  if (!c.jt) {
    out.push(PointGenerator{c.jn.transpose()}, contact_index);
    return out;
  }
  const Eigen::Vector2d wt = *c.jt * v;
  const double n = wt.norm();
  if (n > 0.0) {
    out.push(PointGenerator{c.jn.transpose() -
                            (c.mu / n) * (c.jt->transpose() * wt)},
             contact_index);
  } else {
    out.push(DiscGenerator{c.jn.transpose(), c.jt->transpose(), c.mu},
             contact_index);
  }
  return out;
}

/// Net force set over all contacts whose normal rate is within tol of
/// impacting (jn v <= tol): the convex hull of the per-contact sets under a
/// unit total normal-impulse rate. Empty when every contact is separating.
inline ForceSetDescriptor net_force_set(const NormalizedProblem& problem,
                                        const Vector& v,
                                        double tol = kDefaultTol) {
  ForceSetDescriptor out;
  out.dim = problem.dim;
  const Classification cls = classify(problem, v, tol);
  for (std::size_t i = 0; i < problem.contacts.size(); ++i) {
    if (!cls.eligible(i)) continue;
    ForceSetDescriptor one =
        force_single(problem.contacts[i], v, static_cast<int>(i));
    for (std::size_t g = 0; g < one.generators.size(); ++g)
      out.push(std::move(one.generators[g]), one.source_contact[g]);
  }
  return out;
}

/// Velocity derivative set of the impact inclusion: {0} when separated, the
/// net force set while penetrating, and the hull of both at the boundary.
inline ForceSetDescriptor derivative_set(const NormalizedProblem& problem,
                                         const Vector& v,
                                         double tol = kDefaultTol) {
  const Classification cls = classify(problem, v, tol);
  if (cls.global == GlobalStatus::Separated) {
    ForceSetDescriptor out;
    out.dim = problem.dim;
    out.push(PointGenerator{Vector::Zero(problem.dim)});
    return out;
  }
  ForceSetDescriptor out = net_force_set(problem, v, tol);
  out.includes_zero_hull = (cls.global == GlobalStatus::Boundary);
  return out;
}

}  // namespace impactset
