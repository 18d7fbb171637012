#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "impactset/classify.hpp"
#include "impactset/force_maps.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// One regime of a single-contact impact: sliding along a fixed tangential
/// direction, or sticking (tangential velocity pinned at zero).
struct ImpactPhase {
  enum class Kind { Slide, Stick };
  Kind kind = Kind::Slide;
  Eigen::Vector2d direction = Eigen::Vector2d::Zero();  // unit slip direction
  double s_begin = 0.0;
  double s_end = 0.0;
};

/// Result of resolving one contact's impact to termination (jn v = 0).
/// impulse is expressed in contact coordinates (normal, tangent 1, tangent 2)
/// so that v_plus = v0 + jn^T impulse[0] + jt^T impulse.tail(2).
struct SingleImpactResult {
  Vector v_plus;
  Eigen::Vector3d impulse = Eigen::Vector3d::Zero();
  std::vector<ImpactPhase> phases;
  double s_final = 0.0;
};

/// Conservative bound on the normal impulse a single-contact impact can
/// consume: resolution from v0 terminates by s <= bound * ||v0||.
struct TerminationBound {
  double epsilon = 0.0;  // min over unit range vectors of |jn w| + ||jt w||
  double bound = 0.0;    // 1 / (epsilon * min(mu, 1)), mu term dropped if 0
};

namespace detail {

/// Minimizes f over the unit sphere in r <= 3 dimensions by dense sampling
/// followed by golden-section refinement along tangent great circles.
template <typename F>
double sphere_minimum(const F& f, int r, int samples) {
  constexpr double kPi = 3.14159265358979323846;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;

  if (r == 1) return f(Vector::Constant(1, 1.0));

  const auto refine_circle = [&](auto point_at, double lo, double hi) {
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = f(point_at(x1));
    double f2 = f(point_at(x2));
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - golden * (hi - lo);
        f1 = f(point_at(x1));
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + golden * (hi - lo);
        f2 = f(point_at(x2));
      }
    }
    return point_at(0.5 * (lo + hi));
  };

  if (r == 2) {
    // f(-u) = f(u), so half the circle suffices.
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double t = kPi * i / samples;
      const double fi = f(Vector(Eigen::Vector2d(std::cos(t), std::sin(t))));
      if (fi < best) {
        best = fi;
        best_t = t;
      }
    }
    const double h = kPi / samples;
    const auto at = [](double t) {
      return Vector(Eigen::Vector2d(std::cos(t), std::sin(t)));
    };
    return f(refine_circle(at, best_t - h, best_t + h));
  }

  // r == 3: Fibonacci hemisphere, then alternating great-circle refinement.
  Vector best_u(3);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double z = (i + 0.5) / samples;  // hemisphere; f is even
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double t = 2.0 * kPi * golden * i;
    Vector u(3);
    u << rad * std::cos(t), rad * std::sin(t), z;
    const double fi = f(u);
    if (fi < best) {
      best = fi;
      best_u = u;
    }
  }
  double width = 2.0 * kPi / std::sqrt(static_cast<double>(samples));
  for (int round = 0; round < 24; ++round) {
    // Orthonormal tangent frame at the current best point.
    Vector any = std::abs(best_u[0]) < 0.9 ? Vector(Eigen::Vector3d::UnitX())
                                           : Vector(Eigen::Vector3d::UnitY());
    Vector t1 = any - best_u * best_u.dot(any);
    t1.normalize();
    Vector t2(3);
    t2 << best_u[1] * t1[2] - best_u[2] * t1[1],
        best_u[2] * t1[0] - best_u[0] * t1[2],
        best_u[0] * t1[1] - best_u[1] * t1[0];
    const Vector axis = (round % 2 == 0) ? t1 : t2;
    const Vector center = best_u;
    const auto at = [&](double a) {
      return Vector((std::cos(a) * center + std::sin(a) * axis).normalized());
    };
    best_u = refine_circle(at, -width, width);
    best = std::min(best, f(best_u));
    width *= 0.7;
  }
  return best;
}

}  // namespace detail

/// A priori termination bound for one contact (normalized coordinates).
/// epsilon is the minimum of |jn w| + ||jt w|| over unit vectors w in the
/// row space of the contact Jacobian, found by sampling at least `samples`
/// sphere points plus golden-section refinement.
inline TerminationBound termination_bound_single(const Contact& c,
                                                 int samples = 10000) {
  const Matrix j = c.jacobian();
  Eigen::BDCSVD<Matrix> svd(j.transpose(), Eigen::ComputeThinU);
  const double sigma_max = svd.singularValues()(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-12 * sigma_max) ++rank;
  const Matrix basis = svd.matrixU().leftCols(rank);

  const auto objective = [&](const Vector& u) {
    const Vector w = basis * u;
    double val = std::abs(c.jn.dot(w));
    if (c.jt) val += (*c.jt * w).norm();
    return val;
  };

  TerminationBound out;
  out.epsilon = detail::sphere_minimum(objective, rank, samples);
  if (out.epsilon <= 0.0)
    throw InternalError("termination bound: degenerate contact Jacobian");
  const double rate = c.jt ? std::min(c.mu, 1.0) : 1.0;
  out.bound = 1.0 / (out.epsilon * rate);
  return out;
}

/// Advances one sliding phase of the planar closed form. Returns true when
/// the impact terminated inside the phase, false when the phase ended at the
/// stick manifold. Tangential rates within manifold_eps of zero do not count
/// as a stick crossing; a departure from the manifold would otherwise
/// re-trigger on its own rounding residual.
template <typename Advance>
bool slide_phase(const Contact& c, const Vector& f, double sigma,
                 double manifold_eps, SingleImpactResult& res, double& s,
                 const Advance& advance) {
  const Eigen::RowVectorXd jt1 = c.jt->row(0);
  const double a = c.jn.dot(res.v_plus);
  const double b = jt1.dot(res.v_plus);
  const double a_rate = c.jn.dot(f);
  const double b_rate = jt1.dot(f);

  double s_term = std::numeric_limits<double>::infinity();
  if (a_rate > 0.0) s_term = -a / a_rate;
  double s_stick = std::numeric_limits<double>::infinity();
  if (std::abs(b) > manifold_eps && b_rate != 0.0 &&
      (b > 0.0) != (b_rate > 0.0))
    s_stick = -b / b_rate;
  if (!std::isfinite(s_term) && !std::isfinite(s_stick))
    throw InternalError("sliding phase admits no terminating event");

  const double ds = std::min(s_term, s_stick);
  res.phases.push_back({ImpactPhase::Kind::Slide,
                        Eigen::Vector2d(sigma, 0.0), s, s + ds});
  advance(f, ds, -c.mu * sigma);
  return s_term <= s_stick;
}

/// Exact single-contact impact resolution for planar contacts (at most one
/// effective tangent row). The velocity path is piecewise linear; each phase
/// advances until either the normal rate reaches zero (termination) or the
/// tangential rate reaches zero (stick or slip-reversal decision).
inline SingleImpactResult resolve_single_planar(const Contact& c,
                                                const Vector& v0,
                                                double tol = kDefaultTol) {
  if (!c.planar())
    throw DimensionError("resolve_single_planar: contact '" + c.id +
                         "' has two effective tangent rows");
  if (c.jn.dot(v0) >= -tol)
    throw NotPenetratingError("contact '" + c.id +
                              "' is not approaching (jn v >= -tol)");

  SingleImpactResult res;
  res.v_plus = v0;
  double s = 0.0;

  const Vector jn_t = c.jn.transpose();
  const bool frictional = c.jt.has_value();
  const Eigen::RowVectorXd jt1 =
      frictional ? Eigen::RowVectorXd(c.jt->row(0)) : Eigen::RowVectorXd();
  const Vector jt1_t = frictional ? Vector(jt1.transpose()) : Vector();
  const double jt1_sq = frictional ? jt1.squaredNorm() : 0.0;

  // Tangential rates below this are treated as on the stick manifold. This
  // is a numerical snap for phase bookkeeping, not a model tolerance.
  const double manifold_eps =
      1e-13 * std::max(1.0, v0.norm()) * std::max(1.0, std::sqrt(jt1_sq));

  const auto advance = [&](const Vector& f, double ds, double lambda_t) {
    res.v_plus += ds * f;
    res.impulse[0] += ds;
    res.impulse[1] += ds * lambda_t;
    s += ds;
  };

  constexpr int kPhaseCap = 4;
  for (int phase = 0; phase < kPhaseCap; ++phase) {
    const double a = c.jn.dot(res.v_plus);
    if (a >= -tol && phase > 0) {  // terminated by a previous event
      res.s_final = s;
      return res;
    }

    if (!frictional || jt1_sq == 0.0) {
      const double rate = c.jn.squaredNorm();
      const double ds = -a / rate;
      res.phases.push_back({ImpactPhase::Kind::Stick,
                            Eigen::Vector2d::Zero(), s, s + ds});
      advance(jn_t, ds, 0.0);
      res.s_final = s;
      return res;
    }

    const double b = jt1.dot(res.v_plus);

    if (std::abs(b) <= manifold_eps) {
      // On the stick manifold: hold if the required tangential force fits in
      // the friction disc, otherwise slip in the consistent direction.
      const double lambda_hold = -jt1.dot(jn_t) / jt1_sq;
      if (std::abs(lambda_hold) <= c.mu) {
        const Vector f = jn_t + lambda_hold * jt1_t;
        const double rate = c.jn.dot(f);
        if (rate <= 0.0)
          throw InternalError("stick phase cannot terminate (jn degenerate)");
        const double ds = -a / rate;
        res.phases.push_back({ImpactPhase::Kind::Stick,
                              Eigen::Vector2d::Zero(), s, s + ds});
        advance(f, ds, lambda_hold);
        res.s_final = s;
        return res;
      }
      const double sigma = lambda_hold > 0.0 ? -1.0 : 1.0;
      const Vector f = jn_t - c.mu * sigma * jt1_t;
      if ((jt1.dot(f) > 0.0 ? 1.0 : -1.0) != sigma)
        throw InternalError("inconsistent slip direction at stick manifold");
      if (!slide_phase(c, f, sigma, manifold_eps, res, s, advance)) continue;
      res.s_final = s;
      return res;
    }

    const double sigma = b > 0.0 ? 1.0 : -1.0;
    const Vector f = jn_t - c.mu * sigma * jt1_t;
    if (!slide_phase(c, f, sigma, manifold_eps, res, s, advance)) continue;
    res.s_final = s;
    return res;
  }
  throw InternalError("single-contact impact exceeded the phase cap");
}

/// Forward-Euler single-contact resolution for general (possibly spatial)
/// contacts: v <- v + h f with f selected from the contact force set, the
/// final step interpolated so |jn v| <= tol at exit. Throws NonTermination
/// if s exceeds ten times the termination bound.
inline SingleImpactResult resolve_single(const Contact& c, const Vector& v0,
                                         double step,
                                         double tol = kDefaultTol) {
  if (step <= 0.0) throw DimensionError("resolve_single: step must be positive");
  if (c.jn.dot(v0) >= -tol)
    throw NotPenetratingError("contact '" + c.id +
                              "' is not approaching (jn v >= -tol)");

  const double s_limit = 10.0 * termination_bound_single(c).bound * v0.norm();
  const Vector jn_t = c.jn.transpose();

  SingleImpactResult res;
  res.v_plus = v0;
  double s = 0.0;

  // Tangential rates within one step of zero are candidates for sticking.
  double stick_window = 0.0;
  Matrix jtT;
  if (c.jt) {
    jtT = c.jt->transpose();
    stick_window =
        step * ((*c.jt * jn_t).norm() + c.mu * (*c.jt * jtT).norm());
  }

  const auto selection = [&](const Vector& v, Eigen::Vector2d& ft) {
    ft.setZero();
    if (!c.jt) return jn_t;
    const Eigen::Vector2d wt = *c.jt * v;
    if (wt.norm() > stick_window) {
      ft = -c.mu * wt.normalized();
    } else {
      // Hold if feasible: least-squares tangential force zeroing jt vdot,
      // clamped to the friction disc.
      const Eigen::Matrix2d g = *c.jt * jtT;
      ft = Eigen::CompleteOrthogonalDecomposition<Matrix>(g).solve(
          Vector(-(*c.jt * jn_t)));
      if (ft.norm() > c.mu) ft *= c.mu / ft.norm();
    }
    return Vector(jn_t + jtT * ft);
  };

  const auto phase_kind = [&](const Eigen::Vector2d& ft) {
    const bool slide = c.jt && ft.norm() >= c.mu * (1.0 - 1e-12) &&
                       (*c.jt * res.v_plus).norm() > stick_window;
    return slide ? ImpactPhase::Kind::Slide : ImpactPhase::Kind::Stick;
  };

  Eigen::Vector2d ft;
  while (true) {
    const double a = c.jn.dot(res.v_plus);
    const Vector f = selection(res.v_plus, ft);

    const ImpactPhase::Kind kind = phase_kind(ft);
    const Eigen::Vector2d dir =
        kind == ImpactPhase::Kind::Slide && ft.norm() > 0.0
            ? Eigen::Vector2d(-ft / ft.norm())
            : Eigen::Vector2d::Zero();
    if (res.phases.empty() || res.phases.back().kind != kind ||
        (kind == ImpactPhase::Kind::Slide &&
         res.phases.back().direction.dot(dir) < 0.0)) {
      res.phases.push_back({kind, dir, s, s});
    }

    double ds = step;
    const double a_next = a + step * c.jn.dot(f);
    bool done = false;
    if (a_next >= -tol) {
      // Normal rate crosses zero inside this step: land on the crossing.
      const double rate = c.jn.dot(f);
      if (rate > 0.0) {
        ds = std::min(step, -a / rate);
        done = true;
      }
    }
    res.v_plus += ds * f;
    res.impulse[0] += ds;
    res.impulse.tail<2>() += ds * ft;
    s += ds;
    res.phases.back().s_end = s;
    if (done || c.jn.dot(res.v_plus) >= -tol) break;
    if (s > s_limit)
      throw NonTerminationError("single-contact resolution exceeded 10x the "
                                "termination bound");
  }
  res.s_final = s;
  return res;
}

/// One leg of an iterated sequence of single-contact resolutions.
struct SequenceSegment {
  std::size_t contact = 0;
  double s_begin = 0.0;
  double s_end = 0.0;
  SingleImpactResult result;
};

struct SequenceResult {
  Vector v_plus;
  double s_final = 0.0;
  std::vector<SequenceSegment> segments;
};

/// Resolves impacts one contact at a time: the first approaching contact in
/// `ordering` is resolved to termination (ignoring all others), repeatedly,
/// until no contact approaches. Planar contacts use the closed form; spatial
/// contacts fall back on the Euler resolver with `step`.
inline SequenceResult resolve_sequence(const NormalizedProblem& problem,
                                       const Vector& v0,
                                       const std::vector<std::string>& ordering,
                                       double step = 1e-4,
                                       double tol = kDefaultTol,
                                       int max_rounds = 10000) {
  std::vector<std::size_t> order;
  order.reserve(ordering.size());
  for (const std::string& id : ordering)
    order.push_back(static_cast<std::size_t>(problem.contact_index(id)));
  if (order.size() != problem.contacts.size())
    throw DimensionError("resolve_sequence: ordering must list every contact");

  SequenceResult out;
  out.v_plus = v0;
  for (int round = 0; round < max_rounds; ++round) {
    std::size_t next = problem.contacts.size();
    for (std::size_t idx : order)
      if (problem.contacts[idx].jn.dot(out.v_plus) < -tol) {
        next = idx;
        break;
      }
    if (next == problem.contacts.size()) return out;  // nothing approaching

    const Contact& c = problem.contacts[next];
    SingleImpactResult one =
        c.planar() ? resolve_single_planar(c, out.v_plus, tol)
                   : resolve_single(c, out.v_plus, step, tol);
    out.segments.push_back(
        {next, out.s_final, out.s_final + one.s_final, one});
    out.v_plus = one.v_plus;
    out.s_final += one.s_final;
  }
  throw NonTerminationError(
      "resolve_sequence did not settle within the round cap");
}

}  // namespace impactset
