#pragma once

#include <cmath>
#include <random>
#include <variant>
#include <vector>

#include "impactset/types.hpp"

namespace impactset {

/// A single force vector.
struct PointGenerator {
  Vector point;
};

/// A two-dimensional disc embedded in R^n: center + radius * span * u with
/// ||u|| <= 1. Used for the sticking friction set (span = jt^T).
struct DiscGenerator {
  Vector center;
  Eigen::Matrix<double, Eigen::Dynamic, 2> span;
  double radius = 0.0;
};

/// A full n-dimensional closed ball, used by the set-valued unit map at the
/// origin when the ambient space has more than two dimensions.
struct BallGenerator {
  Vector center;
  double radius = 0.0;
};

using Generator = std::variant<PointGenerator, DiscGenerator, BallGenerator>;

/// Exact description of a convex force set as the hull of generators, each
/// tagged with the contact it came from (-1 when not contact-specific).
/// No polytope approximation is ever introduced: discs and balls stay exact
/// and are queried through the support function.
struct ForceSetDescriptor {
  std::vector<Generator> generators;
  std::vector<int> source_contact;  // parallel to generators
  bool includes_zero_hull = false;
  Eigen::Index dim = 0;

  bool empty() const { return generators.empty() && !includes_zero_hull; }

  void push(Generator g, int contact = -1) {
    generators.push_back(std::move(g));
    source_contact.push_back(contact);
  }

  /// max over the set of <x, d>.
  double support(const Vector& d) const {
    double best = includes_zero_hull ? 0.0 : -std::numeric_limits<double>::infinity();
    for (const Generator& g : generators)
      best = std::max(best, generator_support(g, d));
    return best;
  }

  /// argmax over the set of <x, d>. Ties resolve to the first maximizer;
  /// the index of the winning generator is written to *which if given
  /// (-1 when the zero vector from includes_zero_hull wins).
  Vector support_point(const Vector& d, int* which = nullptr) const {
    double best = -std::numeric_limits<double>::infinity();
    Vector arg = Vector::Zero(dim);
    int best_idx = -1;
    if (includes_zero_hull) best = 0.0;
    for (std::size_t i = 0; i < generators.size(); ++i) {
      const double s = generator_support(generators[i], d);
      if (s > best) {
        best = s;
        arg = generator_support_point(generators[i], d);
        best_idx = static_cast<int>(i);
      }
    }
    if (generators.empty() && !includes_zero_hull)
      throw InternalError("support_point queried on an empty force set");
    if (which) *which = best_idx;
    return arg;
  }

  /// Random element: a convex combination of random elements of each
  /// generator (plus the origin when includes_zero_hull).
  Vector sample(std::mt19937_64& rng) const {
    const std::size_t k = generators.size() + (includes_zero_hull ? 1 : 0);
    if (k == 0) throw InternalError("sample queried on an empty force set");
    // Uniform Dirichlet weights via normalized exponentials.
    std::exponential_distribution<double> exp_dist(1.0);
    std::vector<double> w(k);
    double total = 0.0;
    for (double& wi : w) total += (wi = exp_dist(rng));
    Vector x = Vector::Zero(dim);
    for (std::size_t i = 0; i < generators.size(); ++i)
      x += (w[i] / total) * generator_sample(generators[i], rng);
    return x;  // zero-hull term contributes nothing
  }

  static double generator_support(const Generator& g, const Vector& d) {
    if (const auto* p = std::get_if<PointGenerator>(&g)) return p->point.dot(d);
    if (const auto* disc = std::get_if<DiscGenerator>(&g))
      return disc->center.dot(d) + disc->radius * (disc->span.transpose() * d).norm();
    const auto& b = std::get<BallGenerator>(g);
    return b.center.dot(d) + b.radius * d.norm();
  }

  static Vector generator_support_point(const Generator& g, const Vector& d) {
    if (const auto* p = std::get_if<PointGenerator>(&g)) return p->point;
    if (const auto* disc = std::get_if<DiscGenerator>(&g)) {
      Eigen::Vector2d u = disc->span.transpose() * d;
      const double n = u.norm();
      if (n == 0.0) return disc->center;
      return disc->center + (disc->radius / n) * (disc->span * u);
    }
    const auto& b = std::get<BallGenerator>(g);
    const double n = d.norm();
    if (n == 0.0) return b.center;
    return b.center + (b.radius / n) * d;
  }

  static Vector generator_sample(const Generator& g, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (const auto* p = std::get_if<PointGenerator>(&g)) return p->point;
    if (const auto* disc = std::get_if<DiscGenerator>(&g)) {
      Eigen::Vector2d u(gauss(rng), gauss(rng));
      const double n = u.norm();
      if (n > 0.0) u *= std::sqrt(unif(rng)) / n;  // uniform over the unit disc
      return disc->center + disc->radius * (disc->span * u);
    }
    const auto& b = std::get<BallGenerator>(g);
    Vector u(b.center.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = gauss(rng);
    const double n = u.norm();
    if (n > 0.0)
      u *= std::pow(unif(rng), 1.0 / static_cast<double>(u.size())) / n;
    return b.center + b.radius * u;
  }
};

}  // namespace impactset
