#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "impactset/force_set.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// Result of a minimum-norm-point computation over a convex force set.
/// witness is a convex combination of the corral points and lies in the
/// set by construction; distance == ||witness||. gap is the final duality
/// gap ||x||^2 - <x, s(x)> with s the support minimizer, nonpositive at
/// an exact optimum and below the requested tolerance on convergence.
struct MinNormResult {
  double distance = 0.0;
  Vector witness;
  std::vector<Vector> corral;
  std::vector<double> coefficients;
  std::vector<int> source_contacts;
  int iterations = 0;
  double gap = 0.0;
};

namespace detail {

/// Minimum-norm point of the affine hull of the columns of p: minimize
/// ||p a|| subject to sum(a) = 1, signs free. Solved through the bordered
/// KKT system; rank deficiency is harmless (any minimizer serves).
inline Vector affine_min_norm(const Matrix& p) {
  const Eigen::Index k = p.cols();
  Matrix kkt(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = p.transpose() * p;
  kkt.topRightCorner(k, 1).setOnes();
  kkt.bottomLeftCorner(1, k).setOnes();
  kkt(k, k) = 0.0;
  Vector rhs = Vector::Zero(k + 1);
  rhs[k] = 1.0;
  Vector sol = Eigen::CompleteOrthogonalDecomposition<Matrix>(kkt).solve(rhs);
  return sol.head(k);
}

}  // namespace detail

/// Minimum-norm point of a convex force set, queried only through the
/// descriptor's support function (Wolfe's corral iteration). Runs until the
/// duality gap drops below gap_tol or max_iterations support queries have
/// been spent; the returned gap tells which.
inline MinNormResult min_norm_point(const ForceSetDescriptor& set,
                                    double gap_tol = 1e-8,
                                    int max_iterations = 10000) {
  if (set.empty())
    throw InternalError("min_norm_point queried on an empty force set");

  MinNormResult res;

  // Corral: points whose convex hull carries the current iterate.
  std::vector<Vector> pts;
  std::vector<int> sources;
  std::vector<double> lambda;

  int first_source = -1;
  Vector x = set.support_point(Vector::Zero(set.dim), &first_source);
  pts.push_back(x);
  sources.push_back(first_source < 0
                        ? -1
                        : set.source_contact[static_cast<std::size_t>(
                              first_source)]);
  lambda.push_back(1.0);

  // Scale-aware drop threshold for corral weights.
  const double weight_floor = 1e-12;

  while (res.iterations < max_iterations) {
    ++res.iterations;

    int which = -1;
    const Vector s = set.support_point(-x, &which);
    res.gap = x.squaredNorm() - x.dot(s);
    if (res.gap <= gap_tol) break;

    // Skip points already in the corral (numerical ties).
    bool duplicate = false;
    for (const Vector& q : pts)
      if ((q - s).norm() <= 1e-14 * std::max(1.0, s.norm())) {
        duplicate = true;
        break;
      }
    if (duplicate) break;

    pts.push_back(s);
    sources.push_back(
        which < 0 ? -1
                  : set.source_contact[static_cast<std::size_t>(which)]);
    lambda.push_back(0.0);

    // Minor cycle: pull the iterate to the affine minimizer, walking back
    // to the simplex boundary and shedding points until the minimizer is
    // a convex combination.
    while (true) {
      Matrix p(set.dim, static_cast<Eigen::Index>(pts.size()));
      for (std::size_t i = 0; i < pts.size(); ++i)
        p.col(static_cast<Eigen::Index>(i)) = pts[i];
      const Vector alpha = detail::affine_min_norm(p);

      if (alpha.minCoeff() >= -weight_floor) {
        for (std::size_t i = 0; i < pts.size(); ++i)
          lambda[i] = std::max(0.0, alpha[static_cast<Eigen::Index>(i)]);
        break;
      }

      double theta = 1.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double a = alpha[static_cast<Eigen::Index>(i)];
        if (a < lambda[i])
          theta = std::min(theta, lambda[i] / (lambda[i] - a));
      }
      for (std::size_t i = 0; i < pts.size(); ++i)
        lambda[i] = (1.0 - theta) * lambda[i] +
                    theta * alpha[static_cast<Eigen::Index>(i)];

      for (std::size_t i = pts.size(); i-- > 0;) {
        if (lambda[i] <= weight_floor) {
          pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
          sources.erase(sources.begin() + static_cast<std::ptrdiff_t>(i));
          lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(i));
        }
      }
    }

    double total = 0.0;
    for (double w : lambda) total += w;
    x.setZero();
    for (std::size_t i = 0; i < pts.size(); ++i) x += (lambda[i] / total) * pts[i];
  }

  res.distance = x.norm();
  res.witness = std::move(x);
  res.corral = std::move(pts);
  res.coefficients = std::move(lambda);
  res.source_contacts = std::move(sources);
  return res;
}

}  // namespace impactset
