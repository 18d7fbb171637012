#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "impactset/errors.hpp"

namespace impactset {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Two tangent rows per frictional contact; planar contacts zero the second
/// row so planar and spatial scenes share one code path.
using TangentJacobian = Eigen::Matrix<double, 2, Eigen::Dynamic>;

/// Classification threshold used everywhere a velocity is compared against a
/// contact surface. This is the only tolerance that enters the model maps.
inline constexpr double kDefaultTol = 1e-9;

/// One contact point: a normal Jacobian row, optional tangent rows, and a
/// friction coefficient. mu == 0 exactly when jt is absent.
struct Contact {
  std::string id;
  Eigen::RowVectorXd jn;
  std::optional<TangentJacobian> jt;
  double mu = 0.0;

  bool frictional() const { return jt.has_value(); }

  /// Planar means at most one effective tangent row.
  bool planar() const { return !jt || jt->row(1).isZero(0.0); }

  /// Full Jacobian (normal row stacked over tangent rows if present).
  Matrix jacobian() const {
    Matrix j(frictional() ? 3 : 1, jn.cols());
    j.row(0) = jn;
    if (jt) j.bottomRows(2) = *jt;
    return j;
  }

  void validate(Eigen::Index dim) const {
    if (jn.cols() != dim)
      throw DimensionError("contact '" + id + "': jn has " +
                           std::to_string(jn.cols()) + " columns, expected " +
                           std::to_string(dim));
    if (jn.isZero(0.0))
      throw DimensionError("contact '" + id + "': jn must be nonzero");
    if (jt && jt->cols() != dim)
      throw DimensionError("contact '" + id + "': jt has " +
                           std::to_string(jt->cols()) + " columns, expected " +
                           std::to_string(dim));
    if (mu < 0.0)
      throw DimensionError("contact '" + id + "': mu must be nonnegative");
    if (jt && mu <= 0.0)
      throw DimensionError("contact '" + id +
                           "': mu must be positive when jt is present");
    if (!jt && mu != 0.0)
      throw DimensionError("contact '" + id +
                           "': mu must be zero when jt is absent");
  }
};

/// An impact problem in generalized coordinates: an SPD mass matrix and a set
/// of contacts. Configuration is frozen; only velocities evolve.
struct ContactProblem {
  Eigen::Index dim = 0;
  Matrix mass;
  std::vector<Contact> contacts;

  void validate() const {
    if (dim <= 0) throw DimensionError("problem dimension must be positive");
    if (mass.rows() != dim || mass.cols() != dim)
      throw DimensionError("mass matrix must be " + std::to_string(dim) + "x" +
                           std::to_string(dim));
    const double scale = mass.cwiseAbs().maxCoeff();
    if (!mass.isApprox(mass.transpose(), 1e-12))
      throw NotSpdError("mass matrix is not symmetric (relative 1e-12), scale " +
                        std::to_string(scale));
    for (const Contact& c : contacts) c.validate(dim);
  }
};

/// The same contact set after the mass-normalizing change of variables
/// w = L^T v with M = L L^T. In these coordinates the mass matrix is the
/// identity and kinetic energy is ||w||^2 / 2.
struct NormalizedProblem {
  Eigen::Index dim = 0;
  std::vector<Contact> contacts;
  Matrix chol;  // lower-triangular L with M = L L^T

  Vector to_normalized(const Vector& v) const { return chol.transpose() * v; }

  Vector from_normalized(const Vector& w) const {
    return chol.transpose().triangularView<Eigen::Upper>().solve(w);
  }

  Eigen::Index contact_index(const std::string& id) const {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(contacts.size()); ++i)
      if (contacts[static_cast<std::size_t>(i)].id == id) return i;
    throw DimensionError("unknown contact id '" + id + "'");
  }
};

/// Kinetic energy in normalized coordinates.
inline double kinetic_energy(const Vector& w) { return 0.5 * w.squaredNorm(); }

}  // namespace impactset
