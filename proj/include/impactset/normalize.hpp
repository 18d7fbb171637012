#pragma once

#include <Eigen/Cholesky>

#include "impactset/types.hpp"

namespace impactset {

/// Change of variables w = L^T v with M = L L^T (Cholesky factor, not the
/// symmetric square root). Contact Jacobians map as J~ = J L^-T so that
/// J~ w = J v and the normalized mass matrix is the identity.
inline NormalizedProblem normalize(const ContactProblem& problem) {
  problem.validate();

  Eigen::LLT<Matrix> llt(problem.mass);
  if (llt.info() != Eigen::Success)
    throw NotSpdError("mass matrix is not positive definite");
  const Matrix L = llt.matrixL();

  // J~ = J L^-T, computed as a triangular solve on the right:
  // J~ L^T = J  =>  L J~^T = J^T.
  const auto map_rows = [&](const Matrix& rows) -> Matrix {
    Matrix jt = L.triangularView<Eigen::Lower>().solve(rows.transpose());
    return jt.transpose();
  };

  NormalizedProblem out;
  out.dim = problem.dim;
  out.chol = L;
  out.contacts.reserve(problem.contacts.size());
  for (const Contact& c : problem.contacts) {
    Contact n = c;
    n.jn = map_rows(c.jn);
    if (c.jt) n.jt = TangentJacobian(map_rows(Matrix(*c.jt)));
    out.contacts.push_back(std::move(n));
  }
  return out;
}

}  // namespace impactset
