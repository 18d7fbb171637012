#pragma once

#include <limits>
#include <random>

#include "impactset/normalize.hpp"
#include "impactset/types.hpp"

namespace testutil {

using impactset::Contact;
using impactset::ContactProblem;
using impactset::Matrix;
using impactset::Vector;

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

inline Vector random_unit(std::mt19937_64& rng, Eigen::Index n) {
  Vector v = random_vector(rng, n);
  while (v.norm() < 1e-8) v = random_vector(rng, n);
  return v / v.norm();
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  Matrix a(n, n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = gauss(rng);
  Matrix m = a.transpose() * a + 0.5 * Matrix::Identity(n, n);
  return 0.5 * (m + m.transpose());
}

/// Contact with a unit-ish normal row; when frictional, tangent rows are
/// orthogonalized against the normal so the contact frame is well posed.
/// Planar contacts zero the second tangent row.
inline Contact random_contact(std::mt19937_64& rng, Eigen::Index n,
                              std::string id, bool frictional, bool planar,
                              double mu_lo = 0.2, double mu_hi = 1.5) {
  std::uniform_real_distribution<double> mu_dist(mu_lo, mu_hi);
  std::uniform_real_distribution<double> scale_dist(0.6, 1.4);
  Contact c;
  c.id = std::move(id);
  c.jn = (scale_dist(rng) * random_unit(rng, n)).transpose();
  if (frictional) {
    impactset::TangentJacobian jt = impactset::TangentJacobian::Zero(2, n);
    Vector t1 = random_vector(rng, n);
    t1 -= c.jn.transpose() * c.jn.dot(t1) / c.jn.squaredNorm();
    while (t1.norm() < 1e-6) {
      t1 = random_vector(rng, n);
      t1 -= c.jn.transpose() * c.jn.dot(t1) / c.jn.squaredNorm();
    }
    jt.row(0) = (scale_dist(rng) * t1.normalized()).transpose();
    if (!planar && n >= 3) {
      Vector t2 = random_vector(rng, n);
      t2 -= c.jn.transpose() * c.jn.dot(t2) / c.jn.squaredNorm();
      t2 -= jt.row(0).transpose() * jt.row(0).dot(t2) / jt.row(0).squaredNorm();
      if (t2.norm() > 1e-6)
        jt.row(1) = (scale_dist(rng) * t2.normalized()).transpose();
    }
    c.jt = jt;
    c.mu = mu_dist(rng);
  }
  return c;
}

inline ContactProblem random_problem(std::mt19937_64& rng, Eigen::Index n,
                                     int m_contacts, bool planar) {
  std::bernoulli_distribution frictional(0.7);
  ContactProblem p;
  p.dim = n;
  p.mass = random_spd(rng, n);
  for (int i = 0; i < m_contacts; ++i)
    p.contacts.push_back(random_contact(rng, n, std::string(1, char('A' + i)),
                                        frictional(rng), planar));
  return p;
}

/// Smallest nonzero singular value over the stacked rows of every contact
/// subset, in mass-normalized coordinates. When this is tiny some velocity
/// direction feels almost no resistance from an otherwise-active subassembly,
/// and impacts creep far past the per-contact horizon heuristic.
inline double assembly_conditioning(const impactset::NormalizedProblem& p) {
  const std::size_t m = p.contacts.size();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    Eigen::Index rows = 0;
    for (std::size_t c = 0; c < m; ++c)
      if (mask & (std::size_t{1} << c))
        rows += 1 + (p.contacts[c].jt ? p.contacts[c].jt->rows() : 0);
    Matrix stack(rows, p.dim);
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < m; ++c) {
      if (!(mask & (std::size_t{1} << c))) continue;
      stack.row(r++) = p.contacts[c].jn;
      if (p.contacts[c].jt)
        for (Eigen::Index t = 0; t < p.contacts[c].jt->rows(); ++t)
          stack.row(r++) = p.contacts[c].jt->row(t);
    }
    const Vector sigma = Eigen::JacobiSVD<Matrix>(stack).singularValues();
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (sigma[i] > 1e-12 * sigma[0] && sigma[i] < worst) worst = sigma[i];
  }
  return worst;
}

/// Random problem rejected until every contact subassembly is decently
/// conditioned, keeping termination times within the horizon heuristic.
inline ContactProblem conditioned_random_problem(std::mt19937_64& rng,
                                                 Eigen::Index n, int m_contacts,
                                                 bool planar,
                                                 double floor = 0.15) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ContactProblem p = random_problem(rng, n, m_contacts, planar);
    ContactProblem copy = p;
    if (assembly_conditioning(impactset::normalize(copy)) >= floor) return p;
  }
  throw std::runtime_error("no well-conditioned problem found");
}

/// Unit-norm velocity with at least one approaching contact, by rejection.
inline Vector random_penetrating_velocity(
    std::mt19937_64& rng, const impactset::NormalizedProblem& p) {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vector v = random_unit(rng, p.dim);
    for (const Contact& c : p.contacts)
      if (c.jn.dot(v) < -1e-3) return v;
  }
  throw std::runtime_error("no penetrating velocity found");
}

}  // namespace testutil
