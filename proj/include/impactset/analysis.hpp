#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "impactset/classify.hpp"
#include "impactset/force_maps.hpp"
#include "impactset/integrate.hpp"
#include "impactset/min_norm.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// Energy audit of a trajectory. A step runs from one sample's velocity to
/// the next; the terminal sample (ds = 0) starts no step. max_increase is
/// the largest per-step growth of ||v|| (negative when every step
/// decreased); the penetrating variants restrict to steps that start
/// Penetrating.
///
/// Strictness is judged per maximal penetrating interval, not per step: a
/// single capped step can dissipate less than one ulp of the energy (the
/// admissible rates go all the way down to zero), so the speed must drop
/// across each penetrating stretch as a whole. Intervals shorter than
/// stall_tol times the trajectory span are below measurement resolution
/// and exempt; a jammed flow stalls for a macroscopic span and still fails.
struct DissipationReport {
  bool pass = true;
  double max_increase = -std::numeric_limits<double>::infinity();
  std::size_t worst_step = 0;
  bool strict_while_penetrating = true;
  double max_penetrating_increase = -std::numeric_limits<double>::infinity();
  std::size_t worst_penetrating_step = 0;
  double max_stalled_span = 0.0;
};

inline DissipationReport check_dissipation(const Trajectory& traj,
                                           double tol,
                                           double stall_tol = 1e-6) {
  DissipationReport rep;
  const std::size_t n = traj.samples.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double before = traj.samples[i].v.norm();
    const double after = traj.samples[i + 1].v.norm();
    const double growth = after - before;
    if (growth > rep.max_increase) {
      rep.max_increase = growth;
      rep.worst_step = i;
    }
    if (growth > tol) rep.pass = false;
    if (traj.samples[i].penetrating) {
      if (growth > rep.max_penetrating_increase) {
        rep.max_penetrating_increase = growth;
        rep.worst_penetrating_step = i;
      }
    }
  }

  bool any_stalled = false;
  for (std::size_t i = 0; i + 1 < n;) {
    if (!traj.samples[i].penetrating) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && traj.samples[j].penetrating) ++j;
    if (traj.samples[j].v.norm() >= traj.samples[i].v.norm()) {
      any_stalled = true;
      rep.max_stalled_span = std::max(
          rep.max_stalled_span, traj.samples[j].s - traj.samples[i].s);
    }
    i = j;
  }
  if (any_stalled) {
    const double span = n ? traj.samples.back().s - traj.samples.front().s
                          : 0.0;
    if (rep.max_stalled_span >= stall_tol * span)
      rep.strict_while_penetrating = false;
  }
  return rep;
}

/// Change of coordinates onto the span of the contact rows. basis columns
/// are orthonormal; reduced holds the same contacts expressed in those
/// coordinates (already mass-normalized, so its Cholesky factor is the
/// identity). Velocities map down by basis^T and lift back by basis; the
/// discarded nullspace component is invisible to every contact.
struct ReductionResult {
  Matrix basis;
  NormalizedProblem reduced;
  Eigen::Index nullspace_dim = 0;
};

inline ReductionResult reduce_to_minimal(const NormalizedProblem& problem) {
  if (problem.contacts.empty())
    throw InternalError("reduce_to_minimal requires at least one contact");

  Eigen::Index rows = 0;
  for (const Contact& c : problem.contacts) rows += c.frictional() ? 3 : 1;
  Matrix stacked(rows, problem.dim);
  Eigen::Index r = 0;
  for (const Contact& c : problem.contacts) {
    stacked.row(r++) = c.jn;
    if (c.jt) {
      stacked.row(r++) = c.jt->row(0);
      stacked.row(r++) = c.jt->row(1);
    }
  }

  Eigen::BDCSVD<Matrix> svd(stacked.transpose(), Eigen::ComputeThinU);
  const double sigma_max = svd.singularValues().size() > 0
                               ? svd.singularValues()(0)
                               : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * sigma_max) ++rank;

  ReductionResult out;
  out.basis = svd.matrixU().leftCols(rank);
  out.nullspace_dim = problem.dim - rank;
  out.reduced.dim = rank;
  out.reduced.chol = Matrix::Identity(rank, rank);
  out.reduced.contacts.reserve(problem.contacts.size());
  for (const Contact& c : problem.contacts) {
    Contact rc;
    rc.id = c.id;
    rc.mu = c.mu;
    rc.jn = c.jn * out.basis;
    if (c.jt) rc.jt = TangentJacobian(*c.jt * out.basis);
    out.reduced.contacts.push_back(std::move(rc));
  }
  return out;
}

/// Distance from the origin to the admissible net-force set at v, with the
/// minimizing force as witness. Zero distance is the degeneracy signature:
/// the contacts can jam, producing a constant-velocity trajectory.
inline MinNormResult min_norm_in_force_set(const NormalizedProblem& problem,
                                           const Vector& v,
                                           double tol = kDefaultTol) {
  if (!classify(problem, v, tol).penetrating())
    throw NotPenetratingError(
        "min_norm_in_force_set requires a penetrating velocity");
  return min_norm_point(net_force_set(problem, v, tol));
}

/// A penetrating velocity whose force set contains the origin (within the
/// screening tolerance), i.e. a state the model can hold forever.
struct DegenerateAt {
  Vector v;
  double min_norm = 0.0;
};

/// No sampled velocity came near degeneracy; min_observed is the smallest
/// distance seen over all samples. A screen, not a certificate.
struct LikelyNonDegenerate {
  int samples = 0;
  double min_observed = std::numeric_limits<double>::infinity();
};

struct DegeneracyVerdict {
  std::variant<DegenerateAt, LikelyNonDegenerate> verdict;
  double tolerance = 0.0;

  bool degenerate() const {
    return std::holds_alternative<DegenerateAt>(verdict);
  }
};

/// Samples penetrating velocities and screens each through the minimum-norm
/// distance of its force set. Uniform sphere samples are rejection-filtered
/// to penetrating states; each subset of contacts additionally contributes
/// targeted samples from the intersection of its boundary faces (jn v = 0
/// there), where jamming hides from interior sampling. Returns the first
/// degenerate hit, else the minimum distance observed.
inline DegeneracyVerdict check_nondegenerate(const NormalizedProblem& problem,
                                             int n_samples,
                                             std::uint64_t seed,
                                             double tolerance = 1e-7,
                                             double tol = kDefaultTol) {
  if (n_samples < 1)
    throw DimensionError("check_nondegenerate requires n_samples >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto sphere = [&](Eigen::Index d) {
    Vector u(d);
    double n = 0.0;
    while (n == 0.0) {
      for (Eigen::Index i = 0; i < d; ++i) u[i] = gauss(rng);
      n = u.norm();
    }
    return Vector(u / n);
  };

  DegeneracyVerdict out;
  out.tolerance = tolerance;
  LikelyNonDegenerate tally;

  const auto screen = [&](const Vector& v) -> bool {
    const MinNormResult mn = min_norm_in_force_set(problem, v, tol);
    ++tally.samples;
    if (mn.distance < tally.min_observed) tally.min_observed = mn.distance;
    if (mn.distance <= tolerance) {
      out.verdict = DegenerateAt{v, mn.distance};
      return true;
    }
    return false;
  };

  // Stage 1: uniform sphere directions, rejected until penetrating.
  int found = 0;
  long rejections = 0;
  while (found < n_samples) {
    const Vector v = sphere(problem.dim);
    if (!classify(problem, v, tol).penetrating()) {
      if (++rejections >= 100000)
        throw EmptyActiveSetError(
            "no penetrating velocity found in 100000 sphere samples");
      continue;
    }
    ++found;
    if (screen(v)) return out;
  }

  // Stage 2: for every contact subset, sample the intersection of its
  // boundary faces. Velocities there classify those contacts as Boundary,
  // so their forces stay eligible while contributing nothing to dissipation.
  const std::size_t m = problem.contacts.size();
  if (m >= 1 && m <= 16) {
    const int per_subset = std::max(4, n_samples / 8);
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
      Matrix rows(static_cast<Eigen::Index>(__builtin_popcount(mask)),
                  problem.dim);
      Eigen::Index r = 0;
      for (std::size_t c = 0; c < m; ++c)
        if (mask & (1u << c)) rows.row(r++) = problem.contacts[c].jn;

      Eigen::BDCSVD<Matrix> svd(rows, Eigen::ComputeFullV);
      const double sigma_max = svd.singularValues()(0);
      Eigen::Index rank = 0;
      for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-12 * sigma_max) ++rank;
      const Eigen::Index null_dim = problem.dim - rank;
      if (null_dim == 0) continue;
      const Matrix null_basis = svd.matrixV().rightCols(null_dim);

      for (int k = 0; k < per_subset; ++k) {
        const Vector v = null_basis * sphere(null_dim);
        if (!classify(problem, v, tol).penetrating()) continue;
        if (screen(v)) return out;
      }
    }
  }

  out.verdict = tally;
  return out;
}

}  // namespace impactset
