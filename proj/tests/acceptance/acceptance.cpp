// Acceptance gate. Each numbered block exercises one shipped guarantee end
// to end and prints a single PASS/FAIL line; the process exits nonzero if
// any guarantee fails. Tolerances here are the contract, not diagnostics:
// do not loosen them to make a run green.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "impactset/analysis.hpp"
#include "impactset/integrate.hpp"
#include "impactset/min_norm.hpp"
#include "impactset/normalize.hpp"
#include "impactset/outcomes.hpp"
#include "impactset/routh.hpp"
#include "impactset/scenarios.hpp"
#include "impactset/strategy.hpp"
#include "support/oracles.hpp"
#include "support/test_utils.hpp"

using namespace impactset;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int index, const char* label, const std::function<Verdict()>& fn) {
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  if (!v.pass) ++failures;
  std::printf("[%2d/11] %s  %s%s%s\n", index, v.pass ? "PASS" : "FAIL", label,
              v.detail.empty() ? "" : "  -- ", v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scene load_scene(const std::string& name) {
  return parse_scene(slurp(std::string(IMPACTSET_SCENES_DIR) + "/" + name));
}

NormalizedProblem as_normalized(const ContactProblem& problem) {
  ContactProblem copy = problem;
  return normalize(copy);
}

// Shared state between the random-trajectory energy audit and the
// termination audit, which run over the same pool.
struct PoolStats {
  int runs = 0;
  int monotonicity_violations = 0;
  int strictness_violations = 0;
  int screened_clear = 0;
  int non_terminating = 0;
  double max_increase = -1.0;
  double max_horizon_fraction = 0.0;
  double max_stalled_span = 0.0;
  double min_trajectory_span = 1e300;
};

PoolStats run_random_pool() {
  PoolStats stats;
  auto rng = testutil::make_rng(20240917);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const int m = 2 + (trial / 3) % 3;
    ContactProblem cp = testutil::conditioned_random_problem(
        rng, n, m, /*planar=*/trial % 2 == 0);
    NormalizedProblem p = normalize(cp);
    const Vector v0 = testutil::random_penetrating_velocity(rng, p);

    SelectionStrategy strat;
    switch (trial % 4) {
      case 0:
        break;
      case 1: {
        std::vector<std::string> order;
        for (const Contact& c : p.contacts) order.push_back(c.id);
        std::shuffle(order.begin(), order.end(), rng);
        strat.kind = SequentialStrategy{order};
        break;
      }
      case 2:
        strat.kind = DirichletRandomStrategy{
            1.0, 4, static_cast<std::uint64_t>(1000 + trial)};
        break;
      default:
        strat.kind =
            VertexRandomStrategy{static_cast<std::uint64_t>(2000 + trial), 2};
        break;
    }

    const double horizon = safeguard_horizon(p, v0);
    const Trajectory t = integrate(p, v0, strat, 1e-3, horizon);

    ++stats.runs;
    if (!t.terminated) ++stats.non_terminating;
    stats.max_horizon_fraction =
        std::max(stats.max_horizon_fraction, t.s_final / horizon);

    const DissipationReport rep = check_dissipation(t, 1e-9);
    if (!rep.pass) ++stats.monotonicity_violations;
    stats.max_increase = std::max(stats.max_increase, rep.max_increase);
    stats.max_stalled_span =
        std::max(stats.max_stalled_span, rep.max_stalled_span);
    stats.min_trajectory_span = std::min(stats.min_trajectory_span, t.s_final);

    const DegeneracyVerdict screen =
        check_nondegenerate(p, 48, static_cast<std::uint64_t>(trial));
    if (!screen.degenerate()) {
      ++stats.screened_clear;
      if (!rep.strict_while_penetrating) ++stats.strictness_violations;
    }
  }
  return stats;
}

PoolStats pool;

Verdict criterion_single_contact_oracle() {
  auto rng = testutil::make_rng(31);
  double max_err = 0.0;
  double sum_h = 0.0, sum_half = 0.0;
  int checked = 0;
  while (checked < 200) {
    Contact c = testutil::random_contact(rng, 2, "c", checked % 4 != 0, true);
    Vector v0 = testutil::random_unit(rng, 2);
    if (c.jn.dot(v0) > 0) v0 = -v0;
    if (c.jn.dot(v0) > -1e-3) continue;
    ++checked;

    const SingleImpactResult exact = resolve_single_planar(c, v0);
    const SingleImpactResult at_h = resolve_single(c, v0, 1e-4);
    const SingleImpactResult at_half = resolve_single(c, v0, 5e-5);

    const double err = (at_h.v_plus - exact.v_plus).norm();
    max_err = std::max(max_err, err);
    sum_h += err;
    sum_half += (at_half.v_plus - exact.v_plus).norm();
  }
  const double ratio = sum_h / sum_half;
  Verdict v;
  v.pass = max_err <= 1e-3 && ratio >= 1.7 && ratio <= 2.3;
  v.detail = fmt("max error %.2e at step 1e-4, halving ratio %.2f", max_err,
                 ratio);
  return v;
}

Verdict criterion_unit_descent() {
  const Vector v0 = Eigen::Vector2d(3.0, 4.0);
  const auto path = integrate_unit_descent(v0, 1e-4, 6.0);
  const auto at = [&](double t_query) {
    const Vector* best = &path.front().second;
    double gap = 1e300;
    for (const auto& [t, v] : path)
      if (std::abs(t - t_query) < gap) {
        gap = std::abs(t - t_query);
        best = &v;
      }
    return *best;
  };
  const double err_mid = (at(2.5) - Vector(Eigen::Vector2d(1.5, 2.0))).norm();
  const double err_end = at(5.0).norm();
  Verdict v;
  v.pass = err_mid <= 1e-3 && err_end <= 1e-3;
  v.detail = fmt("|v(2.5)-(1.5,2)| = %.2e, |v(5)| = %.2e", err_mid, err_end);
  return v;
}

Verdict criterion_two_footed_outcomes() {
  const Scene scene = build_rimless_wheel();
  NormalizedProblem p = as_normalized(scene.problem);
  const Vector w0 = p.to_normalized(scene.v0);
  const double horizon = safeguard_horizon(p, w0);

  SelectionStrategy both;
  const Trajectory rest =
      integrate(p, w0, both, scene.step, horizon, scene.tol);
  const double k_rest = kinetic_energy(rest.v_plus);

  SelectionStrategy lead;
  lead.kind = SequentialStrategy{{"A", "B"}};
  const Trajectory slip =
      integrate(p, w0, lead, scene.step, horizon, scene.tol);
  const SequenceResult iterated = resolve_sequence(p, w0, {"A", "B"});
  const double slip_err = (slip.v_plus - iterated.v_plus).norm();
  const double lead_rate = p.contacts[0].jn.dot(slip.v_plus);

  const OutcomeSet set = sample_outcomes(p, w0, 100, 7, scene.step, horizon,
                                         scene.dedupe_tol, scene.tol);
  int distinct = 0;
  for (const Outcome& o : set.points)
    if (o.terminated) ++distinct;

  Verdict v;
  v.pass = rest.terminated && k_rest <= 1e-12 && slip.terminated &&
           slip_err <= 1e-3 && lead_rate > 1e-6 && distinct >= 3;
  v.detail = fmt("rest K %.1e, slip oracle gap %.1e", k_rest, slip_err) +
             fmt(", lead-foot rate %.2e, ", lead_rate) +
             std::to_string(distinct) + " distinct outcomes";
  return v;
}

Verdict criterion_box_push_families() {
  const Scene scene = build_box_push();
  NormalizedProblem p = as_normalized(scene.problem);
  const Vector w0 = p.to_normalized(scene.v0);

  // Family 1: resolve the wall in one shot, then the floor.
  const SequenceResult wall_first = resolve_sequence(p, w0, {"B", "A"});

  // Family 2: hold the floor contact until it stops approaching, handing
  // off to the wall only afterwards.
  const Eigen::Index wall = p.contact_index("B");
  const WeightSelector schedule =
      [&](double s, const Vector& v, const std::vector<std::size_t>&) {
        Vector w = Vector::Zero(2);
        if (s < 0.3)
          w[0] = 1.0;
        else if (p.contacts[wall].jn.dot(v) < -1e-9)
          w[1] = 1.0;
        else
          w[0] = 1.0;
        return w;
      };
  const Trajectory handoff = integrate(p, w0, schedule,
                                       StickingRule::HoldIfFeasible, 1e-4,
                                       safeguard_horizon(p, w0));

  const double split = (wall_first.v_plus - handoff.v_plus).norm();
  // Wall-first outcome: the bottom contact separates and the wall contact
  // point slides upward. Rows are the bottom normal and the wall tangent
  // for the unit box (they coincide for this geometry).
  const double bottom_rate = p.contacts[0].jn.dot(wall_first.v_plus);
  const double up_rate =
      Eigen::RowVector3d(0, 1, 0.5).dot(wall_first.v_plus);

  Verdict v;
  v.pass = handoff.terminated && split > 1e-3 && bottom_rate > 1e-6 &&
           up_rate > 1e-6;
  v.detail = fmt("family gap %.3f, bottom separation %.2e, upward slide %.2e",
                 split, bottom_rate, up_rate);
  return v;
}

Verdict criterion_energy_monotone() {
  Verdict v;
  v.pass = pool.monotonicity_violations == 0 &&
           pool.strictness_violations == 0 && pool.screened_clear > 0;
  v.detail = std::to_string(pool.runs) + " runs, " +
             std::to_string(pool.monotonicity_violations) +
             " monotonicity violations, " +
             std::to_string(pool.strictness_violations) +
             " strictness violations over " +
             std::to_string(pool.screened_clear) + " screened-clear scenes" +
             fmt(", max step increase %.1e, max stall %.1e (spans >= %.1e)",
                 pool.max_increase, pool.max_stalled_span,
                 pool.min_trajectory_span);
  return v;
}

Verdict criterion_scale_invariance() {
  auto rng = testutil::make_rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ContactProblem cp = testutil::conditioned_random_problem(
        rng, 2 + trial % 3, 2 + trial % 2, /*planar=*/true);
    NormalizedProblem p = normalize(cp);
    const Vector v0 = testutil::random_penetrating_velocity(rng, p);

    SelectionStrategy strat;
    if (trial % 2 == 0)
      strat.kind = DirichletRandomStrategy{
          1.0, 8, static_cast<std::uint64_t>(7 + trial)};

    const double h = 1e-4;
    const double horizon = safeguard_horizon(p, v0);
    const Trajectory base = integrate(p, v0, strat, h, horizon);
    if (!base.terminated) return {false, "base run hit the horizon"};

    // The path is piecewise linear in s, so interpolating the base run at
    // s/k compares the two flows at equal impulse, immune to the one-step
    // index shifts that rounding-scale events introduce.
    std::vector<double> knots(base.samples.size());
    for (std::size_t i = 0; i < base.samples.size(); ++i)
      knots[i] = base.samples[i].s;
    const auto base_at = [&](double s) {
      const auto hi = std::upper_bound(knots.begin(), knots.end(), s);
      if (hi == knots.begin()) return base.samples.front().v;
      if (hi == knots.end()) return base.v_plus;
      const std::size_t j = static_cast<std::size_t>(hi - knots.begin());
      const double lo = knots[j - 1];
      const double t = (s - lo) / (knots[j] - lo);
      return Vector((1.0 - t) * base.samples[j - 1].v +
                    t * base.samples[j].v);
    };

    for (double k : {0.1, 10.0}) {
      const Trajectory scaled = integrate(p, Vector(k * v0), strat, k * h,
                                          k * horizon, k * kDefaultTol);
      if (!scaled.terminated) return {false, "scaled run hit the horizon"};
      double err = (scaled.v_plus - k * base.v_plus).norm();
      for (const TrajectorySample& smp : scaled.samples) {
        // States with every approach rate inside ten classification quanta
        // of exit sit in the terminal collapse, where the two runs pass
        // through the same contracting neighborhood out of phase. The
        // endpoint comparison above pins that neighborhood; equal-impulse
        // comparison is only meaningful while solidly penetrating.
        double min_rate = 0.0;
        for (const Contact& c : p.contacts)
          min_rate = std::min(min_rate, c.jn.dot(smp.v));
        if (min_rate > -10.0 * k * kDefaultTol) continue;
        err = std::max(err, (smp.v - k * base_at(smp.s / k)).norm());
      }
      worst = std::max(worst, err);
    }
  }
  Verdict v;
  v.pass = worst <= 1e-8;
  v.detail = fmt("worst deviation from the scaled path %.2e", worst);
  return v;
}

Verdict criterion_termination() {
  // Slow-dissipation probe: two orthogonal frictionless contacts and the
  // skewed velocity whose fixed weight selection dissipates at exactly -2e.
  NormalizedProblem p;
  p.dim = 2;
  p.chol = Matrix::Identity(2, 2);
  Contact cx, cy;
  cx.id = "x";
  cx.jn = Eigen::RowVector2d(1, 0);
  cy.id = "y";
  cy.jn = Eigen::RowVector2d(0, 1);
  p.contacts = {cx, cy};

  const double eps = 0.01;
  const Vector v0((1.0 + eps) * Eigen::Vector2d(-1.0, -eps));
  Vector weights(2);
  weights << eps / (1.0 + eps), 1.0 / (1.0 + eps);
  const WeightSelector probe =
      [&](double, const Vector&, const std::vector<std::size_t>& eligible) {
        Vector w = Vector::Zero(2);
        for (std::size_t c : eligible)
          w[static_cast<Eigen::Index>(c)] = weights[static_cast<Eigen::Index>(c)];
        return w;
      };
  const double horizon = 10.0 * v0.norm();
  const Trajectory t =
      integrate(p, v0, probe, StickingRule::HoldIfFeasible, 1e-4, horizon);
  const double rate = t.samples.front().v.dot(t.samples.front().force);
  const double rate_err = std::abs(rate - (-2.0 * eps));

  Verdict v;
  v.pass = pool.non_terminating == 0 && t.terminated && t.s_final < horizon &&
           rate_err <= 1e-10;
  v.detail = std::to_string(pool.non_terminating) + " of " +
             std::to_string(pool.runs) + " random runs hit the horizon" +
             fmt(", worst fraction used %.3f", pool.max_horizon_fraction) +
             fmt(", probe rate error %.1e", rate_err);
  return v;
}

Verdict criterion_single_contact_bound() {
  auto rng = testutil::make_rng(93);
  std::uniform_real_distribution<double> speed(0.2, 5.0);
  double worst_slack = 1e300;
  int checked = 0;
  while (checked < 100) {
    const Eigen::Index n = 2 + checked % 2;
    Contact c = testutil::random_contact(rng, n, "c", checked % 5 != 0,
                                         n == 2);
    Vector v0 = speed(rng) * testutil::random_unit(rng, n);
    if (c.jn.dot(v0) > 0) v0 = -v0;
    if (c.jn.dot(v0) > -1e-3 * v0.norm()) continue;
    ++checked;

    const SingleImpactResult r = resolve_single(c, v0, 1e-4);
    const double cap = termination_bound_single(c).bound * v0.norm();
    if (r.s_final > cap * (1.0 + 1e-6))
      return {false, fmt("resolution ran %.4f past its cap %.4f", r.s_final,
                         cap)};
    if (r.s_final > 0.0)
      worst_slack = std::min(worst_slack, cap / r.s_final);
  }
  Verdict v;
  v.pass = true;
  v.detail = fmt("all runs within cap; tightest cap/actual = %.2f",
                 worst_slack) +
             (worst_slack <= 10.0 ? " (within 10x on some instance)"
                                  : " (never within 10x; reported only)");
  return v;
}

Verdict criterion_degeneracy_screen() {
  const Scene jam = load_scene("degenerate3.json");
  NormalizedProblem p = as_normalized(jam.problem);
  const DegeneracyVerdict verdict = check_nondegenerate(p, 200, 5);
  if (!verdict.degenerate())
    return {false, "opposing-normals fixture screened clear"};
  const DegenerateAt& hit = std::get<DegenerateAt>(verdict.verdict);
  if (hit.min_norm > 1e-7)
    return {false, fmt("witness min-norm %.2e above 1e-7", hit.min_norm)};

  // The witness must admit a constant-velocity trajectory: equal weight on
  // the opposing pair yields exactly zero net force.
  const WeightSelector freeze = [](double, const Vector&,
                                   const std::vector<std::size_t>&) {
    Vector w = Vector::Zero(3);
    w[0] = 0.5;
    w[1] = 0.5;
    return w;
  };
  const Trajectory frozen = integrate(p, hit.v, freeze,
                                      StickingRule::HoldIfFeasible, 1e-3, 0.5);
  double drift = 0.0, force = 0.0;
  for (const TrajectorySample& s : frozen.samples) {
    drift = std::max(drift, (s.v - hit.v).norm());
    force = std::max(force, s.force.norm());
  }
  if (drift > 1e-8 || force > 1e-8)
    return {false, fmt("witness drifted %.1e under zero-force weights (force "
                       "%.1e)",
                       drift, force)};

  for (const char* name : {"wheel.json", "box.json"}) {
    const Scene scene = load_scene(name);
    NormalizedProblem sp = as_normalized(scene.problem);
    const DegeneracyVerdict clear =
        check_nondegenerate(sp, 200, name[0] == 'w' ? 11 : 12);
    if (clear.degenerate())
      return {false, std::string(name) + " unexpectedly screened degenerate"};
  }
  Verdict v;
  v.pass = true;
  v.detail = fmt("jam witness min-norm %.1e, drift %.1e; shipped scenes clear",
                 hit.min_norm, drift);
  return v;
}

Verdict criterion_min_norm_oracle() {
  auto rng = testutil::make_rng(4444);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ContactProblem cp;
    cp.dim = 2 + trial % 3;
    cp.mass = testutil::random_spd(rng, cp.dim);
    const int m = 2 + trial % 4;
    for (int i = 0; i < m; ++i)
      cp.contacts.push_back(testutil::random_contact(
          rng, cp.dim, std::string(1, char('A' + i)), false, true));
    NormalizedProblem p = normalize(cp);
    const Vector v = testutil::random_penetrating_velocity(rng, p);

    const ForceSetDescriptor set = net_force_set(p, v);
    std::vector<Vector> points;
    for (const Generator& g : set.generators)
      points.push_back(std::get<PointGenerator>(g).point);

    const double expected = oracle::min_norm_hull_exhaustive(points);
    const MinNormResult res = min_norm_point(set);
    worst = std::max(worst, std::abs(res.distance - expected));
  }
  Verdict v;
  v.pass = worst <= 1e-6;
  v.detail = fmt("worst gap to the exhaustive enumeration %.2e", worst);
  return v;
}

Verdict criterion_cli_determinism() {
  const std::string bin = IMPACTSET_CLI_PATH;
  const std::string scenes = IMPACTSET_SCENES_DIR;
  const std::string dir = "acceptance_cli_tmp";
  if (std::system(("mkdir -p " + dir).c_str()) != 0)
    return {false, "could not create scratch directory"};

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"resolve --scene " + scenes +
           "/box.json --strategy dirichlet:0.7:4 --seed 3",
       "r"},
      {"sample --scene " + scenes + "/wheel.json --n 40 --seed 9", "s"},
  };
  for (const auto& [args, tag] : runs) {
    const std::string a = dir + "/" + tag + "1.csv";
    const std::string b = dir + "/" + tag + "2.csv";
    for (const std::string& out : {a, b}) {
      const std::string cmd = bin + " " + args + " --output " + out;
      const int rc = std::system(cmd.c_str());
      if (rc != 0) return {false, "command failed: " + cmd};
    }
    const std::string bytes_a = slurp(a);
    if (bytes_a.empty() || bytes_a != slurp(b))
      return {false, "reruns of '" + args + "' differ"};
  }
  Verdict v;
  v.pass = true;
  v.detail = "resolve and sample reruns byte-identical";
  return v;
}

}  // namespace

int main() {
  std::printf("acceptance: shared random pool (1000 trajectories)...\n");
  std::fflush(stdout);
  try {
    pool = run_random_pool();
  } catch (const std::exception& e) {
    std::printf("acceptance: pool construction failed: %s\n", e.what());
    return 1;
  }

  report(1, "single-contact resolution matches the closed form at first order",
         criterion_single_contact_oracle);
  report(2, "unit-rate descent follows the radial closed form",
         criterion_unit_descent);
  report(3, "two-footed impact: rest, lead-foot slip, multiple outcomes",
         criterion_two_footed_outcomes);
  report(4, "box push: schedules split into distinct outcome families",
         criterion_box_push_families);
  report(5, "kinetic energy monotone across the random pool",
         criterion_energy_monotone);
  report(6, "integration commutes with velocity scaling",
         criterion_scale_invariance);
  report(7, "every pooled run terminates inside the safeguard horizon",
         criterion_termination);
  report(8, "single-contact runs respect the impulse cap",
         criterion_single_contact_bound);
  report(9, "degeneracy screen flags the jam and clears shipped scenes",
         criterion_degeneracy_screen);
  report(10, "minimum-norm distance matches exhaustive enumeration",
         criterion_min_norm_oracle);
  report(11, "command-line reruns with fixed seeds are byte-identical",
         criterion_cli_determinism);

  if (failures == 0) {
    std::printf("acceptance: all 11 criteria pass\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return 1;
}
