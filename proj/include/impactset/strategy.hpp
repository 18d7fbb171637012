#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "impactset/classify.hpp"
#include "impactset/errors.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// All normal-rate weight goes to the first strictly approaching contact in
/// `ordering`; when it stops approaching, the next one takes over (and it
/// takes the weight back if it starts approaching again).
struct SequentialStrategy {
  std::vector<std::string> ordering;
};

/// Equal weights over every strictly approaching contact.
struct SimultaneousStrategy {};

/// Weights drawn from a symmetric Dirichlet(alpha) over the approaching
/// contacts, redrawn every `resample_every` steps (and whenever the
/// approaching set empties the held weights).
struct DirichletRandomStrategy {
  double alpha = 1.0;
  int resample_every = 1;
  std::uint64_t seed = 0;
};

/// Full weight on one approaching contact picked uniformly at random,
/// re-picked every `dwell` steps or when it stops approaching.
struct VertexRandomStrategy {
  std::uint64_t seed = 0;
  int dwell = 1;
};

/// What tangential force a frictional contact applies while its tangential
/// velocity is exactly zero. HoldIfFeasible solves for the force that keeps
/// it zero, clamped to the friction disc; RandomInDisc draws uniformly from
/// the disc (sampling the chattering selections the model also admits).
enum class StickingRule { HoldIfFeasible, RandomInDisc };

struct SelectionStrategy {
  std::variant<SequentialStrategy, SimultaneousStrategy,
               DirichletRandomStrategy, VertexRandomStrategy>
      kind = SimultaneousStrategy{};
  StickingRule sticking = StickingRule::HoldIfFeasible;
  std::uint64_t sticking_seed = 0;

  void validate(const NormalizedProblem& problem) const {
    if (const auto* seq = std::get_if<SequentialStrategy>(&kind)) {
      if (seq->ordering.size() != problem.contacts.size())
        throw SchemaError("strategy", "ordering must list every contact id");
      for (const std::string& id : seq->ordering)
        problem.contact_index(id);  // throws on unknown ids
      for (std::size_t i = 0; i < seq->ordering.size(); ++i)
        for (std::size_t j = i + 1; j < seq->ordering.size(); ++j)
          if (seq->ordering[i] == seq->ordering[j])
            throw SchemaError("strategy",
                              "ordering repeats id '" + seq->ordering[i] + "'");
    } else if (const auto* d = std::get_if<DirichletRandomStrategy>(&kind)) {
      if (!(d->alpha > 0.0))
        throw SchemaError("strategy", "dirichlet alpha must be positive");
      if (d->resample_every < 1)
        throw SchemaError("strategy", "resample period must be >= 1");
    } else if (const auto* vtx = std::get_if<VertexRandomStrategy>(&kind)) {
      if (vtx->dwell < 1) throw SchemaError("strategy", "dwell must be >= 1");
    }
  }
};

/// Mutable per-run state: RNG streams plus the weights a random strategy is
/// currently dwelling on.
struct StrategyState {
  std::mt19937_64 rng;
  std::mt19937_64 stick_rng;
  int steps_until_redraw = 0;
  Vector held_weights;

  static StrategyState make(const SelectionStrategy& strategy) {
    StrategyState st;
    std::uint64_t seed = 0;
    if (const auto* d = std::get_if<DirichletRandomStrategy>(&strategy.kind))
      seed = d->seed;
    else if (const auto* v = std::get_if<VertexRandomStrategy>(&strategy.kind))
      seed = v->seed;
    st.rng.seed(seed);
    st.stick_rng.seed(strategy.sticking_seed);
    return st;
  }
};

/// One integrator step's choice: normal-rate weights (nonnegative, summing
/// to 1 over the approaching contacts) plus per-contact tangential
/// multipliers u_c with |u_c| <= mu_c, so the velocity rate is
/// vdot = sum_c w_c (jn_c^T + jt_c^T u_c).
struct Selection {
  Vector normal_weights;
  std::vector<Eigen::Vector2d> friction;
  Vector vdot;
};

namespace detail {

inline Eigen::Vector2d tangential_multiplier(const Contact& c, const Vector& v,
                                             StickingRule rule,
                                             std::mt19937_64& stick_rng) {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  if (!c.jt) return u;
  const Eigen::Vector2d wt = *c.jt * v;
  const double speed = wt.norm();
  // The branch is exact, mirroring the force-set maps: any nonzero
  // tangential speed slides. Trajectories realize sticking by chattering
  // across the manifold, which keeps every recorded force exactly inside
  // the admissible set.
  if (speed > 0.0) {
    u = -c.mu * wt / speed;
    return u;
  }
  if (rule == StickingRule::RandomInDisc) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double ang = 2.0 * 3.14159265358979323846 * unit(stick_rng);
    const double rad = c.mu * std::sqrt(unit(stick_rng));
    u << rad * std::cos(ang), rad * std::sin(ang);
    return u;
  }
  // Hold if feasible: least-squares u with jt (jn^T + jt^T u) = 0, clamped
  // to the friction disc (the clamp is the maximally opposing force).
  const Eigen::Matrix2d g = *c.jt * c.jt->transpose();
  const Vector rhs = -(*c.jt * c.jn.transpose());
  u = Eigen::CompleteOrthogonalDecomposition<Matrix>(Matrix(g)).solve(rhs);
  if (u.norm() > c.mu) u *= c.mu / u.norm();
  return u;
}

inline Vector combine(const NormalizedProblem& problem, const Vector& v,
                      const Vector& weights, StickingRule rule,
                      std::mt19937_64& stick_rng,
                      std::vector<Eigen::Vector2d>& friction) {
  Vector vdot = Vector::Zero(problem.dim);
  friction.assign(problem.contacts.size(), Eigen::Vector2d::Zero());
  for (std::size_t c = 0; c < problem.contacts.size(); ++c) {
    if (weights[static_cast<Eigen::Index>(c)] == 0.0) continue;
    const Contact& contact = problem.contacts[c];
    const Eigen::Vector2d u =
        tangential_multiplier(contact, v, rule, stick_rng);
    friction[c] = u;
    vdot += weights[static_cast<Eigen::Index>(c)] *
            (contact.jn.transpose() +
             (contact.jt ? Vector(contact.jt->transpose() * u)
                         : Vector(Vector::Zero(problem.dim))));
  }
  return vdot;
}

inline std::vector<std::size_t> approaching_contacts(
    const NormalizedProblem& problem, const Vector& v, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < problem.contacts.size(); ++c)
    if (problem.contacts[c].jn.dot(v) < -tol) out.push_back(c);
  return out;
}

}  // namespace detail

/// Chooses the step's weights and friction forces. Built-in strategies put
/// weight only on strictly approaching contacts; the weights are held and
/// renormalized per the strategy's dwell rules in `state`.
inline Selection select(const NormalizedProblem& problem, const Vector& v,
                        const SelectionStrategy& strategy, StrategyState& state,
                        double tol = kDefaultTol) {
  const std::vector<std::size_t> approaching =
      detail::approaching_contacts(problem, v, tol);
  if (approaching.empty())
    throw NoActiveContactError("select: no contact is strictly approaching");

  const Eigen::Index m = static_cast<Eigen::Index>(problem.contacts.size());
  Selection sel;
  sel.normal_weights = Vector::Zero(m);

  if (const auto* seq = std::get_if<SequentialStrategy>(&strategy.kind)) {
    std::size_t chosen = problem.contacts.size();
    for (const std::string& id : seq->ordering) {
      const std::size_t idx =
          static_cast<std::size_t>(problem.contact_index(id));
      if (std::find(approaching.begin(), approaching.end(), idx) !=
          approaching.end()) {
        chosen = idx;
        break;
      }
    }
    if (chosen == problem.contacts.size())
      throw SchemaError("strategy",
                        "ordering does not cover the approaching contacts");
    sel.normal_weights[static_cast<Eigen::Index>(chosen)] = 1.0;
  } else if (std::holds_alternative<SimultaneousStrategy>(strategy.kind)) {
    for (std::size_t idx : approaching)
      sel.normal_weights[static_cast<Eigen::Index>(idx)] =
          1.0 / static_cast<double>(approaching.size());
  } else if (const auto* dir =
                 std::get_if<DirichletRandomStrategy>(&strategy.kind)) {
    bool redraw = state.steps_until_redraw <= 0 ||
                  state.held_weights.size() != m;
    if (!redraw) {
      double mass = 0.0;
      for (std::size_t idx : approaching)
        mass += state.held_weights[static_cast<Eigen::Index>(idx)];
      redraw = mass <= 0.0;
    }
    if (redraw) {
      state.held_weights = Vector::Zero(m);
      std::gamma_distribution<double> gamma(dir->alpha, 1.0);
      for (std::size_t idx : approaching)
        state.held_weights[static_cast<Eigen::Index>(idx)] = gamma(state.rng);
      if (state.held_weights.sum() <= 0.0)
        state.held_weights[static_cast<Eigen::Index>(approaching.front())] =
            1.0;
      state.steps_until_redraw = dir->resample_every;
    }
    state.steps_until_redraw -= 1;
    // Mask to the current approaching set and renormalize.
    double mass = 0.0;
    for (std::size_t idx : approaching)
      mass += state.held_weights[static_cast<Eigen::Index>(idx)];
    for (std::size_t idx : approaching)
      sel.normal_weights[static_cast<Eigen::Index>(idx)] =
          state.held_weights[static_cast<Eigen::Index>(idx)] / mass;
  } else {
    const auto& vtx = std::get<VertexRandomStrategy>(strategy.kind);
    bool redraw = state.steps_until_redraw <= 0 ||
                  state.held_weights.size() != m;
    if (!redraw) {
      double mass = 0.0;
      for (std::size_t idx : approaching)
        mass += state.held_weights[static_cast<Eigen::Index>(idx)];
      redraw = mass <= 0.0;
    }
    if (redraw) {
      state.held_weights = Vector::Zero(m);
      std::uniform_int_distribution<std::size_t> pick(0,
                                                      approaching.size() - 1);
      state.held_weights[static_cast<Eigen::Index>(
          approaching[pick(state.rng)])] = 1.0;
      state.steps_until_redraw = vtx.dwell;
    }
    state.steps_until_redraw -= 1;
    double mass = 0.0;
    for (std::size_t idx : approaching)
      mass += state.held_weights[static_cast<Eigen::Index>(idx)];
    for (std::size_t idx : approaching)
      sel.normal_weights[static_cast<Eigen::Index>(idx)] =
          state.held_weights[static_cast<Eigen::Index>(idx)] / mass;
  }

  sel.vdot = detail::combine(problem, v, sel.normal_weights, strategy.sticking,
                             state.stick_rng, sel.friction);
  return sel;
}

/// Expert hook: a caller-supplied weight rule. Receives the simulation time,
/// the current velocity, and the indices of contacts in the closure of the
/// approaching set (jn v <= tol); must return nonnegative per-contact
/// weights, zero outside that set, not all zero. The integrator normalizes
/// them to sum 1.
using WeightSelector = std::function<Vector(
    double s, const Vector& v, const std::vector<std::size_t>& eligible)>;

/// Parses `simultaneous | sequential:<id>,<id>,... | dirichlet:<alpha>:<resample>
/// | vertex:<dwell>` with optional `+stick=hold|random` suffix. Seeds are not
/// part of the grammar; set them on the returned strategy.
inline SelectionStrategy parse_strategy(const std::string& text) {
  SelectionStrategy strategy;
  std::string spec = text;

  const auto plus = spec.find('+');
  if (plus != std::string::npos) {
    const std::string suffix = spec.substr(plus + 1);
    spec = spec.substr(0, plus);
    if (suffix == "stick=hold")
      strategy.sticking = StickingRule::HoldIfFeasible;
    else if (suffix == "stick=random")
      strategy.sticking = StickingRule::RandomInDisc;
    else
      throw SchemaError("strategy", "unknown suffix '+" + suffix + "'");
  }

  const auto parse_number = [&](const std::string& part,
                                const char* what) -> double {
    try {
      std::size_t used = 0;
      const double value = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      return value;
    } catch (const std::exception&) {
      throw SchemaError("strategy",
                        std::string("expected a number for ") + what +
                            ", got '" + part + "'");
    }
  };

  if (spec == "simultaneous") {
    strategy.kind = SimultaneousStrategy{};
  } else if (spec.rfind("sequential:", 0) == 0) {
    SequentialStrategy seq;
    std::string rest = spec.substr(11);
    if (rest.empty())
      throw SchemaError("strategy", "sequential needs a contact-id list");
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const std::size_t comma = rest.find(',', pos);
      const std::string id =
          rest.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (id.empty())
        throw SchemaError("strategy", "empty id in sequential ordering");
      seq.ordering.push_back(id);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    strategy.kind = std::move(seq);
  } else if (spec.rfind("dirichlet:", 0) == 0) {
    const std::string rest = spec.substr(10);
    const std::size_t colon = rest.find(':');
    if (colon == std::string::npos)
      throw SchemaError("strategy", "dirichlet needs <alpha>:<resample>");
    DirichletRandomStrategy dir;
    dir.alpha = parse_number(rest.substr(0, colon), "dirichlet alpha");
    const double resample =
        parse_number(rest.substr(colon + 1), "dirichlet resample period");
    dir.resample_every = static_cast<int>(resample);
    if (dir.resample_every != resample)
      throw SchemaError("strategy", "resample period must be an integer");
    strategy.kind = dir;
  } else if (spec.rfind("vertex:", 0) == 0) {
    VertexRandomStrategy vtx;
    const double dwell = parse_number(spec.substr(7), "vertex dwell");
    vtx.dwell = static_cast<int>(dwell);
    if (vtx.dwell != dwell)
      throw SchemaError("strategy", "dwell must be an integer");
    strategy.kind = vtx;
  } else {
    throw SchemaError("strategy", "unknown strategy '" + spec + "'");
  }
  return strategy;
}

inline std::string format_strategy(const SelectionStrategy& strategy) {
  std::string out;
  if (const auto* seq = std::get_if<SequentialStrategy>(&strategy.kind)) {
    out = "sequential:";
    for (std::size_t i = 0; i < seq->ordering.size(); ++i) {
      if (i) out += ',';
      out += seq->ordering[i];
    }
  } else if (std::holds_alternative<SimultaneousStrategy>(strategy.kind)) {
    out = "simultaneous";
  } else if (const auto* dir =
                 std::get_if<DirichletRandomStrategy>(&strategy.kind)) {
    out = "dirichlet:" + std::to_string(dir->alpha) + ":" +
          std::to_string(dir->resample_every);
  } else {
    out = "vertex:" +
          std::to_string(std::get<VertexRandomStrategy>(strategy.kind).dwell);
  }
  if (strategy.sticking == StickingRule::RandomInDisc) out += "+stick=random";
  return out;
}

}  // namespace impactset
