#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "impactset/integrate.hpp"
#include "impactset/strategy.hpp"
#include "impactset/types.hpp"

namespace impactset {

/// One deduplicated post-impact velocity. `exemplar` is the trajectory of
/// the first sample that reached this point; `multiplicity` counts all of
/// them. Non-terminated samples are kept as flagged points and never merge
/// with terminated ones.
struct Outcome {
  Vector v_plus;
  int multiplicity = 0;
  bool terminated = true;
  double s_final = 0.0;
  std::size_t exemplar_index = 0;
  std::string strategy;
  Trajectory exemplar;
};

struct OutcomeSet {
  std::vector<Outcome> points;
  double dedupe_tol = 0.0;
  std::size_t total_samples = 0;
};

/// Stateless per-index seed stream (splitmix64), so samples are independent
/// of worker scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Worker cap: IMPACTSET_THREADS when set, else the hardware count.
inline int worker_count() {
  if (const char* env = std::getenv("IMPACTSET_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && parsed >= 1)
      return static_cast<int>(std::min(parsed, 64l));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(std::min(hw, 64u)) : 1;
}

/// The default strategy family for n samples: every sequential ordering
/// (when there are few enough to enumerate), one simultaneous run, then
/// alternating Dirichlet and single-vertex random strategies with seeds
/// derived per sample index.
inline std::vector<SelectionStrategy> default_family(
    const NormalizedProblem& problem, int n, std::uint64_t seed) {
  std::vector<SelectionStrategy> out;
  out.reserve(static_cast<std::size_t>(n));

  std::vector<std::string> ids;
  for (const Contact& c : problem.contacts) ids.push_back(c.id);
  std::sort(ids.begin(), ids.end());

  // m! <= n check without overflow; contacts are few by construction.
  long factorial = 1;
  bool enumerable = true;
  for (std::size_t k = 2; k <= ids.size(); ++k) {
    factorial *= static_cast<long>(k);
    if (factorial > n) {
      enumerable = false;
      break;
    }
  }
  if (enumerable) {
    do {
      SelectionStrategy s;
      s.kind = SequentialStrategy{ids};
      out.push_back(std::move(s));
    } while (static_cast<int>(out.size()) < n &&
             std::next_permutation(ids.begin(), ids.end()));
  }
  if (static_cast<int>(out.size()) < n)
    out.push_back(SelectionStrategy{});  // simultaneous

  while (static_cast<int>(out.size()) < n) {
    const std::uint64_t i = out.size();
    SelectionStrategy s;
    if (i % 2 == 0) {
      DirichletRandomStrategy dir;
      dir.alpha = 1.0;
      dir.resample_every = 16;
      dir.seed = derive_seed(seed, i);
      s.kind = dir;
    } else {
      VertexRandomStrategy vtx;
      vtx.dwell = 16;
      vtx.seed = derive_seed(seed, i);
      s.kind = vtx;
    }
    s.sticking_seed = derive_seed(seed ^ 0x5bf03635ull, i);
    out.push_back(std::move(s));
  }
  return out;
}

/// Runs one integration per strategy and greedily clusters the terminal
/// velocities: a sample joins the first point (with the same terminated
/// flag) within dedupe_tol of its leader, else founds a new point. Samples
/// are merged in index order, so results do not depend on the worker count.
/// Per-sample failures become flagged (terminated=false) points.
inline OutcomeSet sample_outcomes(const NormalizedProblem& problem,
                                  const Vector& v0,
                                  const std::vector<SelectionStrategy>& family,
                                  double step, double s_max,
                                  double dedupe_tol = -1.0,
                                  double tol = kDefaultTol) {
  if (family.empty()) throw SchemaError("n", "need at least one sample");
  if (dedupe_tol <= 0.0)
    dedupe_tol = 1e-4 * std::max(v0.norm(), 1e-30);

  struct Summary {
    Vector v_plus;
    bool terminated = false;
    double s_final = 0.0;
    std::string diagnostic;
  };
  const std::size_t n = family.size();
  std::vector<Summary> summaries(n);

  const auto run_sample = [&](std::size_t i) {
    Summary out;
    try {
      Trajectory t = integrate(problem, v0, family[i], step, s_max, tol);
      out.v_plus = t.v_plus;
      out.terminated = t.terminated;
      out.s_final = t.s_final;
      out.diagnostic = t.diagnostic;
    } catch (const std::exception& e) {
      out.v_plus = v0;
      out.terminated = false;
      out.diagnostic = e.what();
    }
    return out;
  };

  const int workers =
      std::min<int>(worker_count(), static_cast<int>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) summaries[i] = run_sample(i);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = cursor.fetch_add(1)) < n;)
          summaries[i] = run_sample(i);
      });
    for (std::thread& t : pool) t.join();
  }

  OutcomeSet set;
  set.dedupe_tol = dedupe_tol;
  set.total_samples = n;
  for (std::size_t i = 0; i < n; ++i) {
    const Summary& sm = summaries[i];
    Outcome* home = nullptr;
    for (Outcome& p : set.points)
      if (p.terminated == sm.terminated &&
          (p.v_plus - sm.v_plus).norm() <= dedupe_tol) {
        home = &p;
        break;
      }
    if (home) {
      home->multiplicity += 1;
      continue;
    }
    Outcome p;
    p.v_plus = sm.v_plus;
    p.multiplicity = 1;
    p.terminated = sm.terminated;
    p.s_final = sm.s_final;
    p.exemplar_index = i;
    p.strategy = format_strategy(family[i]);
    set.points.push_back(std::move(p));
  }

  // Second pass: recompute only the exemplar trajectories (integration is
  // deterministic per sample, so this reproduces the first pass exactly).
  for (Outcome& p : set.points) {
    try {
      p.exemplar = integrate(problem, v0, family[p.exemplar_index], step,
                             s_max, tol);
    } catch (const std::exception&) {
      // Failure already summarized in the point's flags.
    }
  }
  return set;
}

inline OutcomeSet sample_outcomes(const NormalizedProblem& problem,
                                  const Vector& v0, int n, std::uint64_t seed,
                                  double step, double s_max,
                                  double dedupe_tol = -1.0,
                                  double tol = kDefaultTol) {
  return sample_outcomes(problem, v0, default_family(problem, n, seed), step,
                         s_max, dedupe_tol, tol);
}

}  // namespace impactset
