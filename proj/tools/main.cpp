#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "impactset/analysis.hpp"
#include "impactset/integrate.hpp"
#include "impactset/normalize.hpp"
#include "impactset/outcomes.hpp"
#include "impactset/routh.hpp"
#include "impactset/scenarios.hpp"
#include "impactset/strategy.hpp"

using namespace impactset;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw SchemaError("scene", "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& path, const std::string& bytes) {
  if (path.empty()) {
    std::cout << bytes;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw SchemaError("output", "cannot write '" + path + "'");
  out << bytes;
}

/// Tabular output: CSV per RFC 4180 (CRLF rows) or the same table as a JSON
/// object. All numbers carry 17 significant digits so reruns are
/// byte-identical and parse back to the same doubles.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string out;
    const auto row = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += "\r\n";
    };
    row(header);
    for (const auto& r : rows) row(r);
    return out;
  }

  std::string json() const {
    std::string out = "{\n  \"header\": [";
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out += ", ";
      out += '"' + header[i] + '"';
    }
    out += "],\n  \"rows\": [\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out += "    [";
      for (std::size_t i = 0; i < rows[r].size(); ++i) {
        if (i) out += ", ";
        out += rows[r][i];
      }
      out += r + 1 < rows.size() ? "],\n" : "]\n";
    }
    out += "  ]\n}\n";
    return out;
  }

  std::string render(const std::string& format) const {
    return format == "json" ? json() : csv();
  }
};

std::string num(double x) { return impactset::detail::number17(x); }

void seed_strategy(SelectionStrategy& strategy, std::uint64_t seed) {
  if (auto* d = std::get_if<DirichletRandomStrategy>(&strategy.kind))
    d->seed = seed;
  else if (auto* v = std::get_if<VertexRandomStrategy>(&strategy.kind))
    v->seed = seed;
  strategy.sticking_seed = seed;
}

struct Options {
  std::string scene_path;
  std::string strategy = "simultaneous";
  std::string output;
  std::string format = "csv";
  std::string property;
  double step = 0.0;    // 0: scene default
  double s_max = 0.0;   // 0: safeguard horizon
  int n_samples = 100;
  std::uint64_t seed = 0;
};

struct Loaded {
  Scene scene;
  NormalizedProblem problem;
  Vector w0;
  double step = 0.0;
  double s_max = 0.0;
};

Loaded load(const Options& opt) {
  Loaded run;
  run.scene = parse_scene(slurp(opt.scene_path));
  run.problem = normalize(run.scene.problem);
  run.w0 = run.problem.to_normalized(run.scene.v0);
  run.step = opt.step > 0.0 ? opt.step : run.scene.step;
  run.s_max =
      opt.s_max > 0.0 ? opt.s_max : safeguard_horizon(run.problem, run.w0);
  return run;
}

int cmd_resolve(const Options& opt) {
  Loaded run = load(opt);
  SelectionStrategy strategy = parse_strategy(opt.strategy);
  seed_strategy(strategy, opt.seed);

  const Trajectory t = integrate(run.problem, run.w0, strategy, run.step,
                                 run.s_max, run.scene.tol);

  Table table;
  table.header.push_back("s");
  for (Eigen::Index i = 0; i < run.problem.dim; ++i)
    table.header.push_back("v_" + std::to_string(i));
  for (const Contact& c : run.problem.contacts)
    table.header.push_back("lambda_n_" + c.id);
  table.header.push_back("K");

  for (const TrajectorySample& sample : t.samples) {
    std::vector<std::string> row;
    row.push_back(num(sample.s));
    const Vector v = run.problem.from_normalized(sample.v);
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(num(v[i]));
    for (Eigen::Index i = 0;
         i < static_cast<Eigen::Index>(run.problem.contacts.size()); ++i)
      row.push_back(num(sample.lambda.size() > i ? sample.lambda[i] : 0.0));
    row.push_back(num(kinetic_energy(sample.v)));
    table.rows.push_back(std::move(row));
  }
  emit(opt.output, table.render(opt.format));

  if (!t.terminated) {
    std::cerr << "did not terminate: " << t.diagnostic << "\n";
    return 3;
  }
  return 0;
}

int cmd_sample(const Options& opt) {
  Loaded run = load(opt);
  const OutcomeSet set =
      sample_outcomes(run.problem, run.w0, opt.n_samples, opt.seed, run.step,
                      run.s_max, run.scene.dedupe_tol, run.scene.tol);

  Table table;
  for (Eigen::Index i = 0; i < run.problem.dim; ++i)
    table.header.push_back("v_plus_" + std::to_string(i));
  table.header.push_back("multiplicity");
  table.header.push_back("terminated");

  for (const Outcome& point : set.points) {
    std::vector<std::string> row;
    const Vector v = run.problem.from_normalized(point.v_plus);
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(num(v[i]));
    row.push_back(std::to_string(point.multiplicity));
    row.push_back(point.terminated ? "1" : "0");
    table.rows.push_back(std::move(row));
  }
  emit(opt.output, table.render(opt.format));
  return 0;
}

int cmd_check(const Options& opt) {
  Loaded run = load(opt);
  std::string report;
  bool pass = false;

  if (opt.property == "dissipation") {
    SelectionStrategy strategy = parse_strategy(opt.strategy);
    seed_strategy(strategy, opt.seed);
    const Trajectory t = integrate(run.problem, run.w0, strategy, run.step,
                                   run.s_max, run.scene.tol);
    const DissipationReport rep = check_dissipation(t, 1e-9);
    pass = rep.pass;
    report = "dissipation: " + std::string(pass ? "PASS" : "FAIL") +
             " max_increase=" + num(rep.max_increase) +
             " strict_while_penetrating=" +
             (rep.strict_while_penetrating ? "yes" : "no") + "\n";
  } else if (opt.property == "homogeneity") {
    SelectionStrategy strategy = parse_strategy(opt.strategy);
    seed_strategy(strategy, opt.seed);
    const Trajectory base = integrate(run.problem, run.w0, strategy, run.step,
                                      run.s_max, run.scene.tol);
    pass = base.terminated;
    report = "homogeneity:";
    for (double k : {0.1, 10.0}) {
      const Trajectory scaled =
          integrate(run.problem, Vector(k * run.w0), strategy, k * run.step,
                    k * run.s_max, k * run.scene.tol);
      const double err = (scaled.v_plus - k * base.v_plus).norm() / k;
      pass = pass && scaled.terminated && err <= 1e-8;
      report += " err(k=" + num(k) + ")=" + num(err);
    }
    report += std::string(" ") + (pass ? "PASS" : "FAIL") + "\n";
  } else if (opt.property == "degeneracy") {
    const DegeneracyVerdict verdict = check_nondegenerate(
        run.problem, opt.n_samples, opt.seed, 1e-7, run.scene.tol);
    if (verdict.degenerate()) {
      const DegenerateAt& hit = std::get<DegenerateAt>(verdict.verdict);
      const Vector witness = run.problem.from_normalized(hit.v);
      report = "degeneracy: FAIL min_norm=" + num(hit.min_norm) + " witness=";
      for (Eigen::Index i = 0; i < witness.size(); ++i) {
        if (i) report += ',';
        report += num(witness[i]);
      }
      report += "\n";
      pass = false;
    } else {
      const auto& clear = std::get<LikelyNonDegenerate>(verdict.verdict);
      report = "degeneracy: PASS min_observed=" + num(clear.min_observed) +
               " samples=" + std::to_string(clear.samples) + "\n";
      pass = true;
    }
  } else if (opt.property == "termination") {
    SelectionStrategy strategy = parse_strategy(opt.strategy);
    seed_strategy(strategy, opt.seed);
    const Trajectory t = integrate(run.problem, run.w0, strategy, run.step,
                                   run.s_max, run.scene.tol);
    pass = t.terminated;
    report = "termination: " + std::string(pass ? "PASS" : "FAIL") +
             " s_final=" + num(t.s_final) + " horizon=" + num(run.s_max);
    if (!pass) report += " (" + t.diagnostic + ")";
    report += "\n";
  } else {
    throw SchemaError("property",
                      "expected dissipation|homogeneity|degeneracy|termination");
  }

  emit(opt.output, report);
  return pass ? 0 : 1;
}

int cmd_bound(const Options& opt) {
  Loaded run = load(opt);
  Table table;
  table.header = {"id", "epsilon", "termination_bound"};
  for (const Contact& c : run.problem.contacts) {
    const TerminationBound bound = termination_bound_single(c);
    table.rows.push_back({c.id, num(bound.epsilon), num(bound.bound)});
  }
  emit(opt.output, table.render(opt.format));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"set-valued rigid impact resolver"};
  app.require_subcommand(1);

  Options opt;
  const auto add_common = [&](CLI::App* cmd, bool needs_strategy) {
    cmd->add_option("--scene", opt.scene_path, "scene JSON file")->required();
    cmd->add_option("--output", opt.output, "output path (default stdout)");
    cmd->add_option("--format", opt.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--step", opt.step, "integrator step (default: scene)");
    cmd->add_option("--s-max", opt.s_max,
                    "integration horizon (default: safeguard bound)");
    cmd->add_option("--seed", opt.seed, "random seed");
    if (needs_strategy)
      cmd->add_option("--strategy", opt.strategy,
                      "simultaneous | sequential:<ids> | "
                      "dirichlet:<alpha>:<resample> | vertex:<dwell> "
                      "[+stick=hold|random]");
  };

  CLI::App* resolve = app.add_subcommand("resolve", "integrate one impact");
  add_common(resolve, true);

  CLI::App* sample =
      app.add_subcommand("sample", "sample the set of outcomes");
  add_common(sample, false);
  sample->add_option("--n", opt.n_samples, "number of samples");

  CLI::App* check = app.add_subcommand("check", "run a property check");
  add_common(check, true);
  check->add_option("--property", opt.property,
                    "dissipation | homogeneity | degeneracy | termination")
      ->required();
  check->add_option("--n", opt.n_samples, "degeneracy sample count");

  CLI::App* bound =
      app.add_subcommand("bound", "per-contact termination bounds");
  add_common(bound, false);

  try {
    app.parse(argc, argv);
    if (resolve->parsed()) return cmd_resolve(opt);
    if (sample->parsed()) return cmd_sample(opt);
    if (check->parsed()) return cmd_check(opt);
    if (bound->parsed()) return cmd_bound(opt);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const SchemaError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
