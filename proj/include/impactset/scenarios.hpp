#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "impactset/types.hpp"

namespace impactset {

/// A contact problem bundled with its initial velocity and the run
/// parameters a scene file may override. dedupe_tol < 0 means "derive from
/// the initial speed" (outcome sampling's default).
struct Scene {
  ContactProblem problem;
  Vector v0;
  double tol = kDefaultTol;
  double step = 1e-4;
  double dedupe_tol = -1.0;
};

/// Planar rigid body on two feet at (-a, -h) and (a, -h) from the center of
/// mass, both striking a horizontal floor. Coordinates (x, y, rotation);
/// contact rows are [normal; lever arm] for the floor normal (0, 1) and
/// tangent (1, 0) at each foot.
inline Scene build_rimless_wheel(double half_spacing = 1.0, double height = 1.0,
                                 double mass = 1.0, double inertia = 1.0,
                                 double mu = 10.0) {
  if (half_spacing <= 0.0)
    throw SchemaError("half_spacing", "must be positive");
  if (height <= 0.0) throw SchemaError("height", "must be positive");
  if (mass <= 0.0) throw SchemaError("mass", "must be positive");
  if (inertia <= 0.0) throw SchemaError("inertia", "must be positive");
  if (mu <= 0.0) throw SchemaError("mu", "must be positive");

  Scene scene;
  scene.problem.dim = 3;
  scene.problem.mass = Eigen::Vector3d(mass, mass, inertia).asDiagonal();

  Contact a;
  a.id = "A";
  a.jn = Eigen::RowVector3d(0, 1, -half_spacing);
  a.jt = TangentJacobian::Zero(2, 3);
  a.jt->row(0) = Eigen::RowVector3d(1, 0, height);
  a.mu = mu;
  Contact b = a;
  b.id = "B";
  b.jn = Eigen::RowVector3d(0, 1, half_spacing);
  scene.problem.contacts = {a, b};

  scene.v0 = Eigen::Vector3d(0, -1, 0);
  return scene;
}

/// Planar box sliding toward a wall: frictional bottom contact A at the
/// lower-right corner (floor normal (0, 1)), frictionless wall contact B at
/// the upper-right corner (wall normal (-1, 0)). The default initial
/// velocity slides the bottom corner rightward while the box tips into the
/// wall. mu_bottom = 0 builds A frictionless.
inline Scene build_box_push(double width = 1.0, double height = 1.0,
                            double mass = 1.0, double inertia = 1.0,
                            double mu_bottom = 0.5,
                            const Vector& v0 = Eigen::Vector3d(0.3, -0.2,
                                                               -1.0)) {
  if (width <= 0.0) throw SchemaError("width", "must be positive");
  if (height <= 0.0) throw SchemaError("height", "must be positive");
  if (mass <= 0.0) throw SchemaError("mass", "must be positive");
  if (inertia <= 0.0) throw SchemaError("inertia", "must be positive");
  if (mu_bottom < 0.0) throw SchemaError("mu_bottom", "must be nonnegative");
  if (v0.size() != 3) throw SchemaError("v0", "must have 3 components");

  Scene scene;
  scene.problem.dim = 3;
  scene.problem.mass = Eigen::Vector3d(mass, mass, inertia).asDiagonal();

  Contact a;
  a.id = "A";
  a.jn = Eigen::RowVector3d(0, 1, width / 2);
  if (mu_bottom > 0.0) {
    a.jt = TangentJacobian::Zero(2, 3);
    a.jt->row(0) = Eigen::RowVector3d(1, 0, height / 2);
    a.mu = mu_bottom;
  }
  Contact b;
  b.id = "B";
  b.jn = Eigen::RowVector3d(-1, 0, height / 2);
  scene.problem.contacts = {a, b};

  scene.v0 = v0;
  return scene;
}

namespace detail {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string number17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void append_array(std::string& out, const double* data,
                         Eigen::Index n) {
  out += '[';
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) out += ", ";
    out += number17(data[i]);
  }
  out += ']';
}

using json = nlohmann::json;

[[noreturn]] inline void reject(const std::string& field,
                                const std::string& reason) {
  throw SchemaError(field, reason);
}

inline void require_keys(const json& obj, const std::string& path,
                         const std::vector<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const std::string& k : allowed) known |= (item.key() == k);
    if (!known) reject(path + "." + item.key(), "unknown field");
  }
}

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) reject(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) reject(path, "must be finite");
  return x;
}

inline Vector vector_at(const json& j, const std::string& path,
                        Eigen::Index expected) {
  if (!j.is_array()) reject(path, "expected an array of numbers");
  if (static_cast<Eigen::Index>(j.size()) != expected)
    reject(path, "expected " + std::to_string(expected) + " entries, got " +
                     std::to_string(j.size()));
  Vector out(expected);
  for (Eigen::Index i = 0; i < expected; ++i)
    out[i] = number_at(j[static_cast<std::size_t>(i)],
                       path + "[" + std::to_string(i) + "]");
  return out;
}

}  // namespace detail

/// Canonical textual form: fixed key order, one contact per line, every
/// number at 17 significant digits. parse(serialize(s)) reproduces s and
/// serialize is a pure function of the values, so round-trips are
/// byte-stable.
inline std::string serialize_scene(const Scene& scene) {
  const ContactProblem& p = scene.problem;
  std::string out;
  out += "{\n";
  out += "  \"dim\": " + std::to_string(p.dim) + ",\n";

  out += "  \"mass\": ";
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(p.dim * p.dim));
  for (Eigen::Index r = 0; r < p.dim; ++r)
    for (Eigen::Index c = 0; c < p.dim; ++c) flat.push_back(p.mass(r, c));
  detail::append_array(out, flat.data(), static_cast<Eigen::Index>(flat.size()));
  out += ",\n";

  out += "  \"contacts\": [\n";
  for (std::size_t i = 0; i < p.contacts.size(); ++i) {
    const Contact& c = p.contacts[i];
    out += "    {\"id\": \"" + c.id + "\", \"jn\": ";
    detail::append_array(out, c.jn.data(), c.jn.cols());
    if (c.jt) {
      out += ", \"jt\": [";
      const Eigen::RowVectorXd row0 = c.jt->row(0);
      detail::append_array(out, row0.data(), c.jt->cols());
      out += ", ";
      const Eigen::RowVectorXd row1 = c.jt->row(1);
      detail::append_array(out, row1.data(), c.jt->cols());
      out += "]";
    }
    out += ", \"mu\": " + detail::number17(c.mu) + "}";
    if (i + 1 < p.contacts.size()) out += ",";
    out += "\n";
  }
  out += "  ],\n";

  out += "  \"v0\": ";
  detail::append_array(out, scene.v0.data(), scene.v0.size());
  out += ",\n";

  out += "  \"tol\": " + detail::number17(scene.tol) + ",\n";
  out += "  \"step\": " + detail::number17(scene.step);
  if (scene.dedupe_tol > 0.0)
    out += ",\n  \"dedupe_tol\": " + detail::number17(scene.dedupe_tol);
  out += "\n}\n";
  return out;
}

/// Strict parse: unknown fields, wrong types, wrong lengths, and physically
/// invalid values all raise SchemaError naming the offending field.
inline Scene parse_scene(const std::string& bytes) {
  detail::json j;
  try {
    j = detail::json::parse(bytes);
  } catch (const detail::json::parse_error& e) {
    throw SchemaError("json", e.what());
  }
  if (!j.is_object()) detail::reject("json", "top level must be an object");
  detail::require_keys(
      j, "scene", {"dim", "mass", "contacts", "v0", "tol", "step",
                   "dedupe_tol"});
  for (const char* key : {"dim", "mass", "contacts", "v0"})
    if (!j.contains(key)) detail::reject(key, "missing required field");

  Scene scene;
  if (!j["dim"].is_number_integer() || j["dim"].get<long>() <= 0)
    detail::reject("dim", "expected a positive integer");
  const Eigen::Index dim = j["dim"].get<Eigen::Index>();
  scene.problem.dim = dim;

  const Vector mass_flat =
      detail::vector_at(j["mass"], "mass", dim * dim);
  scene.problem.mass.resize(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c)
      scene.problem.mass(r, c) = mass_flat[r * dim + c];

  if (!j["contacts"].is_array())
    detail::reject("contacts", "expected an array");
  for (std::size_t i = 0; i < j["contacts"].size(); ++i) {
    const detail::json& cj = j["contacts"][i];
    const std::string path = "contacts[" + std::to_string(i) + "]";
    if (!cj.is_object()) detail::reject(path, "expected an object");
    detail::require_keys(cj, path, {"id", "jn", "jt", "mu"});
    for (const char* key : {"id", "jn", "mu"})
      if (!cj.contains(key))
        detail::reject(path + "." + key, "missing required field");

    Contact c;
    if (!cj["id"].is_string() || cj["id"].get<std::string>().empty())
      detail::reject(path + ".id", "expected a nonempty string");
    c.id = cj["id"].get<std::string>();
    for (const Contact& prev : scene.problem.contacts)
      if (prev.id == c.id) detail::reject(path + ".id", "duplicate contact id");

    c.jn = detail::vector_at(cj["jn"], path + ".jn", dim).transpose();
    if (cj.contains("jt")) {
      const detail::json& tj = cj["jt"];
      if (!tj.is_array() || tj.size() != 2)
        detail::reject(path + ".jt", "expected exactly 2 tangent rows");
      TangentJacobian jt(2, dim);
      jt.row(0) =
          detail::vector_at(tj[0], path + ".jt[0]", dim).transpose();
      jt.row(1) =
          detail::vector_at(tj[1], path + ".jt[1]", dim).transpose();
      c.jt = jt;
    }
    c.mu = detail::number_at(cj["mu"], path + ".mu");
    scene.problem.contacts.push_back(std::move(c));
  }

  scene.v0 = detail::vector_at(j["v0"], "v0", dim);

  if (j.contains("tol")) {
    scene.tol = detail::number_at(j["tol"], "tol");
    if (scene.tol <= 0.0) detail::reject("tol", "must be positive");
  }
  if (j.contains("step")) {
    scene.step = detail::number_at(j["step"], "step");
    if (scene.step <= 0.0) detail::reject("step", "must be positive");
  }
  if (j.contains("dedupe_tol")) {
    scene.dedupe_tol = detail::number_at(j["dedupe_tol"], "dedupe_tol");
    if (scene.dedupe_tol <= 0.0) detail::reject("dedupe_tol", "must be positive");
  }

  try {
    scene.problem.validate();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError("scene", e.what());
  }
  if (Eigen::LLT<Matrix>(scene.problem.mass).info() != Eigen::Success)
    detail::reject("mass", "must be positive definite");
  return scene;
}

}  // namespace impactset
