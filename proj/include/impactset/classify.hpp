#pragma once

#include <vector>

#include "impactset/types.hpp"

namespace impactset {

/// Per-contact status of a velocity relative to the contact surface.
/// Active: approaching (jn v < -tol). Inactive: separating (jn v > tol).
enum class ContactStatus { Active, Boundary, Inactive };

/// Global status: Penetrating iff some contact is Active; Separated iff all
/// contacts are Inactive; Boundary otherwise.
enum class GlobalStatus { Penetrating, Boundary, Separated };

struct Classification {
  std::vector<ContactStatus> contact_status;
  GlobalStatus global = GlobalStatus::Separated;

  bool penetrating() const { return global == GlobalStatus::Penetrating; }

  /// Eligible to receive impulse: Active or Boundary (jn v <= tol).
  bool eligible(std::size_t c) const {
    return contact_status[c] != ContactStatus::Inactive;
  }

  bool active(std::size_t c) const {
    return contact_status[c] == ContactStatus::Active;
  }
};

inline Classification classify(const NormalizedProblem& problem,
                               const Vector& v, double tol = kDefaultTol) {
  if (v.size() != problem.dim)
    throw DimensionError("classify: velocity has wrong dimension");
  Classification out;
  out.contact_status.reserve(problem.contacts.size());
  bool any_active = false;
  bool all_inactive = true;
  for (const Contact& c : problem.contacts) {
    const double rate = c.jn.dot(v);
    ContactStatus s = ContactStatus::Boundary;
    if (rate < -tol)
      s = ContactStatus::Active;
    else if (rate > tol)
      s = ContactStatus::Inactive;
    any_active |= (s == ContactStatus::Active);
    all_inactive &= (s == ContactStatus::Inactive);
    out.contact_status.push_back(s);
  }
  if (problem.contacts.empty()) all_inactive = true;
  out.global = any_active      ? GlobalStatus::Penetrating
               : all_inactive  ? GlobalStatus::Separated
                               : GlobalStatus::Boundary;
  return out;
}

}  // namespace impactset
