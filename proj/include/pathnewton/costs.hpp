#pragma once

#include <optional>
#include <string>

#include "pathnewton/common.hpp"

namespace pathnewton {

enum class CostKind {
  Zero,           // identically 0
  Quadratic,      // q/2*(z-t)^2 + l*z
  PowerMonomial,  // c*z^k on z >= 0, integer k >= 2
  KleinrockDelay, // z/(cap-z) on z < cap
  NegPartPenalty, // c/2*max(0,-z)^2
};

// Scalar twice-differentiable cost, the R_p / D_a families. Value semantics;
// parameters are interpreted per `kind` (unused slots stay zero).
struct ScalarCostFn {
  CostKind kind = CostKind::Zero;
  double q = 0.0;   // Quadratic curvature (>= 0)
  double t = 0.0;   // Quadratic target
  double l = 0.0;   // Quadratic linear coefficient
  double coeff = 0.0; // PowerMonomial c (> 0), NegPartPenalty c (> 0)
  int exponent = 0;   // PowerMonomial k (>= 2)
  double cap = 0.0;   // KleinrockDelay capacity (> 0)

  static ScalarCostFn zero();
  static ScalarCostFn quadratic(double q, double t, double l);
  static ScalarCostFn power_monomial(double c, int k);
  static ScalarCostFn kleinrock(double cap);
  static ScalarCostFn neg_part_penalty(double c);

  bool operator==(const ScalarCostFn&) const = default;
};

struct EvalTriple {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Value and first two derivatives at z. Throws DomainViolation when z is
// outside the effective domain; `where` labels the offending variable in
// the error message.
EvalTriple eval(const ScalarCostFn& fn, double z, const std::string& where = "z");

// Open-domain bounds used to cap trial stepsizes. +/-inf when unbounded.
double domain_upper(const ScalarCostFn& fn);
double domain_lower(const ScalarCostFn& fn);

// True when z can be evaluated (inside the effective domain).
bool in_domain(const ScalarCostFn& fn, double z);

// Parameter sign/shape check; nullopt when the parameters are valid.
std::optional<std::string> invalid_reason(const ScalarCostFn& fn);

const char* cost_kind_name(CostKind kind);

} // namespace pathnewton
