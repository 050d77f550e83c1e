#include "pathnewton/costs.hpp"

#include <cmath>

namespace pathnewton {

ScalarCostFn ScalarCostFn::zero() { return {}; }

ScalarCostFn ScalarCostFn::quadratic(double q, double t, double l) {
  if (!(q >= 0.0) || !std::isfinite(q) || !std::isfinite(t) || !std::isfinite(l))
    throw ContractViolation("Quadratic requires finite params and q >= 0");
  ScalarCostFn fn;
  fn.kind = CostKind::Quadratic;
  fn.q = q;
  fn.t = t;
  fn.l = l;
  return fn;
}

ScalarCostFn ScalarCostFn::power_monomial(double c, int k) {
  if (!(c > 0.0) || !std::isfinite(c) || k < 2)
    throw ContractViolation("PowerMonomial requires c > 0 and integer k >= 2");
  ScalarCostFn fn;
  fn.kind = CostKind::PowerMonomial;
  fn.coeff = c;
  fn.exponent = k;
  return fn;
}

ScalarCostFn ScalarCostFn::kleinrock(double cap) {
  if (!(cap > 0.0) || !std::isfinite(cap))
    throw ContractViolation("KleinrockDelay requires cap > 0");
  ScalarCostFn fn;
  fn.kind = CostKind::KleinrockDelay;
  fn.cap = cap;
  return fn;
}

ScalarCostFn ScalarCostFn::neg_part_penalty(double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw ContractViolation("NegPartPenalty requires c > 0");
  ScalarCostFn fn;
  fn.kind = CostKind::NegPartPenalty;
  fn.coeff = c;
  return fn;
}

namespace {

// z^k for integer k >= 0 by repeated multiplication; exact enough at the
// small exponents the instances use and keeps results reproducible.
double ipow(double z, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

} // namespace

EvalTriple eval(const ScalarCostFn& fn, double z, const std::string& where) {
  switch (fn.kind) {
    case CostKind::Zero:
      return {0.0, 0.0, 0.0};
    case CostKind::Quadratic: {
      const double d = z - fn.t;
      return {0.5 * fn.q * d * d + fn.l * z, fn.q * d + fn.l, fn.q};
    }
    case CostKind::PowerMonomial: {
      if (z < 0.0) throw DomainViolation(where, 0.0, z);
      const int k = fn.exponent;
      const double d2 =
          (k == 2) ? 2.0 * fn.coeff : fn.coeff * k * (k - 1) * ipow(z, k - 2);
      return {fn.coeff * ipow(z, k), fn.coeff * k * ipow(z, k - 1), d2};
    }
    case CostKind::KleinrockDelay: {
      if (z >= fn.cap) throw DomainViolation(where, fn.cap, z);
      const double u = fn.cap - z;
      return {z / u, fn.cap / (u * u), 2.0 * fn.cap / (u * u * u)};
    }
    case CostKind::NegPartPenalty: {
      // Only C^1 at 0; d2(0) is taken as 0 (the convex side's limit from
      // the right), derivatives are sampled pointwise by the solvers.
      if (z < 0.0) return {0.5 * fn.coeff * z * z, fn.coeff * z, fn.coeff};
      return {0.0, 0.0, 0.0};
    }
  }
  throw ContractViolation("unknown cost kind");
}

double domain_upper(const ScalarCostFn& fn) {
  return fn.kind == CostKind::KleinrockDelay ? fn.cap : kInf;
}

double domain_lower(const ScalarCostFn& fn) {
  return fn.kind == CostKind::PowerMonomial ? 0.0 : -kInf;
}

bool in_domain(const ScalarCostFn& fn, double z) {
  switch (fn.kind) {
    case CostKind::PowerMonomial: return z >= 0.0;
    case CostKind::KleinrockDelay: return z < fn.cap;
    default: return true;
  }
}

std::optional<std::string> invalid_reason(const ScalarCostFn& fn) {
  switch (fn.kind) {
    case CostKind::Zero:
      return std::nullopt;
    case CostKind::Quadratic:
      if (!std::isfinite(fn.q) || !std::isfinite(fn.t) || !std::isfinite(fn.l))
        return "Quadratic parameters must be finite";
      if (fn.q < 0.0) return "Quadratic curvature q must be >= 0";
      return std::nullopt;
    case CostKind::PowerMonomial:
      if (!std::isfinite(fn.coeff) || fn.coeff <= 0.0)
        return "PowerMonomial coefficient must be > 0";
      if (fn.exponent < 2) return "PowerMonomial exponent must be >= 2";
      return std::nullopt;
    case CostKind::KleinrockDelay:
      if (!std::isfinite(fn.cap) || fn.cap <= 0.0)
        return "KleinrockDelay capacity must be > 0";
      return std::nullopt;
    case CostKind::NegPartPenalty:
      if (!std::isfinite(fn.coeff) || fn.coeff <= 0.0)
        return "NegPartPenalty coefficient must be > 0";
      return std::nullopt;
  }
  return "unknown cost kind";
}

const char* cost_kind_name(CostKind kind) {
  switch (kind) {
    case CostKind::Zero: return "Zero";
    case CostKind::Quadratic: return "Quadratic";
    case CostKind::PowerMonomial: return "PowerMonomial";
    case CostKind::KleinrockDelay: return "KleinrockDelay";
    case CostKind::NegPartPenalty: return "NegPartPenalty";
  }
  return "?";
}

} // namespace pathnewton
