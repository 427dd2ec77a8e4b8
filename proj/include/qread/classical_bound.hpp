#ifndef QREAD_CLASSICAL_BOUND_HPP
#define QREAD_CLASSICAL_BOUND_HPP

// Error-probability floor for classical (coherent-state mixture) transmitters.

#include <cmath>
#include <string>

#include "qread/errors.hpp"
#include "qread/phase_space.hpp"

namespace qread {

struct FidelityParams {
  double xi0 = 1.0;
  double xi1 = 1.0;
  double omega = 1.0;
  double lambda = 0.0;
  /// ln(omega), kept separately for accuracy when omega is within rounding of 1.
  double log_omega = 0.0;
};

enum class BoundKind { Classical, Chernoff, Bhattacharyya, ChernoffClosedForm };

inline const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::Classical: return "classical";
    case BoundKind::Chernoff: return "chernoff";
    case BoundKind::Bhattacharyya: return "bhattacharyya";
    case BoundKind::ChernoffClosedForm: return "chernoff-closed-form";
  }
  return "unknown";
}

/// A bound on the discrimination error together with the inputs it was computed from.
struct BoundValue {
  double value = 0.5;
  BoundKind kind = BoundKind::Classical;
  CellSpec cell;
  double m = 1.0;
  double energy_n = 0.0;
  /// Minimizing exponent and per-copy overlap; only meaningful for the quantum bounds.
  double t_opt = 0.5;
  double per_copy = 1.0;
};

/// Output variance factor of S_u acting on vacuum.
inline double output_variance_factor(const CellSpec& cell, int u) {
  const double r = cell.r(u);
  return 1.0 + 2.0 * cell.nbar * (1.0 - r) + cell.eps * (1.0 + r);
}

inline FidelityParams fidelity_params(const CellSpec& cell) {
  cell.validate();
  FidelityParams p;
  p.xi0 = output_variance_factor(cell, 0);
  p.xi1 = output_variance_factor(cell, 1);
  // With xi = cosh(theta): omega = cosh^2((theta0 - theta1) / 2), free of cancellation near xi = 1.
  const double d0 = p.xi0 - 1.0;
  const double d1 = p.xi1 - 1.0;
  const double theta0 = std::log1p(d0 + std::sqrt(d0 * (2.0 + d0)));
  const double theta1 = std::log1p(d1 + std::sqrt(d1 * (2.0 + d1)));
  const double half = 0.5 * (theta0 - theta1);
  const double sh = std::sinh(0.5 * half);
  p.log_omega = 2.0 * std::log1p(2.0 * sh * sh);
  p.omega = std::exp(p.log_omega);
  const double dr = std::sqrt(cell.r0) - std::sqrt(cell.r1);
  p.lambda = 2.0 * dr * dr / (p.xi0 + p.xi1);
  return p;
}

/// ln F for the two outputs of |sqrt(n_s)> through S_0 and S_1.
inline double log_coherent_output_fidelity(const FidelityParams& p, double n_s) {
  return -p.log_omega - p.lambda * n_s;
}

inline double coherent_output_fidelity(const CellSpec& cell, double n_s) {
  require(n_s >= 0.0 && std::isfinite(n_s), ErrorKind::InvalidInput, "n_s must be >= 0");
  return std::exp(log_coherent_output_fidelity(fidelity_params(cell), n_s));
}

/// (1 - sqrt(1 - z)) / 2 for z = exp(-s), stable at both ends.
inline double error_from_fidelity_exponent(double s) {
  if (s <= 0.0) return 0.5;
  const double z = std::exp(-s);
  const double one_minus_z = -std::expm1(-s);
  return z / (2.0 * (1.0 + std::sqrt(one_minus_z)));
}

/// Classical discrimination bound C(M, N); M enters only through ln(omega) and may be any real >= 1.
inline BoundValue classical_bound(const CellSpec& cell, double m, double energy_n) {
  cell.validate();
  require(m >= 1.0 && std::isfinite(m), ErrorKind::InvalidInput, "bandwidth must be >= 1");
  require(energy_n >= 0.0 && std::isfinite(energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
  const FidelityParams p = fidelity_params(cell);
  const double s = m * p.log_omega + p.lambda * energy_n;
  BoundValue out;
  out.kind = BoundKind::Classical;
  out.cell = cell;
  out.m = m;
  out.energy_n = energy_n;
  out.value = error_from_fidelity_exponent(s);
  out.per_copy = std::exp(-s / m);
  return out;
}

}  // namespace qread

#endif  // QREAD_CLASSICAL_BOUND_HPP
