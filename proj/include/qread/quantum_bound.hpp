#ifndef QREAD_QUANTUM_BOUND_HPP
#define QREAD_QUANTUM_BOUND_HPP

// Upper bounds on the EPR-transmitter error: t-powered Gaussian overlaps
// Tr(rho0^t rho1^(1-t)), quantum Chernoff and Bhattacharyya bounds, and the
// pure-loss closed and asymptotic forms.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "qread/classical_bound.hpp"
#include "qread/errors.hpp"
#include "qread/phase_space.hpp"

namespace qread {

enum class OverlapMethod { GaussianClosedForm, FockOracle };

struct OverlapResult {
  double value = 1.0;
  double t = 0.5;
  OverlapMethod method = OverlapMethod::GaussianClosedForm;
};

/// V = S diag(nu_1, nu_1, ..., nu_n, nu_n) S^T with S symplectic; nu kept in mode order, not sorted.
struct NormalModeDecomposition {
  std::vector<double> nu;
  Eigen::MatrixXd s;

  bool pure(double tol = 1e-9) const {
    for (double v : nu)
      if (std::abs(v - 1.0) >= tol) return false;
    return true;
  }
};

namespace detail {

inline constexpr double kPureModeTol = 1e-9;

/// G_p(nu) = 2^p / [(nu+1)^p - (nu-1)^p]; G_p(1) = 1.
inline double overlap_prefactor(double p, double nu) {
  if (std::abs(nu - 1.0) < kPureModeTol) return 1.0;
  // (nu+1)^p - (nu-1)^p = (nu+1)^p * (1 - rho^p), rho = (nu-1)/(nu+1)
  const double log_rho = std::log((nu - 1.0) / (nu + 1.0));
  const double one_minus = -std::expm1(p * log_rho);
  return std::exp(p * (std::log(2.0) - std::log(nu + 1.0))) / one_minus;
}

/// Lambda_p(nu) = [(nu+1)^p + (nu-1)^p] / [(nu+1)^p - (nu-1)^p]; Lambda_p(1) = 1.
inline double overlap_lambda(double p, double nu) {
  if (std::abs(nu - 1.0) < kPureModeTol) return 1.0;
  const double log_rho = std::log((nu - 1.0) / (nu + 1.0));
  const double rho_p = std::exp(p * log_rho);
  return (1.0 + rho_p) / -std::expm1(p * log_rho);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Closed-form normal-mode decomposition for one mode, or for a two-mode CM in
/// standard form [[a I, c Z], [c Z, b I]].
inline NormalModeDecomposition normal_mode_decomposition(const Eigen::MatrixXd& v) {
  NormalModeDecomposition out;
  if (v.rows() == 2) {
    const double det = v.determinant();
    require(det > 0.0, ErrorKind::NumericalFailure, "one-mode CM is not positive definite");
    const double nu = std::sqrt(det);
    const Eigen::Matrix2d a = v / nu;  // det a = 1
    // sqrt of a 2x2 SPD matrix with unit determinant: (A + I) / sqrt(tr A + 2)
    const Eigen::Matrix2d root = (a + Eigen::Matrix2d::Identity()) / std::sqrt(a.trace() + 2.0);
    out.nu = {nu};
    out.s = root;
    return out;
  }
  require(v.rows() == 4 && v.cols() == 4, ErrorKind::InvalidInput,
          "normal-mode decomposition supports one- and two-mode states");
  const double scale = std::max(1.0, detail::max_abs(v));
  const double tol = 1e-10 * scale;
  const bool standard = std::abs(v(0, 1)) <= tol && std::abs(v(0, 0) - v(1, 1)) <= tol &&
                        std::abs(v(2, 3)) <= tol && std::abs(v(2, 2) - v(3, 3)) <= tol &&
                        std::abs(v(0, 3)) <= tol && std::abs(v(1, 2)) <= tol &&
                        std::abs(v(0, 2) + v(1, 3)) <= tol;
  require(standard, ErrorKind::NumericalFailure, "two-mode CM is not in [[aI, cZ], [cZ, bI]] standard form");
  const double a = 0.5 * (v(0, 0) + v(1, 1));
  const double b = 0.5 * (v(2, 2) + v(3, 3));
  const double c = 0.5 * (v(0, 2) - v(1, 3));
  const double sum_minus = a + b - 2.0 * std::abs(c);
  require(sum_minus > 0.0, ErrorKind::NumericalFailure, "two-mode CM is not positive definite");
  const double s = std::sqrt(sum_minus * (a + b + 2.0 * std::abs(c)));
  out.nu = {0.5 * (s + a - b), 0.5 * (s - a + b)};
  const double r = 0.5 * std::atanh(2.0 * c / (a + b));
  const double ch = std::cosh(r);
  const double sh = std::sinh(r);
  out.s = Eigen::MatrixXd::Zero(4, 4);
  out.s.block<2, 2>(0, 0) = ch * Eigen::Matrix2d::Identity();
  out.s.block<2, 2>(2, 2) = ch * Eigen::Matrix2d::Identity();
  out.s.block<2, 2>(0, 2) = sh * pauli_z();
  out.s.block<2, 2>(2, 0) = sh * pauli_z();
  return out;
}

namespace detail {

/// Tr(rho0^t rho1^(1-t)) for t in [0, 1]. The endpoints are only defined when
/// the state carrying the vanishing exponent is pure; otherwise NaN.
inline double overlap_value(const NormalModeDecomposition& d0, const NormalModeDecomposition& d1, double t) {
  const double u = 1.0 - t;
  if ((t == 0.0 && !d0.pure()) || (u == 0.0 && !d1.pure())) return std::nan("");
  const Eigen::Index dim = d0.s.rows();
  Eigen::VectorXd diag0(dim), diag1(dim);
  double prefactor = 1.0;
  for (std::size_t k = 0; k < d0.nu.size(); ++k) {
    prefactor *= overlap_prefactor(t, d0.nu[k]) * overlap_prefactor(u, d1.nu[k]);
    diag0.segment<2>(2 * k).setConstant(overlap_lambda(t, d0.nu[k]));
    diag1.segment<2>(2 * k).setConstant(overlap_lambda(u, d1.nu[k]));
  }
  const Eigen::MatrixXd sigma =
      0.5 * (d0.s * diag0.asDiagonal() * d0.s.transpose() + d1.s * diag1.asDiagonal() * d1.s.transpose());
  const double det = sigma.determinant();
  if (!(det > 0.0)) return std::nan("");
  return prefactor / std::sqrt(det);
}

}  // namespace detail

inline OverlapResult gaussian_overlap(const GaussianState& state0, const GaussianState& state1, double t) {
  require(t > 0.0 && t < 1.0, ErrorKind::InvalidInput, "overlap exponent t must lie in (0,1)");
  require(state0.n_modes() == state1.n_modes(), ErrorKind::InvalidInput, "states have different mode counts");
  require(state0.n_modes() <= 2, ErrorKind::InvalidInput, "overlap implemented for one- and two-mode states");
  require(state0.zero_mean() && state1.zero_mean(), ErrorKind::InvalidInput, "overlap requires zero-mean states");
  const auto d0 = normal_mode_decomposition(state0.cm());
  const auto d1 = normal_mode_decomposition(state1.cm());
  const double value = detail::overlap_value(d0, d1, t);
  require(std::isfinite(value), ErrorKind::NumericalFailure, "overlap evaluation failed");
  return {value, t, OverlapMethod::GaussianClosedForm};
}

struct OverlapMinimum {
  double value = 1.0;
  double t = 0.5;
  int evaluations = 0;
};

struct MinimizerOptions {
  double t_lo = 1e-6;
  double t_hi = 1.0 - 1e-6;
  int grid_points = 33;
  double t_tol = 1e-10;
};

/// inf over t of Tr(rho0^t rho1^(1-t)): grid seed, golden-section refinement,
/// plus the exact endpoint limits where they exist.
inline OverlapMinimum minimize_overlap(const NormalModeDecomposition& d0, const NormalModeDecomposition& d1,
                                       const MinimizerOptions& opt = {}) {
  OverlapMinimum best{std::numeric_limits<double>::infinity(), 0.5, 0};
  auto eval = [&](double t) {
    ++best.evaluations;
    return detail::overlap_value(d0, d1, t);
  };
  const int n = opt.grid_points;
  std::vector<double> ts(n), vs(n);
  int arg = -1;
  for (int i = 0; i < n; ++i) {
    ts[i] = opt.t_lo + (opt.t_hi - opt.t_lo) * i / (n - 1);
    vs[i] = eval(ts[i]);
    if (std::isfinite(vs[i]) && (arg < 0 || vs[i] < vs[arg])) arg = i;
  }
  require(arg >= 0, ErrorKind::NumericalFailure, "overlap is not finite anywhere on the t grid");
  best.value = vs[arg];
  best.t = ts[arg];

  double a = ts[std::max(arg - 1, 0)];
  double b = ts[std::min(arg + 1, n - 1)];
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  int guard = 0;
  while (b - a > opt.t_tol && guard++ < 200) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = eval(x2);
    }
  }
  require(b - a <= opt.t_tol, ErrorKind::NumericalFailure, "golden-section search did not converge");
  const double tm = 0.5 * (a + b);
  const double fm = eval(tm);
  require(std::isfinite(fm), ErrorKind::NumericalFailure, "overlap evaluation failed during refinement");
  if (fm < best.value) {
    best.value = fm;
    best.t = tm;
  }
  for (double edge : {0.0, 1.0}) {
    const double fe = eval(edge);
    if (std::isfinite(fe) && fe < best.value) {
      best.value = fe;
      best.t = edge;
    }
  }
  return best;
}

namespace detail {

inline void validate_bound_inputs(const CellSpec& cell, std::int64_t m, double energy_n) {
  cell.validate();
  require(m >= 1, ErrorKind::InvalidInput, "bandwidth must be a positive integer");
  require(energy_n >= 0.0 && std::isfinite(energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
}

inline BoundValue power_bound(BoundKind kind, const CellSpec& cell, std::int64_t m, double energy_n,
                              double per_copy, double t) {
  BoundValue out;
  out.kind = kind;
  out.cell = cell;
  out.m = static_cast<double>(m);
  out.energy_n = energy_n;
  out.t_opt = t;
  out.per_copy = std::min(per_copy, 1.0);
  out.value = 0.5 * std::exp(static_cast<double>(m) * std::log(out.per_copy));
  return out;
}

}  // namespace detail

/// Q(M, N) = 1/2 [inf_t Tr(theta0^t theta1^(1-t))]^M for the EPR transmitter.
inline BoundValue chernoff_bound(const CellSpec& cell, std::int64_t m, double energy_n,
                                 const MinimizerOptions& opt = {}) {
  detail::validate_bound_inputs(cell, m, energy_n);
  if (cell.r0 == cell.r1) return detail::power_bound(BoundKind::Chernoff, cell, m, energy_n, 1.0, 0.5);
  const double n_s = energy_n / static_cast<double>(m);
  const auto d0 = normal_mode_decomposition(Eigen::MatrixXd(conditional_output_cm(cell, 0, n_s)));
  const auto d1 = normal_mode_decomposition(Eigen::MatrixXd(conditional_output_cm(cell, 1, n_s)));
  const auto best = minimize_overlap(d0, d1, opt);
  return detail::power_bound(BoundKind::Chernoff, cell, m, energy_n, best.value, best.t);
}

/// B(M, N) = 1/2 [Tr(theta0^(1/2) theta1^(1/2))]^M.
inline BoundValue bhattacharyya_bound(const CellSpec& cell, std::int64_t m, double energy_n) {
  detail::validate_bound_inputs(cell, m, energy_n);
  if (cell.r0 == cell.r1) return detail::power_bound(BoundKind::Bhattacharyya, cell, m, energy_n, 1.0, 0.5);
  const double n_s = energy_n / static_cast<double>(m);
  const auto d0 = normal_mode_decomposition(Eigen::MatrixXd(conditional_output_cm(cell, 0, n_s)));
  const auto d1 = normal_mode_decomposition(Eigen::MatrixXd(conditional_output_cm(cell, 1, n_s)));
  const double value = detail::overlap_value(d0, d1, 0.5);
  require(std::isfinite(value), ErrorKind::NumericalFailure, "overlap evaluation failed");
  return detail::power_bound(BoundKind::Bhattacharyya, cell, m, energy_n, value, 0.5);
}

/// Ideal memory (r1 = 1, no noise): Q = 1/2 (1 + (N/M) x)^(-2M), x = 1 - sqrt(r0).
inline BoundValue ideal_chernoff_closed(double r0, double m, double energy_n) {
  require(r0 >= 0.0 && r0 < 1.0, ErrorKind::InvalidInput, "r0 must lie in [0,1)");
  require(m >= 1.0 && std::isfinite(m), ErrorKind::InvalidInput, "bandwidth must be >= 1");
  require(energy_n >= 0.0 && std::isfinite(energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
  const double x = 1.0 - std::sqrt(r0);
  BoundValue out;
  out.kind = BoundKind::ChernoffClosedForm;
  out.cell = CellSpec{r0, 1.0, 0.0, 0.0};
  out.m = m;
  out.energy_n = energy_n;
  out.t_opt = 1.0;
  const double log_per_copy = -2.0 * std::log1p(energy_n / m * x);
  out.per_copy = std::exp(log_per_copy);
  out.value = 0.5 * std::exp(m * log_per_copy);
  return out;
}

/// Chernoff exponent coefficient w in [0, 3/2] of the broadband Bhattacharyya bound.
inline double bhattacharyya_exponent(double r0, double r1) {
  return 0.5 * (r0 + r1 + 2.0) - 2.0 * std::sqrt(r0 * r1) - std::sqrt((1.0 - r0) * (1.0 - r1));
}

struct AsymptoticBounds {
  double w = 0.0;
  double b_inf = 0.5;
  std::optional<double> x;
  std::optional<double> q_inf;
};

/// M -> infinity limits in the pure-loss model. q_inf is filled for ideal memories (r1 = 1).
inline AsymptoticBounds asymptotic_bounds(const CellSpec& cell, double energy_n, bool require_q_inf = false) {
  cell.validate();
  require(cell.pure_loss(), ErrorKind::InvalidInput, "asymptotic bounds are defined for the pure-loss model");
  require(energy_n >= 0.0 && std::isfinite(energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
  AsymptoticBounds out;
  out.w = bhattacharyya_exponent(cell.r0, cell.r1);
  out.b_inf = 0.5 * std::exp(-energy_n * out.w);
  if (cell.r1 == 1.0) {
    const double x = 1.0 - std::sqrt(cell.r0);
    out.x = x;
    out.q_inf = 0.5 * std::exp(-2.0 * energy_n * x);
  } else {
    require(!require_q_inf, ErrorKind::InvalidInput, "q_inf is only defined for r1 = 1");
  }
  return out;
}

}  // namespace qread

#endif  // QREAD_QUANTUM_BOUND_HPP
