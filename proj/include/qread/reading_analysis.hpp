#ifndef QREAD_READING_ANALYSIS_HPP
#define QREAD_READING_ANALYSIS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qread/classical_bound.hpp"
#include "qread/errors.hpp"
#include "qread/phase_space.hpp"
#include "qread/quantum_bound.hpp"

namespace qread {

inline double binary_entropy(double p) {
  require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidInput, "probability must lie in [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log1p(-p) / std::numbers::ln2);
}

struct PureLossCoefficients {
  double x = 0.0;
  double w = 0.0;
  double f = 0.0;
  double y = 1.0;

  static PureLossCoefficients from(double r0, double r1, double energy_n) {
    CellSpec{r0, r1, 0.0, 0.0}.validate();
    PureLossCoefficients c;
    c.x = std::sqrt(r1) - std::sqrt(r0);
    c.w = bhattacharyya_exponent(r0, r1);
    c.f = std::max(0.0, c.w - c.x * c.x) / std::numbers::ln2;
    c.y = std::exp(-energy_n);
    return c;
  }

  /// Weakened classical bound e^{-N x^2} / 4.
  double c_tilde(double energy_n) const { return 0.25 * std::exp(-energy_n * x * x); }
};

struct GainResult {
  double g = 0.0;
  double c = 0.5;
  double q = 0.5;
  CellSpec cell;
  std::int64_t m = 1;
  double energy_n = 0.0;
  std::optional<double> m_star;
  bool broadband = false;

  bool inconclusive() const { return !(g > 0.0); }
};

/// C at M = m_star when the model is thermal (omega > 1), otherwise the M-independent value.
inline double classical_reference(const CellSpec& cell, double energy_n, std::optional<double> m_star) {
  cell.validate();
  const FidelityParams p = fidelity_params(cell);
  if (p.log_omega > 0.0) {
    require(m_star.has_value(), ErrorKind::InvalidInput, "thermal model needs a bandwidth cap m_star");
    return classical_bound(cell, *m_star, energy_n).value;
  }
  return classical_bound(cell, 1.0, energy_n).value;
}

inline GainResult info_gain(const CellSpec& cell, std::int64_t m, double energy_n,
                            std::optional<double> m_star = std::nullopt) {
  GainResult out;
  out.cell = cell;
  out.m = m;
  out.energy_n = energy_n;
  out.m_star = m_star;
  out.c = classical_reference(cell, energy_n, m_star);
  out.q = chernoff_bound(cell, m, energy_n).value;
  out.g = binary_entropy(out.c) - binary_entropy(out.q);
  return out;
}

/// Ideal memory with unbounded bandwidth: q = q_inf.
inline GainResult broadband_gain(const CellSpec& cell, double energy_n) {
  GainResult out;
  out.cell = cell;
  out.m = 0;
  out.energy_n = energy_n;
  out.broadband = true;
  out.q = *asymptotic_bounds(cell, energy_n, true).q_inf;
  out.c = classical_bound(cell, 1.0, energy_n).value;
  out.g = binary_entropy(out.c) - binary_entropy(out.q);
  return out;
}

inline double threshold_energy(double r0, double r1) {
  CellSpec{r0, r1, 0.0, 0.0}.validate();
  require(r0 != r1, ErrorKind::UndefinedThreshold, "threshold energy is undefined for r0 = r1");
  // Symmetric in (r0, r1) by construction.
  const double lo = std::min(r0, r1), hi = std::max(r0, r1);
  const double den = 2.0 - lo - hi - 2.0 * std::sqrt((1.0 - lo) * (1.0 - hi));
  require(den > 0.0, ErrorKind::UndefinedThreshold, "threshold denominator vanished");
  return 2.0 * std::numbers::ln2 / den;
}

/// g(x, y) = y^{x^2} + y^{4x} - 2 y^{2x}, written as expm1(-2xN)^2 + expm1(-x^2 N) with N = -ln y.
inline double ideal_g(double x, double y) {
  require(y > 0.0 && y <= 1.0, ErrorKind::InvalidInput, "y must lie in (0,1]");
  const double n = -std::log(y);
  const double a = std::expm1(-2.0 * x * n);
  return a * a + std::expm1(-x * x * n);
}

/// Interior zero of g(x, .) in (0,1); g > 0 below it and g < 0 between it and y = 1.
inline double ideal_ybar(double x) {
  require(x > 0.0 && x <= 1.0, ErrorKind::InvalidInput, "x must lie in (0,1]");
  constexpr int kPoints = 200;
  const double lo = std::log(1e-6), hi = std::log1p(-1e-6);
  std::vector<double> ys(kPoints), gs(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    ys[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));
    gs[i] = ideal_g(x, ys[i]);
  }
  int k = -1;
  for (int i = kPoints - 2; i >= 0; --i) {
    if (gs[i] > 0.0 && gs[i + 1] < 0.0) {
      k = i;
      break;
    }
  }
  require(k >= 0, ErrorKind::NumericalFailure, "could not bracket the zero-level curve");
  double a = ys[k], b = ys[k + 1];
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const double mid = 0.5 * (a + b);
    if (ideal_g(x, mid) > 0.0)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

inline double ideal_nbar(double r0) {
  require(r0 >= 0.0 && r0 < 1.0, ErrorKind::InvalidInput, "r0 must lie in [0,1)");
  return -std::log(ideal_ybar(1.0 - std::sqrt(r0)));
}

struct IdealThresholdPoint {
  double r0 = 0.0;
  double x = 1.0;
  double ybar = 0.0;
  double nbar = 0.0;
};

inline IdealThresholdPoint ideal_threshold_curve(double r0) {
  IdealThresholdPoint p;
  p.r0 = r0;
  p.nbar = ideal_nbar(r0);
  p.x = 1.0 - std::sqrt(r0);
  p.ybar = std::exp(-p.nbar);
  return p;
}

/// Smallest M in [1, m_max] with Q(M, N) < C; linear up to 128, then doubling with a linear refine.
inline std::optional<std::int64_t> find_min_bandwidth(const CellSpec& cell, double energy_n, std::int64_t m_max,
                                                      std::optional<double> m_star = std::nullopt) {
  require(m_max >= 1, ErrorKind::InvalidInput, "m_max must be >= 1");
  const double c = classical_reference(cell, energy_n, m_star);
  auto qualifies = [&](std::int64_t m) { return chernoff_bound(cell, m, energy_n).value < c; };
  const std::int64_t linear_end = std::min<std::int64_t>(128, m_max);
  for (std::int64_t m = 1; m <= linear_end; ++m)
    if (qualifies(m)) return m;
  std::int64_t prev = linear_end;
  while (prev < m_max) {
    const std::int64_t next = std::min(prev * 2, m_max);
    if (qualifies(next)) {
      for (std::int64_t m = prev + 1; m < next; ++m)
        if (qualifies(m)) return m;
      return next;
    }
    prev = next;
  }
  return std::nullopt;
}

enum class Plane { R0R1, R0N };

struct ScanAxis {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  int points = 2;
  bool log = false;

  double value(int i) const {
    if (points == 1) return min;
    const double f = static_cast<double>(i) / (points - 1);
    if (i == points - 1) return max;
    if (log) return std::exp(std::log(min) + f * (std::log(max) - std::log(min)));
    return min + f * (max - min);
  }
};

struct ScanCell {
  double x = 0.0;
  double y = 0.0;
  GainResult gain;
  bool inconclusive = true;
  bool failed = false;
  std::string error;
};

struct ScanGrid {
  ScanAxis x_axis;
  ScanAxis y_axis;
  std::vector<ScanCell> cells;  // x outer, y inner

  const ScanCell& at(int i, int j) const { return cells[static_cast<std::size_t>(i) * y_axis.points + j]; }

  /// Largest g among cells that evaluated; nullptr if none did.
  const ScanCell* max_gain() const {
    const ScanCell* best = nullptr;
    for (const auto& c : cells)
      if (!c.failed && (best == nullptr || c.gain.g > best->gain.g)) best = &c;
    return best;
  }
};

struct ScanRequest {
  Plane plane = Plane::R0R1;
  double energy_n = 30.0;  // fixed N on the r0 x r1 plane, upper end of the N axis otherwise
  double n_min = 0.0;
  std::int64_t m = 30;
  bool broadband = false;  // r0 x N only: use q_inf
  double r1 = 1.0;         // r0 x N only
  std::optional<double> m_star;
  double nbar = 0.0;
  double eps = 0.0;
  int grid = 200;
  unsigned threads = 0;  // 0 = hardware concurrency
};

inline ScanGrid scan_plane(const ScanRequest& req) {
  require(req.grid >= 2, ErrorKind::InvalidInput, "grid must have at least 2 points per axis");
  require(req.m >= 1 || req.broadband, ErrorKind::InvalidInput, "bandwidth must be a positive integer");
  require(req.energy_n >= 0.0 && std::isfinite(req.energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
  ScanGrid out;
  if (req.plane == Plane::R0R1) {
    require(!req.broadband, ErrorKind::InvalidInput, "broadband scans use the r0 x N plane");
    out.x_axis = {"r0", 0.0, 1.0, req.grid, false};
    out.y_axis = {"r1", 0.0, 1.0, req.grid, false};
  } else {
    require(req.n_min >= 0.0 && req.n_min < req.energy_n, ErrorKind::InvalidInput, "N axis range is empty");
    out.x_axis = {"r0", 0.0, 1.0, req.grid, false};
    out.y_axis = {"n", req.n_min, req.energy_n, req.grid, false};
  }
  const std::size_t total = static_cast<std::size_t>(req.grid) * req.grid;
  out.cells.resize(total);

  auto evaluate = [&](std::size_t k) {
    ScanCell& cell = out.cells[k];
    const int i = static_cast<int>(k / req.grid);
    const int j = static_cast<int>(k % req.grid);
    cell.x = out.x_axis.value(i);
    cell.y = out.y_axis.value(j);
    try {
      CellSpec spec{cell.x, req.r1, req.nbar, req.eps};
      double n = cell.y;
      if (req.plane == Plane::R0R1) {
        spec.r1 = cell.y;
        n = req.energy_n;
      }
      cell.gain = req.broadband ? broadband_gain(spec, n) : info_gain(spec, req.m, n, req.m_star);
      cell.inconclusive = cell.gain.inconclusive();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InvalidInput) throw;
      cell.failed = true;
      cell.error = e.what();
    }
  };

  // A setup error (e.g. missing m_star) is the same at every point; surface it before spawning.
  evaluate(0);
  std::atomic<std::size_t> next{1};
  unsigned n_threads = req.threads != 0 ? req.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, total));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_threads);
  for (unsigned w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = next++; k < total; k = next++) evaluate(k);
      } catch (...) {
        errors[w] = std::current_exception();
        next = total;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace qread

#endif  // QREAD_READING_ANALYSIS_HPP
