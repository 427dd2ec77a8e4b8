#ifndef QREAD_BELL_RECEIVER_HPP
#define QREAD_BELL_RECEIVER_HPP

// Bell-measurement receiver: q- and p+ of each signal/idler pair are
// homodyned, the 2M outcomes normalized by V(1) are summed in squares and
// compared with the shape-M gamma quantile.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "qread/errors.hpp"
#include "qread/incomplete_gamma.hpp"
#include "qread/phase_space.hpp"
#include "qread/reading_analysis.hpp"

namespace qread {

struct ReceiverConfig {
  std::int64_t m = 1;
  double phi = 0.05;

  void validate() const {
    require(m >= 1, ErrorKind::InvalidInput, "receiver needs at least one copy");
    require(phi > 0.0 && phi < 1.0, ErrorKind::InvalidInput, "significance level must lie in (0,1)");
  }
};

struct TestStatistics {
  double v0 = 1.0;
  double v1 = 1.0;
  double sigma = 0.0;
  double quantile = 0.0;
  double p_h0_given_h1 = 0.0;
  double p_h1_given_h0 = 0.0;
  double p_test = 0.5;
  bool swapped = false;  // r0 > r1: the test is run with the labels exchanged
};

/// Variance of q- (and p+) at the Bell measurement for bit u.
inline double conditional_variance(const CellSpec& cell, int u, double n_s) {
  cell.validate();
  require(u == 0 || u == 1, ErrorKind::InvalidInput, "bit value must be 0 or 1");
  require(n_s >= 0.0 && std::isfinite(n_s), ErrorKind::InvalidInput, "n_s must be >= 0");
  const double r = cell.r(u);
  const double mu = 2.0 * n_s + 1.0;
  return 0.5 * (r * (mu + cell.eps) + (1.0 - r) * cell.beta() + mu + 3.0 * cell.eps -
                2.0 * std::sqrt(r * (mu * mu - 1.0)));
}

/// dV/dr <= 0 at r, i.e. (mu + eps - beta) sqrt(r) <= sqrt(mu^2 - 1).
inline bool variance_decreasing_at(const CellSpec& cell, double r, double n_s) {
  const double mu = 2.0 * n_s + 1.0;
  return (mu + cell.eps - cell.beta()) * std::sqrt(r) <= std::sqrt(mu * mu - 1.0);
}

inline TestStatistics p_test(const CellSpec& cell, double energy_n, const ReceiverConfig& cfg) {
  cell.validate();
  cfg.validate();
  require(energy_n >= 0.0 && std::isfinite(energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
  const double n_s = energy_n / static_cast<double>(cfg.m);
  require(variance_decreasing_at(cell, cell.r0, n_s) && variance_decreasing_at(cell, cell.r1, n_s),
          ErrorKind::ModelRegime, "conditional variance is not a decreasing function of the reflectivity here");
  TestStatistics s;
  s.swapped = cell.r0 > cell.r1;
  const CellSpec c = s.swapped ? CellSpec{cell.r1, cell.r0, cell.nbar, cell.eps} : cell;
  s.v0 = conditional_variance(c, 0, n_s);
  s.v1 = conditional_variance(c, 1, n_s);
  s.quantile = test_quantile(cfg.m, cfg.phi);
  if (c.r0 == c.r1) {
    s.sigma = 0.0;
    s.p_h0_given_h1 = regularized_upper_gamma(cfg.m, s.quantile / 2.0);
    s.p_h1_given_h0 = 1.0 - s.p_h0_given_h1;
    s.p_test = 0.5;
    return s;
  }
  require(s.v1 > 0.0, ErrorKind::NumericalFailure, "conditional variance vanished");
  s.sigma = (s.v0 - s.v1) / s.v1;
  s.p_h0_given_h1 = regularized_upper_gamma(cfg.m, s.quantile / 2.0);
  s.p_h1_given_h0 = regularized_lower_gamma(cfg.m, s.quantile / (2.0 * (1.0 + s.sigma)));
  s.p_test = 0.5 * (s.p_h0_given_h1 + s.p_h1_given_h0);
  return s;
}

enum class SamplingMode { Direct, FullState };

struct MonteCarloResult {
  double estimate = 0.5;
  double std_error = 0.0;
  double error_h0 = 0.0;  // P(decide H1 | H0)
  double error_h1 = 0.0;  // P(decide H0 | H1)
  std::int64_t trials = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::int64_t kMonteCarloBlock = 4096;

}  // namespace detail

inline MonteCarloResult monte_carlo_error(const CellSpec& cell, double energy_n, const ReceiverConfig& cfg,
                                          std::int64_t trials, std::uint64_t seed,
                                          SamplingMode mode = SamplingMode::Direct, unsigned threads = 0) {
  require(trials >= 1000, ErrorKind::InvalidInput, "Monte Carlo needs at least 1000 trials");
  const TestStatistics stats = p_test(cell, energy_n, cfg);
  const CellSpec c = stats.swapped ? CellSpec{cell.r1, cell.r0, cell.nbar, cell.eps} : cell;
  const double n_s = energy_n / static_cast<double>(cfg.m);
  const std::int64_t per_h = trials / 2;
  const std::int64_t n_blocks = (per_h + detail::kMonteCarloBlock - 1) / detail::kMonteCarloBlock;

  std::array<Eigen::Matrix4d, 2> chol;
  if (mode == SamplingMode::FullState) {
    for (int u = 0; u < 2; ++u) {
      Eigen::LLT<Eigen::Matrix4d> llt(conditional_output_cm(c, u, n_s));
      require(llt.info() == Eigen::Success, ErrorKind::NumericalFailure, "output CM is not positive definite");
      chol[u] = llt.matrixL();
    }
  }
  const double sd[2] = {std::sqrt(stats.v0), std::sqrt(stats.v1)};
  const double inv_v1 = 1.0 / stats.v1;

  // Task k covers block k / 2 of hypothesis k % 2 and records its error count.
  const std::size_t n_tasks = static_cast<std::size_t>(2 * n_blocks);
  std::vector<std::int64_t> errors(n_tasks, 0);
  auto run_task = [&](std::size_t k) {
    const int u = static_cast<int>(k % 2);
    const std::int64_t block = static_cast<std::int64_t>(k / 2);
    const std::int64_t begin = block * detail::kMonteCarloBlock;
    const std::int64_t end = std::min(per_h, begin + detail::kMonteCarloBlock);
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(k))));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::int64_t wrong = 0;
    for (std::int64_t trial = begin; trial < end; ++trial) {
      double theta = 0.0;
      if (mode == SamplingMode::Direct) {
        for (std::int64_t j = 0; j < 2 * cfg.m; ++j) {
          const double z = sd[u] * gauss(rng);
          theta += z * z;
        }
      } else {
        for (std::int64_t j = 0; j < cfg.m; ++j) {
          Eigen::Vector4d w;
          for (int i = 0; i < 4; ++i) w(i) = gauss(rng);
          const Eigen::Vector4d x = chol[u] * w;  // q_s, p_s, q_i, p_i
          const double q_minus = (x(0) - x(2)) / std::sqrt(2.0);
          const double p_plus = (x(1) + x(3)) / std::sqrt(2.0);
          theta += q_minus * q_minus + p_plus * p_plus;
        }
      }
      theta *= inv_v1;
      const bool decide_h1 = theta < stats.quantile;
      if (decide_h1 != (u == 1)) ++wrong;
    }
    errors[k] = wrong;
  };

  std::atomic<std::size_t> next{0};
  unsigned n_threads = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n_threads, n_tasks)));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n_tasks; k = next++) run_task(k);
    });
  for (auto& t : pool) t.join();

  std::int64_t wrong[2] = {0, 0};
  for (std::size_t k = 0; k < n_tasks; ++k) wrong[k % 2] += errors[k];
  MonteCarloResult out;
  out.trials = 2 * per_h;
  const double n = static_cast<double>(per_h);
  out.error_h0 = static_cast<double>(wrong[0]) / n;
  out.error_h1 = static_cast<double>(wrong[1]) / n;
  out.estimate = 0.5 * (out.error_h0 + out.error_h1);
  out.std_error =
      0.5 * std::sqrt(out.error_h0 * (1.0 - out.error_h0) / n + out.error_h1 * (1.0 - out.error_h1) / n);
  return out;
}

struct GainSurfacePoint {
  std::int64_t m = 1;
  double phi = 0.05;
  double p_test = 0.5;
  double g = 0.0;
  bool valid = true;
};

struct GainOptimum {
  double best_g = 0.0;
  std::int64_t best_m = 1;
  double best_phi = 0.05;
  double c = 0.5;
  std::vector<GainSurfacePoint> surface;  // m outer, phi inner
};

/// phi values log-spaced in [lo, hi].
inline std::vector<double> log_spaced(double lo, double hi, int points) {
  require(points >= 1 && lo > 0.0 && hi >= lo, ErrorKind::InvalidInput, "invalid log-spaced range");
  std::vector<double> out(points);
  for (int i = 0; i < points; ++i)
    out[i] = points == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (points - 1));
  if (points > 1) out.back() = hi;
  return out;
}

/// Exhaustive search of g_test = H(C) - H(P_test) over m in [m_min, m_max] and the phi grid.
/// Points outside the receiver's regime are kept in the surface with valid = false.
inline GainOptimum optimize_g_test(const CellSpec& cell, double energy_n, std::int64_t m_min, std::int64_t m_max,
                                   const std::vector<double>& phi_grid, std::optional<double> m_star = std::nullopt) {
  require(m_min >= 1 && m_max >= m_min, ErrorKind::InvalidInput, "bandwidth range is empty");
  require(!phi_grid.empty(), ErrorKind::InvalidInput, "phi grid is empty");
  GainOptimum out;
  out.c = classical_reference(cell, energy_n, m_star);
  const double hc = binary_entropy(out.c);
  bool found = false;
  for (std::int64_t m = m_min; m <= m_max; ++m) {
    for (const double phi : phi_grid) {
      GainSurfacePoint pt;
      pt.m = m;
      pt.phi = phi;
      try {
        pt.p_test = p_test(cell, energy_n, ReceiverConfig{m, phi}).p_test;
        pt.g = hc - binary_entropy(pt.p_test);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ModelRegime) throw;
        pt.valid = false;
        pt.p_test = std::nan("");
        pt.g = std::nan("");
      }
      if (pt.valid && (!found || pt.g > out.best_g)) {
        found = true;
        out.best_g = pt.g;
        out.best_m = m;
        out.best_phi = phi;
      }
      out.surface.push_back(pt);
    }
  }
  require(found, ErrorKind::ModelRegime, "no (m, phi) point lies in the receiver's regime");
  return out;
}

}  // namespace qread

#endif  // QREAD_BELL_RECEIVER_HPP
