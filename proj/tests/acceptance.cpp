// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qread/bell_receiver.hpp"
#include "qread/classical_bound.hpp"
#include "qread/fock_oracle.hpp"
#include "qread/phase_space.hpp"
#include "qread/quantum_bound.hpp"
#include "qread/reading_analysis.hpp"

using namespace qread;

namespace {

constexpr double kClosedFormTol = 1e-9;
constexpr double kOracleTol = 1e-6;
constexpr int kOracleCutoffCap = 48;
constexpr double kConstantTol = 1e-6;
constexpr double kSeparation = 0.15;
constexpr double kMapMaxGain = 0.5;
constexpr double kReceiverPureGain = 0.6;
constexpr double kReceiverThermalGain = 0.5;
constexpr double kMcSigmas = 3.0;
constexpr std::int64_t kMcTrials = 100000;
constexpr double kIdentityTol = 1e-12;
constexpr double kOrderingSlack = 1e-8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome closed_form() {
  double worst = 0.0;
  int violations = 0;
  for (double r0 : {0.0, 0.25, 0.5, 0.85})
    for (std::int64_t m : {1, 2, 4, 8, 16})
      for (double n : {0.5, 1.0, 5.0, 35.0}) {
        const double a = chernoff_bound(CellSpec{r0, 1.0, 0.0, 0.0}, m, n).value;
        const double b = ideal_chernoff_closed(r0, static_cast<double>(m), n).value;
        const double e = std::abs(a / b - 1.0);
        worst = std::max(worst, e);
        violations += e > kClosedFormTol;
      }
  return {violations == 0, fmt("80 points, worst rel %.3e, violations %d", worst, violations)};
}

Outcome oracle_agreement() {
  using S = fock::quad;
  const std::vector<double> rs{0.0, 0.3, 0.5, 0.85, 1.0};
  double worst = 0.0;
  int points = 0, violations = 0;
  std::string breakdown;
  for (double n_s : {0.5, 1.0, 2.0})
    for (double noise : {0.0, 1e-5, 1e-2}) {
      const int d = std::min(fock::default_cutoff(n_s), kOracleCutoffCap);
      std::vector<fock::Spectrum<S>> spectra;
      for (double r : rs)
        spectra.push_back(fock::spectral_decomposition(
            fock::conditional_output_fock<S>(CellSpec{r, r, noise, noise}, 0, n_s, d)));
      int local = 0;
      double local_worst = 0.0;
      for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = i + 1; j < rs.size(); ++j) {
          const fock::OverlapEvaluator<S> ev(spectra[i], spectra[j]);
          const CellSpec c{rs[i], rs[j], noise, noise};
          const auto g0 = conditional_output_state(c, 0, n_s), g1 = conditional_output_state(c, 1, n_s);
          for (double t : {0.1, 0.5, 0.9}) {
            const double e = std::abs(ev(t) / gaussian_overlap(g0, g1, t).value - 1.0);
            local_worst = std::max(local_worst, e);
            local += e > kOracleTol;
            ++points;
          }
        }
      worst = std::max(worst, local_worst);
      violations += local;
      if (local > 0) breakdown += fmt(" [ns=%g noise=%g d=%d: %d over, worst %.2e]", n_s, noise, d, local, local_worst);
    }
  return {violations == 0, fmt("%d points, worst rel %.3e, violations %d%s", points, worst, violations, breakdown.c_str())};
}

Outcome extremal_constants() {
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  const double e1 = std::abs(ideal_ybar(1.0) - golden);
  const double e2 = std::abs(ideal_nbar(0.0) - std::log(2.0 / (std::sqrt(5.0) - 1.0)));
  const double e3 = std::abs(ideal_ybar(1e-4) - std::exp(-0.25));
  const bool ok = e1 <= kConstantTol && e2 <= kConstantTol && e3 <= kConstantTol;
  // Convergence of ybar toward its supremum as x -> 0, for diagnosis only.
  const double e_small = std::abs(ideal_ybar(1e-6) - std::exp(-0.25));
  return {ok, fmt("|dybar(1)| %.2e, |dnbar(0)| %.2e, |ybar(1e-4) - e^-1/4| %.3e (at x = 1e-6: %.3e)", e1, e2, e3,
                  e_small)};
}

Outcome threshold_theorem() {
  const CellSpec c{0.5, 1.0, 0.0, 0.0};
  const double n_th = threshold_energy(0.5, 1.0);
  const bool th_ok = std::abs(n_th - 4.0 * std::numbers::ln2) <= 1e-12 * n_th;
  const double n_hi = 1.1 * n_th;
  const auto m_bar = find_min_bandwidth(c, n_hi, 10000);
  bool hi_ok = false;
  double q = 0.0, cc = classical_bound(c, 1.0, n_hi).value;
  if (m_bar) {
    q = chernoff_bound(c, *m_bar, n_hi).value;
    hi_ok = q < cc;
  }
  const double n_lo = 0.5 * n_th;
  const auto coef = PureLossCoefficients::from(0.5, 1.0, n_lo);
  const double c_tilde = coef.c_tilde(n_lo);
  const double b_inf = asymptotic_bounds(c, n_lo).b_inf;
  double b_min = 0.5;
  for (std::int64_t m = 1; m <= 10000; ++m) b_min = std::min(b_min, bhattacharyya_bound(c, m, n_lo).value);
  const bool lo_ok = b_inf > c_tilde && b_min > c_tilde;
  return {th_ok && hi_ok && lo_ok,
          fmt("N_th %.9f; at 1.1 N_th M_bar %lld, Q %.6e < C %.6e; at 0.5 N_th B_inf %.6e, min_M B %.6e, C~ %.6e",
              n_th, m_bar ? static_cast<long long>(*m_bar) : -1LL, q, cc, b_inf, b_min, c_tilde)};
}

Outcome ideal_memory() {
  int violations = 0;
  for (double r0 : {0.0, 0.3, 0.6, 0.9})
    for (double n : {0.5, 1.0, 2.0}) {
      const CellSpec c{r0, 1.0, 0.0, 0.0};
      double prev = chernoff_bound(c, 1, n).value;
      for (std::int64_t m = 2; m <= 256; ++m) {
        const double v = chernoff_bound(c, m, n).value;
        violations += !(v < prev);
        prev = v;
      }
      violations += !(*asymptotic_bounds(c, n, true).q_inf < classical_bound(c, 1.0, n).value);
    }
  return {violations == 0, fmt("12 cells, M = 1..256 monotone and Q_inf < C, violations %d", violations)};
}

Outcome pure_loss_gain_map() {
  ScanRequest req;
  req.energy_n = 30.0;
  req.m = 30;
  req.grid = 200;
  const ScanGrid grid = scan_plane(req);
  int checked = 0, violations = 0, failed = 0;
  double worst = 1.0, worst_r0 = 0.0, worst_r1 = 0.0, max_min_r = 0.0;
  for (const auto& cell : grid.cells) {
    failed += cell.failed;
    if (std::abs(std::sqrt(cell.y) - std::sqrt(cell.x)) <= kSeparation) continue;
    ++checked;
    if (cell.failed || !(cell.gain.g > 0.0)) {
      ++violations;
      max_min_r = std::max(max_min_r, std::min(cell.x, cell.y));
      if (!cell.failed && cell.gain.g < worst) {
        worst = cell.gain.g;
        worst_r0 = cell.x;
        worst_r1 = cell.y;
      }
    }
  }
  const ScanCell* best = grid.max_gain();
  const bool max_ok = best != nullptr && best->gain.g > kMapMaxGain;
  std::string detail = fmt("max g %.6f at (r0 %.4f, r1 %.4f); %d separated cells, %d with g <= 0, %d failed",
                           best ? best->gain.g : 0.0, best ? best->x : 0.0, best ? best->y : 0.0, checked,
                           violations, failed);
  if (violations > 0)
    detail += fmt("; lowest g %.4f at (r0 %.4f, r1 %.4f); all such cells have min(r0,r1) <= %.4f", worst, worst_r0,
                  worst_r1, max_min_r);
  return {violations == 0 && max_ok, detail};
}

Outcome receiver_gain(const CellSpec& cell, double n, std::optional<double> m_star, double target) {
  const auto opt = optimize_g_test(cell, n, 1, 256, log_spaced(1e-6, 0.5, 50), m_star);
  return {opt.best_g >= target,
          fmt("best g %.6f at m %lld, phi %.4g (C %.6g)", opt.best_g, static_cast<long long>(opt.best_m), opt.best_phi,
              opt.c)};
}

Outcome monte_carlo() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int drawn = 0, outside = 0, nondeterministic = 0;
  double worst_z = 0.0;
  while (drawn < 10) {
    const double noise = unit(rng) < 0.5 ? 0.0 : std::pow(10.0, -5.0 + 3.0 * unit(rng));
    const CellSpec c{unit(rng), unit(rng), noise, noise};
    const double n = 1.0 + 49.0 * unit(rng);
    const ReceiverConfig cfg{1 + static_cast<std::int64_t>(20 * unit(rng)), std::pow(10.0, -3.0 + 2.5 * unit(rng))};
    if (c.r0 == c.r1) continue;
    double exact = 0.0;
    try {
      exact = p_test(c, n, cfg).p_test;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ModelRegime) continue;
      throw;
    }
    const std::uint64_t seed = 1000 + drawn;
    const auto a = monte_carlo_error(c, n, cfg, kMcTrials, seed);
    const auto b = monte_carlo_error(c, n, cfg, kMcTrials, seed);
    nondeterministic += std::memcmp(&a.estimate, &b.estimate, sizeof(double)) != 0 ||
                        std::memcmp(&a.std_error, &b.std_error, sizeof(double)) != 0;
    const double z = a.std_error > 0.0 ? std::abs(a.estimate - exact) / a.std_error
                                       : (a.estimate == exact ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
    outside += z > kMcSigmas;
    ++drawn;
  }
  return {outside == 0 && nondeterministic == 0,
          fmt("10 configurations, worst |MC - p_test| / se %.3f, beyond 3 se %d, non-identical reruns %d", worst_z,
              outside, nondeterministic)};
}

Outcome properties() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int physicality = 0, variance = 0, entropy = 0, fidelity = 0, ordering = 0;
  for (int i = 0; i < 1000; ++i) {
    const CellSpec c{unit(rng), unit(rng), unit(rng), unit(rng)};
    const double n_s = 50.0 * unit(rng);
    for (int u = 0; u < 2; ++u) {
      physicality += !check_physical(conditional_output_state(c, u, n_s)).physical;
      const Eigen::Matrix4d v = conditional_output_cm(c, u, n_s);
      const double ref = 0.5 * (v(0, 0) + v(2, 2) - 2.0 * v(0, 2));
      variance += std::abs(conditional_variance(c, u, n_s) - ref) > kIdentityTol * std::max(1.0, ref);
    }
    const double p = unit(rng);
    entropy += std::abs(binary_entropy(p) - binary_entropy(1.0 - p)) > kIdentityTol;
    const auto fp = fidelity_params(c);
    fidelity += !(fp.omega >= 1.0 - kIdentityTol && fp.lambda >= 0.0);
  }
  int oracle_cases = 0;
  for (double r0 : {0.0, 0.5, 0.85})
    for (double r1 : {0.95, 1.0})
      for (double noise : {0.0, 1e-5, 1e-2}) {
        const CellSpec c{r0, r1, noise, noise};
        const double n_s = 0.5;
        const auto f0 = fock::conditional_output_fock<double>(c, 0, n_s, 32);
        const auto f1 = fock::conditional_output_fock<double>(c, 1, n_s, 32);
        const double h = fock::helstrom_error_fock(f0, f1);
        ordering += h > chernoff_bound(c, 1, n_s).value + kOrderingSlack;
        ++oracle_cases;
      }
  const int total = physicality + variance + entropy + fidelity + ordering;
  return {total == 0, fmt("violations: physicality %d, V(u) identity %d, entropy symmetry %d, omega/lambda %d, "
                          "Helstrom <= Chernoff %d of %d",
                          physicality, variance, entropy, fidelity, ordering, oracle_cases)};
}

struct Criterion {
  int id;
  const char* name;
  double max_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form agreement", 10.0, closed_form},
      {2, "oracle agreement", 300.0, oracle_agreement},
      {3, "extremal constants", 1.0, extremal_constants},
      {4, "threshold theorem", 30.0, threshold_theorem},
      {5, "ideal-memory theorem", 10.0, ideal_memory},
      {6, "pure-loss gain map", 120.0, pure_loss_gain_map},
      {7, "receiver gain, pure loss", 60.0, [] { return receiver_gain(CellSpec{0.85, 1.0, 0.0, 0.0}, 35.0, std::nullopt, kReceiverPureGain); }},
      {8, "receiver gain, thermal",
       120.0, [] { return receiver_gain(CellSpec{0.85, 0.95, 1e-5, 1e-5}, 100.0, 1e6, kReceiverThermalGain); }},
      {9, "monte carlo validation", 120.0, monte_carlo},
      {10, "property suites", 120.0, properties},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs < c.max_seconds;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::printf("%s  %2d %-24s %8.2fs (limit %gs%s)  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.max_seconds,
                in_time ? "" : ", exceeded", out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
