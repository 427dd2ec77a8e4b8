#ifndef QREAD_FOCK_ORACLE_HPP
#define QREAD_FOCK_ORACLE_HPP

// Truncated Fock-space reference implementation: density matrices for one or
// two modes, phase-insensitive Gaussian channels as Kraus maps, and spectral
// quantities (Helstrom error, Uhlmann fidelity, t-overlaps).
//
// Two-mode basis index is n_signal * cutoff + n_idler. Densities are never
// renormalized after truncation; the missing trace is carried as
// trace_deficit.
//
// Thermal loss E(r, nbar) is realized as a quantum-limited amplifier of gain
// 1 + (1 - r) nbar after a pure loss of transmissivity r / gain; additive
// noise N(eps) likewise with gain 1 + eps / 2. Both chains have the same
// (K, N) as the target channel and are therefore the same Gaussian channel.

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <type_traits>
#include <vector>

#include "qread/errors.hpp"
#include "qread/symmetric_eigen.hpp"
#include "qread/phase_space.hpp"

namespace qread::fock {

using quad = boost::multiprecision::float128;

inline constexpr int kMaxCutoff = 64;
inline constexpr double kDefaultTailBudget = 1e-6;
inline constexpr double kPolicyTail = 1e-10;

template <class Scalar>
struct scalar_traits {
  using real = Scalar;
  static constexpr bool is_complex = false;
};
template <class R>
struct scalar_traits<std::complex<R>> {
  using real = R;
  static constexpr bool is_complex = true;
};

template <class Scalar>
using real_t = typename scalar_traits<Scalar>::real;
template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <class Scalar>
Scalar conj_of(const Scalar& x) {
  if constexpr (scalar_traits<Scalar>::is_complex)
    return std::conj(x);
  else
    return x;
}

template <class Scalar>
real_t<Scalar> abs2(const Scalar& x) {
  if constexpr (scalar_traits<Scalar>::is_complex)
    return std::norm(x);
  else
    return x * x;
}

template <class Scalar>
real_t<Scalar> real_part(const Scalar& x) {
  if constexpr (scalar_traits<Scalar>::is_complex)
    return x.real();
  else
    return x;
}

template <class Scalar>
double to_double(const Scalar& x) {
  return static_cast<double>(real_part(x));
}

template <class Scalar>
std::complex<double> to_complex_double(const Scalar& x) {
  if constexpr (scalar_traits<Scalar>::is_complex)
    return {static_cast<double>(x.real()), static_cast<double>(x.imag())};
  else
    return {static_cast<double>(x), 0.0};
}

template <class Real>
Real ipow(Real base, int e) {
  Real out = 1;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

}  // namespace detail

template <class Scalar = double>
class FockDensity {
 public:
  using real = real_t<Scalar>;

  FockDensity(int cutoff, int n_modes, Matrix<Scalar> matrix, double trace_deficit,
              double tail_budget = kDefaultTailBudget)
      : FockDensity(cutoff, n_modes, std::move(matrix), trace_deficit, tail_budget, Unchecked{}) {
    double asym = 0.0;
    for (Eigen::Index j = 0; j < dim(); ++j)
      for (Eigen::Index i = j; i < dim(); ++i) {
        if (matrix_(i, j) == Scalar(0) && matrix_(j, i) == Scalar(0)) continue;
        asym = std::max(asym, std::abs(detail::to_complex_double(matrix_(i, j) - detail::conj_of(matrix_(j, i)))));
      }
    require(asym <= 1e-12, ErrorKind::InvalidInput, "density matrix is not Hermitian");
  }

  /// Skips the O(dim^2) Hermiticity scan; for maps that preserve it exactly.
  struct Unchecked {};
  FockDensity(int cutoff, int n_modes, Matrix<Scalar> matrix, double trace_deficit, double tail_budget, Unchecked)
      : cutoff_(cutoff), n_modes_(n_modes), matrix_(std::move(matrix)), trace_deficit_(trace_deficit),
        tail_budget_(tail_budget) {
    require(cutoff_ >= 2 && cutoff_ <= kMaxCutoff, ErrorKind::InvalidInput, "cutoff must lie in [2, 64]");
    require(n_modes_ == 1 || n_modes_ == 2, ErrorKind::InvalidInput, "Fock densities support 1 or 2 modes");
    require(matrix_.rows() == dim() && matrix_.cols() == dim(), ErrorKind::InvalidInput,
            "density matrix dimension does not match cutoff^n_modes");
    require(trace_deficit_ >= 0.0 && trace_deficit_ <= tail_budget_, ErrorKind::CutoffTooSmall,
            "trace deficit exceeds the tail budget; raise the cutoff");
  }

  int cutoff() const { return cutoff_; }
  int n_modes() const { return n_modes_; }
  Eigen::Index dim() const { return n_modes_ == 1 ? cutoff_ : Eigen::Index(cutoff_) * cutoff_; }
  const Matrix<Scalar>& matrix() const { return matrix_; }
  double trace_deficit() const { return trace_deficit_; }
  double tail_budget() const { return tail_budget_; }

 private:
  int cutoff_;
  int n_modes_;
  Matrix<Scalar> matrix_;
  double trace_deficit_;
  double tail_budget_;
};

/// Smallest d with TMSV tail below 1e-10, doubled once, capped at 64.
inline int default_cutoff(double n_s) {
  require(n_s >= 0.0 && std::isfinite(n_s), ErrorKind::InvalidInput, "n_s must be >= 0");
  if (n_s == 0.0) return 4;
  const double q = n_s / (n_s + 1.0);
  const int d = static_cast<int>(std::floor(std::log(kPolicyTail) / std::log(q))) + 1;
  return std::min(std::max(2 * std::max(d, 2), 4), kMaxCutoff);
}

template <class Scalar = double>
FockDensity<Scalar> tmsv_fock(double n_s, int cutoff, double tail_budget = kDefaultTailBudget) {
  using R = real_t<Scalar>;
  using std::sqrt;
  require(n_s >= 0.0 && std::isfinite(n_s), ErrorKind::InvalidInput, "n_s must be >= 0");
  require(cutoff >= 2 && cutoff <= kMaxCutoff, ErrorKind::InvalidInput, "cutoff must lie in [2, 64]");
  const double deficit = n_s == 0.0 ? 0.0 : std::pow(n_s / (n_s + 1.0), cutoff);
  require(deficit <= tail_budget, ErrorKind::CutoffTooSmall, "TMSV tail exceeds the budget at this cutoff");
  const R ns(n_s);
  const R q = sqrt(ns / (ns + 1));  // tanh(xi)
  const R norm = 1 / sqrt(ns + 1);  // 1 / cosh(xi)
  Vector<R> amp(cutoff);
  R c = norm;
  for (int n = 0; n < cutoff; ++n) {
    amp(n) = c;
    c *= q;
  }
  const Eigen::Index dim = Eigen::Index(cutoff) * cutoff;
  Matrix<Scalar> m = Matrix<Scalar>::Zero(dim, dim);
  for (int a = 0; a < cutoff; ++a)
    for (int b = 0; b < cutoff; ++b) m(a * cutoff + a, b * cutoff + b) = Scalar(amp(a) * amp(b));
  return FockDensity<Scalar>(cutoff, 2, std::move(m), deficit, tail_budget, typename FockDensity<Scalar>::Unchecked{});
}

/// Coherent state |alpha> on one mode.
template <class Scalar = std::complex<double>>
FockDensity<Scalar> coherent_fock(std::complex<double> alpha, int cutoff, double tail_budget = kDefaultTailBudget) {
  using R = real_t<Scalar>;
  using std::exp;
  using std::sqrt;
  require(std::isfinite(alpha.real()) && std::isfinite(alpha.imag()), ErrorKind::InvalidInput,
          "non-finite coherent amplitude");
  require(cutoff >= 2 && cutoff <= kMaxCutoff, ErrorKind::InvalidInput, "cutoff must lie in [2, 64]");
  if constexpr (!scalar_traits<Scalar>::is_complex)
    require(alpha.imag() == 0.0, ErrorKind::InvalidInput, "complex amplitude needs a complex scalar type");
  Vector<Scalar> amp(cutoff);
  const R mod2 = R(std::norm(alpha));
  Scalar a;
  if constexpr (scalar_traits<Scalar>::is_complex)
    a = Scalar(R(alpha.real()), R(alpha.imag()));
  else
    a = Scalar(alpha.real());
  Scalar c = Scalar(exp(-mod2 / 2));
  R weight = 0;
  for (int n = 0; n < cutoff; ++n) {
    amp(n) = c;
    weight += detail::abs2(c);
    c = c * a / Scalar(sqrt(R(n + 1)));
  }
  const double deficit = std::max(0.0, static_cast<double>(1 - weight));
  Matrix<Scalar> m(cutoff, cutoff);
  for (int i = 0; i < cutoff; ++i)
    for (int j = 0; j < cutoff; ++j) m(i, j) = amp(i) * detail::conj_of(amp(j));
  return FockDensity<Scalar>(cutoff, 1, std::move(m), deficit, tail_budget);
}

template <class Scalar = double>
FockDensity<Scalar> vacuum_fock(int cutoff, int n_modes = 1) {
  const Eigen::Index dim = n_modes == 1 ? cutoff : Eigen::Index(cutoff) * cutoff;
  Matrix<Scalar> m = Matrix<Scalar>::Zero(dim, dim);
  m(0, 0) = Scalar(1);
  return FockDensity<Scalar>(cutoff, n_modes, std::move(m), 0.0);
}

// ---------------------------------------------------------------------------
// moments

/// Mean and CM (vacuum = 1) from normal-ordered ladder moments of the truncated state.
template <class Scalar>
GaussianState extract_moments(const FockDensity<Scalar>& rho) {
  using R = real_t<Scalar>;
  using C = std::complex<double>;
  const int d = rho.cutoff();
  const int modes = rho.n_modes();
  const auto& m = rho.matrix();
  auto digits = [&](Eigen::Index i, int mode) { return modes == 1 ? int(i) : (mode == 0 ? int(i / d) : int(i % d)); };
  auto index = [&](int a, int b) { return modes == 1 ? Eigen::Index(a) : Eigen::Index(a) * d + b; };
  // Tr(rho X) for X |n> = c(n) |n + shift>: sum_k c(k) rho(img(k), k).
  auto expect = [&](int sa, int sb, auto coeff) {
    Scalar acc(0);
    for (Eigen::Index k = 0; k < rho.dim(); ++k) {
      const int a = digits(k, 0);
      const int b = modes == 2 ? digits(k, 1) : 0;
      const int a2 = a + sa;
      const int b2 = b + sb;
      if (a2 < 0 || a2 >= d || b2 < 0 || b2 >= d) continue;
      const R c = coeff(a, b);
      if (c == 0) continue;
      acc += Scalar(c) * m(index(a2, b2), k);
    }
    return detail::to_complex_double(acc);
  };
  using std::sqrt;
  const double trace = detail::to_double(m.trace());
  Eigen::VectorXd mean(2 * modes);
  std::vector<C> a1(modes), a2(modes);
  std::vector<double> n1(modes);
  for (int mode = 0; mode < modes; ++mode) {
    const int sa = mode == 0 ? -1 : 0;
    const int sb = mode == 1 ? -1 : 0;
    auto occ = [&](int a, int b) { return mode == 0 ? a : b; };
    // <a> = Tr(rho a) with a|n> = sqrt(n)|n-1>
    a1[mode] = expect(sa, sb, [&](int a, int b) { return sqrt(R(occ(a, b))); });
    a2[mode] = expect(2 * sa, 2 * sb, [&](int a, int b) {
      const int n = occ(a, b);
      return sqrt(R(n) * R(std::max(n - 1, 0)));
    });
    n1[mode] = expect(0, 0, [&](int a, int b) { return R(occ(a, b)); }).real();
    mean(2 * mode) = 2.0 * a1[mode].real();
    mean(2 * mode + 1) = 2.0 * a1[mode].imag();
  }
  Eigen::MatrixXd v(2 * modes, 2 * modes);
  for (int mode = 0; mode < modes; ++mode) {
    const double q = mean(2 * mode);
    const double p = mean(2 * mode + 1);
    v(2 * mode, 2 * mode) = 2.0 * a2[mode].real() + 2.0 * n1[mode] + trace - q * q;
    v(2 * mode + 1, 2 * mode + 1) = -2.0 * a2[mode].real() + 2.0 * n1[mode] + trace - p * p;
    v(2 * mode, 2 * mode + 1) = v(2 * mode + 1, 2 * mode) = 2.0 * a2[mode].imag() - q * p;
  }
  if (modes == 2) {
    // <a b> and <a b^dagger>
    const C ab = expect(-1, -1, [&](int a, int b) { return sqrt(R(a) * R(b)); });
    const C abd = expect(-1, 1, [&](int a, int b) { return sqrt(R(a) * R(b + 1)); });
    const double qa = mean(0), pa = mean(1), qb = mean(2), pb = mean(3);
    Eigen::Matrix2d c;
    c(0, 0) = 2.0 * (ab + abd).real() - qa * qb;
    c(1, 1) = -2.0 * (ab - abd).real() - pa * pb;
    c(0, 1) = 2.0 * ab.imag() - 2.0 * abd.imag() - qa * pb;
    c(1, 0) = 2.0 * ab.imag() + 2.0 * abd.imag() - pa * qb;
    v.block<2, 2>(0, 2) = c;
    v.block<2, 2>(2, 0) = c.transpose();
  }
  v = 0.5 * (v + v.transpose()).eval();
  return GaussianState(std::move(mean), std::move(v));
}

// ---------------------------------------------------------------------------
// channels

enum class Target { Signal = 0, Idler = 1 };

struct ChannelOptions {
  double moment_tol = 1e-6;
};

namespace detail {

/// rho -> sum_k K_k rho K_k^dagger on one mode, where K_k |n> = coeff(k, n) |n + shift(k)>.
template <class Scalar, class Coeff>
Matrix<Scalar> apply_shift_kraus(const FockDensity<Scalar>& rho, int mode, int k_max, int sign, Coeff coeff) {
  const int d = rho.cutoff();
  const int modes = rho.n_modes();
  const auto& in = rho.matrix();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(rho.dim(), rho.dim());
  const Eigen::Index stride = (modes == 2 && mode == 0) ? d : 1;
  auto occ = [&](Eigen::Index i) { return modes == 1 ? int(i) : (mode == 0 ? int(i / d) : int(i % d)); };
  for (Eigen::Index j = 0; j < rho.dim(); ++j) {
    const int nj = occ(j);
    for (Eigen::Index i = 0; i < rho.dim(); ++i) {
      const Scalar x = in(i, j);
      if (x == Scalar(0)) continue;
      const int ni = occ(i);
      const int k_end = std::min(k_max, sign < 0 ? std::min(ni, nj) : d - 1 - std::max(ni, nj));
      for (int k = 0; k <= k_end; ++k) {
        const auto w = coeff(k, ni) * coeff(k, nj);
        out(i + Eigen::Index(sign * k) * stride, j + Eigen::Index(sign * k) * stride) += Scalar(w) * x;
      }
    }
  }
  return out;
}

template <class R>
Matrix<R> binomial_table(int n) {
  Matrix<R> c = Matrix<R>::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    c(i, 0) = 1;
    for (int k = 1; k <= i; ++k) c(i, k) = c(i - 1, k - 1) + (k <= i - 1 ? c(i - 1, k) : R(0));
  }
  return c;
}

/// Pure loss: <n-k|A_k|n> = sqrt(C(n,k)) eta^((n-k)/2) (1-eta)^(k/2).
template <class Scalar>
Matrix<Scalar> pure_loss(const FockDensity<Scalar>& rho, int mode, real_t<Scalar> eta) {
  using R = real_t<Scalar>;
  using std::sqrt;
  const int d = rho.cutoff();
  const auto binom = binomial_table<R>(2 * d);
  const R se = sqrt(eta);
  const R sl = sqrt(1 - eta);
  Matrix<R> table = Matrix<R>::Zero(d, d);  // (k, n)
  for (int n = 0; n < d; ++n)
    for (int k = 0; k <= n; ++k) table(k, n) = sqrt(binom(n, k)) * ipow(se, n - k) * ipow(sl, k);
  return apply_shift_kraus(rho, mode, d - 1, -1, [&](int k, int n) { return k <= n ? table(k, n) : R(0); });
}

/// Quantum-limited amplifier: <n+k|B_k|n> = sqrt(C(n+k,k)) (1-1/G)^(k/2) G^(-(n+1)/2).
template <class Scalar>
Matrix<Scalar> amplifier(const FockDensity<Scalar>& rho, int mode, real_t<Scalar> gain) {
  using R = real_t<Scalar>;
  using std::sqrt;
  const int d = rho.cutoff();
  const auto binom = binomial_table<R>(2 * d);
  const R g = 1 / sqrt(gain);
  const R h = sqrt(1 - 1 / gain);
  Matrix<R> table = Matrix<R>::Zero(d, d);
  for (int n = 0; n < d; ++n)
    for (int k = 0; n + k < d; ++k) table(k, n) = sqrt(binom(n + k, k)) * ipow(h, k) * ipow(g, n + 1);
  return apply_shift_kraus(rho, mode, d - 1, +1, [&](int k, int n) { return n + k < d ? table(k, n) : R(0); });
}

// Kraus sums with real coefficients keep exact Hermiticity; no symmetrization needed.
template <class Scalar>
FockDensity<Scalar> with_matrix(const FockDensity<Scalar>& like, Matrix<Scalar> m) {
  const double trace = to_double(m.trace());
  const double deficit = std::max(0.0, 1.0 - trace);
  require(deficit <= like.tail_budget(), ErrorKind::OracleAccuracy,
          "trace deficit after channel exceeds the tail budget");
  return FockDensity<Scalar>(like.cutoff(), like.n_modes(), std::move(m), deficit, like.tail_budget(),
                             typename FockDensity<Scalar>::Unchecked{});
}

/// Loss of transmissivity gain_eta.first followed by amplification gain_eta.second.
template <class Scalar>
FockDensity<Scalar> loss_then_amplify(const FockDensity<Scalar>& rho, int mode, real_t<Scalar> eta,
                                      real_t<Scalar> gain) {
  FockDensity<Scalar> out = rho;
  if (eta != 1) out = with_matrix(rho, pure_loss(out, mode, eta));
  if (gain != 1) out = with_matrix(rho, amplifier(out, mode, gain));
  return out;
}

}  // namespace detail

/// N(eps) o E(r, nbar) o N(eps) on the target mode. The idler channel N(2 eps)
/// is this map with r = 1, nbar = 0.
template <class Scalar>
FockDensity<Scalar> apply_channel_fock(const FockDensity<Scalar>& rho, double r, double nbar, double eps,
                                       Target target = Target::Signal, const ChannelOptions& opt = {}) {
  using R = real_t<Scalar>;
  require(r >= 0.0 && r <= 1.0, ErrorKind::InvalidInput, "reflectivity must lie in [0,1]");
  require(nbar >= 0.0 && std::isfinite(nbar), ErrorKind::InvalidInput, "nbar must be >= 0");
  require(eps >= 0.0 && std::isfinite(eps), ErrorKind::InvalidInput, "eps must be >= 0");
  const int mode = static_cast<int>(target);
  require(mode < rho.n_modes(), ErrorKind::InvalidInput, "target mode not present in the state");

  const R noise_gain = 1 + R(eps) / 2;
  const R loss_gain = 1 + (1 - R(r)) * R(nbar);
  FockDensity<Scalar> out = rho;
  if (eps > 0.0) out = detail::loss_then_amplify(out, mode, 1 / noise_gain, noise_gain);
  if (r != 1.0 || nbar > 0.0) out = detail::loss_then_amplify(out, mode, R(r) / loss_gain, loss_gain);
  if (eps > 0.0) out = detail::loss_then_amplify(out, mode, 1 / noise_gain, noise_gain);

  const GaussianState before = extract_moments(rho);
  const GaussianState after = extract_moments(out);
  const auto noise = make_thermal_noise(eps);
  const auto ch = compose(noise, compose(make_attenuator(r, nbar), noise));
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(before.cm().rows(), before.cm().rows());
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(before.cm().rows(), before.cm().rows());
  k.block<2, 2>(2 * mode, 2 * mode) = ch.k();
  n.block<2, 2>(2 * mode, 2 * mode) = ch.n();
  // The extracted CM carries the trace deficit in its vacuum term, so the
  // propagation uses the same subnormalized vacuum.
  const double trace_before = 1.0 - rho.trace_deficit();
  const Eigen::MatrixXd predicted = k * before.cm() * k.transpose() + trace_before * n;
  const Eigen::VectorXd predicted_mean = k * before.mean();
  const double cm_err = (predicted - after.cm()).cwiseAbs().maxCoeff();
  const double mean_err = (predicted_mean - after.mean()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, predicted.cwiseAbs().maxCoeff());
  require(cm_err <= opt.moment_tol * scale && mean_err <= opt.moment_tol * scale, ErrorKind::OracleAccuracy,
          "Fock channel output moments disagree with phase-space propagation");
  return out;
}

// ---------------------------------------------------------------------------
// spectral machinery

namespace detail {

/// Connected components of the nonzero pattern; all-zero rows are dropped.
template <class Scalar>
std::vector<std::vector<Eigen::Index>> support_blocks(const std::vector<const Matrix<Scalar>*>& ms) {
  const Eigen::Index n = ms.front()->rows();
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<bool> used(n, false);
  for (const auto* m : ms) {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        if ((*m)(i, j) == Scalar(0)) continue;
        used[i] = used[j] = true;
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  }
  std::vector<std::vector<Eigen::Index>> blocks;
  std::vector<Eigen::Index> slot(n, -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!used[i]) continue;
    const auto root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(blocks.size());
      blocks.emplace_back();
    }
    blocks[slot[root]].push_back(i);
  }
  return blocks;
}

template <class Scalar>
Matrix<Scalar> gather(const Matrix<Scalar>& m, const std::vector<Eigen::Index>& idx) {
  const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
  Matrix<Scalar> out(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i) out(i, j) = m(idx[i], idx[j]);
  return out;
}

template <class Scalar>
void hermitian_eigen(const Matrix<Scalar>& a, Vector<real_t<Scalar>>& values, Matrix<Scalar>& vectors) {
  if constexpr (std::is_floating_point_v<real_t<Scalar>>) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(a);
    require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "Hermitian eigensolver failed");
    values = es.eigenvalues();
    vectors = es.eigenvectors();
  } else {
    static_assert(!scalar_traits<Scalar>::is_complex, "extended precision is supported for real densities only");
    auto res = symmetric_eigen<Scalar>(a);
    values = std::move(res.values);
    vectors = std::move(res.vectors);
  }
}

}  // namespace detail

inline constexpr double kClampBudget = 1e-8;

template <class Scalar>
struct SpectralBlock {
  std::vector<Eigen::Index> index;
  Vector<real_t<Scalar>> values;  // clamped to >= 0
  Matrix<Scalar> vectors;         // columns, rows follow `index`
};

template <class Scalar>
struct Spectrum {
  std::vector<SpectralBlock<Scalar>> blocks;
  Eigen::Index dim = 0;
  /// Sum of |eigenvalue| removed by clamping (negative or below the rounding floor).
  double clamped_mass = 0.0;
};

/// Blockwise eigendecomposition of a PSD density. Eigenvalues that are negative
/// or below 64 eps of the block's largest are clamped to zero.
template <class Scalar>
Spectrum<Scalar> spectral_decomposition(const Matrix<Scalar>& m, double clamp_budget = kClampBudget) {
  using R = real_t<Scalar>;
  using std::abs;
  Spectrum<Scalar> s;
  s.dim = m.rows();
  const R eps = std::numeric_limits<R>::epsilon();
  for (auto& idx : detail::support_blocks<Scalar>({&m})) {
    SpectralBlock<Scalar> b;
    b.index = std::move(idx);
    detail::hermitian_eigen(detail::gather(m, b.index), b.values, b.vectors);
    R top = 0;
    for (Eigen::Index k = 0; k < b.values.size(); ++k) top = std::max(top, R(abs(b.values(k))));
    const R floor = 64 * eps * top;
    for (Eigen::Index k = 0; k < b.values.size(); ++k) {
      if (b.values(k) < floor) {
        s.clamped_mass += static_cast<double>(abs(b.values(k)));
        b.values(k) = 0;
      }
    }
    s.blocks.push_back(std::move(b));
  }
  require(s.clamped_mass <= clamp_budget, ErrorKind::OracleAccuracy,
          "negative spectral mass exceeds the clamp budget");
  return s;
}

template <class Scalar>
Spectrum<Scalar> spectral_decomposition(const FockDensity<Scalar>& rho, double clamp_budget = kClampBudget) {
  return spectral_decomposition(rho.matrix(), clamp_budget);
}

/// Tr(rho0^t rho1^(1-t)) = sum_ij a_i^t b_j^(1-t) |<v_i|w_j>|^2, with the
/// eigenvector overlaps precomputed once.
template <class Scalar>
class OverlapEvaluator {
 public:
  using R = real_t<Scalar>;

  OverlapEvaluator(const Spectrum<Scalar>& s0, const Spectrum<Scalar>& s1) {
    require(s0.dim == s1.dim, ErrorKind::InvalidInput, "densities have different dimensions");
    std::vector<Eigen::Index> where1(s1.dim, -1), pos1(s1.dim, -1);
    for (std::size_t b = 0; b < s1.blocks.size(); ++b)
      for (std::size_t k = 0; k < s1.blocks[b].index.size(); ++k) {
        where1[s1.blocks[b].index[k]] = static_cast<Eigen::Index>(b);
        pos1[s1.blocks[b].index[k]] = static_cast<Eigen::Index>(k);
      }
    for (const auto& b0 : s0.blocks) {
      // rows of b0 grouped by the block of s1 that contains them
      std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> rows(s1.blocks.size());
      for (std::size_t k = 0; k < b0.index.size(); ++k) {
        const auto g = where1[b0.index[k]];
        if (g >= 0) rows[g].push_back({static_cast<Eigen::Index>(k), pos1[b0.index[k]]});
      }
      for (std::size_t g = 0; g < rows.size(); ++g) {
        if (rows[g].empty()) continue;
        const auto& b1 = s1.blocks[g];
        const Eigen::Index n = static_cast<Eigen::Index>(rows[g].size());
        Matrix<Scalar> v0(n, b0.values.size()), v1(n, b1.values.size());
        for (Eigen::Index r = 0; r < n; ++r) {
          v0.row(r) = b0.vectors.row(rows[g][r].first);
          v1.row(r) = b1.vectors.row(rows[g][r].second);
        }
        const Matrix<Scalar> w = v0.adjoint() * v1;
        Term term;
        term.a = b0.values;
        term.b = b1.values;
        term.p.resize(w.rows(), w.cols());
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          for (Eigen::Index i = 0; i < w.rows(); ++i) term.p(i, j) = detail::abs2(w(i, j));
        terms_.push_back(std::move(term));
      }
    }
  }

  double operator()(double t) const {
    require(t > 0.0 && t < 1.0, ErrorKind::InvalidInput, "overlap exponent t must lie in (0,1)");
    using std::pow;
    const R tt(t);
    const R ut = 1 - tt;
    R total = 0;
    for (const auto& term : terms_) {
      Vector<R> at(term.a.size()), bt(term.b.size());
      for (Eigen::Index i = 0; i < at.size(); ++i) at(i) = term.a(i) > 0 ? R(pow(term.a(i), tt)) : R(0);
      for (Eigen::Index j = 0; j < bt.size(); ++j) bt(j) = term.b(j) > 0 ? R(pow(term.b(j), ut)) : R(0);
      total += at.dot(term.p * bt);
    }
    return static_cast<double>(total);
  }

 private:
  struct Term {
    Vector<R> a, b;
    Matrix<R> p;
  };
  std::vector<Term> terms_;
};

template <class Scalar>
void require_same_shape(const FockDensity<Scalar>& rho0, const FockDensity<Scalar>& rho1) {
  require(rho0.cutoff() == rho1.cutoff() && rho0.n_modes() == rho1.n_modes(), ErrorKind::InvalidInput,
          "densities have different dimensions");
}

template <class Scalar>
double overlap_fock(const FockDensity<Scalar>& rho0, const FockDensity<Scalar>& rho1, double t) {
  require_same_shape(rho0, rho1);
  return OverlapEvaluator<Scalar>(spectral_decomposition(rho0), spectral_decomposition(rho1))(t);
}

/// (1 - D) / 2 with D = (1/2) sum |eig(rho0 - rho1)|.
template <class Scalar>
double helstrom_error_fock(const FockDensity<Scalar>& rho0, const FockDensity<Scalar>& rho1) {
  using R = real_t<Scalar>;
  using std::abs;
  require_same_shape(rho0, rho1);
  const Matrix<Scalar> diff = rho0.matrix() - rho1.matrix();
  R norm = 0;
  for (const auto& idx : detail::support_blocks<Scalar>({&diff})) {
    Vector<R> values;
    Matrix<Scalar> vectors;
    detail::hermitian_eigen(detail::gather(diff, idx), values, vectors);
    for (Eigen::Index k = 0; k < values.size(); ++k) norm += abs(values(k));
  }
  return 0.5 * (1.0 - 0.5 * static_cast<double>(norm));
}

/// Uhlmann fidelity [Tr sqrt(sqrt(rho0) rho1 sqrt(rho0))]^2.
template <class Scalar>
double fidelity_fock(const FockDensity<Scalar>& rho0, const FockDensity<Scalar>& rho1,
                     double clamp_budget = kClampBudget) {
  using R = real_t<Scalar>;
  using std::abs;
  using std::sqrt;
  require_same_shape(rho0, rho1);
  const R eps = std::numeric_limits<R>::epsilon();
  R total = 0;
  double clamped = 0.0;
  auto clamp = [&](Vector<R>& values) {
    R top = 0;
    for (Eigen::Index k = 0; k < values.size(); ++k) top = std::max(top, R(abs(values(k))));
    for (Eigen::Index k = 0; k < values.size(); ++k)
      if (values(k) < 64 * eps * top) {
        clamped += static_cast<double>(abs(values(k)));
        values(k) = 0;
      }
  };
  for (const auto& idx : detail::support_blocks<Scalar>({&rho0.matrix(), &rho1.matrix()})) {
    Vector<R> values;
    Matrix<Scalar> vectors;
    detail::hermitian_eigen(detail::gather(rho0.matrix(), idx), values, vectors);
    clamp(values);
    Vector<Scalar> root(values.size());
    for (Eigen::Index k = 0; k < values.size(); ++k) root(k) = Scalar(sqrt(values(k)));
    const Matrix<Scalar> s = vectors * root.asDiagonal() * vectors.adjoint();
    Matrix<Scalar> inner = s * detail::gather(rho1.matrix(), idx) * s;
    inner = (0.5 * (inner + inner.adjoint())).eval();
    detail::hermitian_eigen(inner, values, vectors);
    // the two-sided product squares the rounding floor of rho0
    R top = 0;
    for (Eigen::Index k = 0; k < values.size(); ++k) top = std::max(top, R(abs(values(k))));
    for (Eigen::Index k = 0; k < values.size(); ++k) {
      if (values(k) > 64 * eps * top)
        total += sqrt(values(k));
      else if (values(k) < 0)
        clamped += static_cast<double>(abs(values(k)));
    }
  }
  require(clamped <= clamp_budget, ErrorKind::OracleAccuracy, "negative spectral mass exceeds the clamp budget");
  const double f = static_cast<double>(total);
  return f * f;
}

/// EPR output pair (S_u on the signal, N(2 eps) on the idler of a truncated TMSV).
template <class Scalar = quad>
FockDensity<Scalar> conditional_output_fock(const CellSpec& cell, int u, double n_s, int cutoff,
                                           double tail_budget = kDefaultTailBudget) {
  cell.validate();
  const auto tmsv = tmsv_fock<Scalar>(n_s, cutoff, tail_budget);
  auto out = apply_channel_fock(tmsv, cell.r(u), cell.nbar, cell.eps, Target::Signal);
  if (cell.eps > 0.0) out = apply_channel_fock(out, 1.0, 0.0, cell.eps, Target::Idler);
  return out;
}

}  // namespace qread::fock

#endif  // QREAD_FOCK_ORACLE_HPP
