#ifndef QREAD_PHASE_SPACE_HPP
#define QREAD_PHASE_SPACE_HPP

// Gaussian states and one-mode Gaussian channels in phase space.
//
// Conventions (fixed): quadratures ordered q1,p1,...,qn,pn; vacuum CM is the
// identity; [x, x^T] = 2i Omega with Omega = (+)_k [[0,1],[-1,0]].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "qread/errors.hpp"

namespace qread {

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPhysicalityTol = 1e-9;

/// Z = diag(1, -1), the correlation pattern of two-mode squeezing.
inline Eigen::Matrix2d pauli_z() { return Eigen::Vector2d(1.0, -1.0).asDiagonal(); }

inline Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

class GaussianState {
 public:
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cm) : mean_(std::move(mean)), cm_(std::move(cm)) {
    require(cm_.rows() > 0 && cm_.rows() % 2 == 0 && cm_.rows() == cm_.cols(), ErrorKind::InvalidInput,
            "covariance matrix must be square with even dimension");
    require(mean_.size() == cm_.rows(), ErrorKind::InvalidInput, "mean vector length must match the CM");
    require(cm_.allFinite() && mean_.allFinite(), ErrorKind::InvalidInput, "non-finite moments");
    require(((cm_ - cm_.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol), ErrorKind::InvalidInput,
            "covariance matrix is not symmetric");
  }

  explicit GaussianState(const Eigen::MatrixXd& cm) : GaussianState(Eigen::VectorXd::Zero(cm.rows()), cm) {}

  static GaussianState vacuum(int n_modes = 1) {
    require(n_modes >= 1, ErrorKind::InvalidInput, "n_modes must be positive");
    return GaussianState(Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
  }

  static GaussianState thermal(double nbar) {
    require(nbar >= 0.0, ErrorKind::InvalidInput, "thermal photon number must be non-negative");
    return GaussianState((2.0 * nbar + 1.0) * Eigen::MatrixXd::Identity(2, 2));
  }

  /// Coherent state |alpha> with alpha = (q + i p) / 2.
  static GaussianState coherent(std::complex<double> alpha) {
    Eigen::VectorXd mean(2);
    mean << 2.0 * alpha.real(), 2.0 * alpha.imag();
    return GaussianState(std::move(mean), Eigen::MatrixXd::Identity(2, 2));
  }

  int n_modes() const { return static_cast<int>(cm_.rows() / 2); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cm() const { return cm_; }

  /// 2x2 block (i, j) of the CM.
  Eigen::Matrix2d block(int i, int j) const { return cm_.block<2, 2>(2 * i, 2 * j); }
  Eigen::Vector2d mode_mean(int i) const { return mean_.segment<2>(2 * i); }

  bool zero_mean(double tol = 0.0) const { return mean_.cwiseAbs().maxCoeff() <= tol; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cm_;
};

/// Affine map V -> K V K^T + N, x -> K x + d on one mode.
class OneModeGaussianChannel {
 public:
  OneModeGaussianChannel(const Eigen::Matrix2d& k, const Eigen::Matrix2d& n,
                         const Eigen::Vector2d& d = Eigen::Vector2d::Zero())
      : k_(k), n_(n), d_(d) {
    require(k_.allFinite() && n_.allFinite() && d_.allFinite(), ErrorKind::InvalidInput,
            "non-finite channel matrices");
    require(std::abs(n_(0, 1) - n_(1, 0)) <= kSymmetryTol, ErrorKind::InvalidInput,
            "noise matrix must be symmetric");
    const double lo = 0.5 * (n_(0, 0) + n_(1, 1)) -
                      std::sqrt(0.25 * (n_(0, 0) - n_(1, 1)) * (n_(0, 0) - n_(1, 1)) + n_(0, 1) * n_(0, 1));
    require(lo >= -kSymmetryTol, ErrorKind::InvalidInput, "noise matrix must be positive semidefinite");
    const double dk = k_.determinant() - 1.0;
    require(n_.determinant() >= dk * dk - kSymmetryTol, ErrorKind::InvalidInput,
            "channel violates det N >= (det K - 1)^2");
  }

  static OneModeGaussianChannel identity() {
    return {Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Zero()};
  }

  const Eigen::Matrix2d& k() const { return k_; }
  const Eigen::Matrix2d& n() const { return n_; }
  const Eigen::Vector2d& d() const { return d_; }

 private:
  Eigen::Matrix2d k_;
  Eigen::Matrix2d n_;
  Eigen::Vector2d d_;
};

/// Memory cell: reflectivities for bit values 0/1, bath photons, internal noise variance.
struct CellSpec {
  double r0 = 0.0;
  double r1 = 1.0;
  double nbar = 0.0;
  double eps = 0.0;

  void validate() const {
    require(r0 >= 0.0 && r0 <= 1.0, ErrorKind::InvalidInput, "r0 must lie in [0,1]");
    require(r1 >= 0.0 && r1 <= 1.0, ErrorKind::InvalidInput, "r1 must lie in [0,1]");
    require(nbar >= 0.0 && std::isfinite(nbar), ErrorKind::InvalidInput, "nbar must be >= 0");
    require(eps >= 0.0 && std::isfinite(eps), ErrorKind::InvalidInput, "eps must be >= 0");
  }

  double r(int u) const { return u == 0 ? r0 : r1; }
  double beta() const { return 2.0 * nbar + 1.0; }
  bool pure_loss() const { return nbar == 0.0 && eps == 0.0; }
};

enum class TransmitterKind { Epr, Coherent };

struct TransmitterSpec {
  TransmitterKind kind = TransmitterKind::Epr;
  double m = 1.0;
  double l = 1.0;
  double energy_n = 0.0;

  static TransmitterSpec epr(double m, double energy_n) {
    TransmitterSpec t{TransmitterKind::Epr, m, m, energy_n};
    t.validate();
    return t;
  }
  static TransmitterSpec coherent(double m, double energy_n) {
    TransmitterSpec t{TransmitterKind::Coherent, m, 0.0, energy_n};
    t.validate();
    return t;
  }

  void validate() const {
    require(m >= 1.0 && std::isfinite(m), ErrorKind::InvalidInput, "bandwidth must be >= 1");
    require(energy_n >= 0.0 && std::isfinite(energy_n), ErrorKind::InvalidInput, "energy must be >= 0");
    require(kind == TransmitterKind::Epr ? l == m : l == 0.0, ErrorKind::InvalidInput,
            "idler count inconsistent with transmitter kind");
  }

  double n_s() const { return energy_n / m; }
  double mu() const { return 2.0 * n_s() + 1.0; }
  /// Two-mode squeezing parameter with n_s = sinh^2(xi).
  double xi() const { return std::asinh(std::sqrt(n_s())); }
};

// ---------------------------------------------------------------------------
// constructors

inline GaussianState make_tmsv(double n_s) {
  require(n_s >= 0.0 && std::isfinite(n_s), ErrorKind::InvalidInput, "n_s must be >= 0");
  const double mu = 2.0 * n_s + 1.0;
  const double c = 2.0 * std::sqrt(n_s * (n_s + 1.0));
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(4, 4);
  v.block<2, 2>(0, 0) = mu * Eigen::Matrix2d::Identity();
  v.block<2, 2>(2, 2) = mu * Eigen::Matrix2d::Identity();
  v.block<2, 2>(0, 2) = c * pauli_z();
  v.block<2, 2>(2, 0) = c * pauli_z();
  return GaussianState(std::move(v));
}

inline OneModeGaussianChannel make_attenuator(double r, double nbar = 0.0) {
  require(r >= 0.0 && r <= 1.0, ErrorKind::InvalidInput, "reflectivity must lie in [0,1]");
  require(nbar >= 0.0 && std::isfinite(nbar), ErrorKind::InvalidInput, "nbar must be >= 0");
  return {std::sqrt(r) * Eigen::Matrix2d::Identity(), (1.0 - r) * (2.0 * nbar + 1.0) * Eigen::Matrix2d::Identity()};
}

inline OneModeGaussianChannel make_thermal_noise(double eps) {
  require(eps >= 0.0 && std::isfinite(eps), ErrorKind::InvalidInput, "noise variance must be >= 0");
  return {Eigen::Matrix2d::Identity(), eps * Eigen::Matrix2d::Identity()};
}

/// second o first.
inline OneModeGaussianChannel compose(const OneModeGaussianChannel& second, const OneModeGaussianChannel& first) {
  const Eigen::Matrix2d k = second.k() * first.k();
  Eigen::Matrix2d n = second.k() * first.n() * second.k().transpose() + second.n();
  n = 0.5 * (n + n.transpose()).eval();
  const Eigen::Vector2d d = second.k() * first.d() + second.d();
  return {k, n, d};
}

/// S_u = N(eps) o E(r_u, nbar) o N(eps), the channel seen by a signal mode.
inline OneModeGaussianChannel memory_channel(const CellSpec& cell, int u) {
  cell.validate();
  require(u == 0 || u == 1, ErrorKind::InvalidInput, "bit value must be 0 or 1");
  const auto noise = make_thermal_noise(cell.eps);
  return compose(noise, compose(make_attenuator(cell.r(u), cell.nbar), noise));
}

/// D = N(2 eps), the channel seen by an idler mode.
inline OneModeGaussianChannel idler_channel(const CellSpec& cell) {
  cell.validate();
  return make_thermal_noise(2.0 * cell.eps);
}

// ---------------------------------------------------------------------------
// symplectic spectrum and physicality

/// Sorted symplectic eigenvalues. With S = V^{1/2}, (S Omega S)^T (S Omega S) is symmetric with
/// spectrum nu_k^2, each twice; the discriminant closed form loses half the digits for pure states.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& v) {
  require(v.rows() == v.cols() && v.rows() % 2 == 0 && v.rows() >= 2, ErrorKind::InvalidInput,
          "CM must be square with even dimension");
  if (v.rows() == 2) {
    const double det = v.determinant();
    require(det >= -kSymmetryTol, ErrorKind::NumericalFailure, "negative CM determinant");
    return {std::sqrt(std::max(det, 0.0))};
  }
  const Eigen::MatrixXd sym = 0.5 * (v + v.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "CM eigendecomposition failed");
  require(es.eigenvalues().minCoeff() >= -kSymmetryTol, ErrorKind::NumericalFailure, "CM is not positive");
  const Eigen::MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd a = root * symplectic_form(static_cast<int>(v.rows() / 2)) * root;
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sq(0.5 * (ata + ata.transpose()), Eigen::EigenvaluesOnly);
  require(sq.info() == Eigen::Success, ErrorKind::NumericalFailure, "symplectic spectrum failed");
  std::vector<double> nu;
  for (Eigen::Index k = 0; k < sq.eigenvalues().size(); k += 2) {
    const double pair = 0.5 * (sq.eigenvalues()[k] + sq.eigenvalues()[k + 1]);
    require(pair >= -kSymmetryTol, ErrorKind::NumericalFailure, "negative squared symplectic eigenvalue");
    nu.push_back(std::sqrt(std::max(pair, 0.0)));
  }
  return nu;
}

inline std::vector<double> symplectic_eigenvalues(const GaussianState& state) {
  return symplectic_eigenvalues(state.cm());
}

struct PhysicalityReport {
  bool physical = false;
  bool symmetric = false;
  double asymmetry = 0.0;
  double min_symplectic_eigenvalue = 0.0;
  std::string detail;
};

inline PhysicalityReport check_physical(const Eigen::MatrixXd& v) {
  PhysicalityReport report;
  report.asymmetry = (v - v.transpose()).cwiseAbs().maxCoeff();
  report.symmetric = report.asymmetry <= kSymmetryTol;
  try {
    const auto nu = symplectic_eigenvalues(v);
    report.min_symplectic_eigenvalue = nu.front();
  } catch (const Error& e) {
    report.min_symplectic_eigenvalue = std::nan("");
    report.detail = e.what();
    return report;
  }
  report.physical = report.symmetric && report.min_symplectic_eigenvalue >= 1.0 - kPhysicalityTol;
  std::ostringstream os;
  os << "min symplectic eigenvalue " << report.min_symplectic_eigenvalue << ", asymmetry " << report.asymmetry;
  report.detail = os.str();
  return report;
}

inline PhysicalityReport check_physical(const GaussianState& state) { return check_physical(state.cm()); }

// ---------------------------------------------------------------------------
// channel action

inline GaussianState apply(const OneModeGaussianChannel& ch, const GaussianState& state) {
  require(state.n_modes() == 1, ErrorKind::InvalidInput, "one-mode channel needs a one-mode state");
  Eigen::MatrixXd v = ch.k() * state.cm() * ch.k().transpose() + ch.n();
  v = 0.5 * (v + v.transpose()).eval();
  Eigen::VectorXd x = ch.k() * state.mean() + ch.d();
  return GaussianState(std::move(x), std::move(v));
}

/// (E_A (x) E_B) acting on a two-mode state, block-wise on the CM.
inline GaussianState apply_bipartite(const OneModeGaussianChannel& ch_a, const OneModeGaussianChannel& ch_b,
                                     const GaussianState& state) {
  require(state.n_modes() == 2, ErrorKind::InvalidInput, "bipartite channel needs a two-mode state");
  const Eigen::Matrix2d a = state.block(0, 0);
  const Eigen::Matrix2d b = state.block(1, 1);
  const Eigen::Matrix2d c = state.block(0, 1);
  Eigen::MatrixXd v(4, 4);
  v.block<2, 2>(0, 0) = ch_a.k() * a * ch_a.k().transpose() + ch_a.n();
  v.block<2, 2>(2, 2) = ch_b.k() * b * ch_b.k().transpose() + ch_b.n();
  v.block<2, 2>(0, 2) = ch_a.k() * c * ch_b.k().transpose();
  v.block<2, 2>(2, 0) = v.block<2, 2>(0, 2).transpose();
  v = 0.5 * (v + v.transpose()).eval();
  Eigen::VectorXd x(4);
  x.segment<2>(0) = ch_a.k() * state.mode_mean(0) + ch_a.d();
  x.segment<2>(2) = ch_b.k() * state.mode_mean(1) + ch_b.d();
  const bool input_physical = check_physical(state).physical;
  GaussianState out(std::move(x), std::move(v));
  if (input_physical) {
    const auto report = check_physical(out);
    require(report.physical, ErrorKind::InternalConsistency, "bipartite channel output unphysical: " + report.detail);
  }
  return out;
}

/// Signal/idler CM after S_u (x) N(2 eps) acting on a TMSV with n_s photons.
inline Eigen::Matrix4d conditional_output_cm(const CellSpec& cell, int u, double n_s) {
  cell.validate();
  require(u == 0 || u == 1, ErrorKind::InvalidInput, "bit value must be 0 or 1");
  require(n_s >= 0.0 && std::isfinite(n_s), ErrorKind::InvalidInput, "n_s must be >= 0");
  const double r = cell.r(u);
  const double mu = 2.0 * n_s + 1.0;
  const double signal = r * (mu + cell.eps) + (1.0 - r) * cell.beta() + cell.eps;
  const double idler = mu + 2.0 * cell.eps;
  const double corr = std::sqrt(r * (mu * mu - 1.0));
  Eigen::Matrix4d v = Eigen::Matrix4d::Zero();
  v.block<2, 2>(0, 0) = signal * Eigen::Matrix2d::Identity();
  v.block<2, 2>(2, 2) = idler * Eigen::Matrix2d::Identity();
  v.block<2, 2>(0, 2) = corr * pauli_z();
  v.block<2, 2>(2, 0) = corr * pauli_z();
  return v;
}

inline GaussianState conditional_output_state(const CellSpec& cell, int u, double n_s) {
  return GaussianState(Eigen::MatrixXd(conditional_output_cm(cell, u, n_s)));
}

}  // namespace qread

#endif  // QREAD_PHASE_SPACE_HPP
