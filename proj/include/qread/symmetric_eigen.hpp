#ifndef QREAD_SYMMETRIC_EIGEN_HPP
#define QREAD_SYMMETRIC_EIGEN_HPP

// Real symmetric eigensolver (Householder tridiagonalization followed by
// implicit QL) for any real type with ADL sqrt/abs. Used for extended
// precision types, where Eigen's own solver cannot be instantiated.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "qread/errors.hpp"

namespace qread {

template <class Real>
struct SymmetricEigen {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> values;                // ascending
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns
};

template <class Real>
SymmetricEigen<Real> symmetric_eigen(const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>& a) {
  using std::abs;
  using std::sqrt;
  const int n = static_cast<int>(a.rows());
  require(a.cols() == a.rows(), ErrorKind::InvalidInput, "symmetric_eigen needs a square matrix");
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> v = a;
  std::vector<Real> d(n), e(n);
  auto hyp = [](const Real& x, const Real& y) -> Real {
    const Real ax = abs(x), ay = abs(y);
    const Real big = std::max(ax, ay);
    if (big == 0) return Real(0);
    const Real rx = ax / big, ry = ay / big;
    return Real(big * sqrt(rx * rx + ry * ry));
  };
  if (n == 0) return {};

  // Householder reduction to tridiagonal form.
  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (int i = n - 1; i > 0; --i) {
    Real scale = 0, h = 0;
    for (int k = 0; k < i; ++k) scale += abs(d[k]);
    if (scale == 0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0;
        v(j, i) = 0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      Real f = d[i - 1];
      Real g = sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0;
      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const Real hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0;
      }
    }
    d[i] = h;
  }
  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1;
    const Real h = d[i + 1];
    if (h != 0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        Real g = 0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0;
  }
  v(n - 1, n - 1) = 1;
  e[0] = 0;

  // Implicit QL on the tridiagonal matrix.
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0;
  Real f = 0, tst1 = 0;
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, Real(abs(d[l]) + abs(e[l])));
    int m = l;
    while (m < n) {
      if (abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;
    if (m > l) {
      int iter = 0;
      do {
        require(++iter <= 100, ErrorKind::NumericalFailure, "symmetric eigensolver did not converge");
        Real g = d[l];
        Real p = (d[l + 1] - g) / (2 * e[l]);
        Real r = hyp(p, Real(1));
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const Real dl1 = d[l + 1];
        Real h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        Real c = 1, c2 = 1, c3 = 1, s = 0, s2 = 0;
        const Real el1 = e[l + 1];
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = hyp(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return d[x] < d[y]; });
  SymmetricEigen<Real> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    out.values(j) = d[order[j]];
    out.vectors.col(j) = v.col(order[j]);
  }
  return out;
}

}  // namespace qread

#endif  // QREAD_SYMMETRIC_EIGEN_HPP
