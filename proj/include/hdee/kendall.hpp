#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "hdee/errors.hpp"

namespace hdee {

// tau, its sine transform, and the leave-one-out matrices feeding the
// rank-based variance estimator.
struct KendallTables {
  Eigen::MatrixXd tau;
  Eigen::MatrixXd s_tau;
  std::vector<Eigen::MatrixXd> theta_i;
};

namespace detail {

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// rowsum(i) = sum_{i' != i} sign((X_ij - X_i'j)(X_ik - X_i'k)). One O(n^2)
// pass serves both the pair's tau and its leave-one-out terms.
inline void pair_rowsums(const Eigen::MatrixXd& X, Eigen::Index j, Eigen::Index k,
                         Eigen::VectorXd& rowsum) {
  const Eigen::Index n = X.rows();
  rowsum.setZero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xij = X(i, j), xik = X(i, k);
    for (Eigen::Index i2 = i + 1; i2 < n; ++i2) {
      const double s = sign_of((xij - X(i2, j)) * (xik - X(i2, k)));
      rowsum(i) += s;
      rowsum(i2) += s;
    }
  }
}

}  // namespace detail

// Pairwise-concordance correlation matrix. Naive O(d^2 n^2) pair loops; at
// the scales this library targets (n a few hundred, d <= a few hundred) this
// is a fraction of a second. Ties contribute sign(0) = 0, a convention that
// matters only for data with repeated values; the diagonal is set to 1.
inline Eigen::MatrixXd kendall_tau(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw DegenerateData("kendall_tau: need at least 2 rows, got " + std::to_string(n));
  Eigen::MatrixXd tau = Eigen::MatrixXd::Identity(d, d);
  const double denom = static_cast<double>(n) * static_cast<double>(n - 1);
  Eigen::VectorXd rowsum(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j + 1; k < d; ++k) {
      detail::pair_rowsums(X, j, k, rowsum);
      tau(j, k) = tau(k, j) = rowsum.sum() / denom;
    }
  }
  return tau;
}

// Entrywise sin(pi/2 * tau) off the diagonal, ones on the diagonal.
inline Eigen::MatrixXd skeptic_transform(const Eigen::MatrixXd& tau) {
  const Eigen::Index d = tau.rows();
  if (tau.cols() != d) throw DimensionMismatch("skeptic_transform: tau must be square");
  if ((tau.array().abs() > 1.0 + 1e-12).any())
    throw OutOfRange("skeptic_transform: |tau| entries must not exceed 1");
  Eigen::MatrixXd s(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k)
      s(j, k) = (j == k) ? 1.0 : std::sin(M_PI / 2.0 * tau(j, k));
  }
  return s;
}

// Leave-one-out tau residuals scaled by the sine-transform derivative:
//   tau^i_jk   = (n-1)^{-1} sum_{i' != i} sign((X_ij-X_i'j)(X_ik-X_i'k)) - tau_jk
//   Theta^i_jk = pi * cos(pi/2 * tau_jk) * tau^i_jk.
// The i-sum of every entry vanishes in exact arithmetic. The pair's own tau
// is recomputed from the same pass so that centering identity holds to
// rounding error; the caller's tau enters only through the cosine factor.
inline std::vector<Eigen::MatrixXd> leave_one_out_theta(const Eigen::MatrixXd& X,
                                                        const Eigen::MatrixXd& tau) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw DegenerateData("leave_one_out_theta: need at least 2 rows");
  if (tau.rows() != d || tau.cols() != d)
    throw DimensionMismatch("leave_one_out_theta: tau dimension mismatch");

  std::vector<Eigen::MatrixXd> theta(n, Eigen::MatrixXd::Zero(d, d));
  Eigen::VectorXd rowsum(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      detail::pair_rowsums(X, j, k, rowsum);
      const double tau_pair = rowsum.sum() / (static_cast<double>(n) * (n - 1));
      const double deriv = M_PI * std::cos(M_PI / 2.0 * tau(j, k));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double tau_i = rowsum(i) / static_cast<double>(n - 1) - tau_pair;
        const double v = deriv * tau_i;
        theta[i](j, k) = v;
        theta[i](k, j) = v;
      }
    }
  }
  return theta;
}

// Fused single-pass computation of all three tables.
inline KendallTables kendall_tables(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw DegenerateData("kendall_tables: need at least 2 rows");
  KendallTables t;
  t.tau = Eigen::MatrixXd::Identity(d, d);
  t.theta_i.assign(n, Eigen::MatrixXd::Zero(d, d));
  Eigen::VectorXd rowsum(n);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      detail::pair_rowsums(X, j, k, rowsum);
      const double tau_pair = rowsum.sum() / (static_cast<double>(n) * (n - 1));
      if (j != k) t.tau(j, k) = t.tau(k, j) = tau_pair;
      const double deriv = M_PI * std::cos(M_PI / 2.0 * t.tau(j, k));
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = deriv * (rowsum(i) / static_cast<double>(n - 1) - tau_pair);
        t.theta_i[i](j, k) = v;
        t.theta_i[i](k, j) = v;
      }
    }
  }
  t.s_tau = skeptic_transform(t.tau);
  return t;
}

}  // namespace hdee
