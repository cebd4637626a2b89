#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "mdep/autocov.hpp"
#include "mdep/errors.hpp"

namespace mdep {

namespace detail {

inline void check_lag_order(std::size_t n, std::size_t M) {
  if (n < 2 || M > n - 2)
    throw DimensionError("lag order " + std::to_string(M) + " requires n >= " +
                         std::to_string(M + 2) + ", got n = " + std::to_string(n));
}

/// Number of s in 1..n with |s - t| = k (t is 1-based).
inline double lag_neighbours(std::size_t n, std::size_t t, std::size_t k) {
  if (k == 0) return 1.0;
  double c = 0.0;
  if (t > k) c += 1.0;
  if (t + k <= n) c += 1.0;
  return c;
}

}  // namespace detail

/// Expectation map of the sample autocovariance traces: E[gamma_hat] = Theta * gamma,
/// where gamma(h) = tr Gamma(h), h = 0..M, for any M-dependent stationary
/// process (with arbitrary mean).
///
/// Row h expands
///   n E[gamma_hat(h)] = sum_{t=1}^{n-h} E[(X_t - Xbar)'(X_{t+h} - Xbar)]
///     = sum_t [ c(h) - (1/n) sum_s c(s-t) - (1/n) sum_s c(t+h-s)
///               + (1/n^2) sum_{s,s'} c(s-s') ],
/// with c(k) = tr Gamma(|k|) for |k| <= M and 0 otherwise.
inline Eigen::MatrixXd theta_matrix(std::size_t n, std::size_t M) {
  detail::check_lag_order(n, M);
  const double nd = static_cast<double>(n);
  const auto dim = static_cast<Eigen::Index>(M + 1);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t h = 0; h <= M; ++h) {
    const double terms = static_cast<double>(n - h);
    for (std::size_t j = 0; j <= M; ++j) {
      double coef = (h == j) ? terms : 0.0;
      double neighbours = 0.0;
      for (std::size_t t = 1; t + h <= n; ++t)
        neighbours += detail::lag_neighbours(n, t, j) + detail::lag_neighbours(n, t + h, j);
      coef -= neighbours / nd;
      const double pair_count = (j == 0) ? nd : 2.0 * static_cast<double>(n - j);
      coef += terms * pair_count / (nd * nd);
      theta(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(j)) = coef / nd;
    }
  }
  return theta;
}

/// Weights with b' gamma = tr(Omega_n) = tr Gamma(0) + 2 sum_{h=1}^M (1 - h/n) tr Gamma(h).
inline Eigen::VectorXd b_vector(std::size_t n, std::size_t M) {
  detail::check_lag_order(n, M);
  Eigen::VectorXd b(static_cast<Eigen::Index>(M + 1));
  b(0) = 1.0;
  for (std::size_t h = 1; h <= M; ++h)
    b(static_cast<Eigen::Index>(h)) = 2.0 * (1.0 - static_cast<double>(h) / static_cast<double>(n));
  return b;
}

/// chi_n = (1/n) sum_{h=1}^M (1 - h/n)^2.
inline double chi_n(std::size_t n, std::size_t M) {
  const double nd = static_cast<double>(n);
  double s = 0.0;
  for (std::size_t h = 1; h <= M; ++h) {
    const double w = 1.0 - static_cast<double>(h) / nd;
    s += w * w;
  }
  return s / nd;
}

/// Everything needed to turn gamma_hat into an unbiased tr(Omega_n).
struct DebiasSystem {
  std::size_t n = 0;
  std::size_t M = 0;
  Eigen::MatrixXd theta;
  Eigen::VectorXd b;
  Eigen::VectorXd beta;  // solves theta' beta = b
  double chi_n = 0.0;
};

inline DebiasSystem debias_system(std::size_t n, std::size_t M) {
  DebiasSystem sys;
  sys.n = n;
  sys.M = M;
  sys.theta = theta_matrix(n, M);
  sys.b = b_vector(n, M);
  sys.chi_n = mdep::chi_n(n, M);

  const Eigen::MatrixXd lhs = sys.theta.transpose();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
  const double scale = lhs.cwiseAbs().maxCoeff();
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= 1e-12 * scale))
    throw SingularSystemError("debiasing matrix is numerically singular for n = " +
                              std::to_string(n) + ", M = " + std::to_string(M));
  sys.beta = lu.solve(sys.b);
  return sys;
}

/// beta' gamma_hat, an exactly unbiased estimate of tr(Omega_n).
inline double tr_omega_hat(const TraceAutocovVector& gamma_hat, const DebiasSystem& sys) {
  if (gamma_hat.n != sys.n || gamma_hat.M != sys.M)
    throw ConfigError("tr_omega_hat: autocovariance vector (n=" + std::to_string(gamma_hat.n) +
                      ", M=" + std::to_string(gamma_hat.M) + ") does not match system (n=" +
                      std::to_string(sys.n) + ", M=" + std::to_string(sys.M) + ")");
  return sys.beta.dot(gamma_hat.gamma_hat);
}

}  // namespace mdep
