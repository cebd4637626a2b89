// Independent reference implementations used only by the tests. They follow
// the defining formulas directly, in p-space where possible, and favour
// clarity over speed.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <numbers>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "mdep/mdep.hpp"

namespace oracle {

/// Welford accumulator.
struct RunningStats {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double se() const { return std::sqrt(variance() / static_cast<double>(count)); }
};

/// Phi(x) by composite Simpson on [0, x] of the density, plus 1/2.
inline double simpson_normal_cdf(double x, int intervals = 200000) {
  const double h = x / intervals;
  auto f = [](double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
  double s = f(0.0) + f(x);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 0.5 + s * h / 3.0;
}

/// Root of normal_cdf(z) = q by bisection.
inline double bisect_quantile(double q) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mdep::normal_cdf(mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline Eigen::MatrixXd gram_triple_loop(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd g(x.rows(), x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index s = 0; s < x.rows(); ++s) {
      double acc = 0.0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) acc += x(t, j) * x(s, j);
      g(t, s) = acc;
    }
  return g;
}

inline Eigen::VectorXd column_mean_loop(const Eigen::MatrixXd& x) {
  Eigen::VectorXd m(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < x.rows(); ++t) s += x(t, j);
    m(j) = s / static_cast<double>(x.rows());
  }
  return m;
}

/// tr Gamma_hat(h) from explicitly accumulated p x p outer products.
inline Eigen::VectorXd trace_autocov_outer(const Eigen::MatrixXd& x, std::size_t M) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd mean = column_mean_loop(x);
  Eigen::VectorXd out(static_cast<Eigen::Index>(M + 1));
  for (std::size_t h = 0; h <= M; ++h) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    for (Eigen::Index t = 0; t + static_cast<Eigen::Index>(h) < n; ++t) {
      const Eigen::VectorXd u = x.row(t).transpose() - mean;
      const Eigen::VectorXd v = x.row(t + static_cast<Eigen::Index>(h)).transpose() - mean;
      acc += u * v.transpose();
    }
    out(static_cast<Eigen::Index>(h)) = acc.trace() / static_cast<double>(n);
  }
  return out;
}

/// Theta by expanding gamma_hat(h) = X' Q_h X as a quadratic form in the rows:
/// Q_h = (1/n) sum_t (e_t - 1/n)(e_{t+h} - 1/n)', and E[X_s'X_u] - mu'mu =
/// tr Gamma(|s - u|). Each entry is the total Q_h weight on pairs at distance j.
inline Eigen::MatrixXd theta_bruteforce(std::size_t n, std::size_t M) {
  const double nd = static_cast<double>(n);
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M + 1), static_cast<Eigen::Index>(M + 1));
  for (std::size_t h = 0; h <= M; ++h) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t + h < n; ++t)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t u = 0; u < n; ++u) {
          const double left = (s == t ? 1.0 : 0.0) - 1.0 / nd;
          const double right = (u == t + h ? 1.0 : 0.0) - 1.0 / nd;
          q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u)) += left * right / nd;
        }
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t u = 0; u < n; ++u) {
        const auto d = static_cast<std::size_t>(std::labs(static_cast<long>(s) - static_cast<long>(u)));
        if (d <= M)
          theta(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(d)) +=
              q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(u));
      }
  }
  return theta;
}

/// Mean of the rows of x whose index lies in `keep`.
inline Eigen::VectorXd subset_mean(const Eigen::MatrixXd& x, const std::vector<long>& keep) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(x.cols());
  for (long w : keep) m += x.row(w).transpose();
  return m / static_cast<double>(keep.size());
}

/// One-sample trace-product table by direct enumeration of A(a, b) and B(t, s)
/// with explicit p-vectors.
inline Eigen::MatrixXd naive_trace_table(const Eigen::MatrixXd& x, std::size_t M) {
  const long n = x.rows();
  const long ml = static_cast<long>(M);
  const int m = static_cast<int>(M);
  Eigen::MatrixXd est = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b) {
      double sum = 0.0;
      long count = 0;
      for (long t = 0; t < n; ++t)
        for (long s = 0; s < n; ++s) {
          if (t + a < 0 || t + a >= n || s + b < 0 || s + b >= n) continue;
          if (std::labs(t - s) <= ml || std::labs(t + a - s - b) <= ml) continue;
          std::vector<long> keep;
          for (long i = 0; i < n; ++i)
            if (std::min({std::labs(i - t), std::labs(i - s), std::labs(i - t - a), std::labs(i - s - b)}) > ml)
              keep.push_back(i);
          const Eigen::VectorXd xbar = subset_mean(x, keep);
          const double left = (x.row(t + a).transpose() - xbar).dot(x.row(s).transpose());
          const double right = (x.row(s + b).transpose() - xbar).dot(x.row(t).transpose());
          sum += left * right;
          ++count;
        }
      est(a + m, b + m) = sum / static_cast<double>(count);
    }
  return est;
}

/// Two-sample cross table by direct enumeration.
inline Eigen::MatrixXd naive_cross_table(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, std::size_t M) {
  const long n1 = x1.rows(), n2 = x2.rows();
  const long ml = static_cast<long>(M);
  const int m = static_cast<int>(M);
  Eigen::MatrixXd est = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b) {
      double sum = 0.0;
      long count = 0;
      for (long t = 0; t < n1; ++t)
        for (long s = 0; s < n2; ++s) {
          if (t + a < 0 || t + a >= n1 || s + b < 0 || s + b >= n2) continue;
          std::vector<long> keep1, keep2;
          for (long i = 0; i < n1; ++i)
            if (std::labs(i - t) > ml && std::labs(i - t - a) > ml) keep1.push_back(i);
          for (long i = 0; i < n2; ++i)
            if (std::labs(i - s) > ml && std::labs(i - s - b) > ml) keep2.push_back(i);
          const Eigen::VectorXd xbar1 = subset_mean(x1, keep1);
          const Eigen::VectorXd xbar2 = subset_mean(x2, keep2);
          const double left = (x1.row(t + a).transpose() - xbar1).dot(x2.row(s).transpose());
          const double right = (x2.row(s + b).transpose() - xbar2).dot(x1.row(t).transpose());
          sum += left * right;
          ++count;
        }
      est(a + m, b + m) = sum / static_cast<double>(count);
    }
  return est;
}

/// Sample covariance S (p x p) with divisor n - 1.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mean = column_mean_loop(x);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Eigen::VectorXd d = x.row(t).transpose() - mean;
    s += d * d.transpose();
  }
  return s / static_cast<double>(x.rows() - 1);
}

/// Baseline statistic from an explicit S.
inline double bs_statistic_direct(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd s = sample_covariance(x);
  const double tr_s = s.trace();
  const double tr_s2 = (s * s).trace();
  const Eigen::VectorXd mean = column_mean_loop(x);
  const double num = n * mean.squaredNorm() - tr_s;
  const double var = 2.0 * n * (n - 1.0) / ((n - 2.0) * (n + 1.0)) * (tr_s2 - tr_s * tr_s / (n - 1.0));
  return num / std::sqrt(var);
}

/// Kolmogorov-Smirnov distance of a sample from U(0, 1).
inline double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double R = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, static_cast<double>(i + 1) / R - u[i]);
    d = std::max(d, u[i] - static_cast<double>(i) / R);
  }
  return d;
}

/// tr Omega_n by explicit summation over h in [-M, M].
inline double tr_omega_direct(const mdep::ProcessMoments& mom, std::size_t n) {
  const int m = static_cast<int>(mom.M());
  double s = 0.0;
  for (int h = -m; h <= m; ++h) s += (1.0 - std::abs(h) / static_cast<double>(n)) * mom.gamma(h).trace();
  return s;
}

/// Small random factor model with m > p and a well-conditioned Sigma.
inline mdep::FactorModelSpec random_spec(std::size_t p, std::size_t m, std::size_t M, std::uint64_t seed) {
  mdep::RngStream rng(seed, 0xF00D, 0);
  std::vector<Eigen::MatrixXd> mixing;
  for (std::size_t h = 0; h <= M; ++h) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform(-1.0, 1.0) / static_cast<double>(h + 1);
    mixing.push_back(std::move(a));
  }
  Eigen::MatrixXd b(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-0.5, 0.5);
  const Eigen::MatrixXd sigma = b * b.transpose() + Eigen::MatrixXd::Identity(b.rows(), b.rows());
  return mdep::FactorModelSpec(std::move(mixing), mdep::cholesky(sigma));
}

}  // namespace oracle
