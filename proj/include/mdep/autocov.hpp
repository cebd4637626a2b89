#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "mdep/data_io.hpp"
#include "mdep/errors.hpp"

namespace mdep {

/// Column means. Accumulates deviations from the first row, so constant
/// columns reproduce their value exactly.
inline Eigen::VectorXd sample_mean(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::Index n = x.rows();
  const Eigen::RowVectorXd anchor = x.row(0);
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.cols());
  for (Eigen::Index t = 1; t < n; ++t) acc += x.row(t) - anchor;
  return (anchor + acc / static_cast<double>(n)).transpose();
}

inline Eigen::VectorXd sample_mean(const ObservationMatrix& x) { return sample_mean(x.values()); }

/// Rows minus the sample mean.
inline Eigen::MatrixXd centered(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::RowVectorXd mean = sample_mean(x).transpose();
  return x.rowwise() - mean;
}

/// Inner products g(t, s) = X_t' X_s of all observation pairs.
struct GramMatrix {
  Eigen::MatrixXd g;         // n x n, exactly symmetric
  Eigen::VectorXd row_sums;  // row_sums(t) = sum_s g(t, s)
  double total = 0.0;        // sum of all entries

  std::size_t n() const noexcept { return static_cast<std::size_t>(g.rows()); }
};

inline GramMatrix gram(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::Index n = x.rows();
  GramMatrix out;
  out.g = Eigen::MatrixXd::Zero(n, n);
  out.g.selfadjointView<Eigen::Lower>().rankUpdate(x);
  out.g.triangularView<Eigen::StrictlyUpper>() = out.g.transpose();
  out.row_sums = out.g.rowwise().sum();
  out.total = out.row_sums.sum();
  return out;
}

inline GramMatrix gram(const ObservationMatrix& x) { return gram(x.values()); }

/// Traces of the lag-h sample autocovariances, h = 0..M:
///   gamma_hat(h) = (1/n) sum_{t=1}^{n-h} (X_t - Xbar)'(X_{t+h} - Xbar).
struct TraceAutocovVector {
  Eigen::VectorXd gamma_hat;
  std::size_t n = 0;
  std::size_t M = 0;
};

/// Same as trace_autocov but on already-centered rows. Each lag is the sum of
/// one diagonal band of the centered Gram matrix, evaluated row by row.
inline TraceAutocovVector trace_autocov_centered(const Eigen::Ref<const Eigen::MatrixXd>& xc,
                                                 std::size_t M) {
  const auto n = static_cast<std::size_t>(xc.rows());
  if (n < 2 || M > n - 2)
    throw DimensionError("lag order " + std::to_string(M) + " needs at least " +
                         std::to_string(M + 2) + " observations, got " + std::to_string(n));
  TraceAutocovVector out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M + 1)), n, M};
  for (std::size_t h = 0; h <= M; ++h) {
    double s = 0.0;
    for (std::size_t t = 0; t + h < n; ++t)
      s += xc.row(static_cast<Eigen::Index>(t)).dot(xc.row(static_cast<Eigen::Index>(t + h)));
    out.gamma_hat(static_cast<Eigen::Index>(h)) = s / static_cast<double>(n);
  }
  return out;
}

inline TraceAutocovVector trace_autocov(const ObservationMatrix& x, std::size_t M) {
  if (M > x.n() - 2)
    throw DimensionError("lag order " + std::to_string(M) + " needs at least " +
                         std::to_string(M + 2) + " observations, got " + std::to_string(x.n()));
  return trace_autocov_centered(centered(x.values()), M);
}

}  // namespace mdep
