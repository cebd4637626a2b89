#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdep/autocov.hpp"
#include "mdep/data_io.hpp"
#include "mdep/debias.hpp"
#include "mdep/errors.hpp"

namespace mdep {

/// Smallest n for which every gapped pair set and averaging window is nonempty.
/// The two exclusion windows of a pair can be disjoint and each spans up to
/// 3M + 1 indices, hence the 6M + 3 term.
constexpr std::size_t min_sample_size(std::size_t M) {
  return std::max<std::size_t>(4 * (M + 1) + 2, 6 * M + 3);
}

/// Closed inclusive range of 0-based time indices.
struct Interval {
  long lo = 0;
  long hi = -1;
  long size() const noexcept { return hi >= lo ? hi - lo + 1 : 0; }
  bool operator==(const Interval&) const = default;
};

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

/// xi(a, b) = (1/n^2)(1 + chi_n)(1 - |a|/n)(1 - |b|/n) on the lag grid [-M, M]^2.
struct XiWeights {
  Eigen::MatrixXd xi;
  std::size_t n = 0;
  std::size_t M = 0;
  bool include_chi = true;

  double at(int a, int b) const {
    const int m = static_cast<int>(M);
    return xi(a + m, b + m);
  }
};

inline XiWeights xi_weights(std::size_t n, std::size_t M, bool include_chi = true) {
  detail::check_lag_order(n, M);
  const double nd = static_cast<double>(n);
  const double scale = (include_chi ? 1.0 + chi_n(n, M) : 1.0) / (nd * nd);
  const int m = static_cast<int>(M);
  XiWeights out{Eigen::MatrixXd(2 * m + 1, 2 * m + 1), n, M, include_chi};
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      out.xi(a + m, b + m) = scale * (1.0 - std::abs(a) / nd) * (1.0 - std::abs(b) / nd);
  return out;
}

// ---------------------------------------------------------------------------
// Gapped index sets
// ---------------------------------------------------------------------------

/// A(a, b): pairs (t, s) with |t - s| > M and |t + a - s - b| > M, restricted to
/// t, t + a, s, s + b all inside [0, n). Indices are 0-based.
struct IndexSetA {
  std::size_t n = 0;
  std::size_t M = 0;
  int a = 0;
  int b = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
};

namespace detail {

inline Interval lag_window(long n, int lag) {
  return {std::max(0L, -static_cast<long>(lag)), std::min(n - 1, n - 1 - lag)};
}

inline bool gapped(long t, long s, int a, int b, long M) {
  return std::labs(t - s) > M && std::labs(t + a - s - b) > M;
}

/// Window [t + min(0,a) - M, t + max(0,a) + M] clipped to [0, n). It is the
/// union of the M-neighbourhoods of t and t + a, which always touch.
inline Interval neighbourhood(long t, int a, long M, long n) {
  return {std::max(0L, t + std::min(0, a) - M), std::min(n - 1, t + std::max(0, a) + M)};
}

inline void check_lags(std::size_t M, int a, int b) {
  const int m = static_cast<int>(M);
  if (a < -m || a > m || b < -m || b > m)
    throw DimensionError("lags (" + std::to_string(a) + ", " + std::to_string(b) +
                         ") outside [-M, M] for M = " + std::to_string(M));
}

}  // namespace detail

inline IndexSetA index_set_A(std::size_t n, std::size_t M, int a, int b) {
  detail::check_lags(M, a, b);
  const long nl = static_cast<long>(n);
  const long ml = static_cast<long>(M);
  IndexSetA out{n, M, a, b, {}};
  const Interval tw = detail::lag_window(nl, a);
  const Interval sw = detail::lag_window(nl, b);
  for (long t = tw.lo; t <= tw.hi; ++t)
    for (long s = sw.lo; s <= sw.hi; ++s)
      if (detail::gapped(t, s, a, b, ml))
        out.pairs.emplace_back(static_cast<std::size_t>(t), static_cast<std::size_t>(s));
  if (out.pairs.empty())
    throw EmptyIndexSetError("no gapped pairs for lags (" + std::to_string(a) + ", " +
                             std::to_string(b) + "): n = " + std::to_string(n) +
                             " is too small for M = " + std::to_string(M));
  return out;
}

/// Average of the observations in B(t, s), the indices more than M away from
/// each of t, s, t + a and s + b. Evaluated through Gram rows only.
struct ExclusionMean {
  const GramMatrix* gram = nullptr;
  std::size_t m_B = 0;
  std::vector<Interval> excluded;  // sorted, disjoint, clipped to [0, n)

  /// Xbar*' X_u.
  double inner(std::size_t u) const {
    const auto ui = static_cast<Eigen::Index>(u);
    double excl = 0.0;
    for (const Interval& iv : excluded)
      for (long w = iv.lo; w <= iv.hi; ++w) excl += gram->g(ui, w);
    return (gram->row_sums(ui) - excl) / static_cast<double>(m_B);
  }
};

inline ExclusionMean local_mean_excluding(const GramMatrix& g, std::size_t t, std::size_t s, int a,
                                          int b, std::size_t M) {
  detail::check_lags(M, a, b);
  const long n = static_cast<long>(g.n());
  const long ml = static_cast<long>(M);
  std::vector<Interval> raw;
  for (long centre : {static_cast<long>(t), static_cast<long>(s), static_cast<long>(t) + a,
                      static_cast<long>(s) + b}) {
    Interval iv{std::max(0L, centre - ml), std::min(n - 1, centre + ml)};
    if (iv.size() > 0) raw.push_back(iv);
  }
  std::sort(raw.begin(), raw.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  ExclusionMean out;
  out.gram = &g;
  for (const Interval& iv : raw) {
    if (!out.excluded.empty() && iv.lo <= out.excluded.back().hi + 1)
      out.excluded.back().hi = std::max(out.excluded.back().hi, iv.hi);
    else
      out.excluded.push_back(iv);
  }
  long excluded = 0;
  for (const Interval& iv : out.excluded) excluded += iv.size();
  if (excluded >= n)
    throw EmptyIndexSetError("averaging window B(t, s) is empty: n = " + std::to_string(n) +
                             " is too small for M = " + std::to_string(M));
  out.m_B = static_cast<std::size_t>(n - excluded);
  return out;
}

// ---------------------------------------------------------------------------
// Trace-product estimators
// ---------------------------------------------------------------------------

/// Estimates of tr(Gamma(a) Gamma(b)) over the lag grid [-M, M]^2, with the
/// number of index pairs that entered each entry.
struct TraceProductTable {
  Eigen::MatrixXd est;
  std::vector<std::size_t> counts;  // row-major over (a + M, b + M)
  std::size_t M = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;  // equals n1 for one-sample tables

  double at(int a, int b) const {
    const int m = static_cast<int>(M);
    return est(a + m, b + m);
  }
  std::size_t count(int a, int b) const {
    const int m = static_cast<int>(M);
    return counts[static_cast<std::size_t>((a + m) * (2 * m + 1) + (b + m))];
  }
  std::size_t min_count() const { return *std::min_element(counts.begin(), counts.end()); }
};

namespace detail {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// prefix(u, i) = sum_{w < i} m(u, w).
inline RowMajor row_prefix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  RowMajor out(m.rows(), m.cols() + 1);
  for (Eigen::Index u = 0; u < m.rows(); ++u) {
    double acc = 0.0;
    out(u, 0) = 0.0;
    for (Eigen::Index w = 0; w < m.cols(); ++w) {
      acc += m(u, w);
      out(u, w + 1) = acc;
    }
  }
  return out;
}

inline double range_sum(const RowMajor& prefix, long u, const Interval& iv) {
  return prefix(u, iv.hi + 1) - prefix(u, iv.lo);
}

inline void check_table_size(std::size_t n, std::size_t M, const char* what) {
  if (n < min_sample_size(M))
    throw DimensionError(std::string(what) + ": n = " + std::to_string(n) +
                         " is below the minimum " + std::to_string(min_sample_size(M)) +
                         " for M = " + std::to_string(M));
}

}  // namespace detail

/// One-sample estimator: entry (a, b) averages
///   (X_{t+a} - Xbar*)'X_s * (X_{s+b} - Xbar*)'X_t
/// over (t, s) in A(a, b), Xbar* being the mean over B(t, s).
///
/// Exclusion sums come from row prefix sums of the Gram matrix, so each pair
/// costs O(1) and the table costs O(n^2 M^2) on top of the Gram matrix.
inline TraceProductTable trace_product_table(const GramMatrix& gm, std::size_t M) {
  const std::size_t n = gm.n();
  detail::check_table_size(n, M, "trace_product_table");
  const long nl = static_cast<long>(n);
  const long ml = static_cast<long>(M);
  const int m = static_cast<int>(M);
  const auto& g = gm.g;
  const detail::RowMajor prefix = detail::row_prefix(g);
  const Eigen::VectorXd& rs = gm.row_sums;

  TraceProductTable out;
  out.M = M;
  out.n1 = out.n2 = n;
  out.est = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
  out.counts.assign(static_cast<std::size_t>((2 * m + 1) * (2 * m + 1)), 0);

  for (int a = -m; a <= m; ++a) {
    for (int b = -m; b <= m; ++b) {
      const Interval tw = detail::lag_window(nl, a);
      const Interval sw = detail::lag_window(nl, b);
      double sum = 0.0;
      std::size_t count = 0;
      for (long t = tw.lo; t <= tw.hi; ++t) {
        const Interval it = detail::neighbourhood(t, a, ml, nl);
        const double rs_t = rs(t);
        for (long s = sw.lo; s <= sw.hi; ++s) {
          if (!detail::gapped(t, s, a, b, ml)) continue;
          const Interval is = detail::neighbourhood(s, b, ml, nl);
          double excl_s;
          double excl_t;
          long excluded;
          if (is.lo <= it.hi + 1 && it.lo <= is.hi + 1) {
            const Interval u{std::min(it.lo, is.lo), std::max(it.hi, is.hi)};
            excl_s = detail::range_sum(prefix, s, u);
            excl_t = detail::range_sum(prefix, t, u);
            excluded = u.size();
          } else {
            excl_s = detail::range_sum(prefix, s, it) + detail::range_sum(prefix, s, is);
            excl_t = detail::range_sum(prefix, t, it) + detail::range_sum(prefix, t, is);
            excluded = it.size() + is.size();
          }
          const long m_b = nl - excluded;
          if (m_b <= 0) throw EmptyIndexSetError("averaging window B(t, s) is empty");
          const double inv = 1.0 / static_cast<double>(m_b);
          const double left = g(t + a, s) - (rs(s) - excl_s) * inv;
          const double right = g(s + b, t) - (rs_t - excl_t) * inv;
          sum += left * right;
          ++count;
        }
      }
      if (count == 0) throw EmptyIndexSetError("no gapped pairs for a lag combination");
      out.est(a + m, b + m) = sum / static_cast<double>(count);
      out.counts[static_cast<std::size_t>((a + m) * (2 * m + 1) + (b + m))] = count;
    }
  }
  return out;
}

inline TraceProductTable trace_product_table(const ObservationMatrix& x, std::size_t M) {
  detail::check_table_size(x.n(), M, "trace_product_table");
  return trace_product_table(gram(x), M);
}

/// Two-sample estimator of tr(Gamma1(a) Gamma2(b)): entry (a, b) averages
///   (X1_{t+a} - Xbar1*)'X2_s * (X2_{s+b} - Xbar2*)'X1_t
/// over every (t, s) in the valid window. Xbar1* averages sample 1 away from
/// t and t + a; Xbar2* averages sample 2 away from s and s + b.
inline TraceProductTable cross_trace_table(const ObservationMatrix& x1, const ObservationMatrix& x2,
                                           std::size_t M) {
  if (x1.p() != x2.p())
    throw DimensionError("cross_trace_table: dimension mismatch (" + std::to_string(x1.p()) +
                         " vs " + std::to_string(x2.p()) + ")");
  detail::check_table_size(x1.n(), M, "cross_trace_table (sample 1)");
  detail::check_table_size(x2.n(), M, "cross_trace_table (sample 2)");
  const long n1 = static_cast<long>(x1.n());
  const long n2 = static_cast<long>(x2.n());
  const long ml = static_cast<long>(M);
  const int m = static_cast<int>(M);

  const Eigen::MatrixXd cross = x1.values() * x2.values().transpose();  // n1 x n2
  const Eigen::VectorXd row_sums = cross.rowwise().sum();               // over sample 2
  const Eigen::VectorXd col_sums = cross.colwise().sum().transpose();   // over sample 1
  const detail::RowMajor row_prefix = detail::row_prefix(cross);
  const detail::RowMajor col_prefix = detail::row_prefix(cross.transpose());

  TraceProductTable out;
  out.M = M;
  out.n1 = x1.n();
  out.n2 = x2.n();
  out.est = Eigen::MatrixXd::Zero(2 * m + 1, 2 * m + 1);
  out.counts.assign(static_cast<std::size_t>((2 * m + 1) * (2 * m + 1)), 0);

  for (int a = -m; a <= m; ++a) {
    for (int b = -m; b <= m; ++b) {
      const Interval tw = detail::lag_window(n1, a);
      const Interval sw = detail::lag_window(n2, b);
      double sum = 0.0;
      for (long t = tw.lo; t <= tw.hi; ++t) {
        const Interval it = detail::neighbourhood(t, a, ml, n1);
        const double inv1 = 1.0 / static_cast<double>(n1 - it.size());
        for (long s = sw.lo; s <= sw.hi; ++s) {
          const Interval is = detail::neighbourhood(s, b, ml, n2);
          const double inv2 = 1.0 / static_cast<double>(n2 - is.size());
          const double left =
              cross(t + a, s) - (col_sums(s) - detail::range_sum(col_prefix, s, it)) * inv1;
          const double right =
              cross(t, s + b) - (row_sums(t) - detail::range_sum(row_prefix, t, is)) * inv2;
          sum += left * right;
        }
      }
      const auto count = static_cast<std::size_t>(tw.size() * sw.size());
      out.est(a + m, b + m) = sum / static_cast<double>(count);
      out.counts[static_cast<std::size_t>((a + m) * (2 * m + 1) + (b + m))] = count;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variance assembly
// ---------------------------------------------------------------------------

/// V = 2 sum_{a,b} xi(a, b) trhat(Gamma(a) Gamma(b)). Not clamped.
inline double variance_estimate(const TraceProductTable& table, const XiWeights& xi) {
  if (table.M != xi.M || table.n1 != xi.n || table.n2 != xi.n)
    throw ConfigError("variance_estimate: table and weights disagree on (n, M)");
  return 2.0 * table.est.cwiseProduct(xi.xi).sum();
}

/// (4 / (n1 n2)) sum_{a,b} (1 - |a|/n1)(1 - |b|/n2) trhat(Gamma1(a) Gamma2(b)),
/// the variance contribution of the cross term in the two-sample numerator.
inline double cross_variance_term(const TraceProductTable& cross) {
  const int m = static_cast<int>(cross.M);
  const double n1 = static_cast<double>(cross.n1);
  const double n2 = static_cast<double>(cross.n2);
  double s = 0.0;
  for (int a = -m; a <= m; ++a)
    for (int b = -m; b <= m; ++b)
      s += (1.0 - std::abs(a) / n1) * (1.0 - std::abs(b) / n2) * cross.at(a, b);
  return 4.0 * s / (n1 * n2);
}

}  // namespace mdep
