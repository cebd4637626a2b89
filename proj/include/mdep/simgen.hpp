#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <algorithm>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mdep/data_io.hpp"
#include "mdep/errors.hpp"
#include "mdep/numeric.hpp"

namespace mdep {

/// Lag scaling of the mixing matrices: c(h) = 1/(h+1) or c(h) = h+1.
enum class MixingVariant { ReciprocalLag, LinearLag };

inline std::string_view to_string(MixingVariant v) {
  return v == MixingVariant::ReciprocalLag ? "reciprocal-h" : "linear-h";
}

inline MixingVariant parse_mixing_variant(std::string_view s) {
  if (s == "reciprocal-h") return MixingVariant::ReciprocalLag;
  if (s == "linear-h") return MixingVariant::LinearLag;
  throw ConfigError("unknown mixing variant '" + std::string(s) + "'");
}

namespace detail {

inline bool within_band(long dist, std::size_t p, double w) {
  return static_cast<double>(dist) <= static_cast<double>(p) * w + 1e-9;
}

}  // namespace detail

/// A_0..A_M, each p x m, with
///   A_h(i, j) = c(h) phi1 / max(1, |i-j|^2)  for |i-j| <= p w, else 0.
inline std::vector<Eigen::MatrixXd> build_mixing(std::size_t p, std::size_t m, std::size_t M,
                                                 double phi1, double w, MixingVariant variant) {
  if (!(w > 0.0 && w <= 1.0)) throw ConfigError("mixing bandwidth w must lie in (0, 1]");
  if (m <= p) throw ConfigError("factor dimension m must exceed p");
  std::vector<Eigen::MatrixXd> mixing;
  mixing.reserve(M + 1);
  for (std::size_t h = 0; h <= M; ++h) {
    const double lag_scale = variant == MixingVariant::ReciprocalLag
                                 ? 1.0 / static_cast<double>(h + 1)
                                 : static_cast<double>(h + 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const long d = std::labs(static_cast<long>(i) - static_cast<long>(j));
        if (!detail::within_band(d, p, w)) continue;
        const double d2 = std::max(1.0, static_cast<double>(d * d));
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = lag_scale * phi1 / d2;
      }
    }
    mixing.push_back(std::move(a));
  }
  return mixing;
}

struct InnovationCovariance {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;  // lower triangular, chol * chol' = sigma
};

/// m x m banded covariance: Sigma(i, i) = sigma_i and
/// Sigma(i, j) = sqrt(sigma_i sigma_j) phi2 / |i-j|^2 for 0 < |i-j| <= p w.
/// An empty `variances` means sigma_i = 1.
inline InnovationCovariance innovation_covariance(std::size_t m, std::size_t p, double phi2, double w,
                                                  const Eigen::VectorXd& variances = {}) {
  if (!(w > 0.0 && w <= 1.0)) throw ConfigError("innovation bandwidth w must lie in (0, 1]");
  if (variances.size() != 0 && static_cast<std::size_t>(variances.size()) != m)
    throw DimensionError("variance profile must have m entries");
  const Eigen::VectorXd sig = variances.size() ? variances : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m));
  if ((sig.array() <= 0.0).any()) throw ConfigError("innovation variances must be positive");
  InnovationCovariance out;
  out.sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m); ++i) {
    out.sigma(i, i) = sig(i);
    for (Eigen::Index j = 0; j < i; ++j) {
      const long d = static_cast<long>(i - j);
      if (!detail::within_band(d, p, w)) continue;
      const double v = std::sqrt(sig(i) * sig(j)) * phi2 / static_cast<double>(d * d);
      out.sigma(i, j) = v;
      out.sigma(j, i) = v;
    }
  }
  out.chol = cholesky(out.sigma);
  return out;
}

/// X_t = mu + sum_{h=0}^M A_h eps_{t-h}, eps_t ~ N_m(0, Sigma) iid.
class FactorModelSpec {
 public:
  FactorModelSpec(std::vector<Eigen::MatrixXd> mixing, Eigen::MatrixXd innovation_chol,
                  Eigen::VectorXd mu = {}, bool require_m_gt_p = true)
      : mixing_(std::move(mixing)), chol_(std::move(innovation_chol)), mu_(std::move(mu)) {
    if (mixing_.empty()) throw ConfigError("factor model needs at least A_0");
    const Eigen::Index p = mixing_.front().rows();
    const Eigen::Index m = mixing_.front().cols();
    for (const auto& a : mixing_)
      if (a.rows() != p || a.cols() != m) throw DimensionError("mixing matrices differ in shape");
    if (require_m_gt_p && m <= p) throw ConfigError("factor dimension m must exceed p");
    if (chol_.rows() != m || chol_.cols() != m)
      throw DimensionError("innovation Cholesky factor must be m x m");
    if (mu_.size() == 0) mu_ = Eigen::VectorXd::Zero(p);
    if (mu_.size() != p) throw DimensionError("mean vector must have p entries");
    loadings_t_.reserve(mixing_.size());
    for (const auto& a : mixing_) loadings_t_.push_back((a * chol_).transpose());
  }

  std::size_t p() const noexcept { return static_cast<std::size_t>(mixing_.front().rows()); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(mixing_.front().cols()); }
  std::size_t M() const noexcept { return mixing_.size() - 1; }
  const std::vector<Eigen::MatrixXd>& mixing() const noexcept { return mixing_; }
  const Eigen::MatrixXd& innovation_chol() const noexcept { return chol_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }

  /// (A_h L)', m x p: maps standard normal factors to the observation scale.
  const Eigen::MatrixXd& loading_t(std::size_t h) const { return loadings_t_.at(h); }

  FactorModelSpec with_mean(Eigen::VectorXd mu) const {
    FactorModelSpec copy = *this;
    if (mu.size() != static_cast<Eigen::Index>(p())) throw DimensionError("mean vector must have p entries");
    copy.mu_ = std::move(mu);
    return copy;
  }

 private:
  std::vector<Eigen::MatrixXd> mixing_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd mu_;
  std::vector<Eigen::MatrixXd> loadings_t_;
};

/// Gamma(h) = sum_{k=0}^{M-h} A_k Sigma A_{k+h}' for h = 0..M.
inline std::vector<Eigen::MatrixXd> autocov_from_mixing(const std::vector<Eigen::MatrixXd>& mixing,
                                                        const Eigen::MatrixXd& sigma) {
  const std::size_t M = mixing.size() - 1;
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t h = 0; h <= M; ++h) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(mixing[0].rows(), mixing[0].rows());
    for (std::size_t k = 0; k + h <= M; ++k) g += mixing[k] * sigma * mixing[k + h].transpose();
    out.push_back(std::move(g));
  }
  return out;
}

/// Exact second-order moments of a factor model.
class ProcessMoments {
 public:
  explicit ProcessMoments(std::vector<Eigen::MatrixXd> gammas) : gammas_(std::move(gammas)) {}

  std::size_t M() const noexcept { return gammas_.size() - 1; }
  std::size_t p() const noexcept { return static_cast<std::size_t>(gammas_.front().rows()); }

  /// Gamma(h) = Cov(X_t, X_{t+h}); Gamma(-h) = Gamma(h)'. Zero beyond M.
  Eigen::MatrixXd gamma(int h) const {
    const auto k = static_cast<std::size_t>(std::abs(h));
    if (k > M()) return Eigen::MatrixXd::Zero(gammas_[0].rows(), gammas_[0].cols());
    return h >= 0 ? gammas_[k] : Eigen::MatrixXd(gammas_[k].transpose());
  }
  double trace(int h) const {
    const auto k = static_cast<std::size_t>(std::abs(h));
    return k > M() ? 0.0 : gammas_[k].trace();
  }
  double trace_product(int a, int b) const { return (gamma(a) * gamma(b)).trace(); }

  /// Omega_n = sum_{|h| <= M} (1 - |h|/n) Gamma(h).
  Eigen::MatrixXd omega(std::size_t n) const {
    Eigen::MatrixXd o = gammas_[0];
    for (std::size_t h = 1; h <= M(); ++h)
      o += (1.0 - static_cast<double>(h) / static_cast<double>(n)) * (gammas_[h] + gammas_[h].transpose());
    return o;
  }
  double tr_omega(std::size_t n) const { return omega(n).trace(); }
  double tr_omega_sq(std::size_t n) const {
    const Eigen::MatrixXd o = omega(n);
    return (o * o).trace();
  }

 private:
  std::vector<Eigen::MatrixXd> gammas_;
};

inline ProcessMoments true_autocov(const FactorModelSpec& spec) {
  std::vector<Eigen::MatrixXd> b;
  for (std::size_t h = 0; h <= spec.M(); ++h) b.push_back(spec.loading_t(h).transpose());
  return ProcessMoments(autocov_from_mixing(b, Eigen::MatrixXd::Identity(
                                                   static_cast<Eigen::Index>(spec.m()),
                                                   static_cast<Eigen::Index>(spec.m()))));
}

/// Exact Gamma(h) for 0 <= h <= M.
inline Eigen::MatrixXd true_autocov(const FactorModelSpec& spec, std::size_t h) {
  if (h > spec.M())
    throw DimensionError("lag " + std::to_string(h) + " exceeds model order " + std::to_string(spec.M()));
  return true_autocov(spec).gamma(static_cast<int>(h));
}

/// n consecutive observations of the process with mean `mu`. M innovations
/// before the first observation are drawn first, so the output is exactly
/// stationary. Draws are consumed in time-major order.
inline ObservationMatrix generate(const FactorModelSpec& spec, std::size_t n, RngStream& rng,
                                  const Eigen::VectorXd& mu) {
  if (n < 2) throw DimensionError("generate: n must be at least 2");
  if (mu.size() != static_cast<Eigen::Index>(spec.p())) throw DimensionError("mean vector must have p entries");
  const std::size_t M = spec.M();
  const auto total = static_cast<Eigen::Index>(n + M);
  const auto m = static_cast<Eigen::Index>(spec.m());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z(total, m);
  rng.fill_normal(std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd x = z.middleRows(static_cast<Eigen::Index>(M), rows) * spec.loading_t(0);
  for (std::size_t h = 1; h <= M; ++h)
    x.noalias() += z.middleRows(static_cast<Eigen::Index>(M - h), rows) * spec.loading_t(h);
  x.rowwise() += mu.transpose();
  return ObservationMatrix(std::move(x));
}

inline ObservationMatrix generate(const FactorModelSpec& spec, std::size_t n, RngStream& rng) {
  return generate(spec, n, rng, spec.mu());
}

// ---------------------------------------------------------------------------
// Mean scenarios
// ---------------------------------------------------------------------------

enum class MeanScenario { Null, Power1, Power2, TwoSample1, TwoSample2 };

inline std::string_view to_string(MeanScenario s) {
  switch (s) {
    case MeanScenario::Null: return "null";
    case MeanScenario::Power1: return "power1";
    case MeanScenario::Power2: return "power2";
    case MeanScenario::TwoSample1: return "two-sample-1";
    case MeanScenario::TwoSample2: return "two-sample-2";
  }
  return "null";
}

inline MeanScenario parse_mean_scenario(std::string_view s) {
  for (auto v : {MeanScenario::Null, MeanScenario::Power1, MeanScenario::Power2,
                 MeanScenario::TwoSample1, MeanScenario::TwoSample2})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown mean scenario '" + std::string(s) + "'");
}

/// Mean vector (one-sample) or mean difference (two-sample), drawn afresh:
///   power1: p^{-1/2} U(2,3)   power2: p^{-1/4} U(2,3)
///   two-sample-1: p^{-1/2} U(1,2)   two-sample-2: p^{-1/4} U(1,2)
inline Eigen::VectorXd sample_mean_scenario(MeanScenario scenario, std::size_t p, RngStream& rng) {
  const auto dim = static_cast<Eigen::Index>(p);
  const double pd = static_cast<double>(p);
  double scale = 0.0, lo = 0.0, hi = 0.0;
  switch (scenario) {
    case MeanScenario::Null: return Eigen::VectorXd::Zero(dim);
    case MeanScenario::Power1: scale = 1.0 / std::sqrt(pd), lo = 2.0, hi = 3.0; break;
    case MeanScenario::Power2: scale = 1.0 / std::sqrt(std::sqrt(pd)), lo = 2.0, hi = 3.0; break;
    case MeanScenario::TwoSample1: scale = 1.0 / std::sqrt(pd), lo = 1.0, hi = 2.0; break;
    case MeanScenario::TwoSample2: scale = 1.0 / std::sqrt(std::sqrt(pd)), lo = 1.0, hi = 2.0; break;
  }
  Eigen::VectorXd mu(dim);
  for (Eigen::Index i = 0; i < dim; ++i) mu(i) = scale * rng.uniform(lo, hi);
  return mu;
}

// ---------------------------------------------------------------------------
// Model catalog
// ---------------------------------------------------------------------------

/// Parameters of a banded factor model. `mixing_w` is the bandwidth used for
/// the mixing matrices, `w` the one used for the innovation covariance.
struct ProcessParams {
  std::size_t p = 0;
  std::size_t m = 0;  // 0 selects ceil(1.2 p)
  std::size_t M = 0;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double w = 1.0;
  double mixing_w = 1.0;
  MixingVariant variant = MixingVariant::ReciprocalLag;
  double sigma = 1.0;  // common innovation variance

  std::size_t factor_dim() const {
    return m != 0 ? m : static_cast<std::size_t>(std::ceil(1.2 * static_cast<double>(p) - 1e-9));
  }
  bool operator==(const ProcessParams&) const = default;
};

inline FactorModelSpec build_spec(const ProcessParams& params) {
  if (params.p < 1) throw ConfigError("dimension p must be positive");
  const std::size_t m = params.factor_dim();
  auto mixing = build_mixing(params.p, m, params.M, params.phi1, params.mixing_w, params.variant);
  const Eigen::VectorXd variances = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), params.sigma);
  auto cov = innovation_covariance(m, params.p, params.phi2, params.w, variances);
  return FactorModelSpec(std::move(mixing), std::move(cov.chol));
}

struct ModelCatalogEntry {
  std::string_view name;
  std::size_t M;
  double ratio;  // p / n
  double phi1;
  double phi2;
  double w;
  MixingVariant variant;
  double mixing_w;
};

/// One-sample study models I-IV. Models III and IV use the linear-in-lag
/// mixing with full bandwidth.
inline const std::array<ModelCatalogEntry, 4>& model_catalog() {
  static const std::array<ModelCatalogEntry, 4> catalog = {{
      {"I", 0, 4.0, 0.2, 0.3, 0.9, MixingVariant::ReciprocalLag, 0.9},
      {"II", 1, 1.0, 0.6, 0.4, 0.8, MixingVariant::ReciprocalLag, 0.8},
      {"III", 2, 2.0, 0.6, 0.6, 0.8, MixingVariant::LinearLag, 1.0},
      {"IV", 3, 3.0, 0.6, 0.3, 0.8, MixingVariant::LinearLag, 1.0},
  }};
  return catalog;
}

inline const ModelCatalogEntry& catalog_entry(std::string_view name) {
  for (const auto& e : model_catalog())
    if (e.name == name) return e;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

/// Catalog model at sample size n: p = ratio * n.
inline ProcessParams catalog_params(const ModelCatalogEntry& e, std::size_t n) {
  ProcessParams params;
  params.p = static_cast<std::size_t>(std::lround(e.ratio * static_cast<double>(n)));
  params.M = e.M;
  params.phi1 = e.phi1;
  params.phi2 = e.phi2;
  params.w = e.w;
  params.mixing_w = e.mixing_w;
  params.variant = e.variant;
  return params;
}

/// Two-sample study groups (1 or 2) at group size n with p = 4n.
inline ProcessParams two_sample_params(int group, std::size_t n, std::size_t M) {
  if (group != 1 && group != 2) throw ConfigError("two-sample group must be 1 or 2");
  ProcessParams params;
  params.p = 4 * n;
  params.M = M;
  params.phi1 = group == 1 ? 0.2 : 0.4;
  params.phi2 = group == 1 ? 0.3 : 0.5;
  params.w = group == 1 ? 0.9 : 0.5;
  params.mixing_w = params.w;
  params.variant = MixingVariant::ReciprocalLag;
  return params;
}

}  // namespace mdep
