#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "mdep/errors.hpp"

namespace mdep {

// ---------------------------------------------------------------------------
// Standard normal distribution
// ---------------------------------------------------------------------------

/// Standard normal CDF, Phi(x) = erfc(-x / sqrt 2) / 2.
inline double normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("normal_cdf: NaN argument");
  const double v = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  return std::clamp(v, 0.0, 1.0);
}

/// Upper tail 1 - Phi(x), evaluated without cancellation.
inline double normal_sf(double x) { return normal_cdf(-x); }

/// Inverse of normal_cdf on (0, 1).
inline double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("normal_quantile: probability must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

// ---------------------------------------------------------------------------
// Cholesky factorization
// ---------------------------------------------------------------------------

/// Lower-triangular L with L L' = S. S must be symmetric to 1e-12 relative.
/// Throws NotPositiveDefiniteError carrying the 1-based failing minor.
inline Eigen::MatrixXd cholesky(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw DimensionError("cholesky: matrix must be square");
  if (S.size() > 0 && (S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * S.cwiseAbs().maxCoeff())
    throw DomainError("cholesky: matrix is not symmetric");
  const Eigen::Index k = S.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double d = S(j, j) - L.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) throw NotPositiveDefiniteError(static_cast<std::size_t>(j) + 1);
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    const Eigen::Index rest = k - j - 1;
    if (rest > 0) {
      L.col(j).tail(rest) =
          (S.col(j).tail(rest) - L.bottomLeftCorner(rest, j) * L.row(j).head(j).transpose()) / ljj;
    }
  }
  return L;
}

// ---------------------------------------------------------------------------
// Counter-based random streams
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

}  // namespace detail

/// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Deterministic random stream keyed by (seed, domain, index).
///
/// The Philox key is derived from (seed, domain); the 128-bit counter holds the
/// 64-bit stream index in its upper half and the draw counter in its lower
/// half. Streams with distinct keys never share counter blocks, so replicate
/// streams can be consumed from any thread in any order.
///
/// Normal variates use the Box-Muller transform on pairs of 53-bit uniforms;
/// both outputs of each pair are consumed in order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index)
      : seed_(seed), domain_(domain), index_(index) {
    const std::uint64_t k = detail::mix_key(seed, domain);
    key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t domain() const noexcept { return domain_; }
  std::uint64_t index() const noexcept { return index_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent child stream sharing seed and index, with a derived domain.
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, detail::mix_key(domain_, tag), index_);
  }

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>(next_u64() >> 11) + 0.5) * kScale;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32)};
    const auto out = philox4x32(ctr, key_);
    ++counter_;
    // Consumed from the back: buffer_[1] first, then buffer_[0].
    buffer_[1] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[0] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
  }

  std::uint64_t seed_;
  std::uint64_t domain_;
  std::uint64_t index_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// `count` iid standard normal draws from the stream.
inline std::vector<double> gaussian_draws(RngStream& stream, std::size_t count) {
  std::vector<double> out(count);
  stream.fill_normal(out);
  return out;
}

/// FNV-1a hash, used to turn scenario identifiers into stream domains.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace mdep
