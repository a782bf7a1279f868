// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "igw/error.hpp"
#include "igw/rng.hpp"

namespace igw {

inline constexpr double kPmfTolerance = 1e-12;
inline constexpr std::size_t kDefaultMaxOffspring = 64;

/// Formats a real with 17 significant digits (round-trips through strtod).
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Reproduction law (p_k) with finite support {0..K}.
///
/// Either an explicit pmf or the binary replication family
/// f(s) = (1 - lambda) s + lambda s^2. The binary form is stored expanded,
/// so every operation treats both identically; the tag only affects how
/// the law is printed.
class OffspringLaw {
 public:
  static OffspringLaw explicit_pmf(std::vector<double> probs,
                                   std::size_t max_offspring = kDefaultMaxOffspring) {
    return OffspringLaw(std::move(probs), std::nullopt, max_offspring);
  }

  static OffspringLaw from_pairs(const std::vector<std::pair<std::size_t, double>>& pairs,
                                 std::size_t max_offspring = kDefaultMaxOffspring) {
    std::size_t top = 0;
    for (const auto& [k, p] : pairs) top = std::max(top, k);
    require(top <= max_offspring, "offspring count " + std::to_string(top) +
                                      " exceeds max " + std::to_string(max_offspring));
    std::vector<double> probs(top + 1, 0.0);
    std::vector<bool> seen(top + 1, false);
    for (const auto& [k, p] : pairs) {
      require(!seen[k], "duplicate offspring count " + std::to_string(k));
      seen[k] = true;
      probs[k] = p;
    }
    return explicit_pmf(std::move(probs), max_offspring);
  }

  static OffspringLaw binary(double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, "binary lambda must lie in [0,1], got " + format_real(lambda));
    return OffspringLaw({0.0, 1.0 - lambda, lambda}, lambda, kDefaultMaxOffspring);
  }

  /// p_k, zero outside the support.
  double p(std::size_t k) const { return k < probs_.size() ? probs_[k] : 0.0; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t max_k() const { return probs_.size() - 1; }
  double p0() const { return probs_[0]; }
  double p1() const { return p(1); }
  bool is_binary() const { return lambda_.has_value(); }
  std::optional<double> lambda() const { return lambda_; }

  double mean() const { return mean_; }
  double variance() const { return variance_; }

  /// Smallest k with p_k > 0.
  std::size_t min_k() const {
    std::size_t k = 0;
    while (probs_[k] == 0.0) ++k;
    return k;
  }

  /// f(s) = sum_k p_k s^k by Horner.
  double pgf(double s) const {
    require(s >= 0.0 && s <= 1.0, "pgf argument must lie in [0,1], got " + format_real(s));
    return pgf_unchecked(s);
  }

  double pgf_unchecked(double s) const {
    double acc = 0.0;
    for (std::size_t k = probs_.size(); k-- > 0;) acc = acc * s + probs_[k];
    return acc;
  }

  /// Inverse-CDF draw from (p_k).
  std::size_t sample(RngStream& rng) const {
    const double u = rng.uniform();
    for (std::size_t k = 0; k + 1 < cdf_.size(); ++k)
      if (u < cdf_[k]) return k;
    return last_positive_;
  }

  /// E(1/Z_1) = sum_{k>=1} p_k / k; meaningful when p_0 = 0.
  double harmonic_mean_one() const {
    double acc = 0.0;
    for (std::size_t k = 1; k < probs_.size(); ++k) acc += probs_[k] / static_cast<double>(k);
    return acc;
  }

  friend bool operator==(const OffspringLaw& a, const OffspringLaw& b) {
    return a.probs_ == b.probs_ && a.lambda_ == b.lambda_;
  }

 private:
  OffspringLaw(std::vector<double> probs, std::optional<double> lambda, std::size_t max_offspring)
      : probs_(std::move(probs)), lambda_(lambda) {
    require(!probs_.empty(), "offspring law has no atoms");
    while (probs_.size() > 1 && probs_.back() == 0.0) probs_.pop_back();
    require(probs_.size() - 1 <= max_offspring,
            "offspring count " + std::to_string(probs_.size() - 1) + " exceeds max " +
                std::to_string(max_offspring));
    // Neumaier-compensated total.
    double sum = 0.0, comp = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
      const double v = probs_[k];
      require(std::isfinite(v) && v >= 0.0,
              "probability p_" + std::to_string(k) + " = " + format_real(v) + " is negative or not finite");
      const double t = sum + v;
      comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
    }
    sum += comp;
    require(std::abs(sum - 1.0) <= kPmfTolerance,
            "probabilities sum to " + format_real(sum) + ", not 1 within 1e-12");
    double m = 0.0, m2 = 0.0, c = 0.0;
    cdf_.resize(probs_.size());
    for (std::size_t k = 0; k < probs_.size(); ++k) {
      const double kk = static_cast<double>(k);
      m += kk * probs_[k];
      m2 += kk * kk * probs_[k];
      c += probs_[k];
      cdf_[k] = c;
      if (probs_[k] > 0.0) last_positive_ = k;
    }
    mean_ = m;
    variance_ = std::max(0.0, m2 - m * m);
  }

  std::vector<double> probs_;
  std::vector<double> cdf_;
  std::optional<double> lambda_;
  std::size_t last_positive_ = 0;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

/// A reproduction law paired with the thinning parameter theta in (0,1].
struct IGWParams {
  OffspringLaw law;
  double theta;

  IGWParams(OffspringLaw l, double t) : law(std::move(l)), theta(t) {
    require(theta > 0.0 && theta <= 1.0, "theta must lie in (0,1], got " + format_real(theta));
  }

  double mean() const { return law.mean(); }
  bool heavy_thinning() const { return theta < 1.0; }
};

inline double pgf_eval(const OffspringLaw& law, double s) { return law.pgf(s); }
inline double mean(const OffspringLaw& law) { return law.mean(); }

/// g(s) = f(1 - theta + theta s), the PGF of X_1 under P_1.
inline double thinned_pgf(const IGWParams& params, double s) {
  require(s >= 0.0 && s <= 1.0, "thinned pgf argument must lie in [0,1], got " + format_real(s));
  return params.law.pgf_unchecked(1.0 - params.theta + params.theta * s);
}

inline std::size_t sample_offspring(const OffspringLaw& law, RngStream& rng) { return law.sample(rng); }

/// chi(x) = E_x(X_1). `value` overflows to +inf for large x; `log_value`
/// stays finite (it is -inf only for chi = 0).
struct ChiValue {
  double value;
  double log_value;
};

inline ChiValue chi(const IGWParams& params, std::uint64_t x) {
  if (x == 0) return {0.0, -std::numeric_limits<double>::infinity()};
  const double m = params.mean();
  const double theta = params.theta;
  const double xd = static_cast<double>(x);
  if (m == 0.0) return {0.0, -std::numeric_limits<double>::infinity()};
  if (m == 1.0) return {theta * xd, std::log(theta * xd)};
  const double d = m - 1.0;
  const double a = xd * std::log1p(d);  // x log m
  double log_sum;  // log of m + ... + m^x
  if (d > 0.0) {
    // log(expm1(a)) = a + log1p(-exp(-a))
    const double log_expm1 = a > 30.0 ? a + std::log1p(-std::exp(-a)) : std::log(std::expm1(a));
    log_sum = std::log(m) + log_expm1 - std::log(d);
  } else {
    log_sum = std::log(m) + std::log(-std::expm1(a)) - std::log(-d);
  }
  const double log_value = std::log(theta) + log_sum;
  return {std::exp(log_value), log_value};
}

// Law text format: `binary:LAMBDA` or `pmf:k1=p1,k2=p2,...`.

namespace detail {

inline double parse_double_token(std::string_view tok, std::string_view what) {
  std::string s(tok);
  require(!s.empty(), "empty " + std::string(what) + " in law text");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  require(end == s.c_str() + s.size() && std::isfinite(v),
          "bad " + std::string(what) + " '" + s + "' in law text");
  return v;
}

inline std::size_t parse_count_token(std::string_view tok) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  require(!tok.empty() && ec == std::errc() && ptr == tok.data() + tok.size(),
          "bad offspring count '" + std::string(tok) + "' in law text");
  return v;
}

}  // namespace detail

inline OffspringLaw parse_law(std::string_view text, std::size_t max_offspring = kDefaultMaxOffspring) {
  const auto colon = text.find(':');
  require(colon != std::string_view::npos,
          "law text '" + std::string(text) + "' must look like binary:LAMBDA or pmf:k=p,...");
  const std::string_view kind = text.substr(0, colon);
  const std::string_view body = text.substr(colon + 1);
  if (kind == "binary") return OffspringLaw::binary(detail::parse_double_token(body, "lambda"));
  require(kind == "pmf", "unknown law kind '" + std::string(kind) + "'");
  std::vector<std::pair<std::size_t, double>> pairs;
  std::size_t start = 0;
  while (start <= body.size()) {
    const auto comma = body.find(',', start);
    const std::string_view item =
        body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto eq = item.find('=');
    require(eq != std::string_view::npos, "pmf entry '" + std::string(item) + "' must look like k=p");
    pairs.emplace_back(detail::parse_count_token(item.substr(0, eq)),
                       detail::parse_double_token(item.substr(eq + 1), "probability"));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return OffspringLaw::from_pairs(pairs, max_offspring);
}

inline std::string format_law(const OffspringLaw& law) {
  if (law.is_binary()) return "binary:" + format_real(*law.lambda());
  std::string out = "pmf:";
  bool first = true;
  for (std::size_t k = 0; k < law.probs().size(); ++k) {
    if (law.p(k) == 0.0) continue;
    if (!first) out += ',';
    first = false;
    out += std::to_string(k) + "=" + format_real(law.p(k));
  }
  return out;
}

}  // namespace igw
