#pragma once

// Weight sequences {d_i} for the D-transform, the constants W and W*, and
// the weighted norms ||z||_1D and ||z||_1E on the reduced vector z = (p_1, p_2, ...).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ergobound {

/// d_1..d_m given explicitly, then d_i = ratio^{i-m} d_m.
class DSequence {
 public:
  DSequence(std::vector<double> head, double tail_ratio)
      : head_(std::move(head)), ratio_(tail_ratio) {
    if (head_.empty()) throw std::invalid_argument("d-sequence head must be non-empty");
    if (head_.front() != 1.0) throw std::invalid_argument("d-sequence must start with d_1 = 1");
    for (std::size_t i = 0; i < head_.size(); ++i) {
      if (!(head_[i] > 0.0) || !std::isfinite(head_[i]))
        throw std::invalid_argument("d-sequence entries must be positive and finite");
      if (i > 0 && head_[i] < head_[i - 1])
        throw std::invalid_argument("d-sequence must be non-decreasing (index " +
                                    std::to_string(i + 1) + ")");
    }
    if (!(ratio_ >= 1.0) || !std::isfinite(ratio_))
      throw std::invalid_argument("d-sequence tail ratio must be >= 1");
  }

  /// d_i = ratio^{i-1}.
  static DSequence geometric(double ratio) { return DSequence({1.0}, ratio); }

  /// The M/M/100 example sequence: 1 up to 100, five hand-tuned steps, then ratio 2.3.
  static DSequence paper_s100() {
    std::vector<double> head(100, 1.0);
    for (double step : {1.05, 1.1, 1.3, 1.6, 2.0}) head.push_back(head.back() * step);
    return DSequence(std::move(head), 2.3);
  }

  static DSequence preset(const std::string& name) {
    if (name == "paper-S100") return paper_s100();
    throw std::invalid_argument("unknown d-sequence preset: " + name);
  }

  double operator()(std::int64_t i) const {
    if (i < 1) throw std::domain_error("d-sequence index must be >= 1");
    const auto idx = static_cast<std::size_t>(i);
    if (idx <= head_.size()) return head_[idx - 1];
    return head_.back() * std::pow(ratio_, static_cast<double>(idx - head_.size()));
  }

  /// d_i / d_j without overflow deep in the geometric tail; d_0 is taken as 0.
  double ratio(std::size_t i, std::size_t j) const {
    if (j < 1) throw std::domain_error("d-sequence ratio denominator index must be >= 1");
    if (i == 0) return 0.0;
    const std::size_t m = head_.size();
    if (i > m && j > m)
      return std::pow(ratio_, static_cast<double>(i) - static_cast<double>(j));
    return (*this)(static_cast<std::int64_t>(i)) / (*this)(static_cast<std::int64_t>(j));
  }

  std::size_t head_length() const { return head_.size(); }
  double tail_ratio() const { return ratio_; }
  const std::vector<double>& head() const { return head_; }

  bool operator==(const DSequence&) const = default;

  nlohmann::json to_json() const { return {{"head", head_}, {"tail_ratio", ratio_}}; }

  static DSequence from_json(const nlohmann::json& j) {
    if (j.is_string()) return preset(j.get<std::string>());
    if (!j.is_object()) throw std::invalid_argument("d-sequence must be a preset name or object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "head" && it.key() != "tail_ratio")
        throw std::invalid_argument("unknown d-sequence field: " + it.key());
    return DSequence(j.at("head").get<std::vector<double>>(), j.at("tail_ratio").get<double>());
  }

 private:
  std::vector<double> head_;
  double ratio_;
};

struct NormConstants {
  double W = 0.0;       // inf_i d_i / i
  double W_star = 0.0;  // inf_k (d_1 + ... + d_k) / k
  std::size_t W_index = 0;
  std::size_t W_star_index = 0;
};

/// Index up to which the infimum scans run: past the head, past the point where
/// ratio^{i}/i starts increasing, plus a safety margin of 50.
inline std::size_t infimum_scan_limit(const DSequence& d) {
  const double growth = d.tail_ratio() - 1.0;
  const double crossover = growth > 0.0 ? std::ceil(1.0 / growth) : 0.0;
  return std::max<std::size_t>(d.head_length(), static_cast<std::size_t>(crossover)) + 50;
}

inline NormConstants compute_W(const DSequence& d) {
  if (!(d.tail_ratio() > 1.0))
    throw std::invalid_argument("tail ratio must exceed 1 for W > 0 to be attained");
  NormConstants nc;
  nc.W = std::numeric_limits<double>::infinity();
  nc.W_star = std::numeric_limits<double>::infinity();
  std::size_t limit = infimum_scan_limit(d);
  double running = 0.0;
  for (std::size_t i = 1;; ++i) {
    const double di = d(static_cast<std::int64_t>(i));
    running += di;
    const double w = di / static_cast<double>(i);
    const double ws = running / static_cast<double>(i);
    if (w < nc.W) {
      nc.W = w;
      nc.W_index = i;
    }
    if (ws < nc.W_star) {
      nc.W_star = ws;
      nc.W_star_index = i;
    }
    // Past the limit both d_i/i and the running average are increasing in the
    // geometric tail; stop once the current terms already exceed the minima.
    if (i >= limit && w > nc.W && ws > nc.W_star) break;
    if (i > limit + 100000) throw std::runtime_error("compute_W: scan did not terminate");
  }
  return nc;
}

/// ||z||_1D = sum_k d_k |sum_{i>=k} z_i|; z[0] holds z_1.
inline double norm_1D(std::span<const double> z, const DSequence& d) {
  double tail = 0.0;
  double total = 0.0;
  for (std::size_t k = z.size(); k-- > 0;) {
    tail += z[k];
    total += d(static_cast<std::int64_t>(k + 1)) * std::abs(tail);
  }
  return total;
}

/// ||z||_1E = sum_k k |z_k|; z[0] holds z_1.
inline double norm_1E(std::span<const double> z) {
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) total += static_cast<double>(k + 1) * std::abs(z[k]);
  return total;
}

inline double norm_1(std::span<const double> z) {
  double total = 0.0;
  for (double v : z) total += std::abs(v);
  return total;
}

}  // namespace ergobound
