#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "bjext/errors.hpp"
#include "bjext/space.hpp"

namespace bjext {

/// Vector norm on R^n: euclidean, l_p (p >= 1) or max.
class NormTag {
 public:
  enum class Kind { euclidean, p_norm, max_norm };

  static NormTag euclidean() { return NormTag(Kind::euclidean, 2.0); }
  static NormTag max_norm() { return NormTag(Kind::max_norm, 0.0); }
  static NormTag p_norm(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("p-norm needs finite p >= 1");
    return NormTag(Kind::p_norm, p);
  }

  /// Accepts "euclidean", "max" and "p:<p>".
  static NormTag parse(std::string_view text) {
    if (text == "euclidean") return euclidean();
    if (text == "max") return max_norm();
    if (text.size() > 2 && text.substr(0, 2) == "p:") {
      double p = 0.0;
      const auto body = text.substr(2);
      auto res = std::from_chars(body.data(), body.data() + body.size(), p);
      if (res.ec != std::errc() || res.ptr != body.data() + body.size()) {
        throw InputError("unsupported norm tag '" + std::string(text) + "'");
      }
      return p_norm(p);
    }
    throw InputError("unsupported norm tag '" + std::string(text) + "'");
  }

  Kind kind() const { return kind_; }
  double p() const { return p_; }

  std::string name() const {
    switch (kind_) {
      case Kind::euclidean: return "euclidean";
      case Kind::max_norm: return "max";
      case Kind::p_norm: return "p:" + format_number(p_);
    }
    return "?";
  }

  double operator()(std::span<const double> v) const {
    switch (kind_) {
      case Kind::euclidean: {
        // scaled to avoid overflow in the squares
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        if (scale == 0.0) return 0.0;
        double s = 0.0;
        for (double x : v) s += (x / scale) * (x / scale);
        return scale * std::sqrt(s);
      }
      case Kind::max_norm: {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
      }
      case Kind::p_norm: {
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        if (scale == 0.0) return 0.0;
        double s = 0.0;
        for (double x : v) s += std::pow(std::abs(x) / scale, p_);
        return scale * std::pow(s, 1.0 / p_);
      }
    }
    return 0.0;
  }

  /// ||a + t b|| without materializing the combination.
  double of_combination(std::span<const double> a, std::span<const double> b, double t) const {
    if (a.size() != b.size()) throw InputError("norm of a + t b: length mismatch");
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(a[i] + t * b[i]));
    if (kind_ == Kind::max_norm || scale == 0.0) return scale;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double r = std::abs(a[i] + t * b[i]) / scale;
      s += kind_ == Kind::euclidean ? r * r : std::pow(r, p_);
    }
    return kind_ == Kind::euclidean ? scale * std::sqrt(s) : scale * std::pow(s, 1.0 / p_);
  }

  bool operator==(const NormTag&) const = default;

 private:
  NormTag(Kind k, double p) : kind_(k), p_(p) {}
  Kind kind_;
  double p_;
};

}  // namespace bjext
