#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace lsv {

/// Non-negative step function f(x) = sum_i value_i * 1{lo_i < x <= hi_i}.
/// `hi` may be +inf (the compactified right end); `value` may be +inf.
struct StepFunction {
  struct Piece {
    double lo;
    double hi;
    double value;
  };
  std::vector<Piece> pieces;

  static StepFunction zero() { return {}; }
  static StepFunction indicator_above(double x, double value = 1.0) {
    return {{{x, std::numeric_limits<double>::infinity(), value}}};
  }

  double operator()(double x) const {
    double s = 0.0;
    for (const auto& p : pieces)
      if (x > p.lo && x <= p.hi) s += p.value;
    return s;
  }

  /// Smallest left edge among pieces with nonzero value; +inf for f = 0.
  double support_lower() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces)
      if (p.value > 0.0 && p.lo < lo) lo = p.lo;
    return lo;
  }
};

}  // namespace lsv
