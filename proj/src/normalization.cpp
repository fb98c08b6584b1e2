#include "lsvbrw/normalization.hpp"

#include <cmath>
#include <string>

#include "lsvbrw/error.hpp"

namespace lsv {

NormSeq compute_norm_seq(const DisplacementLaw& law, double m, int n, const NormParams& p) {
  if (n <= 0) throw Error("normalization needs n >= 1");
  if (!(m > 1.0)) throw Error("normalization needs m > 1");
  if (law.regime != Regime::Suplogarithmic) throw Error("normalization undefined for regime");

  // Bisection in log t on log P[X > t] <= -n log m. The bracket grows by
  // doubling t from t_min; working with the log tail avoids underflow of m^{-n}.
  const double target = -n * std::log(m);
  const double t0 = law.support_min();
  double b;
  if (log_tail_prob(law, t0) <= target) {
    b = t0;
  } else {
    double lo = std::log(t0);
    double step = std::log(2.0);
    double hi = lo + step;
    constexpr double kLogMax = 709.0;
    while (log_tail_prob(law, std::exp(hi)) > target) {
      if (hi >= kLogMax) throw Error("normalization bracket overflow");
      lo = hi;
      step *= 2.0;
      hi = std::min(hi + step, kLogMax);
    }
    for (int i = 0; i < 200 && hi - lo > 1e-16 * std::abs(hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      (log_tail_prob(law, std::exp(mid)) > target ? lo : hi) = mid;
    }
    b = std::exp(hi);
  }

  NormSeq s;
  s.n = n;
  s.m = m;
  s.b = b;
  s.a = 1.0 / law.tail.derivative(b);
  s.delta = p.delta;
  s.T = p.T;
  s.K = p.K;
  s.y = (1.0 - p.delta) * b;
  s.z = n == 1 ? 0.0 : p.T * b * std::log(static_cast<double>(n)) / law.tail(b);
  s.x = b + p.K * s.a;
  return s;
}

double sublog_level(double m, int n, double x) {
  if (n < 1) throw Error("sublog level needs n >= 1");
  return n * std::log(m) + x;
}

NormInvariantReport check_norm_invariants(const std::vector<NormSeq>& rows) {
  NormInvariantReport rep;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!(r.a > 0.0)) rep.a_positive = false;
    if (i == 0) continue;
    const auto& q = rows[i - 1];
    if (!(r.b > q.b)) rep.b_increasing = false;
    if (q.n < 3) continue;
    if (!(r.z / r.b < q.z / q.b)) rep.z_over_b_decreasing = false;
    if (!(r.a / r.z < q.a / q.z)) rep.a_over_z_decreasing = false;
  }
  return rep;
}

}  // namespace lsv
