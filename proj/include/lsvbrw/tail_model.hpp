#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsvbrw/rng.hpp"

namespace lsv {

enum class TailFamily { PowerLog, Lognormal, CustomTable };
enum class Regime { Suplogarithmic, Sublogarithmic };

std::string_view to_string(TailFamily f);
std::string_view to_string(Regime r);

namespace detail {
struct TailTable;
}

/// The function L in P[X > t] = a e^{-L(t)}, with its calculus.
///
/// L is continuous and strictly increasing on [t_min, inf) with L(t_min) = 0.
/// Every quantity is also available in logarithmic coordinates u = log t,
/// because the sublogarithmic inverses overflow a double long before the
/// L-scale does (sqrt(log t) = 27 already needs t = e^729).
class TailFunction {
 public:
  /// L(t) = c (log t)^beta on [1, inf).
  static TailFunction power_log(double c, double beta, double xi = 1.0 / 3.0);
  /// L(t) = ((log t)^2 + 2 log log t) / 2, the lognormal-type tail.
  static TailFunction lognormal(double xi = 1.0 / 3.0);
  /// Monotone (PCHIP) interpolation of (t, L(t)) pairs in (log t, L)
  /// coordinates; the first pair must have L = 0. Beyond the last point the
  /// last interpolating slope in log t is continued.
  static TailFunction custom_table(std::vector<std::pair<double, double>> points,
                                   double xi = 1.0 / 3.0);
  static TailFunction custom_table_csv(const std::filesystem::path& csv, double xi = 1.0 / 3.0);

  TailFamily family() const noexcept { return family_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  double t_min() const noexcept { return t_min_; }
  /// Exponent for which t^{-xi} L(t) is eventually decreasing.
  double decrease_exponent() const noexcept { return xi_; }

  /// L(t); equals 0 for t <= t_min.
  double operator()(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
  /// L^{-1}(y) for y >= 0; +inf when the result overflows.
  double inverse(double y) const;

  /// L(e^u) for u >= log t_min.
  double of_log(double u) const;
  /// d/du L(e^u).
  double log_derivative(double u) const;
  /// log L^{-1}(y).
  double log_inverse(double y) const;

  /// First point t_min * 2^k beyond which t^{-xi} L(t) is non-increasing on
  /// the doubling grid up to 1e300 (checked in log coordinates up to 2^k <= 2^2000).
  double decrease_onset() const;

 private:
  TailFunction() = default;
  TailFamily family_ = TailFamily::PowerLog;
  std::vector<double> params_;
  double t_min_ = 1.0;
  double log_t_min_ = 0.0;
  double xi_ = 1.0 / 3.0;
  std::shared_ptr<const detail::TailTable> table_;
};

/// Displacement law with P[X > t] = a e^{-L(t)} on [t_min, inf).
///
/// For a = 1 the law is X = L^{-1}(E) with E unit exponential. For a < 1 the
/// missing mass 1 - a is an atom at t_min; for a > 1 the law is
/// L^{-1}(E + log a), supported on [t*, inf) with a e^{-L(t*)} = 1.
struct DisplacementLaw {
  TailFunction tail;
  double prefactor = 1.0;
  Regime regime = Regime::Suplogarithmic;
  /// Documents P[X < -t] <= t^{-eps}; vacuous since the support is positive.
  double left_tail_exponent = 1.0;

  /// Regime implied by the family (power-log: beta > 1 or < 1; lognormal:
  /// suplog). Throws for the logarithmic boundary beta = 1.
  static DisplacementLaw make(TailFunction tail, double prefactor = 1.0);
  /// Custom tables carry a declared regime.
  static DisplacementLaw make(TailFunction tail, double prefactor, Regime declared);

  /// Lower end of the support: t* for a > 1, t_min otherwise.
  double support_min() const;
};

double tail_prob(const DisplacementLaw& law, double t);
/// log P[X > t] without underflow.
double log_tail_prob(const DisplacementLaw& law, double t);
/// inf{t : tail_prob(t) <= p}; returns support_min() when p >= tail_prob(support_min()).
double quantile(const DisplacementLaw& law, double p);

/// Maps a unit-exponential draw (and, for a < 1, a uniform for the atom) to X.
double displacement_from_draws(const DisplacementLaw& law, double exponential, double uniform);
double sample_displacement(const DisplacementLaw& law, Engine& g);

enum class CheckStatus { Pass, Warn, Fail };
std::string_view to_string(CheckStatus s);

struct AssumptionCheck {
  std::string name;
  CheckStatus status;
  std::vector<std::pair<double, double>> trace;  // (t, statistic)
};

struct ValidationReport {
  Regime regime;
  std::vector<AssumptionCheck> checks;
  bool ok() const;  // no Fail entries
};

/// Numerical check of the regime assumptions on t in {10^2, 10^2.5, ..., 10^12}.
/// Throws for L(t) = c log t (logarithmic regime).
ValidationReport validate_assumptions(const DisplacementLaw& law);

}  // namespace lsv
