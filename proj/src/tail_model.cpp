#include "lsvbrw/tail_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

// Boost 1.74 pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "lsvbrw/error.hpp"

namespace lsv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogMax = 709.782712893384;  // log(DBL_MAX)

double safe_exp(double u) { return u >= kLogMax ? kInf : std::exp(u); }

// Root of u^2 + 2 log u = 0, i.e. log t_min of the lognormal family.
double lognormal_u0() {
  double u = 0.75;
  for (int i = 0; i < 100; ++i) {
    const double g = u * u + 2.0 * std::log(u);
    const double step = g / (2.0 * u + 2.0 / u);
    u -= step;
    if (std::abs(step) <= 1e-17 * u) break;
  }
  return u;
}

// Solves u^2 + 2 log u = 2y for u >= u0. The left side is increasing, concave
// below u = 1 and convex above; a bracketed Newton iteration converges in a
// handful of steps from the asymptotic guess.
double lognormal_log_inverse(double y, double u0) {
  if (y <= 0.0) return u0;
  const double target = 2.0 * y;
  double lo = u0;
  double hi = std::max(1.0, std::sqrt(target) + 1.0);
  double u = target > 1.0 ? std::sqrt(std::max(target - std::log(target), 1.0)) : 0.5 * (lo + hi);
  u = std::clamp(u, lo, hi);
  for (int i = 0; i < 100; ++i) {
    const double g = u * u + 2.0 * std::log(u) - target;
    if (g > 0.0)
      hi = u;
    else
      lo = u;
    double next = u - g / (2.0 * u + 2.0 / u);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-15 * u || hi - lo <= 1e-15 * hi) return next;
    u = next;
  }
  return u;
}

}  // namespace

namespace detail {

// Interpolant in (u = log t, L) coordinates.
struct TailTable {
  boost::math::interpolators::pchip<std::vector<double>> spline;
  double u_lo, u_hi, L_hi, slope_hi;

  double value(double u) const {
    if (u <= u_lo) return 0.0;
    if (u >= u_hi) return L_hi + slope_hi * (u - u_hi);
    return spline(u);
  }
  double slope(double u) const {
    if (u >= u_hi) return slope_hi;
    return spline.prime(std::max(u, u_lo));
  }
};

}  // namespace detail

std::string_view to_string(TailFamily f) {
  switch (f) {
    case TailFamily::PowerLog: return "power-log";
    case TailFamily::Lognormal: return "lognormal";
    case TailFamily::CustomTable: return "custom-table";
  }
  return "?";
}

std::string_view to_string(Regime r) {
  return r == Regime::Suplogarithmic ? "suplog" : "sublog";
}

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Warn: return "warn";
    case CheckStatus::Fail: return "fail";
  }
  return "?";
}

TailFunction TailFunction::power_log(double c, double beta, double xi) {
  if (!(c > 0.0) || !(beta > 0.0)) throw Error("power-log tail needs c > 0 and beta > 0");
  if (!(xi > 0.0 && xi < 1.0)) throw Error("decrease exponent must lie in (0, 1)");
  TailFunction f;
  f.family_ = TailFamily::PowerLog;
  f.params_ = {c, beta};
  f.t_min_ = 1.0;
  f.log_t_min_ = 0.0;
  f.xi_ = xi;
  return f;
}

TailFunction TailFunction::lognormal(double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw Error("decrease exponent must lie in (0, 1)");
  TailFunction f;
  f.family_ = TailFamily::Lognormal;
  f.log_t_min_ = lognormal_u0();
  f.t_min_ = std::exp(f.log_t_min_);
  f.xi_ = xi;
  return f;
}

TailFunction TailFunction::custom_table(std::vector<std::pair<double, double>> points, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw Error("decrease exponent must lie in (0, 1)");
  if (points.size() < 4) throw Error("custom-table tail needs at least four (t, L) points");
  std::sort(points.begin(), points.end());
  if (points.front().second != 0.0) throw Error("custom-table tail must start with L(t_min) = 0");
  std::vector<double> u, y;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [t, L] = points[i];
    if (!(t > 0.0)) throw Error("custom-table abscissae must be positive");
    if (i > 0 && !(L > points[i - 1].second && t > points[i - 1].first))
      throw Error("custom-table L must be strictly increasing");
    u.push_back(std::log(t));
    y.push_back(L);
  }
  const double u_lo = u.front(), u_hi = u.back(), L_hi = y.back();
  const double slope_hi = (y[y.size() - 1] - y[y.size() - 2]) / (u[u.size() - 1] - u[u.size() - 2]);
  TailFunction f;
  f.family_ = TailFamily::CustomTable;
  f.log_t_min_ = u_lo;
  f.t_min_ = points.front().first;
  f.xi_ = xi;
  f.params_.reserve(2 * points.size());
  for (const auto& [t, L] : points) {
    f.params_.push_back(t);
    f.params_.push_back(L);
  }
  f.table_ = std::make_shared<detail::TailTable>(detail::TailTable{
      boost::math::interpolators::pchip<std::vector<double>>(std::move(u), std::move(y)), u_lo,
      u_hi, L_hi, slope_hi});
  return f;
}

TailFunction TailFunction::custom_table_csv(const std::filesystem::path& csv, double xi) {
  std::ifstream in(csv);
  if (!in) throw Error("cannot open custom-table file " + csv.string());
  std::vector<std::pair<double, double>> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double t, L;
    if (!(row >> t >> L)) continue;  // header
    pts.emplace_back(t, L);
  }
  return custom_table(std::move(pts), xi);
}

double TailFunction::of_log(double u) const {
  if (u <= log_t_min_) return 0.0;
  switch (family_) {
    case TailFamily::PowerLog:
      return params_[0] * std::pow(u, params_[1]);
    case TailFamily::Lognormal:
      return 0.5 * (u * u + 2.0 * std::log(u));
    case TailFamily::CustomTable:
      return table_->value(u);
  }
  return 0.0;
}

double TailFunction::log_derivative(double u) const {
  if (u < log_t_min_) return 0.0;
  switch (family_) {
    case TailFamily::PowerLog:
      return params_[0] * params_[1] * std::pow(u, params_[1] - 1.0);
    case TailFamily::Lognormal:
      return u + 1.0 / u;
    case TailFamily::CustomTable:
      return table_->slope(u);
  }
  return 0.0;
}

double TailFunction::log_inverse(double y) const {
  if (y <= 0.0) return log_t_min_;
  switch (family_) {
    case TailFamily::PowerLog:
      return std::pow(y / params_[0], 1.0 / params_[1]);
    case TailFamily::Lognormal:
      return lognormal_log_inverse(y, log_t_min_);
    case TailFamily::CustomTable: {
      const auto& tb = *table_;
      if (y >= tb.L_hi) return tb.u_hi + (y - tb.L_hi) / tb.slope_hi;
      double lo = tb.u_lo, hi = tb.u_hi;
      for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (tb.value(mid) < y ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  return log_t_min_;
}

double TailFunction::operator()(double t) const {
  if (!(t > t_min_)) return 0.0;
  if (std::isinf(t)) return kInf;
  return of_log(std::log(t));
}

double TailFunction::derivative(double t) const {
  if (!(t > t_min_) || std::isinf(t)) return 0.0;
  return log_derivative(std::log(t)) / t;
}

double TailFunction::second_derivative(double t) const {
  if (!(t > t_min_) || std::isinf(t)) return 0.0;
  const double u = std::log(t);
  // d/dt [g(u)/t] = (g'(u) - g(u)) / t^2 with g = dL/du.
  double g = log_derivative(u), gp = 0.0;
  switch (family_) {
    case TailFamily::PowerLog:
      gp = params_[0] * params_[1] * (params_[1] - 1.0) * std::pow(u, params_[1] - 2.0);
      break;
    case TailFamily::Lognormal:
      gp = 1.0 - 1.0 / (u * u);
      break;
    case TailFamily::CustomTable: {
      const double h = 1e-5 * std::max(1.0, std::abs(u));
      gp = (log_derivative(u + h) - log_derivative(u - h)) / (2.0 * h);
      break;
    }
  }
  return (gp - g) / (t * t);
}

double TailFunction::inverse(double y) const { return safe_exp(log_inverse(y)); }

double TailFunction::decrease_onset() const {
  constexpr int kMax = 2000;
  std::vector<double> g;
  g.reserve(kMax + 1);
  for (int k = 0; k <= kMax; ++k) {
    const double u = log_t_min_ + k * std::log(2.0);
    const double L = of_log(u);
    g.push_back(L > 0.0 ? std::log(L) - xi_ * u : -kInf);
  }
  int onset = kMax;
  while (onset > 0 && g[onset - 1] >= g[onset] && std::isfinite(g[onset - 1])) --onset;
  return t_min_ * std::pow(2.0, onset);
}

DisplacementLaw DisplacementLaw::make(TailFunction tail, double prefactor) {
  Regime r;
  switch (tail.family()) {
    case TailFamily::PowerLog: {
      const double beta = tail.parameters()[1];
      if (beta == 1.0) throw Error("logarithmic regime out of scope");
      r = beta > 1.0 ? Regime::Suplogarithmic : Regime::Sublogarithmic;
      break;
    }
    case TailFamily::Lognormal:
      r = Regime::Suplogarithmic;
      break;
    default:
      throw Error("custom-table tails need a declared regime");
  }
  return make(std::move(tail), prefactor, r);
}

DisplacementLaw DisplacementLaw::make(TailFunction tail, double prefactor, Regime declared) {
  if (!(prefactor > 0.0) || !std::isfinite(prefactor)) throw Error("prefactor a must be positive");
  if (declared == Regime::Sublogarithmic && prefactor != 1.0)
    throw Error("sublogarithmic laws require a = 1");
  DisplacementLaw law{std::move(tail), prefactor, declared, 1.0};
  return law;
}

double DisplacementLaw::support_min() const {
  if (prefactor > 1.0) return tail.inverse(std::log(prefactor));
  return tail.t_min();
}

double log_tail_prob(const DisplacementLaw& law, double t) {
  if (t < law.support_min()) return 0.0;
  return std::min(0.0, std::log(law.prefactor) - law.tail(t));
}

double tail_prob(const DisplacementLaw& law, double t) { return std::exp(log_tail_prob(law, t)); }

double quantile(const DisplacementLaw& law, double p) {
  if (!(p > 0.0)) throw Error("unbounded quantile");
  if (p > 1.0) throw Error("quantile needs p in (0, 1]");
  const double a = law.prefactor;
  if (p >= std::min(1.0, a)) return law.support_min();
  return law.tail.inverse(std::log(a / p));
}

double displacement_from_draws(const DisplacementLaw& law, double exponential, double uniform) {
  const double a = law.prefactor;
  if (a < 1.0 && uniform >= a) return law.tail.t_min();
  const double shift = a > 1.0 ? std::log(a) : 0.0;
  return law.tail.inverse(exponential + shift);
}

double sample_displacement(const DisplacementLaw& law, Engine& g) {
  const double e = unit_exponential(g);
  const double u = law.prefactor < 1.0 ? uniform01(g) : 0.0;
  return displacement_from_draws(law, e, u);
}

bool ValidationReport::ok() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const AssumptionCheck& c) { return c.status == CheckStatus::Fail; });
}

namespace {

// Non-increasing over the second half of the trace.
bool tail_non_increasing(const std::vector<std::pair<double, double>>& tr) {
  for (std::size_t i = tr.size() / 2 + 1; i < tr.size(); ++i)
    if (tr[i].second > tr[i - 1].second * (1.0 + 1e-12)) return false;
  return true;
}

bool tail_non_decreasing(const std::vector<std::pair<double, double>>& tr) {
  for (std::size_t i = tr.size() / 2 + 1; i < tr.size(); ++i)
    if (tr[i].second < tr[i - 1].second * (1.0 - 1e-12)) return false;
  return true;
}

}  // namespace

ValidationReport validate_assumptions(const DisplacementLaw& law) {
  const TailFunction& L = law.tail;
  std::vector<double> us;  // log t grid, t = 10^2 .. 10^12 in half decades
  for (int k = 4; k <= 24; ++k) us.push_back(0.5 * k * std::log(10.0));

  // Logarithmic boundary: L(t) / log t constant.
  {
    double lo = kInf, hi = -kInf;
    for (double u : us) {
      const double r = L.of_log(u) / u;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    if (hi - lo <= 1e-6 * hi) throw Error("logarithmic regime out of scope");
  }

  ValidationReport rep{law.regime, {}};
  auto trace_of = [&](auto&& stat) {
    std::vector<std::pair<double, double>> tr;
    for (double u : us) tr.emplace_back(std::exp(u), stat(u));
    return tr;
  };
  auto add = [&](std::string name, std::vector<std::pair<double, double>> tr, bool good,
                 CheckStatus bad = CheckStatus::Fail) {
    rep.checks.push_back({std::move(name), good ? CheckStatus::Pass : bad, std::move(tr)});
  };

  if (law.regime == Regime::Suplogarithmic) {
    auto r1 = trace_of([&](double u) {
      const double t = std::exp(u), d = L.derivative(t);
      return std::abs(L.second_derivative(t) / (d * d));
    });
    add("L''/L'^2 -> 0", r1, tail_non_increasing(r1) && r1.back().second < 0.1);

    std::vector<std::pair<double, double>> r2;
    for (double u : us) {
      const double Lv = L.of_log(u);
      if (Lv <= std::exp(1.0)) continue;
      r2.emplace_back(std::exp(u), Lv / (L.log_derivative(u) * std::sqrt(std::log(std::log(Lv)))));
    }
    add("L/(xL' sqrt(loglog L)) -> inf", r2, r2.size() >= 2 && tail_non_decreasing(r2),
        CheckStatus::Warn);

    auto r3 = trace_of([&](double u) { return std::exp(-u / 3.0) * L.of_log(u); });
    add("x^{-1/3} L(x) eventually decreasing", r3, tail_non_increasing(r3));

    auto r4 = trace_of([&](double u) { return u / L.of_log(u); });
    add("log t / L(t) -> 0", r4, tail_non_increasing(r4) && r4.back().second < 1.0);
  } else {
    auto r1 = trace_of([&](double u) { return std::abs(L.of_log(u + std::log(2.0)) / L.of_log(u) - 1.0); });
    add("L(2t)/L(t) -> 1", r1, tail_non_increasing(r1) && r1.back().second < 0.05);

    auto r2 = trace_of([&](double u) { return L.of_log(u) / u; });
    add("L(t)/log t -> 0", r2, tail_non_increasing(r2) && r2.back().second < 1.0);
  }
  return rep;
}

}  // namespace lsv
