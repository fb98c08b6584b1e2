#include "lsvbrw/galton_watson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "lsvbrw/error.hpp"

namespace lsv {

namespace {

constexpr std::uint64_t kSaturate = std::numeric_limits<std::uint64_t>::max();
// Above this population a generation grows by its mean; the relative
// fluctuation of a sum of 2^53 iid draws is below 1e-7.
constexpr std::uint64_t kAggregateExactLimit = std::uint64_t{1} << 53;

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturate / a) return kSaturate;
  return a * b;
}

std::uint64_t from_double(double x) {
  if (!(x < 1.8e19)) return kSaturate;
  return static_cast<std::uint64_t>(std::llround(x));
}

// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

// (a * b) truncated to j_max + 1 coefficients.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b,
                             std::size_t j_max) {
  std::vector<double> out(j_max + 1, 0.0);
  for (std::size_t k = 0; k <= j_max; ++k) {
    CompensatedSum s;
    const std::size_t lo = k >= b.size() ? k - b.size() + 1 : 0;
    const std::size_t hi = std::min(k, a.size() - 1);
    for (std::size_t i = lo; i <= hi; ++i) s.add(a[i] * b[k - i]);
    out[k] = s.value();
  }
  return out;
}

}  // namespace

std::string_view to_string(OffspringFamily f) {
  switch (f) {
    case OffspringFamily::Deterministic: return "deterministic";
    case OffspringFamily::Poisson: return "poisson";
    case OffspringFamily::LinearFractional: return "linear-fractional";
    case OffspringFamily::ExplicitPmf: return "explicit-pmf";
  }
  return "?";
}

OffspringLaw OffspringLaw::deterministic(unsigned d) {
  if (d < 2) throw Error("deterministic branching needs d >= 2 (supercritical)");
  OffspringLaw law;
  law.family_ = OffspringFamily::Deterministic;
  law.params_ = {static_cast<double>(d)};
  law.pmf_.assign(d + 1, 0.0);
  law.pmf_[d] = 1.0;
  law.finish();
  return law;
}

OffspringLaw OffspringLaw::poisson(double mean) {
  if (!(mean > 1.0)) throw Error("offspring law must be supercritical (m > 1)");
  OffspringLaw law;
  law.family_ = OffspringFamily::Poisson;
  law.params_ = {mean};
  double p = std::exp(-mean), tail = 1.0;
  for (std::uint64_t k = 0;; ++k) {
    law.pmf_.push_back(p);
    tail -= p;
    if (k > mean && (tail < 1e-17 || p < 1e-300)) break;
    p *= mean / static_cast<double>(k + 1);
  }
  law.finish();
  return law;
}

OffspringLaw OffspringLaw::linear_fractional(double p0, double r) {
  if (!(p0 >= 0.0 && p0 < 1.0) || !(r > 0.0 && r < 1.0))
    throw Error("linear-fractional law needs p0 in [0, 1) and r in (0, 1)");
  OffspringLaw law;
  law.family_ = OffspringFamily::LinearFractional;
  law.params_ = {p0, r};
  if (!((1.0 - p0) / (1.0 - r) > 1.0)) throw Error("offspring law must be supercritical (m > 1)");
  law.pmf_.push_back(p0);
  double p = (1.0 - p0) * (1.0 - r), tail = 1.0 - p0;
  while (tail >= 1e-17 && p > 1e-300) {
    law.pmf_.push_back(p);
    tail -= p;
    p *= r;
  }
  law.finish();
  return law;
}

OffspringLaw OffspringLaw::linear_fractional_with(double mean, double extinction) {
  // mean = (1 - p0)/(1 - r), extinction = p0 / r.
  if (!(mean > 1.0) || !(extinction >= 0.0 && extinction < 1.0))
    throw Error("linear-fractional law needs mean > 1 and extinction in [0, 1)");
  const double r = (mean - 1.0) / (mean - extinction);
  return linear_fractional(extinction * r, r);
}

OffspringLaw OffspringLaw::explicit_pmf(std::vector<double> pmf) {
  if (pmf.empty()) throw Error("explicit pmf is empty");
  CompensatedSum s;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw Error("explicit pmf has a negative entry");
    s.add(p);
  }
  if (std::abs(s.value() - 1.0) > 1e-12) throw Error("explicit pmf does not sum to 1");
  OffspringLaw law;
  law.family_ = OffspringFamily::ExplicitPmf;
  law.params_ = pmf;
  law.pmf_ = std::move(pmf);
  law.finish();
  if (!(law.mean_ > 1.0)) throw Error("offspring law must be supercritical (m > 1)");
  return law;
}

void OffspringLaw::finish() {
  switch (family_) {
    case OffspringFamily::Deterministic: mean_ = params_[0]; break;
    case OffspringFamily::Poisson: mean_ = params_[0]; break;
    case OffspringFamily::LinearFractional:
      mean_ = (1.0 - params_[0]) / (1.0 - params_[1]);
      break;
    case OffspringFamily::ExplicitPmf: {
      CompensatedSum s;
      for (std::size_t k = 0; k < pmf_.size(); ++k) s.add(static_cast<double>(k) * pmf_[k]);
      mean_ = s.value();
      break;
    }
  }
  cdf_.resize(pmf_.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    s.add(pmf_[k]);
    cdf_[k] = s.value();
  }
  cdf_.back() = 1.0;
}

double OffspringLaw::pmf(std::uint64_t k) const {
  switch (family_) {
    case OffspringFamily::Poisson: {
      const double m = params_[0];
      return std::exp(static_cast<double>(k) * std::log(m) - m - std::lgamma(static_cast<double>(k) + 1.0));
    }
    case OffspringFamily::LinearFractional: {
      const double p0 = params_[0], r = params_[1];
      if (k == 0) return p0;
      return (1.0 - p0) * (1.0 - r) * std::pow(r, static_cast<double>(k - 1));
    }
    default:
      return k < pmf_.size() ? pmf_[k] : 0.0;
  }
}

double OffspringLaw::pgf(double s) const {
  switch (family_) {
    case OffspringFamily::Deterministic: return std::pow(s, params_[0]);
    case OffspringFamily::Poisson: return std::exp(params_[0] * (s - 1.0));
    case OffspringFamily::LinearFractional: {
      const double p0 = params_[0], r = params_[1];
      return p0 + (1.0 - p0) * (1.0 - r) * s / (1.0 - r * s);
    }
    case OffspringFamily::ExplicitPmf: {
      double acc = 0.0;
      for (std::size_t k = pmf_.size(); k-- > 0;) acc = acc * s + pmf_[k];
      return acc;
    }
  }
  return 0.0;
}

double OffspringLaw::extinction_probability() const {
  if (family_ == OffspringFamily::LinearFractional) return params_[0] / params_[1];
  if (pmf(0) == 0.0) return 0.0;
  double q = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double next = pgf(q);
    if (std::abs(next - q) < 1e-17) return next;
    q = next;
  }
  return q;
}

double OffspringLaw::z_log_z_moment() const {
  CompensatedSum s;
  for (std::size_t k = 2; k < pmf_.size(); ++k)
    s.add(pmf_[k] * static_cast<double>(k) * std::log(static_cast<double>(k)));
  return s.value();
}

std::uint64_t OffspringLaw::sample(Engine& g) const {
  if (family_ == OffspringFamily::Deterministic) return static_cast<std::uint64_t>(params_[0]);
  const double u = uniform01(g);
  // Offspring tables are short; a linear scan beats binary search here.
  std::size_t k = 0;
  while (k + 1 < cdf_.size() && u >= cdf_[k]) ++k;
  return k;
}

std::uint64_t OffspringLaw::sample_sum(std::uint64_t count, Engine& g) const {
  if (count == 0) return 0;
  if (family_ == OffspringFamily::Deterministic)
    return saturating_mul(count, static_cast<std::uint64_t>(params_[0]));
  if (count >= kAggregateExactLimit) return from_double(static_cast<double>(count) * mean_);
  if (count <= 16) {
    std::uint64_t s = 0;
    for (std::uint64_t i = 0; i < count; ++i) s += sample(g);
    return s;
  }
  switch (family_) {
    case OffspringFamily::Poisson: {
      std::poisson_distribution<std::uint64_t> d(params_[0] * static_cast<double>(count));
      return d(g);
    }
    case OffspringFamily::LinearFractional: {
      const double p0 = params_[0], r = params_[1];
      std::binomial_distribution<std::uint64_t> nonzero(count, 1.0 - p0);
      const std::uint64_t k = nonzero(g);
      if (k == 0) return 0;
      // Each positive count is 1 + Geometric failures with success prob 1 - r.
      std::negative_binomial_distribution<std::uint64_t> extra(k, 1.0 - r);
      return k + extra(g);
    }
    default: {
      // Multinomial split by sequential binomials.
      std::uint64_t remaining = count, total = 0;
      double rest = 1.0;
      for (std::size_t k = 0; k < pmf_.size() && remaining > 0; ++k) {
        if (pmf_[k] <= 0.0) continue;
        std::uint64_t nk = remaining;
        if (k + 1 < pmf_.size() && pmf_[k] < rest) {
          std::binomial_distribution<std::uint64_t> d(remaining, std::min(1.0, pmf_[k] / rest));
          nk = d(g);
        }
        total += nk * k;
        remaining -= nk;
        rest -= pmf_[k];
        if (rest <= 0.0) rest = 0.0;
      }
      return total;
    }
  }
}

std::vector<std::uint64_t> sample_Z_path(const OffspringLaw& law, int n, Engine& g) {
  if (n < 0) throw Error("sample_Z_path needs n >= 0");
  std::vector<std::uint64_t> z(static_cast<std::size_t>(n) + 1, 0);
  z[0] = 1;
  for (int k = 1; k <= n; ++k) z[k] = law.sample_sum(z[k - 1], g);
  return z;
}

namespace {

// pmf of Z_{l+1} from that of Z_l: f(g) by Horner,
// ((p_K g + p_{K-1}) g + ...) g + p_0, truncated at j_max. Coefficients up to
// j_max are exact because a sum with one term above j_max exceeds j_max.
std::vector<double> compose_step(const std::vector<double>& off, const std::vector<double>& cur,
                                 std::size_t j_max) {
  std::vector<double> acc(j_max + 1, 0.0);
  acc[0] = off.back();
  for (std::size_t k = off.size() - 1; k-- > 0;) {
    acc = convolve(acc, cur, j_max);
    acc[0] += off[k];
  }
  return acc;
}

double lost(const std::vector<double>& p) {
  CompensatedSum s;
  for (double x : p) s.add(x);
  return std::max(0.0, 1.0 - s.value());
}

}  // namespace

std::vector<double> zl_pmf_head(const OffspringLaw& law, int l, std::size_t j_max) {
  if (l < 0) throw Error("zl_pmf_head needs l >= 0");
  std::vector<double> cur(j_max + 1, 0.0);
  if (j_max >= 1) cur[1] = 1.0;
  for (int step = 0; step < l; ++step) cur = compose_step(law.truncated_pmf(), cur, j_max);
  return cur;
}

ZlPmf zl_pmf(const OffspringLaw& law, int l, std::size_t j_max) {
  if (l < 0) throw Error("zl_pmf needs l >= 0");
  std::vector<double> cur(j_max + 1, 0.0);
  if (j_max >= 1) cur[1] = 1.0;  // Z_0 = 1
  for (int step = 0; step < l; ++step) cur = compose_step(law.truncated_pmf(), cur, j_max);
  ZlPmf out{std::move(cur), 0.0};
  out.lost_mass = lost(out.p);
  if (out.lost_mass > 1e-6) {
    std::size_t suggest = std::max<std::size_t>(2 * j_max, 8);
    const double typical = std::pow(law.mean(), l);
    while (static_cast<double>(suggest) < 16.0 * typical) suggest *= 2;
    throw Error("zl_pmf: j_max=" + std::to_string(j_max) + " loses mass " +
                std::to_string(out.lost_mass) + "; try j_max=" + std::to_string(suggest));
  }
  return out;
}

double survival_probability(const OffspringLaw& law, int l) {
  double q = 0.0;
  for (int k = 0; k < l; ++k) q = law.pgf(q);
  return 1.0 - q;
}

namespace {

// Conditional CDFs of Z_l given Z_l > 0 for the levels whose mass above
// kMaxTable is below 1e-10.
constexpr std::size_t kMaxTable = 1024;

std::vector<std::vector<double>> conditional_tables(const OffspringLaw& law, int max_level) {
  std::vector<std::vector<double>> tables;
  std::vector<double> cur(kMaxTable + 1, 0.0);
  cur[1] = 1.0;
  for (int l = 0; l <= max_level; ++l) {
    if (l > 0) cur = compose_step(law.truncated_pmf(), cur, kMaxTable);
    if (lost(cur) > 1e-10) break;
    const double positive = 1.0 - cur[0];
    std::vector<double> cdf(kMaxTable + 1, 0.0);
    CompensatedSum s;
    for (std::size_t j = 1; j <= kMaxTable; ++j) {
      s.add(cur[j] / positive);
      cdf[j] = s.value();
    }
    tables.push_back(std::move(cdf));
  }
  return tables;
}

}  // namespace

ClusterLaw compute_cluster_law(const OffspringLaw& law, double tol) {
  if (!(tol > 0.0)) throw Error("cluster law needs tol > 0");
  const double m = law.mean();
  if (!(m > 1.0)) throw Error("cluster law needs a supercritical offspring law");
  ClusterLaw c;
  c.m = m;
  c.tol = tol;
  c.extinction = law.extinction_probability();

  double q = 0.0;  // P[Z_l = 0]
  double weight = 1.0;  // m^{-l}
  CompensatedSum v;
  int l = 0;
  while (weight >= tol) {
    c.survival.push_back(1.0 - q);
    v.add(weight * (1.0 - q));
    q = law.pgf(q);
    weight /= m;
    ++l;
  }
  // Geometric tail sum_{l' >= l} m^{-l'} P[Z_l' > 0], with P[Z_l' > 0] ~ 1 - q_l.
  const double tail = weight * (1.0 - q) * m / (m - 1.0);
  c.v = v.value() + tail;
  c.truncation_tail_mass = tail / c.v;
  double w = 1.0;
  for (double s : c.survival) {
    c.level_weights.push_back(w * s / c.v);
    w /= m;
  }
  if (law.family() != OffspringFamily::Deterministic)
    c.conditional_cdf = conditional_tables(law, std::min<int>(30, static_cast<int>(c.survival.size()) - 1));
  return c;
}

int sample_level(const ClusterLaw& c, Engine& g) {
  double u = uniform01(g);
  for (std::size_t l = 0; l < c.level_weights.size(); ++l) {
    if (u < c.level_weights[l]) return static_cast<int>(l);
    u -= c.level_weights[l];
  }
  // Past l_max the weights are geometric with ratio 1/m.
  int l = static_cast<int>(c.level_weights.size());
  while (uniform01(g) >= 1.0 - 1.0 / c.m) ++l;
  return l;
}

std::uint64_t sample_conditioned_Z(const ClusterLaw& c, const OffspringLaw& law, int l, Engine& g) {
  if (law.family() == OffspringFamily::Deterministic) {
    std::uint64_t z = 1;
    const auto d = static_cast<std::uint64_t>(law.parameters()[0]);
    for (int k = 0; k < l; ++k) z = saturating_mul(z, d);
    return z;
  }
  if (static_cast<std::size_t>(l) < c.conditional_cdf.size()) {
    const auto& cdf = c.conditional_cdf[l];
    const double u = uniform01(g);
    const auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    return it == cdf.end() ? cdf.size() - 1 : static_cast<std::uint64_t>(it - cdf.begin());
  }
  for (;;) {
    std::uint64_t z = 1;
    for (int k = 0; k < l && z > 0; ++k) z = law.sample_sum(z, g);
    if (z > 0) return z;
  }
}

std::uint64_t sample_A(const ClusterLaw& c, const OffspringLaw& law, Engine& g) {
  return sample_conditioned_Z(c, law, sample_level(c, g), g);
}

WEstimate estimate_W(const OffspringLaw& law, std::uint64_t cap, Engine& g) {
  if (law.family() == OffspringFamily::Deterministic) {
    const auto d = static_cast<std::uint64_t>(law.parameters()[0]);
    std::uint64_t z = 1;
    int k = 0;
    while (z <= cap) {
      z *= d;
      ++k;
    }
    return {1.0, k, z};
  }
  std::uint64_t z = 1;
  int k = 0;
  while (z > 0 && z <= cap) {
    z = law.sample_sum(z, g);
    ++k;
  }
  const double value = z == 0 ? 0.0 : static_cast<double>(z) * std::pow(law.mean(), -k);
  return {value, k, z};
}

}  // namespace lsv
