#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lsvbrw/rng.hpp"

namespace lsv {

enum class OffspringFamily { Deterministic, Poisson, LinearFractional, ExplicitPmf };
std::string_view to_string(OffspringFamily f);

/// Supercritical offspring law of the Galton-Watson tree.
///
/// Linear-fractional: P[0] = p0, P[k] = (1 - p0)(1 - r) r^{k-1} for k >= 1.
class OffspringLaw {
 public:
  static OffspringLaw deterministic(unsigned d);
  static OffspringLaw poisson(double mean);
  static OffspringLaw linear_fractional(double p0, double r);
  /// Linear-fractional law with the given mean and extinction probability.
  static OffspringLaw linear_fractional_with(double mean, double extinction);
  /// pmf[k] = P[Z_1 = k]; must sum to 1 within 1e-12.
  static OffspringLaw explicit_pmf(std::vector<double> pmf);

  OffspringFamily family() const noexcept { return family_; }
  const std::vector<double>& parameters() const noexcept { return params_; }
  double mean() const noexcept { return mean_; }

  double pmf(std::uint64_t k) const;
  double pgf(double s) const;
  /// P[Z_1 = k] for k < size(); the dropped tail has mass below 1e-17.
  const std::vector<double>& truncated_pmf() const noexcept { return pmf_; }
  /// Smallest fixed point of the pgf in [0, 1].
  double extinction_probability() const;
  /// E[Z_1 log+ Z_1] by partial sums of the (truncated) pmf.
  double z_log_z_moment() const;

  std::uint64_t sample(Engine& g) const;
  /// Sum of `count` iid offspring draws, drawn in aggregate (Poisson, binomial
  /// and negative-binomial identities, multinomial splitting for explicit pmfs).
  std::uint64_t sample_sum(std::uint64_t count, Engine& g) const;

 private:
  OffspringLaw() = default;
  void finish();

  OffspringFamily family_ = OffspringFamily::Deterministic;
  std::vector<double> params_;
  double mean_ = 0.0;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

/// [Z_0, ..., Z_n] with Z_0 = 1; absorbing at 0.
std::vector<std::uint64_t> sample_Z_path(const OffspringLaw& law, int n, Engine& g);

/// Distribution of Z_l on {0, ..., j_max}.
struct ZlPmf {
  std::vector<double> p;
  double lost_mass = 0.0;  // 1 - sum(p): mass of Z_l above j_max
};

/// pmf of Z_l by l-fold pgf composition with compensated convolutions.
/// Throws when the mass above j_max exceeds 1e-6 (message names a j_max that works).
ZlPmf zl_pmf(const OffspringLaw& law, int l, std::size_t j_max);

/// P[Z_l = j] for j <= j_max without the mass check; truncating the
/// composition at degree j_max leaves these coefficients exact.
std::vector<double> zl_pmf_head(const OffspringLaw& law, int l, std::size_t j_max);

/// P[Z_l > 0] = 1 - f^{(l)}(0).
double survival_probability(const OffspringLaw& law, int l);

/// Cluster-size law of the limit process:
/// v = sum_l m^{-l} P[Z_l > 0], P[A = j] = v^{-1} sum_l m^{-l} P[Z_l = j].
struct ClusterLaw {
  double m = 0.0;
  double v = 0.0;
  double tol = 0.0;
  /// m^{-l} P[Z_l > 0] / v for l = 0 .. l_max.
  std::vector<double> level_weights;
  /// P[Z_l > 0] for l = 0 .. l_max.
  std::vector<double> survival;
  /// Mass of the levels beyond l_max (included in v through its geometric tail).
  double truncation_tail_mass = 0.0;
  double extinction = 0.0;
  /// CDF tables of Z_l given Z_l > 0 for l < conditional_cdf.size(); other
  /// levels are drawn by rejection.
  std::vector<std::vector<double>> conditional_cdf;
};

/// Levels are kept while m^{-l} >= tol. Errors for subcritical/critical laws.
ClusterLaw compute_cluster_law(const OffspringLaw& law, double tol = 1e-12);

/// Level l ~ level weights (geometric continuation past l_max).
int sample_level(const ClusterLaw& cluster, Engine& g);
/// Z_l conditioned on Z_l > 0.
std::uint64_t sample_conditioned_Z(const ClusterLaw& cluster, const OffspringLaw& law, int l,
                                   Engine& g);
/// A ~ v^{-1} sum_l m^{-l} P[Z_l = .], two-stage: level, then Z_l | Z_l > 0.
std::uint64_t sample_A(const ClusterLaw& cluster, const OffspringLaw& law, Engine& g);

struct WEstimate {
  double value = 0.0;
  int freeze_generation = 0;
  std::uint64_t population_at_freeze = 0;
};

/// m^{-k} Z_k at the first k with Z_k > cap, or at extinction.
WEstimate estimate_W(const OffspringLaw& law, std::uint64_t cap, Engine& g);

}  // namespace lsv
