#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsvbrw/brw_engine.hpp"
#include "lsvbrw/limit_laws.hpp"

namespace lsv {

using Cdf = std::function<double(double)>;

struct KSPoint {
  double x, empirical, reference;
};

struct KSResult {
  std::size_t sample_size = 0;
  std::size_t reference_size = 0;  // second sample size; 0 for one-sample tests
  double statistic = 0.0;
  double band_5 = 0.0;
  double band_1 = 0.0;
  bool pass = false;  // statistic < band_1
  std::vector<KSPoint> trace;
};

/// Two-sided one-sample KS. `left` is the left limit F(x-) for laws with
/// atoms; defaults to `cdf`.
KSResult ks_statistic(std::span<const double> sample, const Cdf& cdf, const Cdf& left = {});
KSResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// (1/2) sum |p - q|, shorter vector padded with zeros.
double tv_distance(std::span<const double> p, std::span<const double> q);
/// pmf of counts on {0, ..., cap - 1} plus a last bin collecting values >= cap.
std::vector<double> binned_pmf(std::span<const std::uint64_t> counts, std::size_t cap);

struct MaxLawRow {
  int n = 0;
  std::size_t replicates = 0;
  std::size_t survivors = 0;
  std::size_t flagged = 0;
  KSResult ks;
  /// Suplog only: KS of (max_x T(x) - b_n)/a_n, the one-big-jump proxy.
  std::optional<KSResult> proxy_ks;
  std::vector<double> normalized;  // survivors' normalized maxima
};

struct MaxLawReport {
  std::vector<MaxLawRow> rows;
  bool ks_non_increasing = true;
  double v = 0.0;
  std::string w_source;
};

struct ExperimentOptions {
  std::size_t R = 2000;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  /// Draws of estimate_W when no closed-form W exists.
  std::size_t w_pool = 20000;
  std::uint64_t w_cap = 100000;
};

/// Survivor-conditioned limit cdf (phi(v e^{-x}) - P[W=0]) / (1 - P[W=0]).
Cdf survivor_max_cdf(double v, const WRepresentation& w);

/// W law used by the experiments: closed form when available, else a pool of
/// estimate_W draws on stream derive_seed(seed, tag).
WRepresentation experiment_W(const OffspringLaw& law, const ExperimentOptions& opt,
                             std::uint64_t tag);

/// Simulates options.R trees per n; errors with "insufficient replication"
/// below 100 survivors.
MaxLawReport max_law_experiment(const BRWConfig& config, const std::vector<int>& n_list,
                                const ExperimentOptions& opt);

struct CountRow {
  double x = 0.0;
  std::vector<double> distinct_empirical, distinct_limit;
  double distinct_tv = 0.0;
  std::vector<double> mass_empirical, mass_limit;  // binned totals
  double mass_tv = 0.0;
};

struct PointCountReport {
  int n = 0;
  std::size_t replicates = 0;
  std::size_t flagged = 0;
  std::size_t limit_samples = 0;
  std::size_t mass_cap = 0;
  std::vector<CountRow> rows;
};

/// Distinct clusters (line records above x) against limit_count_pmf; total
/// mass (V atoms above x) against CoxSample totals, both binned at mass_cap.
PointCountReport point_count_experiment(const BRWConfig& config, const std::vector<double>& x_grid,
                                        const ExperimentOptions& opt,
                                        std::size_t limit_samples = 100000,
                                        std::size_t mass_cap = 32);

enum class LemmaVariant { Trunk, Tree };

struct BoundRow {
  double x = 0.0;  // tree only
  double y = 0.0;
  double z = 0.0;  // tree only
  double lhs = 0.0;
  double rhs = 0.0;
  double quadrature_error = 0.0;
  bool pass = false;
  bool checked = true;  // trunk rows with y < 1e4 are informational
};

struct BoundReport {
  LemmaVariant variant = LemmaVariant::Trunk;
  double gamma = 0.0;
  double xi = 0.0;
  double slack = 2.0;
  std::vector<BoundRow> rows;
  bool all_pass() const;
};

/// Truncated exponential moment E[exp(s X) 1{lo < X <= hi}] by adaptive
/// Gauss-Kronrod in the exponential coordinate u = L(t). Sets *error to the
/// quadrature error estimate.
double truncated_exp_moment(const DisplacementLaw& law, double s, double lo, double hi,
                            double* error = nullptr);

/// Trunk: E[e^{gamma L(y) X / y} 1{X <= y}] <= 1 + slack L(y)^{(1 - 1/xi)/2}.
BoundReport trunk_bound_check(const DisplacementLaw& law, double gamma, double xi,
                              const std::vector<double>& y_grid, double slack = 2.0);

struct TreePoint {
  double x, y, z;
};
/// x in {1e6, 1e8, 1e10} with (y, z) in {(0.55x, 0), (0.7x, 0.1x), (0.9x, 0.1x)}.
std::vector<TreePoint> default_tree_grid();

/// Tree: E[e^{sX} 1{y < X <= x - z}] against
/// slack (a C e^{-L(y)} e^{kappa (x - z) + y L'(y)/3} + e^{(gamma - 1) L(y)}),
/// s = gamma L(y)/y, kappa = s - L'(y)/3, C = s (1 - e^{-kappa (x - z - y)}) / kappa.
BoundReport tree_bound_check(const DisplacementLaw& law, double gamma,
                             const std::vector<TreePoint>& grid, double slack = 2.0);

struct RareEventRow {
  int n = 0;
  double x_n = 0.0, y_n = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  double p_hat = 0.0;
  double upper = 0.0;     // one-sided 95% Clopper-Pearson
  double scaled = 0.0;    // m^n * upper
  bool exact_zero = false;  // x_n > n y_n: event impossible
};

struct ChernoffRow {
  int n = 0;
  double s = 0.0;
  double moment = 0.0;      // E[e^{sX} 1{X <= y_n}]
  double log_scaled = 0.0;  // n log m - s x_n + n log moment
};

struct RareEventReport {
  double m = 0.0;
  NormParams params;
  std::vector<RareEventRow> rows;
  bool non_increasing = true;
  double gamma = 0.0;
  std::vector<ChernoffRow> chernoff;
  /// log(m^n * bound) decreasing over the second half of the Chernoff grid.
  bool chernoff_decreasing = true;
};

/// Monte Carlo of P[S_n > x_n, N_n <= y_n] in blocks of 10^5 samples on
/// per-block streams.
RareEventReport rare_event_trend(const DisplacementLaw& law, double m,
                                 const std::vector<int>& n_list, std::uint64_t samples,
                                 const NormParams& params, unsigned threads, std::uint64_t seed);

/// n log m - s x_n + n log E[e^{sX} 1{X <= y_n}] with s = gamma L(y_n)/y_n.
std::vector<ChernoffRow> chernoff_pipeline(const DisplacementLaw& law, double m,
                                           const std::vector<int>& n_list, double gamma,
                                           const NormParams& params);

/// Fills report.chernoff and report.chernoff_decreasing.
void attach_chernoff(RareEventReport& report, const DisplacementLaw& law,
                     const std::vector<int>& n_list, double gamma);

/// Two-sample KS between N direct W estimates and N draws of (1/m) sum_{i <= Z_1} W_i.
KSResult selfsimilarity_check(const OffspringLaw& law, std::size_t N, std::uint64_t cap,
                              std::uint64_t seed);

}  // namespace lsv
