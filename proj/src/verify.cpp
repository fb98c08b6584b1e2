#include "lsvbrw/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lsvbrw/error.hpp"

namespace lsv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kTracePoints = 512;
constexpr std::uint64_t kRareBlock = 100000;

double band(double c, double n_eff) { return c / std::sqrt(n_eff); }

void thin_trace(std::vector<KSPoint>& t) {
  if (t.size() <= kTracePoints) return;
  std::vector<KSPoint> out;
  out.reserve(kTracePoints);
  const double step = static_cast<double>(t.size() - 1) / static_cast<double>(kTracePoints - 1);
  for (std::size_t i = 0; i < kTracePoints; ++i)
    out.push_back(t[static_cast<std::size_t>(std::llround(step * static_cast<double>(i)))]);
  t.swap(out);
}

}  // namespace

KSResult ks_statistic(std::span<const double> sample, const Cdf& cdf, const Cdf& left) {
  if (sample.empty()) throw Error("KS statistic of an empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  if (std::any_of(s.begin(), s.end(), [](double x) { return std::isnan(x); }))
    throw Error("KS sample contains NaN");
  std::sort(s.begin(), s.end());
  const Cdf& F_left = left ? left : cdf;
  const double n = static_cast<double>(s.size());

  KSResult r;
  r.sample_size = s.size();
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double F = cdf(s[i]);
    const double Fl = F_left(s[i]);
    const double hi = static_cast<double>(j) / n;
    const double lo = static_cast<double>(i) / n;
    r.statistic = std::max({r.statistic, std::abs(hi - F), std::abs(lo - Fl)});
    r.trace.push_back({s[i], hi, F});
    i = j;
  }
  r.band_5 = band(1.358, n);
  r.band_1 = band(1.628, n);
  r.pass = r.statistic < r.band_1;
  thin_trace(r.trace);
  return r;
}

KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("KS statistic of an empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  KSResult r;
  r.sample_size = x.size();
  r.reference_size = y.size();
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j >= y.size() || (i < x.size() && x[i] <= y[j]))
      v = x[i];
    else
      v = y[j];
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    const double fa = static_cast<double>(i) / na, fb = static_cast<double>(j) / nb;
    r.statistic = std::max(r.statistic, std::abs(fa - fb));
    r.trace.push_back({v, fa, fb});
  }
  const double n_eff = na * nb / (na + nb);
  r.band_5 = band(1.358, n_eff);
  r.band_1 = band(1.628, n_eff);
  r.pass = r.statistic < r.band_1;
  thin_trace(r.trace);
  return r;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  const std::size_t n = std::max(p.size(), q.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

std::vector<double> binned_pmf(std::span<const std::uint64_t> counts, std::size_t cap) {
  std::vector<double> p(cap + 1, 0.0);
  if (counts.empty()) return p;
  for (auto c : counts) p[std::min<std::uint64_t>(c, cap)] += 1.0;
  for (auto& x : p) x /= static_cast<double>(counts.size());
  return p;
}

Cdf survivor_max_cdf(double v, const WRepresentation& w) {
  const double p0 = prob_W_zero(w);
  if (p0 >= 1.0) throw Error("W vanishes almost surely");
  return [v, w, p0](double x) {
    if (x == kInf) return 1.0;
    if (x == -kInf) return 0.0;
    return std::clamp((mixed_gumbel_cdf(x, v, w) - p0) / (1.0 - p0), 0.0, 1.0);
  };
}

WRepresentation experiment_W(const OffspringLaw& law, const ExperimentOptions& opt,
                             std::uint64_t tag) {
  if (has_closed_form_W(law)) return closed_form_W(law);
  EmpiricalW pool;
  pool.values.resize(opt.w_pool);
  const std::uint64_t s = derive_seed(opt.seed, tag);
  parallel_for(opt.w_pool, opt.threads, [&](std::size_t i) {
    Engine g = make_stream(s, i);
    pool.values[i] = estimate_W(law, opt.w_cap, g).value;
  });
  return pool;
}

namespace {

std::string describe_W(const WRepresentation& w) {
  if (std::holds_alternative<ConstantOne>(w)) return "constant-1";
  if (std::holds_alternative<LinearFractionalW>(w)) return "linear-fractional closed form";
  return "empirical pool of " + std::to_string(std::get<EmpiricalW>(w).values.size()) +
         " W estimates";
}

}  // namespace

MaxLawReport max_law_experiment(const BRWConfig& config, const std::vector<int>& n_list,
                                const ExperimentOptions& opt) {
  if (n_list.empty()) throw Error("empty n list");
  MaxLawReport rep;
  const ClusterLaw cluster = compute_cluster_law(config.offspring);
  rep.v = cluster.v;
  const WRepresentation w = experiment_W(config.offspring, opt, 0x57);
  rep.w_source = describe_W(w);
  const Cdf F = survivor_max_cdf(cluster.v, w);

  for (int n : n_list) {
    BRWConfig cfg = config;
    cfg.n = n;
    cfg.window_lower = kInf;  // only M_n is needed
    const Scale scale = make_scale(cfg);
    // Same replicate streams for every n (common random numbers).
    const BatchResult batch =
        batch_simulate(cfg, scale, opt.R, opt.threads, derive_seed(opt.seed, 0x4D4C));
    const NormalizeMode mode = normalize_mode(cfg, scale);

    MaxLawRow row;
    row.n = n;
    row.replicates = opt.R;
    row.survivors = batch.summary.survivors;
    row.flagged = batch.summary.flagged;
    if (row.survivors < 100)
      throw Error("insufficient replication: " + std::to_string(row.survivors) +
                  " surviving trees at n = " + std::to_string(n));
    std::vector<double> proxy;
    for (const auto& r : batch.replicates) {
      if (!r.snapshot || !r.snapshot->survived()) continue;
      row.normalized.push_back(normalize_value(r.snapshot->M_n, mode));
      if (cfg.regime == Regime::Suplogarithmic)
        proxy.push_back(normalize_value(r.snapshot->T_max, mode));
    }
    row.ks = ks_statistic(row.normalized, F);
    if (!proxy.empty()) row.proxy_ks = ks_statistic(proxy, F);
    if (!rep.rows.empty() && row.ks.statistic > rep.rows.back().ks.statistic)
      rep.ks_non_increasing = false;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

PointCountReport point_count_experiment(const BRWConfig& config, const std::vector<double>& x_grid,
                                        const ExperimentOptions& opt, std::size_t limit_samples,
                                        std::size_t mass_cap) {
  if (x_grid.empty()) throw Error("empty x grid");
  const Scale scale = make_scale(config);
  const double line_norm = std::holds_alternative<NormSeq>(scale)
                               ? -std::get<NormSeq>(scale).z / std::get<NormSeq>(scale).a
                               : -0.25 * std::get<SublogScale>(scale).level;
  const double floor = std::max(config.window_lower, line_norm);
  for (double x : x_grid)
    if (!(x >= floor))
      throw Error("window below threshold: x = " + std::to_string(x) + " < " +
                  std::to_string(floor));

  const BatchResult batch = batch_simulate(config, scale, opt.R, opt.threads,
                                           derive_seed(opt.seed, static_cast<std::uint64_t>(config.n)));
  const NormalizeMode mode = normalize_mode(config, scale);
  const ClusterLaw cluster = compute_cluster_law(config.offspring);
  const WRepresentation w = experiment_W(config.offspring, opt, 0x57);

  PointCountReport rep;
  rep.n = config.n;
  rep.replicates = opt.R;
  rep.flagged = batch.summary.flagged;
  rep.limit_samples = limit_samples;
  rep.mass_cap = mass_cap;

  // Normalized atoms per replicate.
  std::vector<std::vector<double>> line_norms, atom_norms;
  for (const auto& r : batch.replicates) {
    if (!r.snapshot) continue;
    std::vector<double> ln;
    for (const auto& rec : r.snapshot->line) ln.push_back(normalize_value(rec.displacement, mode));
    line_norms.push_back(std::move(ln));
    atom_norms.push_back(normalize_atoms(r.snapshot->V_atoms, mode));
  }
  if (line_norms.empty()) throw Error("every replicate exceeded the node cap");

  // Limit totals from the cluster Cox process.
  const double c = *std::min_element(x_grid.begin(), x_grid.end());
  std::vector<std::vector<std::uint64_t>> limit_mass(x_grid.size(),
                                                     std::vector<std::uint64_t>(limit_samples));
  {
    const std::uint64_t s = derive_seed(opt.seed, 0xC0C5);
    Engine g = make_stream(s, 0);
    for (std::size_t i = 0; i < limit_samples; ++i) {
      const CoxSample cs = sample_cluster_cox(cluster, config.offspring, c, w, g);
      for (std::size_t k = 0; k < x_grid.size(); ++k) {
        std::uint64_t tot = 0;
        for (const auto& a : cs.atoms)
          if (a.location > x_grid[k]) tot += a.multiplicity;
        limit_mass[k][i] = tot;
      }
    }
  }

  for (std::size_t k = 0; k < x_grid.size(); ++k) {
    const double x = x_grid[k];
    CountRow row;
    row.x = x;
    std::vector<std::uint64_t> distinct, mass;
    for (std::size_t r = 0; r < line_norms.size(); ++r) {
      distinct.push_back(static_cast<std::uint64_t>(
          std::count_if(line_norms[r].begin(), line_norms[r].end(), [x](double v) { return v > x; })));
      mass.push_back(static_cast<std::uint64_t>(
          std::count_if(atom_norms[r].begin(), atom_norms[r].end(), [x](double v) { return v > x; })));
    }
    const std::uint64_t kmax = *std::max_element(distinct.begin(), distinct.end());
    row.distinct_empirical.assign(kmax + 1, 0.0);
    for (auto d : distinct) row.distinct_empirical[d] += 1.0 / static_cast<double>(distinct.size());
    double cum = 0.0;
    for (std::uint64_t j = 0; j <= kmax || cum < 1.0 - 1e-12; ++j) {
      const double p = limit_count_pmf(x, j, cluster.v, w);
      row.distinct_limit.push_back(p);
      cum += p;
      if (j > kmax + 10000) break;
    }
    row.distinct_tv = tv_distance(row.distinct_empirical, row.distinct_limit) +
                      0.5 * std::max(0.0, 1.0 - cum);
    row.mass_empirical = binned_pmf(mass, mass_cap);
    row.mass_limit = binned_pmf(limit_mass[k], mass_cap);
    row.mass_tv = tv_distance(row.mass_empirical, row.mass_limit);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

bool BoundReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return !r.checked || r.pass; });
}

double truncated_exp_moment(const DisplacementLaw& law, double s, double lo, double hi,
                            double* error) {
  using boost::math::quadrature::gauss_kronrod;
  const auto& L = law.tail;
  const double a = law.prefactor;
  const double tmin = L.t_min();
  double value = 0.0, err = 0.0;
  if (a < 1.0 && lo < tmin && tmin <= hi) value += (1.0 - a) * std::exp(s * tmin);

  const double u_floor = std::max(0.0, std::log(a));
  const double u_lo = std::max(u_floor, lo <= tmin ? 0.0 : L(lo));
  const double u_hi = hi == kInf ? kInf : L(hi);
  if (u_hi > u_lo) {
    if (u_hi == kInf) throw Error("truncated moment needs a finite upper limit");
    auto f = [&](double u) { return std::exp(s * std::exp(L.log_inverse(u)) - u); };
    // Geometric panels keep the e^{-u} decay resolved near u_lo.
    double left = u_lo, width = 1.0;
    while (left < u_hi) {
      const double right = std::min(u_hi, left + width);
      double e = 0.0;
      value += a * gauss_kronrod<double, 61>::integrate(f, left, right, 15, 1e-13, &e);
      err += a * e;
      left = right;
      width *= 2.0;
    }
  }
  if (!std::isfinite(value) || err > 1e-8 * std::max(value, 1e-300))
    throw Error("quadrature did not converge: value " + std::to_string(value) + ", error " +
                std::to_string(err) + ", s " + std::to_string(s) + ", interval (" +
                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (error) *error = err;
  return value;
}

BoundReport trunk_bound_check(const DisplacementLaw& law, double gamma, double xi,
                              const std::vector<double>& y_grid, double slack) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("gamma must lie in (0, 1)");
  if (!(xi > 0.0 && xi < 1.0)) throw Error("xi must lie in (0, 1)");
  BoundReport rep;
  rep.variant = LemmaVariant::Trunk;
  rep.gamma = gamma;
  rep.xi = xi;
  rep.slack = slack;
  for (double y : y_grid) {
    BoundRow row;
    row.y = y;
    const double Ly = law.tail(y);
    const double s = gamma * Ly / y;
    row.lhs = truncated_exp_moment(law, s, -kInf, y, &row.quadrature_error);
    row.rhs = 1.0 + slack * std::pow(Ly, 0.5 * (1.0 - 1.0 / xi));
    row.pass = row.lhs <= row.rhs;
    row.checked = y >= 1e4;
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<TreePoint> default_tree_grid() {
  std::vector<TreePoint> g;
  for (double x : {1e6, 1e8, 1e10})
    for (auto [fy, fz] : {std::pair{0.55, 0.0}, std::pair{0.7, 0.1}, std::pair{0.9, 0.1}})
      g.push_back({x, fy * x, fz * x});
  return g;
}

BoundReport tree_bound_check(const DisplacementLaw& law, double gamma,
                             const std::vector<TreePoint>& grid, double slack) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("gamma must lie in (0, 1)");
  if (law.regime != Regime::Suplogarithmic) throw Error("tree bound needs a suplog law");
  BoundReport rep;
  rep.variant = LemmaVariant::Tree;
  rep.gamma = gamma;
  rep.xi = law.tail.decrease_exponent();
  rep.slack = slack;
  const double a = law.prefactor;
  for (const auto& p : grid) {
    if (!(p.y > p.x / 2.0) || p.z > p.x / 2.0) throw Error("tree grid needs y > x/2 and z <= x/2");
    BoundRow row;
    row.x = p.x;
    row.y = p.y;
    row.z = p.z;
    const double Ly = law.tail(p.y);
    const double Lp = law.tail.derivative(p.y);
    const double s = gamma * Ly / p.y;
    const double top = p.x - p.z;
    row.lhs = top > p.y ? truncated_exp_moment(law, s, p.y, top, &row.quadrature_error) : 0.0;

    double first = 0.0;
    if (top > p.y) {
      const double kappa = s - Lp / 3.0;
      const double span = top - p.y;
      // log C with C = s (1 - e^{-kappa span}) / kappa, stable for either sign of kappa.
      const double log_C = kappa == 0.0 ? std::log(s * span)
                                        : std::log(s) + std::log(-std::expm1(-kappa * span) / kappa);
      first = a * std::exp(log_C - Ly + kappa * top + p.y * Lp / 3.0);
    }
    const double second = a * std::exp((gamma - 1.0) * Ly);
    row.rhs = slack * (first + second);
    row.pass = row.lhs <= row.rhs;
    rep.rows.push_back(row);
  }
  return rep;
}

RareEventReport rare_event_trend(const DisplacementLaw& law, double m,
                                 const std::vector<int>& n_list, std::uint64_t samples,
                                 const NormParams& params, unsigned threads, std::uint64_t seed) {
  if (law.regime != Regime::Suplogarithmic) throw Error("rare-event trend needs a suplog law");
  if (samples == 0) throw Error("sample count must be positive");
  RareEventReport rep;
  rep.m = m;
  rep.params = params;
  for (int n : n_list) {
    const NormSeq ns = compute_norm_seq(law, m, n, params);
    RareEventRow row;
    row.n = n;
    row.x_n = ns.x;
    row.y_n = ns.y;
    row.samples = samples;
    row.exact_zero = static_cast<double>(n) * ns.y <= ns.x;
    if (!row.exact_zero) {
      const std::uint64_t blocks = (samples + kRareBlock - 1) / kRareBlock;
      std::vector<std::uint64_t> hits(blocks, 0);
      const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(n));
      parallel_for(blocks, threads, [&](std::size_t b) {
        Engine g = make_stream(s, b);
        const std::uint64_t count = std::min(kRareBlock, samples - b * kRareBlock);
        std::uint64_t h = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
          double S = 0.0;
          bool small = true;
          for (int k = 0; k < n; ++k) {
            const double X = sample_displacement(law, g);
            if (X > ns.y) {
              small = false;
              break;
            }
            S += X;
          }
          if (small && S > ns.x) ++h;
        }
        hits[b] = h;
      });
      row.hits = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
      row.p_hat = static_cast<double>(row.hits) / static_cast<double>(samples);
      row.upper = boost::math::binomial_distribution<>::find_upper_bound_on_p(
          static_cast<double>(samples), static_cast<double>(row.hits), 0.05);
    }
    row.scaled = std::pow(m, n) * row.upper;
    if (!rep.rows.empty() && row.scaled > rep.rows.back().scaled) rep.non_increasing = false;
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<ChernoffRow> chernoff_pipeline(const DisplacementLaw& law, double m,
                                           const std::vector<int>& n_list, double gamma,
                                           const NormParams& params) {
  std::vector<ChernoffRow> out;
  for (int n : n_list) {
    const NormSeq ns = compute_norm_seq(law, m, n, params);
    ChernoffRow row;
    row.n = n;
    row.s = gamma * law.tail(ns.y) / ns.y;
    row.moment = truncated_exp_moment(law, row.s, -kInf, ns.y);
    row.log_scaled = n * std::log(m) - row.s * ns.x + n * std::log(row.moment);
    out.push_back(row);
  }
  return out;
}

void attach_chernoff(RareEventReport& report, const DisplacementLaw& law,
                     const std::vector<int>& n_list, double gamma) {
  report.gamma = gamma;
  report.chernoff = chernoff_pipeline(law, report.m, n_list, gamma, report.params);
  report.chernoff_decreasing = true;
  const std::size_t half = report.chernoff.size() / 2;
  for (std::size_t i = half + 1; i < report.chernoff.size(); ++i)
    if (!(report.chernoff[i].log_scaled < report.chernoff[i - 1].log_scaled))
      report.chernoff_decreasing = false;
}

KSResult selfsimilarity_check(const OffspringLaw& law, std::size_t N, std::uint64_t cap,
                              std::uint64_t seed) {
  if (N == 0) throw Error("sample count must be positive");
  std::vector<double> direct(N), composed(N);
  const std::uint64_t s1 = derive_seed(seed, 1), s2 = derive_seed(seed, 2);
  const double m = law.mean();
  for (std::size_t i = 0; i < N; ++i) {
    Engine g1 = make_stream(s1, i);
    direct[i] = estimate_W(law, cap, g1).value;
    Engine g2 = make_stream(s2, i);
    const std::uint64_t z = law.sample(g2);
    double acc = 0.0;
    for (std::uint64_t k = 0; k < z; ++k) acc += estimate_W(law, cap, g2).value;
    composed[i] = acc / m;
  }
  return ks_two_sample(direct, composed);
}

}  // namespace lsv
