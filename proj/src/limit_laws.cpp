#include "lsvbrw/limit_laws.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "lsvbrw/error.hpp"

namespace lsv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<double> exp_ppp_from_draws(double c, std::span<const double> exponentials) {
  std::vector<double> out;
  out.reserve(exponentials.size());
  for (double e : exponentials) out.push_back(c + e);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<double> sample_exp_ppp(double c, Engine& g) {
  if (!std::isfinite(c)) throw Error("PPP window edge must be finite");
  std::poisson_distribution<std::uint64_t> count(std::exp(-c));
  const std::uint64_t k = count(g);
  std::vector<double> e(k);
  for (auto& x : e) x = unit_exponential(g);
  return exp_ppp_from_draws(c, e);
}

bool has_closed_form_W(const OffspringLaw& law) {
  return law.family() == OffspringFamily::Deterministic ||
         law.family() == OffspringFamily::LinearFractional;
}

WRepresentation closed_form_W(const OffspringLaw& law) {
  switch (law.family()) {
    case OffspringFamily::Deterministic:
      return ConstantOne{};
    case OffspringFamily::LinearFractional:
      return LinearFractionalW{law.extinction_probability()};
    default:
      throw Error("no closed-form W for offspring family " + std::string(to_string(law.family())));
  }
}

double sample_W(const WRepresentation& w, Engine& g) {
  if (std::holds_alternative<ConstantOne>(w)) return 1.0;
  if (const auto* lf = std::get_if<LinearFractionalW>(&w)) {
    const double q = lf->extinction;
    if (uniform01(g) < q) return 0.0;
    return unit_exponential(g) / (1.0 - q);
  }
  const auto& pool = std::get<EmpiricalW>(w).values;
  if (pool.empty()) throw Error("empirical W pool is empty");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(g)];
}

double prob_W_zero(const WRepresentation& w) {
  if (std::holds_alternative<ConstantOne>(w)) return 0.0;
  if (const auto* lf = std::get_if<LinearFractionalW>(&w)) return lf->extinction;
  const auto& pool = std::get<EmpiricalW>(w).values;
  if (pool.empty()) throw Error("empirical W pool is empty");
  const auto zeros = std::count(pool.begin(), pool.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(pool.size());
}

double laplace_transform_W(const WRepresentation& w, double s) {
  if (s < 0.0 || std::isnan(s)) throw Error("Laplace argument must be >= 0");
  if (std::isinf(s)) return prob_W_zero(w);
  if (std::holds_alternative<ConstantOne>(w)) return std::exp(-s);
  if (const auto* lf = std::get_if<LinearFractionalW>(&w)) {
    const double q = lf->extinction;
    return q + (1.0 - q) / (1.0 + s / (1.0 - q));
  }
  const auto& pool = std::get<EmpiricalW>(w).values;
  if (pool.empty()) throw Error("empirical W pool is empty");
  double acc = 0.0;
  for (double x : pool) acc += std::exp(-s * x);
  return acc / static_cast<double>(pool.size());
}

std::uint64_t CoxSample::total_mass() const {
  std::uint64_t s = 0;
  for (const auto& a : atoms) s += a.multiplicity;
  return s;
}

CoxSample sample_cluster_cox(const ClusterLaw& cluster, const OffspringLaw& offspring, double c,
                             const WRepresentation& w, Engine& g) {
  CoxSample out;
  out.window = c;
  out.W = sample_W(w, g);
  if (out.W <= 0.0) {
    out.shift = -kInf;
    return out;
  }
  // Atoms sit at l_k + log(vW): this is the sign under which the cluster
  // intensity is v W e^{-x} dx, matching the max law E[exp(-v W e^{-x})].
  out.shift = std::log(cluster.v * out.W);
  const auto ell = sample_exp_ppp(c - out.shift, g);
  out.atoms.reserve(ell.size());
  for (double l : ell) out.atoms.push_back({l + out.shift, sample_A(cluster, offspring, g)});
  return out;
}

double mixed_gumbel_cdf(double x, double v, const WRepresentation& w) {
  if (!(v > 0.0)) throw Error("v must be positive");
  if (x == kInf) return 1.0;
  return laplace_transform_W(w, v * std::exp(-x));
}

double limit_laplace_functional(const StepFunction& f, const ClusterLaw& cluster,
                                const OffspringLaw& offspring, const WRepresentation& w,
                                double tol) {
  if (!(tol > 0.0)) throw Error("tolerance must be positive");
  const double m = offspring.mean();
  if (std::abs(m - cluster.m) > 1e-12 * m) throw Error("cluster law does not match offspring law");

  // Disjoint pieces (lo, hi] with constant value.
  std::vector<double> cuts;
  for (const auto& p : f.pieces) {
    if (p.value < 0.0 || std::isnan(p.value)) throw Error("test function must be non-negative");
    if (p.value == 0.0 || !(p.hi > p.lo)) continue;
    if (p.lo == -kInf) throw Error("test function support must be bounded below");
    cuts.push_back(p.lo);
    cuts.push_back(p.hi);
  }
  if (cuts.empty()) return 1.0;
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Cell {
    double mass;  // integral of e^{-x} over the cell
    double s;     // f^(l)(e^{-theta}), iterated per level
  };
  std::vector<Cell> cells;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double theta = f(cuts[i + 1]);
    if (theta == 0.0) continue;
    const double mass = std::exp(-cuts[i]) - std::exp(-cuts[i + 1]);
    cells.push_back({mass, std::isinf(theta) ? 0.0 : std::exp(-theta)});
    total += mass;
  }

  double S = 0.0;
  double weight = 1.0;  // m^{-l}
  for (int l = 0;; ++l) {
    double inner = 0.0;
    for (auto& c : cells) {
      inner += c.mass * (1.0 - c.s);
      c.s = offspring.pgf(c.s);
    }
    S += weight * inner;
    weight /= m;
    if (weight * total * m / (m - 1.0) < tol) break;
    if (l > 100000) throw Error("level series did not converge");
  }
  return laplace_transform_W(w, S);
}

double limit_count_pmf(double x, std::uint64_t k, double v, const WRepresentation& w) {
  if (!(v > 0.0)) throw Error("v must be positive");
  const double lambda = v * std::exp(-x);
  const double kk = static_cast<double>(k);
  auto poisson = [&](double mu) {
    if (mu <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(kk * std::log(mu) - mu - std::lgamma(kk + 1.0));
  };
  if (std::holds_alternative<ConstantOne>(w)) return poisson(lambda);
  if (const auto* lf = std::get_if<LinearFractionalW>(&w)) {
    // Poisson mixed over an exponential with mean mu is geometric.
    const double q = lf->extinction;
    const double mu = lambda / (1.0 - q);
    const double geo = std::exp(kk * std::log(mu / (1.0 + mu))) / (1.0 + mu);
    return (k == 0 ? q : 0.0) + (1.0 - q) * geo;
  }
  const auto& pool = std::get<EmpiricalW>(w).values;
  if (pool.empty()) throw Error("empirical W pool is empty");
  double acc = 0.0;
  for (double W : pool) acc += poisson(lambda * W);
  return acc / static_cast<double>(pool.size());
}

SuperpositionReport superposition_check(const ClusterLaw& cluster, const OffspringLaw& offspring,
                                        const WRepresentation& w, const std::vector<double>& grid,
                                        std::size_t samples, Engine& g) {
  if (grid.empty() || samples == 0) throw Error("superposition check needs a grid and samples");
  const double c = *std::min_element(grid.begin(), grid.end());
  std::vector<double> maxima;
  maxima.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::uint64_t z = offspring.sample(g);
    double mx = -kInf;
    for (std::uint64_t k = 0; k < z; ++k) {
      const CoxSample s = sample_cluster_cox(cluster, offspring, c, w, g);
      if (!s.atoms.empty()) mx = std::max(mx, s.atoms.front().location);
    }
    maxima.push_back(mx);
  }
  std::sort(maxima.begin(), maxima.end());

  SuperpositionReport r;
  r.grid = grid;
  const double logm = std::log(offspring.mean());
  for (double x : grid) {
    const auto below = std::upper_bound(maxima.begin(), maxima.end(), x) - maxima.begin();
    const double emp = static_cast<double>(below) / static_cast<double>(samples);
    const double lim = mixed_gumbel_cdf(x - logm, cluster.v, w);
    r.empirical.push_back(emp);
    r.limit.push_back(lim);
    r.max_abs_diff = std::max(r.max_abs_diff, std::abs(emp - lim));
  }
  return r;
}

}  // namespace lsv
